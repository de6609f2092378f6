#pragma once

/// \file common.hpp
/// \brief Shared matrix aliases, error type and seeding helpers.

#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace risopt {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class ErrorKind {
  InvalidConfig,
  InvalidArgument,
  DimensionMismatch,
  RankDeficient,
  Singular,
  InvalidBits,
  AlphabetViolation,
  ZeroPower,
  EmptyPool,
  BudgetExceeded,
  SpaceTooLarge,
  EigFailure,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::Singular: return "Singular";
    case ErrorKind::InvalidBits: return "InvalidBits";
    case ErrorKind::AlphabetViolation: return "AlphabetViolation";
    case ErrorKind::ZeroPower: return "ZeroPower";
    case ErrorKind::EmptyPool: return "EmptyPool";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::SpaceTooLarge: return "SpaceTooLarge";
    case ErrorKind::EigFailure: return "EigFailure";
  }
  return "Unknown";
}

/// Every failure raised by the library. `kind()` identifies the category.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

namespace detail {

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

inline void require_dims(bool cond, const std::string& what) {
  if (!cond) throw Error(ErrorKind::DimensionMismatch, what);
}

}  // namespace detail

/// splitmix64 finalizer; stable across platforms.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Order-sensitive hash of a list of 64-bit words, used for seed splitting.
inline std::uint64_t stable_hash(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x6a09e667f3bcc908ULL;
  for (auto w : words) h = mix64(h ^ mix64(w));
  return h;
}

/// Hermitian part (A + A^H)/2; removes round-off asymmetry.
inline CMatrix hermitian_part(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

}  // namespace risopt
