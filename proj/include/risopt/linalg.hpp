#pragma once

/// \file linalg.hpp
/// \brief SVD-based inverses and small dense helpers.
///
/// Every inversion in the library goes through the same singular-value
/// threshold: values below `rtol * sigma_max` are treated as zero.

#include <cmath>
#include <random>

#include "common.hpp"

namespace risopt {

inline constexpr double kDefaultRankTol = 1e-12;

struct SvdInfo {
  RVector singular_values;
  Eigen::Index rank = 0;
};

inline SvdInfo svd_rank(const CMatrix& a, double rtol = kDefaultRankTol) {
  SvdInfo info;
  if (a.size() == 0) return info;
  Eigen::JacobiSVD<CMatrix> svd(a);
  info.singular_values = svd.singularValues();
  const double smax = info.singular_values.size() ? info.singular_values(0) : 0.0;
  for (Eigen::Index i = 0; i < info.singular_values.size(); ++i)
    if (smax > 0.0 && info.singular_values(i) > rtol * smax) ++info.rank;
  return info;
}

inline Eigen::Index numerical_rank(const CMatrix& a, double rtol = kDefaultRankTol) {
  return svd_rank(a, rtol).rank;
}

/// Moore-Penrose pseudo-inverse with a relative singular-value cutoff.
inline CMatrix pinv(const CMatrix& a, double rtol = kDefaultRankTol) {
  if (a.size() == 0) return CMatrix::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  RVector s_inv = RVector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (smax > 0.0 && s(i) > rtol * smax) s_inv(i) = 1.0 / s(i);
  return svd.matrixV() * s_inv.asDiagonal() * svd.matrixU().adjoint();
}

/// Right inverse X with A X = I (A is rows x cols, rows <= cols).
inline CMatrix right_inverse(const CMatrix& a, double rtol = kDefaultRankTol) {
  const auto rank = numerical_rank(a, rtol);
  if (rank < a.rows())
    throw Error(ErrorKind::RankDeficient, "right_inverse: rank " + std::to_string(rank) +
                                              " < rows " + std::to_string(a.rows()));
  return pinv(a, rtol);
}

/// Left inverse X with X A = I (A is rows x cols, cols <= rows).
inline CMatrix left_inverse(const CMatrix& a, double rtol = kDefaultRankTol) {
  const auto rank = numerical_rank(a, rtol);
  if (rank < a.cols())
    throw Error(ErrorKind::RankDeficient, "left_inverse: rank " + std::to_string(rank) +
                                              " < cols " + std::to_string(a.cols()));
  return pinv(a, rtol);
}

/// Inverse of a square matrix, refusing numerically singular input.
inline CMatrix checked_inverse(const CMatrix& a, const char* what,
                               double rtol = kDefaultRankTol) {
  detail::require_dims(a.rows() == a.cols(), std::string(what) + ": matrix not square");
  if (numerical_rank(a, rtol) < a.rows())
    throw Error(ErrorKind::Singular, std::string(what) + ": matrix is singular");
  return a.fullPivLu().inverse();
}

/// log2 det of a Hermitian positive definite matrix.
inline double log2det_hpd(const CMatrix& a, const char* what) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a), Eigen::EigenvaluesOnly);
  const RVector& ev = es.eigenvalues();
  const double emax = ev.size() ? ev.maxCoeff() : 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (!(ev(i) > kDefaultRankTol * emax) || !(ev(i) > 0.0))
      throw Error(ErrorKind::Singular, std::string(what) + ": matrix not positive definite");
    acc += std::log2(ev(i));
  }
  return acc;
}

/// Phase projection onto entries of fixed modulus: modulus * exp(j*angle(a)).
inline CMatrix project_constant_modulus(const CMatrix& a, double modulus) {
  return a.unaryExpr([modulus](const cplx& z) { return std::polar(modulus, std::arg(z)); });
}

/// Standard circularly-symmetric complex Gaussian matrix, E|z|^2 = variance.
template <class Rng>
CMatrix random_complex_gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                                double variance = 1.0) {
  std::normal_distribution<double> n01(0.0, std::sqrt(variance / 2.0));
  CMatrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = cplx(n01(rng), n01(rng));
  return m;
}

/// Random matrix with orthonormal columns (rows >= cols), via Householder QR.
template <class Rng>
CMatrix random_orthonormal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  detail::require(rows >= cols, ErrorKind::DimensionMismatch,
                  "random_orthonormal: need rows >= cols");
  CMatrix g = random_complex_gaussian(rows, cols, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  return qr.householderQ() * CMatrix::Identity(rows, cols);
}

/// Random constant-modulus matrix with entries modulus * exp(j*U(0, 2pi)).
template <class Rng>
CMatrix random_constant_modulus(Eigen::Index rows, Eigen::Index cols, double modulus,
                                Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  CMatrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = std::polar(modulus, u(rng));
  return m;
}

}  // namespace risopt
