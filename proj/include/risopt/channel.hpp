#pragma once

/// \file channel.hpp
/// \brief Synthetic multipath RIS channel with interference, factored as H = P Phi R.
///
/// P (RIS->RX) and R (TX->RIS) are each a sum of gamma = beta + 2 rank-one path
/// terms: one desired path, beta RIS-reflected interferer paths, and one weak
/// non-RIS path carrying the direct interference. Every path is a
/// half-wavelength ULA steering-vector outer product with a complex Gaussian gain.

#include <random>

#include "config.hpp"
#include "linalg.hpp"

namespace risopt {

/// (1/sqrt(n)) [exp(j pi k sin(angle))], k = 0..n-1.
inline CVector steering_vector(double angle, int n_elements) {
  detail::require(n_elements >= 1, ErrorKind::InvalidArgument, "steering_vector: n < 1");
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_elements));
  const double s = std::sin(angle);
  CVector v(n_elements);
  for (int k = 0; k < n_elements; ++k) v(k) = std::polar(scale, kPi * k * s);
  return v;
}

struct ChannelRealization {
  CMatrix p_mat;  ///< N_r x M, RIS -> RX
  CMatrix r_mat;  ///< M x N_t, TX -> RIS
  std::vector<cplx> path_gains;  ///< effective per-path gain (RX-side times TX-side)
  std::vector<double> aoa;       ///< arrival angle at the receiver
  std::vector<double> aod;       ///< departure angle at the transmitter
  std::vector<double> ris_aoa;   ///< arrival angle at the RIS (R side)
  std::vector<double> ris_aod;   ///< departure angle from the RIS (P side)

  /// Effective channel H(Phi) = P diag(phi) R.
  CMatrix effective(const CVector& phi) const { return p_mat * phi.asDiagonal() * r_mat; }
};

template <class Rng>
ChannelRealization synthesize_channel(const SystemConfig& raw_cfg, Rng& rng) {
  const SystemConfig cfg = validated(raw_cfg);
  const int gamma = cfg.n_paths();
  std::uniform_real_distribution<double> angle(-kPi / 2.0, kPi / 2.0);
  std::normal_distribution<double> n01(0.0, std::sqrt(0.5));
  auto gain = [&]() { return cplx(n01(rng), n01(rng)); };

  ChannelRealization ch;
  ch.p_mat = CMatrix::Zero(cfg.n_rx, cfg.n_ris);
  ch.r_mat = CMatrix::Zero(cfg.n_ris, cfg.n_tx);
  // Split the direct-path power loss evenly over the two hops.
  const double weak_amp = std::pow(10.0, cfg.direct_path_db / 40.0);
  for (int i = 0; i < gamma; ++i) {
    const double amp = (i == gamma - 1) ? weak_amp : 1.0;
    const double phi_r = angle(rng), omega = angle(rng), psi = angle(rng), theta = angle(rng);
    const cplx g_rx = amp * gain();
    const cplx g_tx = amp * gain();
    ch.p_mat += g_rx * steering_vector(phi_r, cfg.n_rx) * steering_vector(omega, cfg.n_ris).adjoint();
    ch.r_mat += g_tx * steering_vector(psi, cfg.n_ris) * steering_vector(theta, cfg.n_tx).adjoint();
    ch.path_gains.push_back(g_rx * g_tx);
    ch.aoa.push_back(phi_r);
    ch.aod.push_back(theta);
    ch.ris_aoa.push_back(psi);
    ch.ris_aod.push_back(omega);
  }
  return ch;
}

inline ChannelRealization synthesize_channel(const SystemConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  return synthesize_channel(cfg, rng);
}

}  // namespace risopt
