#pragma once

/// \file transceiver.hpp
/// \brief Hybrid analog/digital precoder and combiner design.
///
/// The analog stages are phase-shifter networks (constant-modulus entries); the
/// digital stages are unconstrained. The precoder factors R^+ ~ F_A F~_D and the
/// combiner factors P^+ ~ W~_D^H W_A^H by alternating least squares with phase
/// projection. F_S / W_S close the loop once the RIS phases are known.

#include <optional>

#include "channel.hpp"
#include "linalg.hpp"

namespace risopt {

/// Result of fitting target ~ analog * digital with a constant-modulus analog factor.
struct HybridFactor {
  CMatrix analog;    ///< rows(target) x n_rf, entries of modulus `modulus`
  CMatrix digital;   ///< n_rf x cols(target), scaled so ||analog*digital||_F^2 = n_streams
  double residual = 0.0;     ///< ||target - analog*digital_unscaled||_F at the accepted iterate
  double power_scale = 1.0;  ///< factor applied to the least-squares digital block
  int iterations = 0;
  std::vector<double> residual_history;  ///< one entry per accepted iterate, non-increasing
};

namespace detail {

inline CMatrix svd_phase_init(const CMatrix& target, Eigen::Index n_rf, double modulus) {
  Eigen::JacobiSVD<CMatrix> svd(target, Eigen::ComputeFullU);
  const CMatrix& u = svd.matrixU();
  CMatrix init(target.rows(), n_rf);
  for (Eigen::Index c = 0; c < n_rf; ++c) init.col(c) = u.col(c % u.cols());
  return project_constant_modulus(init, modulus);
}

}  // namespace detail

/// Alternating minimisation of ||target - A D||_F over constant-modulus A and free D.
///
/// A is initialised from the phases of the leading left singular vectors of the
/// target unless `warm_start` is given. Each round solves D by least squares and
/// phase-projects the unconstrained optimum T D^H (D D^H)^+ onto the
/// constant-modulus set. A round is accepted only if it lowers the residual; the
/// loop stops once the relative improvement drops below `tol`.
inline HybridFactor factor_constant_modulus(const CMatrix& target, Eigen::Index n_rf,
                                            double modulus, int n_streams, int max_iters,
                                            double tol,
                                            const std::optional<CMatrix>& warm_start = {}) {
  detail::require(n_rf >= 1, ErrorKind::InvalidArgument, "n_rf must be >= 1");
  HybridFactor out;
  if (warm_start) {
    detail::require_dims(warm_start->rows() == target.rows() && warm_start->cols() == n_rf,
                         "warm start has wrong shape");
    out.analog = project_constant_modulus(*warm_start, modulus);
  } else {
    out.analog = detail::svd_phase_init(target, n_rf, modulus);
  }
  out.digital = pinv(out.analog) * target;
  out.residual = (target - out.analog * out.digital).norm();
  out.residual_history.push_back(out.residual);

  for (int it = 0; it < max_iters; ++it) {
    const CMatrix dd = out.digital * out.digital.adjoint();
    const CMatrix unconstrained = target * out.digital.adjoint() * pinv(dd);
    CMatrix analog = project_constant_modulus(unconstrained, modulus);
    CMatrix digital = pinv(analog) * target;
    const double res = (target - analog * digital).norm();
    const double improvement =
        out.residual > 0.0 ? (out.residual - res) / out.residual : 0.0;
    if (res < out.residual) {
      out.analog = std::move(analog);
      out.digital = std::move(digital);
      out.residual = res;
      out.residual_history.push_back(res);
      out.iterations = it + 1;
    }
    if (improvement < tol) break;
  }

  const double fro = (out.analog * out.digital).norm();
  if (fro > 0.0) {
    out.power_scale = std::sqrt(static_cast<double>(n_streams)) / fro;
    out.digital *= out.power_scale;
  }
  return out;
}

struct PrecoderDesign {
  CMatrix f_a;         ///< N_t x N_rt
  CMatrix f_d_tilde;   ///< N_rt x M
  double residual = 0.0;
  double power_scale = 1.0;
  std::vector<double> residual_history;
};

struct CombinerDesign {
  CMatrix w_a_h;        ///< N_rs x N_r
  CMatrix w_d_tilde_h;  ///< M x N_rs
  double residual = 0.0;
  double power_scale = 1.0;
  std::vector<double> residual_history;
};

namespace detail {

/// Design target: the pseudo-inverse restricted to the `max_rank` strongest
/// singular directions whose singular value exceeds rtol * sigma_max. For a
/// well-conditioned full-rank m and max_rank >= min(rows, cols) this is the
/// exact one-sided inverse.
inline CMatrix design_target(const CMatrix& m, Eigen::Index max_rank, double rtol,
                             const char* what) {
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  if (!(smax > 0.0)) throw Error(ErrorKind::RankDeficient, std::string(what) + " is zero");
  RVector s_inv = RVector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size() && i < max_rank; ++i)
    if (s(i) > std::max(rtol, kDefaultRankTol) * smax) s_inv(i) = 1.0 / s(i);
  return svd.matrixV() * s_inv.asDiagonal() * svd.matrixU().adjoint();
}

}  // namespace detail

/// min ||T - F_A F~_D||_F with T = design_target(R), constant-modulus F_A,
/// ||F_A F~_D||_F^2 = N.
inline PrecoderDesign design_hybrid_precoder(const CMatrix& r_mat, const SystemConfig& cfg,
                                             int max_iters = 50, double tol = 1e-6,
                                             const std::optional<CMatrix>& warm_start = {}) {
  detail::require_dims(r_mat.rows() == cfg.n_ris && r_mat.cols() == cfg.n_tx,
                       "r_mat must be n_ris x n_tx");
  const CMatrix target = detail::design_target(r_mat, cfg.n_rf_tx, cfg.target_rtol, "r_mat");
  auto fit = factor_constant_modulus(target, cfg.n_rf_tx, 1.0 / std::sqrt(cfg.n_tx),
                                     cfg.n_streams, max_iters, tol, warm_start);
  return {std::move(fit.analog), std::move(fit.digital), fit.residual, fit.power_scale,
          std::move(fit.residual_history)};
}

/// min ||T - W~_D^H W_A^H||_F with T = design_target(P), constant-modulus W_A^H,
/// ||W~_D^H W_A^H||_F^2 = N.
inline CombinerDesign design_hybrid_combiner(const CMatrix& p_mat, const SystemConfig& cfg,
                                             int max_iters = 50, double tol = 1e-6,
                                             const std::optional<CMatrix>& warm_start_w_a_h = {}) {
  detail::require_dims(p_mat.rows() == cfg.n_rx && p_mat.cols() == cfg.n_ris,
                       "p_mat must be n_rx x n_ris");
  // Factor the conjugate transpose: (P^+)^H ~ W_A W~_D.
  const CMatrix target = detail::design_target(p_mat, cfg.n_rf_rx, cfg.target_rtol, "p_mat").adjoint();
  std::optional<CMatrix> warm;
  if (warm_start_w_a_h) warm = warm_start_w_a_h->adjoint();
  auto fit = factor_constant_modulus(target, cfg.n_rf_rx, 1.0 / std::sqrt(cfg.n_rx),
                                     cfg.n_streams, max_iters, tol, warm);
  return {fit.analog.adjoint(), fit.digital.adjoint(), fit.residual, fit.power_scale,
          std::move(fit.residual_history)};
}

/// First n columns of I_m.
inline CMatrix selection_matrix(Eigen::Index m, Eigen::Index n) {
  return CMatrix::Identity(m, n);
}

/// W_S = F_S^H Phi^H so that W_S Phi F_S = I_N.
inline std::pair<CMatrix, CMatrix> finalize_digital(const CMatrix& f_s, const CVector& phi) {
  detail::require_dims(f_s.rows() == phi.size(), "f_s rows must equal the RIS size");
  detail::require_dims(f_s.cols() <= f_s.rows(), "f_s must be tall (M x N, N <= M)");
  const CMatrix gram = f_s.adjoint() * f_s;
  if ((gram - CMatrix::Identity(f_s.cols(), f_s.cols())).norm() > 1e-8)
    throw Error(ErrorKind::InvalidArgument, "f_s must have orthonormal columns");
  CMatrix w_s = f_s.adjoint() * phi.conjugate().asDiagonal();
  return {f_s, std::move(w_s)};
}

/// Full set of transceiver blocks.
struct TransceiverSet {
  CMatrix f_a;          ///< N_t x N_rt
  CMatrix f_d_tilde;    ///< N_rt x M
  CMatrix f_s;          ///< M x N
  CMatrix w_a_h;        ///< N_rs x N_r
  CMatrix w_d_tilde_h;  ///< M x N_rs
  CMatrix w_s;          ///< N x M

  CMatrix f_d() const { return f_d_tilde * f_s; }
  CMatrix w_d_h() const { return w_s * w_d_tilde_h; }
  /// F = F_A F~_D F_S (N_t x N).
  CMatrix precoder() const { return f_a * f_d(); }
  /// W = W_S W~_D^H W_A^H (N x N_r).
  CMatrix combiner() const { return w_d_h() * w_a_h; }
};

/// Hybrid design for a realisation; F_S is the selection matrix and W_S is set
/// for all-zero-angle phases until finalize_digital is applied.
inline TransceiverSet design_transceivers(const ChannelRealization& ch, const SystemConfig& cfg,
                                          int max_iters = 50, double tol = 1e-6) {
  auto pre = design_hybrid_precoder(ch.r_mat, cfg, max_iters, tol);
  auto comb = design_hybrid_combiner(ch.p_mat, cfg, max_iters, tol);
  TransceiverSet t;
  t.f_a = std::move(pre.f_a);
  t.f_d_tilde = std::move(pre.f_d_tilde);
  t.w_a_h = std::move(comb.w_a_h);
  t.w_d_tilde_h = std::move(comb.w_d_tilde_h);
  t.f_s = selection_matrix(cfg.n_ris, cfg.n_streams);
  t.w_s = t.f_s.adjoint();
  return t;
}

/// W_S that inverts the composed gain: with G = alpha W~_D^H W_A^H P Phi R F_A F~_D F_S
/// (M x N), W_S = G^+ so that K = W_S G = I_N. Reduces to F_S^H Phi^H when
/// W~_D^H W_A^H P = R F_A F~_D = I_M.
inline CMatrix zero_forcing_digital(const ChannelRealization& ch, const TransceiverSet& t,
                                    const CVector& phi, double alpha) {
  const CMatrix g = alpha * t.w_d_tilde_h * t.w_a_h * ch.effective(phi) * t.f_a * t.f_d_tilde * t.f_s;
  return left_inverse(g);
}

/// Copy of `t` with W_S recomputed for the RIS diagonal `phi`.
inline TransceiverSet with_phases(TransceiverSet t, const CVector& phi) {
  t.w_s = finalize_digital(t.f_s, phi).second;
  return t;
}

}  // namespace risopt
