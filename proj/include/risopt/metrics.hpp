#pragma once

/// \file metrics.hpp
/// \brief Quantizer model, MSE / CRLB matrices, RIS objective, rate and energy efficiency.
///
/// The b-bit ADC is linearised as z -> alpha z + n_q with
/// alpha = 1 - (pi sqrt(3)/2) 2^(-2b) and diagonal quantisation-noise covariance
/// D_q^2 = alpha (1 - alpha) diag(W_A^H H (W_A^H H)^H + I).

#include <cmath>
#include <limits>

#include "config.hpp"
#include "linalg.hpp"
#include "transceiver.hpp"

namespace risopt {

inline double aqnm_alpha(int bits) {
  if (bits < 1) throw Error(ErrorKind::InvalidBits, "adc bits must be >= 1");
  return 1.0 - (kPi * std::sqrt(3.0) / 2.0) * std::pow(2.0, -2.0 * bits);
}

/// Diagonal entries of D_q^2 for the analog combiner and effective channel.
inline RVector quant_noise_cov(const CMatrix& w_a_h, const CMatrix& h_eff, double alpha) {
  detail::require_dims(w_a_h.cols() == h_eff.rows(), "w_a_h cols must equal h_eff rows");
  const CMatrix z = w_a_h * h_eff;
  RVector d = z.rowwise().squaredNorm();
  d.array() += 1.0;
  return alpha * (1.0 - alpha) * d;
}

/// C = alpha^2 sigma^2 W W^H + W_D^H D_q^2 W_D, the covariance of n_1.
inline CMatrix noise_covariance(const CMatrix& w, const CMatrix& w_d_h, const RVector& dq2,
                                double alpha, double sigma_n2) {
  detail::require_dims(w_d_h.cols() == dq2.size(), "w_d_h cols must equal dq2 size");
  detail::require_dims(w.rows() == w_d_h.rows(), "w and w_d_h must have equal rows");
  CMatrix c = (alpha * alpha * sigma_n2) * (w * w.adjoint()) +
              w_d_h * dq2.cast<cplx>().asDiagonal() * w_d_h.adjoint();
  return hermitian_part(c);
}

/// M(x) = p (K - I)(K - I)^H + alpha^2 sigma^2 W W^H + W_D^H D_q^2 W_D.
inline CMatrix mse_matrix(const CMatrix& k_eff, const CMatrix& w, const CMatrix& w_d_h,
                          const RVector& dq2, double alpha, double sigma_n2, double p) {
  detail::require_dims(k_eff.rows() == k_eff.cols(), "K must be square");
  detail::require_dims(k_eff.rows() == w.rows(), "K and W row counts differ");
  const CMatrix e = k_eff - CMatrix::Identity(k_eff.rows(), k_eff.cols());
  return hermitian_part(p * (e * e.adjoint()) + noise_covariance(w, w_d_h, dq2, alpha, sigma_n2));
}

/// (K^H C^-1 K)^-1, evaluated as K^-1 C K^-H so that C itself is never inverted.
inline CMatrix crlb(const CMatrix& k_eff, const CMatrix& noise_cov) {
  detail::require_dims(k_eff.rows() == k_eff.cols() && noise_cov.rows() == noise_cov.cols() &&
                           k_eff.rows() == noise_cov.rows(),
                       "crlb: K and C must be square and equal size");
  if (numerical_rank(noise_cov) < noise_cov.rows())
    throw Error(ErrorKind::Singular, "crlb: C is singular");
  if (numerical_rank(k_eff) < k_eff.rows()) throw Error(ErrorKind::Singular, "crlb: K is singular");
  const auto lu = k_eff.fullPivLu();
  const CMatrix x = lu.solve(noise_cov);                    // K^-1 C
  const CMatrix y = lu.solve(CMatrix(x.adjoint()));         // K^-1 (K^-1 C)^H = K^-1 C K^-H
  return hermitian_part(y);
}

/// Expanded CRLB for square F_S:
/// F_S^-1 [sigma^2 Phi^-1 W~ Phi + alpha^-2 Phi^-1 W~_D^H D_q^2 W~_D Phi] F_S^-H,
/// W~ = W~_D^H W_A^H W_A W~_D.
inline CMatrix crlb_expanded(const CMatrix& f_s, const CVector& phi, const CMatrix& w_d_tilde_h,
                             const CMatrix& w_a_h, const RVector& dq2, double alpha,
                             double sigma_n2) {
  const CMatrix f_inv = checked_inverse(f_s, "crlb_expanded: F_S");
  const CMatrix wt = w_d_tilde_h * w_a_h * w_a_h.adjoint() * w_d_tilde_h.adjoint();
  const CMatrix wq = w_d_tilde_h * dq2.cast<cplx>().asDiagonal() * w_d_tilde_h.adjoint();
  const auto ph = phi.asDiagonal();
  const auto ph_inv = phi.conjugate().asDiagonal();
  const CMatrix inner = sigma_n2 * (ph_inv * wt * ph) + (1.0 / (alpha * alpha)) * (ph_inv * wq * ph);
  return hermitian_part(f_inv * inner * f_inv.adjoint());
}

/// || Phi^-1 W~_D^H [sigma^2 W_A^H W_A + alpha^-2 D_q^2] W~_D Phi ||_F^2, evaluated literally.
inline double objective_f(const CVector& phi, const CMatrix& w_d_tilde_h, const CMatrix& w_a_h,
                          double sigma_n2, double alpha, const RVector& dq2) {
  detail::require_dims(w_d_tilde_h.rows() == phi.size(), "w_d_tilde_h rows must equal M");
  detail::require_dims(w_d_tilde_h.cols() == dq2.size() && w_a_h.rows() == dq2.size(),
                       "dq2 size must equal the receive RF chains");
  const CMatrix bracket = sigma_n2 * (w_a_h * w_a_h.adjoint()) +
                          (1.0 / (alpha * alpha)) * CMatrix(dq2.cast<cplx>().asDiagonal());
  const CMatrix x = w_d_tilde_h * bracket * w_d_tilde_h.adjoint();
  const CMatrix conj = phi.conjugate().asDiagonal() * x * phi.asDiagonal();
  return conj.squaredNorm();
}

inline double objective_f(const PhaseSequence& pi, const std::vector<double>& alphabet,
                          const CMatrix& w_d_tilde_h, const CMatrix& w_a_h, double sigma_n2,
                          double alpha, const RVector& dq2) {
  return objective_f(ris_diagonal(pi, alphabet), w_d_tilde_h, w_a_h, sigma_n2, alpha, dq2);
}

/// R = N log2 p + log2 det(M^-1 + I/p).
inline double info_rate(const CMatrix& mse_mat, double p, int n_streams) {
  detail::require_dims(mse_mat.rows() == mse_mat.cols() && mse_mat.rows() == n_streams,
                       "info_rate: mse matrix must be N x N");
  detail::require(p > 0.0, ErrorKind::InvalidArgument, "info_rate: p must be > 0");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(mse_mat), Eigen::EigenvaluesOnly);
  const RVector& ev = es.eigenvalues();
  const double emax = ev.maxCoeff();
  double acc = n_streams * std::log2(p);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (!(ev(i) > 0.0) || !(ev(i) > kDefaultRankTol * emax))
      throw Error(ErrorKind::Singular, "info_rate: mse matrix not invertible");
    acc += std::log2(1.0 / ev(i) + 1.0 / p);
  }
  return acc;
}

/// R = log2 det(p K K^H C^-1 + I), computed as log2 det(C + p K K^H) - log2 det(C).
inline double info_rate_direct(const CMatrix& k_eff, const CMatrix& noise_cov, double p) {
  detail::require_dims(k_eff.rows() == noise_cov.rows(), "info_rate_direct: size mismatch");
  const CMatrix b = hermitian_part(noise_cov + p * (k_eff * k_eff.adjoint()));
  return log2det_hpd(b, "info_rate_direct: B") - log2det_hpd(noise_cov, "info_rate_direct: C");
}

/// Power budget for the energy-efficiency denominator. Defaults: passive RIS.
struct PowerModel {
  double p_tx = 1.0;         ///< W
  double p_rx = 1.0;         ///< W
  double p_ris = 0.0;        ///< W
  double c_step = 15.4e-12;  ///< J per conversion step
  double f_s = 4e8;          ///< ADC sampling rate, Hz
};

/// rate / (P_T + P_R + P_RIS + 2 N c f_s 2^b).
inline double energy_efficiency(double rate, const PowerModel& pm, int bits, int n_streams) {
  detail::require(pm.p_tx >= 0.0 && pm.p_rx >= 0.0 && pm.p_ris >= 0.0 && pm.c_step >= 0.0 &&
                      pm.f_s >= 0.0,
                  ErrorKind::InvalidArgument, "powers must be >= 0");
  const double adc = 2.0 * n_streams * pm.c_step * pm.f_s * std::pow(2.0, bits);
  const double total = pm.p_tx + pm.p_rx + pm.p_ris + adc;
  if (!(total > 0.0)) throw Error(ErrorKind::ZeroPower, "total consumed power is zero");
  return rate / total;
}

struct MetricReport {
  CMatrix k_eff;
  CMatrix noise_cov;
  CMatrix mse_matrix;
  double mse = 0.0;
  CMatrix crlb_matrix;  ///< empty when K or C is singular
  double rate_bits = std::numeric_limits<double>::quiet_NaN();
  double energy_eff = std::numeric_limits<double>::quiet_NaN();
  double objective = 0.0;
  RVector dq2;
};

/// Full link metrics for a designed transceiver set (W_S already finalised) and RIS diagonal.
inline MetricReport evaluate_link(const ChannelRealization& ch, const TransceiverSet& t,
                                  const CVector& phi, const SystemConfig& cfg,
                                  const PowerModel& pm = {}) {
  const double alpha = aqnm_alpha(cfg.adc_bits);
  const double sigma2 = cfg.noise_var();
  const double p = cfg.symbol_power;
  const CMatrix h = ch.effective(phi);
  MetricReport r;
  r.dq2 = quant_noise_cov(t.w_a_h, h, alpha);
  const CMatrix w_d_h = t.w_d_h();
  const CMatrix w = w_d_h * t.w_a_h;
  r.k_eff = alpha * w * h * t.precoder();
  r.noise_cov = noise_covariance(w, w_d_h, r.dq2, alpha, sigma2);
  r.mse_matrix = mse_matrix(r.k_eff, w, w_d_h, r.dq2, alpha, sigma2, p);
  r.mse = r.mse_matrix.trace().real();
  r.objective = objective_f(phi, t.w_d_tilde_h, t.w_a_h, sigma2, alpha, r.dq2);
  try {
    r.crlb_matrix = crlb(r.k_eff, r.noise_cov);
  } catch (const Error&) {
    r.crlb_matrix.resize(0, 0);
  }
  r.rate_bits = info_rate(r.mse_matrix, p, cfg.n_streams);
  r.energy_eff = energy_efficiency(r.rate_bits, pm, cfg.adc_bits, cfg.n_streams);
  return r;
}

/// Precomputed form of the RIS objective for repeated evaluation over phase sequences.
///
/// With A = W_A^H P and G = R R^H, row i of D_q^2 is
/// alpha(1-alpha)(v^T G conj(v) + 1) where v_m = A_im exp(j theta_m). The
/// objective ||X||_F^2 with X = B0 + sum_k c_k w_k w_k^H (c_k = d_k / alpha^2,
/// w_k the k-th column of W~_D^H) expands into a quadratic in c.
class RisObjective {
 public:
  RisObjective(const ChannelRealization& ch, const CMatrix& w_a_h, const CMatrix& w_d_tilde_h,
               const SystemConfig& cfg)
      : alphabet_(validated(cfg).phase_alphabet),
        m_(cfg.n_ris),
        alpha_(aqnm_alpha(cfg.adc_bits)),
        sigma2_(cfg.noise_var()) {
    detail::require_dims(w_a_h.cols() == ch.p_mat.rows(), "w_a_h cols must equal N_r");
    detail::require_dims(w_d_tilde_h.rows() == cfg.n_ris && w_d_tilde_h.cols() == w_a_h.rows(),
                         "w_d_tilde_h must be M x N_rs");
    a_ = w_a_h * ch.p_mat;
    g_ = ch.r_mat * ch.r_mat.adjoint();
    const CMatrix b0 = sigma2_ * (w_d_tilde_h * w_a_h * w_a_h.adjoint() * w_d_tilde_h.adjoint());
    const Eigen::Index nrs = w_a_h.rows();
    b0_norm2_ = b0.squaredNorm();
    lin_.resize(nrs);
    quad_.resize(nrs, nrs);
    for (Eigen::Index k = 0; k < nrs; ++k) {
      lin_(k) = (w_d_tilde_h.col(k).adjoint() * b0 * w_d_tilde_h.col(k))(0, 0).real();
      for (Eigen::Index l = 0; l < nrs; ++l)
        quad_(k, l) = std::norm(w_d_tilde_h.col(k).dot(w_d_tilde_h.col(l)));
    }
    phasors_.resize(alphabet_.size());
    for (std::size_t s = 0; s < alphabet_.size(); ++s) phasors_[s] = std::polar(1.0, alphabet_[s]);
    v_.resize(m_);
  }

  std::size_t alphabet_size() const { return alphabet_.size(); }
  int n_ris() const { return m_; }
  double alpha() const { return alpha_; }

  /// D_q^2 diagonal for the given phase indices.
  RVector quant_noise(const int* phases) const {
    RVector d(a_.rows());
    for (Eigen::Index i = 0; i < a_.rows(); ++i) {
      for (int m = 0; m < m_; ++m) v_(m) = a_(i, m) * phasors_[static_cast<std::size_t>(phases[m])];
      const double s = (v_.transpose() * g_ * v_.conjugate())(0, 0).real();
      d(i) = alpha_ * (1.0 - alpha_) * (s + 1.0);
    }
    return d;
  }

  double operator()(const int* phases) const {
    const RVector d = quant_noise(phases);
    const RVector c = d / (alpha_ * alpha_);
    return b0_norm2_ + 2.0 * c.dot(lin_) + c.dot(quad_ * c);
  }

  double operator()(const std::vector<int>& phases) const {
    detail::require_dims(static_cast<int>(phases.size()) == m_, "sequence length must equal M");
    check_alphabet(phases, alphabet_.size());
    return (*this)(phases.data());
  }

  double operator()(const PhaseSequence& pi) const { return (*this)(pi.phases); }

  /// Objective state for a sequence that changes one element at a time.
  /// Each change costs O(N_rs M); refresh() recomputes from scratch.
  class Cursor {
   public:
    Cursor(const RisObjective& obj, std::vector<int> start) : obj_(&obj), cur_(std::move(start)) {
      detail::require_dims(static_cast<int>(cur_.size()) == obj.m_, "sequence length must equal M");
      check_alphabet(cur_, obj.alphabet_.size());
      refresh();
    }

    const std::vector<int>& phases() const { return cur_; }

    void set(int m, int symbol) {
      const auto mi = static_cast<std::size_t>(m);
      if (cur_[mi] == symbol) return;
      const cplx step = obj_->phasors_[static_cast<std::size_t>(symbol)] - obj_->phasors_[static_cast<std::size_t>(cur_[mi])];
      const double gmm = obj_->g_(m, m).real();
      for (Eigen::Index i = 0; i < v_.rows(); ++i) {
        const cplx delta = obj_->a_(i, m) * step;
        s_(i) += 2.0 * (delta * w_(i, m)).real() + std::norm(delta) * gmm;
        w_.row(i) += std::conj(delta) * obj_->g_.col(m).transpose();
        v_(i, m) += delta;
      }
      cur_[mi] = symbol;
    }

    void refresh() {
      const Eigen::Index nrs = obj_->a_.rows();
      v_.resize(nrs, obj_->m_);
      for (int m = 0; m < obj_->m_; ++m)
        v_.col(m) = obj_->a_.col(m) * obj_->phasors_[static_cast<std::size_t>(cur_[static_cast<std::size_t>(m)])];
      w_ = v_.conjugate() * obj_->g_.transpose();
      s_ = (v_.array() * w_.array()).rowwise().sum().real();
    }

    double value() const {
      const double a = obj_->alpha_;
      const RVector c = (a * (1.0 - a) / (a * a)) * (s_.array() + 1.0).matrix();
      return obj_->b0_norm2_ + 2.0 * c.dot(obj_->lin_) + c.dot(obj_->quad_ * c);
    }

   private:
    const RisObjective* obj_;
    std::vector<int> cur_;
    CMatrix v_;
    CMatrix w_;
    RVector s_;
  };

 private:
  std::vector<double> alphabet_;
  int m_;
  double alpha_;
  double sigma2_;
  CMatrix a_;
  CMatrix g_;
  double b0_norm2_ = 0.0;
  RVector lin_;
  RMatrix quad_;
  std::vector<cplx> phasors_;
  mutable CVector v_;
};

}  // namespace risopt
