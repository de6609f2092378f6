#pragma once

/// \file baselines.hpp
/// \brief Reference solvers: exhaustive search, trace-maximisation heuristic and
/// alternating optimisation of the full MSE.

#include <limits>
#include <random>

#include "metrics.hpp"
#include "transceiver.hpp"

namespace risopt {

struct ExhaustiveResult {
  PhaseSequence best;
  double objective = std::numeric_limits<double>::infinity();
  std::uint64_t evaluations = 0;
};

namespace detail {

/// K^M, or 0 when it exceeds `cap`.
inline std::uint64_t space_size(int k, int m_len, std::uint64_t cap) {
  std::uint64_t n = 1;
  for (int i = 0; i < m_len; ++i) {
    if (n > cap / static_cast<std::uint64_t>(k)) return 0;
    n *= static_cast<std::uint64_t>(k);
  }
  return n <= cap ? n : 0;
}

inline std::uint64_t checked_space(int k, int m_len, std::uint64_t cap) {
  require(k >= 1 && m_len >= 1, ErrorKind::InvalidArgument, "K and M must be >= 1");
  const auto n = space_size(k, m_len, cap);
  if (n == 0)
    throw Error(ErrorKind::SpaceTooLarge, std::to_string(k) + "^" + std::to_string(m_len) +
                                              " exceeds the cap " + std::to_string(cap));
  return n;
}

}  // namespace detail

/// Lexicographic enumeration of all K^M sequences; returns the first minimiser.
template <class Objective>
ExhaustiveResult exhaustive_search(const Objective& objective, int k, int m_len,
                                   std::uint64_t cap = 10'000'000) {
  const auto space = detail::checked_space(k, m_len, cap);
  ExhaustiveResult r;
  std::vector<int> seq(static_cast<std::size_t>(m_len), 0);
  for (std::uint64_t n = 0; n < space; ++n) {
    const double v = objective(seq);
    ++r.evaluations;
    if (v < r.objective) {
      r.objective = v;
      r.best.phases = seq;
    }
    for (int pos = m_len - 1; pos >= 0; --pos) {
      if (++seq[static_cast<std::size_t>(pos)] < k) break;
      seq[static_cast<std::size_t>(pos)] = 0;
    }
  }
  r.best.objective_value = r.objective;
  return r;
}

/// Same enumeration order using the incremental objective; the winner is
/// re-evaluated directly.
inline ExhaustiveResult exhaustive_search(const RisObjective& objective,
                                          std::uint64_t cap = 10'000'000) {
  const int k = static_cast<int>(objective.alphabet_size());
  const int m_len = objective.n_ris();
  const auto space = detail::checked_space(k, m_len, cap);
  ExhaustiveResult r;
  RisObjective::Cursor cur(objective, std::vector<int>(static_cast<std::size_t>(m_len), 0));
  std::vector<int> seq(static_cast<std::size_t>(m_len), 0);
  for (std::uint64_t n = 0; n < space; ++n) {
    const double v = cur.value();
    ++r.evaluations;
    if (v < r.objective) {
      r.objective = v;
      r.best.phases = seq;
    }
    int changed = 0;
    for (int pos = m_len - 1; pos >= 0; --pos) {
      ++changed;
      if (++seq[static_cast<std::size_t>(pos)] < k) {
        cur.set(pos, seq[static_cast<std::size_t>(pos)]);
        break;
      }
      seq[static_cast<std::size_t>(pos)] = 0;
      cur.set(pos, 0);
    }
    if (changed > 3) cur.refresh();
  }
  r.objective = objective(r.best.phases);
  r.best.objective_value = r.objective;
  return r;
}

struct TmhResult {
  PhaseSequence phases;
  CVector eigenvector;
  double eigenvalue = 0.0;
  int iterations = 0;
};

/// Z = (P^H W^H W P) o (R F F^H R^H)^T with W = W~_D^H W_A^H and F = F_A F~_D,
/// so that phi^H Z phi = ||W P Phi R F||_F^2.
inline CMatrix tmh_coupling(const ChannelRealization& ch, const TransceiverSet& t) {
  const CMatrix w = t.w_d_tilde_h * t.w_a_h;
  const CMatrix f = t.f_a * t.f_d_tilde;
  const CMatrix left = ch.p_mat.adjoint() * w.adjoint() * w * ch.p_mat;
  const CMatrix right = ch.r_mat * f * f.adjoint() * ch.r_mat.adjoint();
  return hermitian_part(left.cwiseProduct(right.transpose()));
}

/// Principal eigenvector by power iteration, started from the column of Z with
/// the largest norm (lowest index on ties).
inline std::pair<CVector, double> principal_eigenvector(const CMatrix& z, int max_steps = 10000,
                                                        double tol = 1e-10, int* steps = nullptr) {
  detail::require_dims(z.rows() == z.cols() && z.rows() >= 1, "Z must be square");
  Eigen::Index col = 0;
  z.colwise().norm().maxCoeff(&col);
  CVector v = z.col(col);
  if (v.norm() == 0.0) {
    v = CVector::Unit(z.rows(), 0);
    if (steps) *steps = 0;
    return {v, 0.0};
  }
  v.normalize();
  const double scale = std::max(z.norm(), std::numeric_limits<double>::min());
  for (int it = 1; it <= max_steps; ++it) {
    CVector zv = z * v;
    const double lambda = v.dot(zv).real();
    const double res = (zv - lambda * v).norm();
    if (res <= tol * scale) {
      if (steps) *steps = it;
      return {v, lambda};
    }
    const double nrm = zv.norm();
    if (nrm == 0.0) break;
    v = zv / nrm;
  }
  throw Error(ErrorKind::EigFailure, "power iteration did not converge");
}

/// Quantises the eigenvector phases to the alphabet. The eigenvector is first
/// rotated so its first significant entry is real positive; among global
/// rotations that align some entry with some alphabet point, the one whose
/// quantised vector maximises phi^H Z phi is kept (ties: smallest rotation).
inline PhaseSequence quantize_eigenvector(const CMatrix& z, const CVector& v,
                                          const std::vector<double>& alphabet) {
  const Eigen::Index m = v.size();
  const double vmax = v.cwiseAbs().maxCoeff();
  CVector u = v;
  for (Eigen::Index i = 0; i < m; ++i)
    if (std::abs(v(i)) > 1e-9 * vmax) {
      u *= std::polar(1.0, -std::arg(v(i)));
      break;
    }
  std::vector<double> rotations{0.0};
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(std::abs(u(i)) > 1e-9 * vmax)) continue;
    for (double a : alphabet) {
      double r = wrap_phase(a - std::arg(u(i)));
      if (r > kPi) r -= kTwoPi;
      rotations.push_back(r);
    }
  }
  std::stable_sort(rotations.begin(), rotations.end(),
                   [](double a, double b) { return std::abs(a) < std::abs(b); });
  PhaseSequence best;
  double best_val = -std::numeric_limits<double>::infinity();
  for (double rot : rotations) {
    std::vector<int> ph(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i)
      ph[static_cast<std::size_t>(i)] = nearest_phase_index(
          std::abs(u(i)) > 1e-9 * vmax ? std::arg(u(i)) + rot : rot, alphabet);
    const CVector phi = ris_diagonal(ph, alphabet);
    const double val = phi.dot(z * phi).real();
    if (best.phases.empty() || val > best_val + 1e-12 * std::abs(best_val)) {
      best_val = val;
      best.phases = std::move(ph);
    }
  }
  best.objective_value = best_val;
  return best;
}

inline TmhResult tmh_from_coupling(const CMatrix& z, const std::vector<double>& alphabet) {
  TmhResult r;
  auto [v, lambda] = principal_eigenvector(z, 10000, 1e-10, &r.iterations);
  r.eigenvector = v;
  r.eigenvalue = lambda;
  r.phases = quantize_eigenvector(z, v, alphabet);
  return r;
}

inline TmhResult tmh(const ChannelRealization& ch, const TransceiverSet& t,
                     const SystemConfig& cfg) {
  return tmh_from_coupling(tmh_coupling(ch, t), validated(cfg).phase_alphabet);
}

/// Exhaustive maximisation of phi^H Z phi over the alphabet.
inline ExhaustiveResult tmh_exhaustive(const ChannelRealization& ch, const TransceiverSet& t,
                                       const SystemConfig& raw_cfg,
                                       std::uint64_t cap = 10'000'000) {
  const SystemConfig cfg = validated(raw_cfg);
  const CMatrix z = tmh_coupling(ch, t);
  const auto& alphabet = cfg.phase_alphabet;
  auto neg_trace = [&](const std::vector<int>& ph) {
    const CVector phi = ris_diagonal(ph, alphabet);
    return -phi.dot(z * phi).real();
  };
  return exhaustive_search(neg_trace, static_cast<int>(alphabet.size()), cfg.n_ris, cap);
}

/// tr(M(x)) for a transceiver set whose W_S is recomputed from the phases.
inline double mse_trace(const ChannelRealization& ch, const TransceiverSet& t, const CVector& phi,
                        const SystemConfig& cfg) {
  const double alpha = aqnm_alpha(cfg.adc_bits);
  const CMatrix w_s = t.f_s.adjoint() * phi.conjugate().asDiagonal();
  const CMatrix h = ch.effective(phi);
  const RVector dq2 = quant_noise_cov(t.w_a_h, h, alpha);
  const CMatrix w_d_h = w_s * t.w_d_tilde_h;
  const CMatrix w = w_d_h * t.w_a_h;
  const CMatrix k_eff = alpha * w * h * t.f_a * t.f_d_tilde * t.f_s;
  return mse_matrix(k_eff, w, w_d_h, dq2, alpha, cfg.noise_var(), cfg.symbol_power).trace().real();
}

struct AoState {
  TransceiverSet transceivers;
  PhaseSequence phases;
};

struct AoResult {
  TransceiverSet transceivers;
  PhaseSequence phases;
  std::vector<double> mse_history;  ///< delta_0 (initial) then one entry per round
  int rounds = 0;
  bool converged = false;
  std::uint64_t evaluations = 0;
};

struct AoOptions {
  double eps_t = 1e-6;
  int max_rounds = 20;
  int design_iters = 50;
  double design_tol = 1e-6;
};

/// Block-cyclic minimisation of L = tr(M(x)): precoder, combiner, element-wise
/// RIS sweep, then F_S / W_S. A transceiver update is kept only if L does not
/// increase; the sweep keeps the current symbol unless another one is strictly
/// better. Stops when the per-round decrease is <= eps_t or after max_rounds.
inline AoResult alternating_opt(const ChannelRealization& ch, const SystemConfig& raw_cfg,
                                const AoState& init, const AoOptions& opt = {}) {
  detail::require(opt.eps_t > 0.0, ErrorKind::InvalidArgument, "eps_t must be > 0");
  const SystemConfig cfg = validated(raw_cfg);
  const auto& alphabet = cfg.phase_alphabet;
  AoResult r;
  r.transceivers = init.transceivers;
  r.phases = init.phases;
  detail::require_dims(static_cast<int>(r.phases.size()) == cfg.n_ris, "initial phases length != M");
  CVector phi = ris_diagonal(r.phases, alphabet);
  auto loss = [&](const TransceiverSet& t, const CVector& ph) {
    ++r.evaluations;
    return mse_trace(ch, t, ph, cfg);
  };
  double cur = loss(r.transceivers, phi);
  r.mse_history.push_back(cur);

  for (int round = 0; round < opt.max_rounds; ++round) {
    const double start = cur;
    {
      auto pre = design_hybrid_precoder(ch.r_mat, cfg, opt.design_iters, opt.design_tol,
                                        r.transceivers.f_a);
      TransceiverSet cand = r.transceivers;
      cand.f_a = std::move(pre.f_a);
      cand.f_d_tilde = std::move(pre.f_d_tilde);
      const double v = loss(cand, phi);
      if (v <= cur) {
        cur = v;
        r.transceivers = std::move(cand);
      }
    }
    {
      auto comb = design_hybrid_combiner(ch.p_mat, cfg, opt.design_iters, opt.design_tol,
                                         r.transceivers.w_a_h);
      TransceiverSet cand = r.transceivers;
      cand.w_a_h = std::move(comb.w_a_h);
      cand.w_d_tilde_h = std::move(comb.w_d_tilde_h);
      const double v = loss(cand, phi);
      if (v <= cur) {
        cur = v;
        r.transceivers = std::move(cand);
      }
    }
    for (int m = 0; m < cfg.n_ris; ++m) {
      const auto mi = static_cast<std::size_t>(m);
      const int keep = r.phases.phases[mi];
      int best = keep;
      for (int s = 0; s < static_cast<int>(alphabet.size()); ++s) {
        if (s == keep) continue;
        CVector trial = phi;
        trial(m) = std::polar(1.0, alphabet[static_cast<std::size_t>(s)]);
        const double v = loss(r.transceivers, trial);
        if (v < cur) {
          cur = v;
          best = s;
        }
      }
      r.phases.phases[mi] = best;
      phi(m) = std::polar(1.0, alphabet[static_cast<std::size_t>(best)]);
    }
    r.transceivers = with_phases(std::move(r.transceivers), phi);
    r.mse_history.push_back(cur);
    r.rounds = round + 1;
    if (start - cur <= opt.eps_t) {
      r.converged = true;
      break;
    }
  }
  r.phases.objective_value = cur;
  return r;
}

/// AO1: the alphabet entry nearest to zero phase on every element, transceivers
/// from the SVD initialisation without refinement.
inline AoState ao1_init(const ChannelRealization& ch, const SystemConfig& raw_cfg) {
  const SystemConfig cfg = validated(raw_cfg);
  AoState s;
  s.transceivers = design_transceivers(ch, cfg, 0);
  s.phases.phases.assign(static_cast<std::size_t>(cfg.n_ris),
                         nearest_phase_index(0.0, cfg.phase_alphabet));
  s.transceivers = with_phases(std::move(s.transceivers), ris_diagonal(s.phases, cfg.phase_alphabet));
  return s;
}

/// AO2: uniformly random phases and analog blocks, least-squares digital blocks.
template <class Rng>
AoState ao2_init(const ChannelRealization& ch, const SystemConfig& raw_cfg, Rng& rng) {
  const SystemConfig cfg = validated(raw_cfg);
  const int k = static_cast<int>(cfg.alphabet_size());
  std::uniform_int_distribution<int> sym(0, k - 1);
  AoState s;
  s.phases.phases.resize(static_cast<std::size_t>(cfg.n_ris));
  for (auto& p : s.phases.phases) p = sym(rng);
  TransceiverSet& t = s.transceivers;
  t.f_a = random_constant_modulus(cfg.n_tx, cfg.n_rf_tx, 1.0 / std::sqrt(cfg.n_tx), rng);
  t.w_a_h = random_constant_modulus(cfg.n_rf_rx, cfg.n_rx, 1.0 / std::sqrt(cfg.n_rx), rng);
  t.f_d_tilde = pinv(t.f_a) * detail::design_target(ch.r_mat, cfg.n_rf_tx, cfg.target_rtol, "r_mat");
  const double fn = (t.f_a * t.f_d_tilde).norm();
  if (fn > 0.0) t.f_d_tilde *= std::sqrt(static_cast<double>(cfg.n_streams)) / fn;
  t.w_d_tilde_h = detail::design_target(ch.p_mat, cfg.n_rf_rx, cfg.target_rtol, "p_mat") * pinv(t.w_a_h);
  const double wn = (t.w_d_tilde_h * t.w_a_h).norm();
  if (wn > 0.0) t.w_d_tilde_h *= std::sqrt(static_cast<double>(cfg.n_streams)) / wn;
  t.f_s = selection_matrix(cfg.n_ris, cfg.n_streams);
  t = with_phases(std::move(t), ris_diagonal(s.phases, cfg.phase_alphabet));
  return s;
}

}  // namespace risopt
