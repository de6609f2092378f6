#pragma once

/// \file priors.hpp
/// \brief First-order Markov prior over phase sequences: estimation from an
/// m-best pool, entropy rate, typicality tests, KL divergence, information-to-go.
///
/// All logarithms are base 2.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <random>

#include "config.hpp"

namespace risopt {

/// Initial distribution and row-stochastic transition matrix (row = parent state).
struct ConditionalPrior {
  RVector initial;
  RMatrix transition;
  double epsilon_floor = 0.0;
  /// Raw tallies kept for auditing; empty for hand-built priors.
  RVector initial_counts;
  RMatrix transition_counts;
  std::size_t pool_size = 0;
  int seq_len = 0;

  int k() const { return static_cast<int>(initial.size()); }

  /// counts / (m M), the literal normalisation of the tally.
  RMatrix audit_normalized() const {
    const double d = static_cast<double>(pool_size) * seq_len;
    return d > 0.0 ? RMatrix(transition_counts / d) : RMatrix(transition_counts);
  }
};

namespace detail {

inline RVector smooth_row(RVector q, double eps) {
  const double k = static_cast<double>(q.size());
  return (1.0 - k * eps) * q + RVector::Constant(q.size(), eps);
}

inline double entropy_bits(const RVector& q) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (q(i) > 0.0) h -= q(i) * std::log2(q(i));
  return h;
}

inline void validate_prior(const ConditionalPrior& p) {
  const auto k = p.initial.size();
  require(k >= 1, ErrorKind::InvalidArgument, "prior needs at least one state");
  require_dims(p.transition.rows() == k && p.transition.cols() == k,
               "transition must be K x K with K = initial size");
  auto check_row = [](const RVector& r) {
    require((r.array() >= 0.0).all(), ErrorKind::InvalidArgument, "negative probability");
    require(std::abs(r.sum() - 1.0) <= 1e-12 * std::max<double>(1.0, r.size()),
            ErrorKind::InvalidArgument, "probability row does not sum to 1");
  };
  check_row(p.initial);
  for (Eigen::Index j = 0; j < k; ++j) check_row(p.transition.row(j).transpose());
}

}  // namespace detail

/// Builds a prior from explicit probabilities, applying the epsilon floor.
inline ConditionalPrior make_prior(RVector initial, RMatrix transition, double epsilon_floor = 0.0) {
  const auto k = initial.size();
  detail::require(epsilon_floor >= 0.0 && epsilon_floor * k < 1.0, ErrorKind::InvalidArgument,
                  "epsilon_floor must satisfy 0 <= K*eps < 1");
  ConditionalPrior p;
  p.initial = detail::smooth_row(std::move(initial), epsilon_floor);
  p.transition = std::move(transition);
  for (Eigen::Index j = 0; j < p.transition.rows(); ++j)
    p.transition.row(j) =
        detail::smooth_row(p.transition.row(j).transpose(), epsilon_floor).transpose();
  p.epsilon_floor = epsilon_floor;
  detail::validate_prior(p);
  return p;
}

inline ConditionalPrior uniform_prior(int k) {
  detail::require(k >= 1, ErrorKind::InvalidArgument, "K must be >= 1");
  return make_prior(RVector::Constant(k, 1.0 / k), RMatrix::Constant(k, k, 1.0 / k));
}

/// The m lowest-objective sequences among either the full space (K^M <= budget)
/// or `budget` uniform draws, sorted ascending. Ties are ordered lexicographically.
template <class Objective, class Rng>
std::vector<PhaseSequence> sample_candidate_pool(const Objective& objective, int k, int m_len,
                                                 std::size_t budget, std::size_t m, Rng& rng) {
  detail::require(k >= 1 && m_len >= 1, ErrorKind::InvalidArgument, "K and M must be >= 1");
  detail::require(m >= 1 && budget >= m, ErrorKind::InvalidArgument, "need budget >= m >= 1");
  std::vector<PhaseSequence> all;
  bool exhaustive = true;
  std::size_t space = 1;
  for (int i = 0; i < m_len; ++i) {
    if (space > budget / static_cast<std::size_t>(k)) {
      exhaustive = false;
      break;
    }
    space *= static_cast<std::size_t>(k);
  }
  if (exhaustive && space > budget) exhaustive = false;

  std::vector<int> seq(static_cast<std::size_t>(m_len), 0);
  if (exhaustive) {
    all.reserve(space);
    for (std::size_t n = 0; n < space; ++n) {
      all.push_back({seq, objective(seq)});
      for (int pos = m_len - 1; pos >= 0; --pos) {
        if (++seq[static_cast<std::size_t>(pos)] < k) break;
        seq[static_cast<std::size_t>(pos)] = 0;
      }
    }
  } else {
    std::uniform_int_distribution<int> sym(0, k - 1);
    all.reserve(budget);
    for (std::size_t n = 0; n < budget; ++n) {
      for (auto& s : seq) s = sym(rng);
      all.push_back({seq, objective(seq)});
    }
  }
  auto less = [](const PhaseSequence& a, const PhaseSequence& b) {
    if (*a.objective_value != *b.objective_value) return *a.objective_value < *b.objective_value;
    return a.phases < b.phases;
  };
  const std::size_t keep = std::min(m, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), less);
  all.resize(keep);
  return all;
}

/// Consecutive-pair tallies over the pool, row-normalised per parent state, then
/// floored at epsilon. Parents never observed get a uniform row.
inline ConditionalPrior estimate_prior(const std::vector<PhaseSequence>& pool, int k, int m_len,
                                       double epsilon_floor = 1e-6) {
  if (pool.empty()) throw Error(ErrorKind::EmptyPool, "candidate pool is empty");
  detail::require(k >= 1, ErrorKind::InvalidArgument, "K must be >= 1");
  RVector init_counts = RVector::Zero(k);
  RMatrix counts = RMatrix::Zero(k, k);
  for (const auto& seq : pool) {
    detail::require_dims(static_cast<int>(seq.size()) == m_len, "pool sequence length != M");
    check_alphabet(seq.phases, static_cast<std::size_t>(k));
    init_counts(seq.phases[0]) += 1.0;
    for (std::size_t t = 1; t < seq.phases.size(); ++t)
      counts(seq.phases[t - 1], seq.phases[t]) += 1.0;
  }
  RVector initial = init_counts / init_counts.sum();
  RMatrix trans(k, k);
  for (int j = 0; j < k; ++j) {
    const double row = counts.row(j).sum();
    if (row > 0.0)
      trans.row(j) = counts.row(j) / row;
    else
      trans.row(j).setConstant(1.0 / k);
  }
  ConditionalPrior p = make_prior(std::move(initial), std::move(trans), epsilon_floor);
  p.initial_counts = std::move(init_counts);
  p.transition_counts = std::move(counts);
  p.pool_size = pool.size();
  p.seq_len = m_len;
  return p;
}

/// Stage marginals mu_1..mu_M of the chain (column t-1 holds mu_t).
inline RMatrix stage_marginals(const ConditionalPrior& prior, int m_len) {
  RMatrix mu(prior.k(), std::max(m_len, 0));
  if (m_len < 1) return mu;
  mu.col(0) = prior.initial;
  for (int t = 1; t < m_len; ++t) mu.col(t) = prior.transition.transpose() * mu.col(t - 1);
  return mu;
}

/// H(Phi_1) + sum_{t=1}^{M-1} sum_j mu_t(j) H(q(. | j)), in bits.
inline double entropy_rate(const ConditionalPrior& prior, int m_len) {
  detail::require(m_len >= 1, ErrorKind::InvalidArgument, "M must be >= 1");
  RVector row_h(prior.k());
  for (int j = 0; j < prior.k(); ++j)
    row_h(j) = detail::entropy_bits(prior.transition.row(j).transpose());
  const RMatrix mu = stage_marginals(prior, m_len);
  double h = detail::entropy_bits(prior.initial);
  for (int t = 0; t + 1 < m_len; ++t) h += mu.col(t).dot(row_h);
  return h;
}

/// log2 q(pi).
inline double log_prob(const PhaseSequence& pi, const ConditionalPrior& prior) {
  detail::require(!pi.phases.empty(), ErrorKind::InvalidArgument, "empty sequence");
  check_alphabet(pi.phases, static_cast<std::size_t>(prior.k()));
  double lp = std::log2(prior.initial(pi.phases[0]));
  for (std::size_t t = 1; t < pi.phases.size(); ++t)
    lp += std::log2(prior.transition(pi.phases[t - 1], pi.phases[t]));
  return lp;
}

/// Transition statistics of a single sequence.
struct EmpiricalConditional {
  RMatrix counts;           ///< (j, i): number of j -> i transitions
  RMatrix joint;            ///< counts / (M - 1)
  RMatrix row_conditional;  ///< counts / (transitions leaving j); zero row if j never left
  RVector initial;          ///< indicator of the first symbol
};

inline EmpiricalConditional empirical_conditional(const PhaseSequence& pi, int k) {
  check_alphabet(pi.phases, static_cast<std::size_t>(k));
  detail::require(!pi.phases.empty(), ErrorKind::InvalidArgument, "empty sequence");
  EmpiricalConditional e;
  e.counts = RMatrix::Zero(k, k);
  e.initial = RVector::Zero(k);
  e.initial(pi.phases[0]) = 1.0;
  for (std::size_t t = 1; t < pi.phases.size(); ++t) e.counts(pi.phases[t - 1], pi.phases[t]) += 1.0;
  const double n = static_cast<double>(pi.phases.size() - 1);
  e.joint = n > 0.0 ? RMatrix(e.counts / n) : e.counts;
  e.row_conditional = RMatrix::Zero(k, k);
  for (int j = 0; j < k; ++j) {
    const double r = e.counts.row(j).sum();
    if (r > 0.0) e.row_conditional.row(j) = e.counts.row(j) / r;
  }
  return e;
}

struct TypicalityResult {
  bool typical = true;
  double max_deviation = 0.0;  ///< max |q_hat - q| / q over the tested pairs
};

/// |q_hat(i|j) - q(i|j)| <= delta q(i|j) for every pair with q(i|j) > epsilon_floor,
/// using row-conditional empirical frequencies. Parents the sequence never leaves
/// are skipped.
inline TypicalityResult is_strongly_typical(const PhaseSequence& pi, const ConditionalPrior& prior,
                                            double delta) {
  const auto e = empirical_conditional(pi, prior.k());
  TypicalityResult r;
  const double floor = prior.epsilon_floor * (1.0 + 1e-9);
  for (int j = 0; j < prior.k(); ++j) {
    if (e.counts.row(j).sum() == 0.0) continue;
    for (int i = 0; i < prior.k(); ++i) {
      const double q = prior.transition(j, i);
      if (!(q > floor)) continue;
      const double dev = std::abs(e.row_conditional(j, i) - q) / q;
      r.max_deviation = std::max(r.max_deviation, dev);
    }
  }
  r.typical = r.max_deviation <= delta;
  return r;
}

/// |-(1/M) log2 q(pi) - (1/M) H(Phi)| with M = length of pi.
inline double weak_typicality_gap(const PhaseSequence& pi, const ConditionalPrior& prior) {
  const int m = static_cast<int>(pi.size());
  return std::abs(-log_prob(pi, prior) / m - entropy_rate(prior, m) / m);
}

namespace detail {

inline double kl_bits(const RVector& p, const RVector& q) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) <= 0.0) continue;
    if (q(i) <= 0.0) return std::numeric_limits<double>::infinity();
    d += p(i) * std::log2(p(i) / q(i));
  }
  return d;
}

inline void require_same_k(const ConditionalPrior& p, const ConditionalPrior& q) {
  require_dims(p.k() == q.k(), "priors have different alphabet sizes");
}

}  // namespace detail

/// Sequence-level D(p || q) by the chain rule, with stage marginals of p.
inline double kl_divergence(const ConditionalPrior& p, const ConditionalPrior& q, int m_len) {
  detail::require_same_k(p, q);
  detail::require(m_len >= 1, ErrorKind::InvalidArgument, "M must be >= 1");
  RVector row_kl(p.k());
  for (int j = 0; j < p.k(); ++j)
    row_kl(j) = detail::kl_bits(p.transition.row(j).transpose(), q.transition.row(j).transpose());
  const RMatrix mu = stage_marginals(p, m_len);
  double d = detail::kl_bits(p.initial, q.initial);
  for (int t = 0; t + 1 < m_len; ++t) d += mu.col(t).dot(row_kl);
  return d;
}

/// Information-to-go table: value(t, j) is the expected remaining divergence of
/// the path distribution from q after reaching state j at stage t+1.
struct InformationToGo {
  RMatrix value;  ///< K x M, column M-1 is zero
  double total = 0.0;
};

inline InformationToGo information_to_go(const ConditionalPrior& p, const ConditionalPrior& q,
                                         int m_len) {
  detail::require_same_k(p, q);
  detail::require(m_len >= 1, ErrorKind::InvalidArgument, "M must be >= 1");
  const int k = p.k();
  InformationToGo out;
  out.value = RMatrix::Zero(k, m_len);
  for (int t = m_len - 2; t >= 0; --t) {
    for (int j = 0; j < k; ++j) {
      double v = 0.0;
      for (int i = 0; i < k; ++i) {
        const double pij = p.transition(j, i);
        if (pij <= 0.0) continue;
        v += pij * (std::log2(pij / q.transition(j, i)) + out.value(i, t + 1));
      }
      out.value(j, t) = v;
    }
  }
  out.total = detail::kl_bits(p.initial, q.initial) + p.initial.dot(out.value.col(0));
  return out;
}

/// Draws a length-M sequence from the chain.
template <class Rng>
PhaseSequence sample_sequence(const ConditionalPrior& prior, int m_len, Rng& rng) {
  auto draw = [&rng](const RVector& w) {
    std::discrete_distribution<int> d(w.data(), w.data() + w.size());
    return d(rng);
  };
  PhaseSequence pi;
  pi.phases.reserve(static_cast<std::size_t>(m_len));
  if (m_len < 1) return pi;
  pi.phases.push_back(draw(prior.initial));
  for (int t = 1; t < m_len; ++t)
    pi.phases.push_back(draw(prior.transition.row(pi.phases.back()).transpose()));
  return pi;
}

/// Plain-text form:
///   K <k> epsilon <eps>
///   <initial row>
///   <k transition rows>
inline void write_prior(std::ostream& os, const ConditionalPrior& p) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", p.epsilon_floor);
  os << "K " << p.k() << " epsilon " << buf << "\n";
  auto row = [&](const auto& r) {
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", r(i));
      os << (i ? " " : "") << buf;
    }
    os << "\n";
  };
  row(p.initial);
  for (int j = 0; j < p.k(); ++j) row(p.transition.row(j));
}

inline ConditionalPrior read_prior(std::istream& is) {
  std::string tag_k, tag_eps;
  int k = 0;
  double eps = 0.0;
  if (!(is >> tag_k >> k >> tag_eps >> eps) || tag_k != "K" || tag_eps != "epsilon" || k < 1)
    throw Error(ErrorKind::InvalidArgument, "malformed prior header");
  ConditionalPrior p;
  p.initial.resize(k);
  p.transition.resize(k, k);
  for (int i = 0; i < k; ++i)
    if (!(is >> p.initial(i))) throw Error(ErrorKind::InvalidArgument, "truncated prior");
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i)
      if (!(is >> p.transition(j, i))) throw Error(ErrorKind::InvalidArgument, "truncated prior");
  p.epsilon_floor = eps;
  detail::validate_prior(p);
  return p;
}

}  // namespace risopt
