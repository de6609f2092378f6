#pragma once

/// \file idbp.hpp
/// \brief Information-directed branch-and-prune search over phase sequences.
///
/// The tree has one level per RIS element. Children of a node are ranked by the
/// pointwise mutual information of the edge under a transition policy p; the
/// best child is always followed, and the 2nd..k-th children are opened as side
/// branches from nodes on the best-child path. Every completed path is scored
/// with the leaf objective and the minimum is returned.

#include <sstream>

#include "priors.hpp"

namespace risopt {

/// p_joint log2(p_joint / (p_child p_parent)).
inline double mi_edge_score(double p_joint, double p_child, double p_parent) {
  if (p_joint <= 0.0) return 0.0;
  return p_joint * std::log2(p_joint / (p_child * p_parent));
}

enum class PolicyKind { Prior, Uniform };

struct SearchConfig {
  int k_best = 2;
  /// Side branches may open further side branches (exponential in M).
  bool recursive_second_pass = false;
  std::size_t max_leaf_evals = 1'000'000;
  PolicyKind policy = PolicyKind::Prior;
  /// Record one "stage state score" line per scored child in SearchTrace::log.
  bool trace_log = false;
};

struct SearchTrace {
  std::size_t nodes_expanded = 0;  ///< nodes whose children were scored (root included)
  std::size_t nodes_visited = 0;   ///< tree nodes at stages 1..M reached by the traversal
  std::size_t mi_evaluations = 0;
  std::size_t leaf_evaluations = 0;
  PhaseSequence best_sequence;
  double best_objective = std::numeric_limits<double>::infinity();
  double initial_cost = 0.0;          ///< D(p_init || q_init)
  std::vector<double> best_history;   ///< best objective after each leaf
  std::string log;
};

struct ChildRanking {
  std::vector<int> order;     ///< children sorted by descending score, ties to lower index
  std::vector<double> score;  ///< accumulated cost + edge score, indexed by child
  int best() const { return order.at(0); }
  int second() const { return order.size() > 1 ? order[1] : order.at(0); }
};

/// Scores of all K children of a node. `stage` is the 1-based stage of the
/// children; `parent` is -1 at the root.
inline ChildRanking find_best_children(int parent, int stage, double accumulated_cost,
                                       const ConditionalPrior& policy, const RMatrix& marginals) {
  const int k = policy.k();
  ChildRanking r;
  r.score.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    double s;
    if (parent < 0) {
      s = mi_edge_score(policy.initial(i), 1.0 / k, 1.0);
    } else {
      const double mu_parent = marginals(parent, stage - 2);
      s = mi_edge_score(policy.transition(parent, i) * mu_parent, marginals(i, stage - 1),
                        mu_parent);
    }
    r.score[static_cast<std::size_t>(i)] = accumulated_cost + s;
  }
  r.order.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) r.order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(r.order.begin(), r.order.end(), [&](int a, int b) {
    return r.score[static_cast<std::size_t>(a)] > r.score[static_cast<std::size_t>(b)];
  });
  return r;
}

/// Depth-first traversal with an explicit stack. `leaf_objective` maps a
/// std::vector<int> of alphabet indices to f(pi).
template <class Objective>
SearchTrace idbp_search(int m_len, const SearchConfig& scfg, const ConditionalPrior& prior,
                        const Objective& leaf_objective) {
  const int k = prior.k();
  detail::require(m_len >= 1, ErrorKind::InvalidArgument, "M must be >= 1");
  detail::require(scfg.k_best >= 1 && scfg.k_best <= k, ErrorKind::InvalidArgument,
                  "k_best must be in [1, K]");
  const ConditionalPrior policy = scfg.policy == PolicyKind::Prior ? prior : uniform_prior(k);
  const RMatrix mu = stage_marginals(policy, m_len);

  SearchTrace tr;
  tr.initial_cost = detail::kl_bits(policy.initial, prior.initial);

  struct Frame {
    std::vector<int> prefix;
    double cost;
    bool may_branch;
  };
  std::vector<Frame> stack;
  std::ostringstream log;

  // Root: choose the stage-1 state; no side branches here.
  {
    const ChildRanking root = find_best_children(-1, 1, 0.0, policy, mu);
    ++tr.nodes_expanded;
    tr.mi_evaluations += static_cast<std::size_t>(k);
    if (scfg.trace_log)
      for (int i = 0; i < k; ++i) log << 1 << ' ' << i << ' ' << root.score[static_cast<std::size_t>(i)] << '\n';
    stack.push_back({{root.best()}, root.score[static_cast<std::size_t>(root.best())], true});
    ++tr.nodes_visited;
  }

  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    // Follow best children down to the leaf, queueing side branches on the way.
    while (static_cast<int>(f.prefix.size()) < m_len) {
      const int stage = static_cast<int>(f.prefix.size()) + 1;
      const ChildRanking r = find_best_children(f.prefix.back(), stage, f.cost, policy, mu);
      ++tr.nodes_expanded;
      tr.mi_evaluations += static_cast<std::size_t>(k);
      if (scfg.trace_log)
        for (int i = 0; i < k; ++i)
          log << stage << ' ' << i << ' ' << r.score[static_cast<std::size_t>(i)] << '\n';
      if (f.may_branch) {
        for (int c = scfg.k_best - 1; c >= 1; --c) {
          const int child = r.order[static_cast<std::size_t>(c)];
          Frame side{f.prefix, r.score[static_cast<std::size_t>(child)], scfg.recursive_second_pass};
          side.prefix.push_back(child);
          stack.push_back(std::move(side));
          ++tr.nodes_visited;
        }
      }
      f.prefix.push_back(r.best());
      f.cost = r.score[static_cast<std::size_t>(r.best())];
      ++tr.nodes_visited;
    }
    if (tr.leaf_evaluations >= scfg.max_leaf_evals)
      throw Error(ErrorKind::BudgetExceeded,
                  "leaf evaluations exceed " + std::to_string(scfg.max_leaf_evals));
    const double v = leaf_objective(f.prefix);
    ++tr.leaf_evaluations;
    if (v <= tr.best_objective) {
      tr.best_objective = v;
      tr.best_sequence = {f.prefix, v};
    }
    tr.best_history.push_back(tr.best_objective);
  }
  tr.log = log.str();
  return tr;
}

/// Overload taking the system configuration for M.
template <class Objective>
SearchTrace idbp_search(const SystemConfig& cfg, const SearchConfig& scfg,
                        const ConditionalPrior& prior, const Objective& leaf_objective) {
  detail::require_dims(static_cast<std::size_t>(prior.k()) == cfg.alphabet_size(),
                       "prior alphabet size differs from the configuration");
  return idbp_search(cfg.n_ris, scfg, prior, leaf_objective);
}

}  // namespace risopt
