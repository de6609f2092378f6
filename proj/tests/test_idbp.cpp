#include <gtest/gtest.h>

#include "risopt/baselines.hpp"
#include "risopt/idbp.hpp"

using namespace risopt;

namespace {

SystemConfig default_link(std::uint64_t seed) {
  SystemConfig c;
  c.seed = seed;
  return validated(c);
}

struct Setup {
  SystemConfig cfg;
  ChannelRealization ch;
  TransceiverSet t;
  std::unique_ptr<RisObjective> obj;
  ConditionalPrior prior;
};

Setup make_setup(std::uint64_t seed) {
  Setup s;
  s.cfg = default_link(seed);
  s.ch = synthesize_channel(s.cfg);
  s.t = design_transceivers(s.ch, s.cfg);
  s.obj = std::make_unique<RisObjective>(s.ch, s.t.w_a_h, s.t.w_d_tilde_h, s.cfg);
  std::mt19937_64 rng(seed);
  const auto pool = sample_candidate_pool(*s.obj, 3, 12, 2000, 16, rng);
  s.prior = estimate_prior(pool, 3, 12);
  return s;
}

/// Records every leaf the search evaluates.
struct Recorder {
  std::function<double(const std::vector<int>&)> f;
  mutable std::vector<std::pair<std::vector<int>, double>> seen;
  double operator()(const std::vector<int>& s) const {
    const double v = f(s);
    seen.push_back({s, v});
    return v;
  }
};

ConditionalPrior random_prior(int k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  RVector init(k);
  RMatrix t(k, k);
  for (int i = 0; i < k; ++i) init(i) = u(rng);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) t(j, i) = u(rng);
  for (int j = 0; j < k; ++j) t.row(j) /= t.row(j).sum();
  return make_prior(init / init.sum(), t, 1e-6);
}

double toy(const std::vector<int>& s) {
  double f = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) f += std::cos(1.3 * s[i] + 0.7 * static_cast<double>(i));
  return f;
}

}  // namespace

TEST(MiEdgeScore, Examples) {
  EXPECT_NEAR(mi_edge_score(0.2 * 0.3, 0.2, 0.3), 0.0, 1e-16);
  EXPECT_NEAR(mi_edge_score(0.5, 0.5, 0.5), 0.5, 1e-15);
  EXPECT_NEAR(mi_edge_score(0.25, 0.5, 0.5), 0.0, 1e-16);
  EXPECT_LT(mi_edge_score(0.1, 0.5, 0.5), 0.0);
}

TEST(FindBestChildren, BinaryAlphabetSecondIsOther) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const auto p = random_prior(2, rng);
    const RMatrix mu = stage_marginals(p, 5);
    for (int parent = 0; parent < 2; ++parent) {
      const auto r = find_best_children(parent, 3, 0.0, p, mu);
      EXPECT_EQ(r.best() + r.second(), 1);
    }
  }
}

TEST(FindBestChildren, UniformTiesGoToLowestIndex) {
  const auto p = uniform_prior(3);
  const RMatrix mu = stage_marginals(p, 4);
  const auto r = find_best_children(2, 2, 1.5, p, mu);
  EXPECT_EQ(r.best(), 0);
  EXPECT_EQ(r.second(), 1);
  for (double s : r.score) EXPECT_NEAR(s, 1.5, 1e-15);
  const auto root = find_best_children(-1, 1, 0.0, p, mu);
  EXPECT_EQ(root.best(), 0);
}

TEST(FindBestChildren, DominantTransitionWins) {
  RVector init = RVector::Constant(3, 1.0 / 3.0);
  RMatrix t(3, 3);
  t << 0.1, 0.1, 0.8,
       0.3, 0.4, 0.3,
       0.3, 0.3, 0.4;
  const auto p = make_prior(init, t);
  const RMatrix mu = stage_marginals(p, 3);
  const auto r = find_best_children(0, 2, 0.0, p, mu);
  // Hand evaluation: mu_1 = 1/3 each; mu_2 = (0.2333, 0.2667, 0.5).
  const double mu2[3] = {0.7 / 3.0, 0.8 / 3.0, 1.5 / 3.0};
  double hand[3];
  for (int i = 0; i < 3; ++i) {
    const double joint = t(0, i) / 3.0;
    hand[i] = joint * std::log2(joint / (mu2[i] / 3.0));
    EXPECT_NEAR(r.score[static_cast<std::size_t>(i)], hand[i], 1e-14);
  }
  EXPECT_EQ(r.best(), 2);
}

TEST(IdbpSearch, SingleStage) {
  const auto p = make_prior((RVector(3) << 0.2, 0.5, 0.3).finished(), RMatrix::Constant(3, 3, 1.0 / 3.0));
  const auto tr = idbp_search(1, SearchConfig{}, p, toy);
  EXPECT_EQ(tr.leaf_evaluations, 1u);
  EXPECT_EQ(tr.best_sequence.phases, std::vector<int>{1});
  EXPECT_EQ(tr.best_objective, toy({1}));
}

TEST(IdbpSearch, CountIdentities) {
  std::mt19937_64 rng(2);
  for (int m : {3, 6, 12}) {
    const auto p = random_prior(3, rng);
    const auto mm = static_cast<std::size_t>(m);
    SearchConfig one;
    one.k_best = 1;
    const auto a = idbp_search(m, one, p, toy);
    EXPECT_EQ(a.nodes_expanded, mm);
    EXPECT_EQ(a.mi_evaluations, 3 * mm);
    EXPECT_EQ(a.leaf_evaluations, 1u);
    EXPECT_EQ(a.nodes_visited, mm);
    const auto b = idbp_search(m, SearchConfig{}, p, toy);
    EXPECT_EQ(b.nodes_visited, mm * (mm + 1) / 2);
    EXPECT_EQ(b.leaf_evaluations, mm);
    SearchConfig three;
    three.k_best = 3;
    const auto c = idbp_search(m, three, p, toy);
    EXPECT_EQ(c.nodes_visited, mm + 2 * mm * (mm - 1) / 2);
    EXPECT_EQ(c.leaf_evaluations, 1 + 2 * (mm - 1));
  }
}

TEST(IdbpSearch, DefaultLinkCounts) {
  const auto s = make_setup(3);
  SearchConfig one;
  one.k_best = 1;
  const auto a = idbp_search(s.cfg, one, s.prior, *s.obj);
  EXPECT_EQ(a.nodes_expanded, 12u);
  EXPECT_EQ(a.mi_evaluations, 36u);
  EXPECT_EQ(a.leaf_evaluations, 1u);
  const auto b = idbp_search(s.cfg, SearchConfig{}, s.prior, *s.obj);
  EXPECT_EQ(b.nodes_visited, 78u);
  EXPECT_EQ(b.leaf_evaluations, 12u);
}

TEST(IdbpSearch, RecursiveDoublesPerStage) {
  std::mt19937_64 rng(4);
  const auto p = random_prior(3, rng);
  SearchConfig rec;
  rec.recursive_second_pass = true;
  EXPECT_EQ(idbp_search(5, rec, p, toy).leaf_evaluations, 16u);
  rec.max_leaf_evals = 10;
  try {
    idbp_search(5, rec, p, toy);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BudgetExceeded);
  }
}

TEST(IdbpSearch, DeterministicAndMonotone) {
  const auto s = make_setup(5);
  const auto a = idbp_search(s.cfg, SearchConfig{}, s.prior, *s.obj);
  const auto b = idbp_search(s.cfg, SearchConfig{}, s.prior, *s.obj);
  EXPECT_EQ(a.best_sequence.phases, b.best_sequence.phases);
  EXPECT_EQ(a.best_objective, b.best_objective);
  EXPECT_EQ(a.best_history, b.best_history);
  for (std::size_t i = 1; i < a.best_history.size(); ++i) EXPECT_LE(a.best_history[i], a.best_history[i - 1]);
}

TEST(IdbpSearch, ReturnsMinimumOfEvaluatedLeaves) {
  const auto s = make_setup(6);
  Recorder rec{[&](const std::vector<int>& q) { return (*s.obj)(q); }, {}};
  SearchConfig three;
  three.k_best = 3;
  const auto tr = idbp_search(s.cfg, three, s.prior, rec);
  ASSERT_EQ(rec.seen.size(), tr.leaf_evaluations);
  double lo = 1e300;
  for (const auto& [q, v] : rec.seen) {
    lo = std::min(lo, v);
    EXPECT_EQ(q.size(), 12u);
  }
  EXPECT_EQ(tr.best_objective, lo);
}

TEST(IdbpSearch, NeverBeatsExhaustiveOptimum) {
  for (std::uint64_t seed : {7u, 8u}) {
    const auto s = make_setup(seed);
    const auto es = exhaustive_search(*s.obj);
    for (int k = 1; k <= 3; ++k) {
      SearchConfig c;
      c.k_best = k;
      EXPECT_GE(idbp_search(s.cfg, c, s.prior, *s.obj).best_objective, es.objective);
    }
  }
}

TEST(IdbpSearch, ConcentratedPriorRecoversOptimum) {
  // Optimum is the 0 -> 2 -> 1 -> 0 cycle, a deterministic chain.
  std::vector<int> target(12);
  for (int i = 0; i < 12; ++i) target[static_cast<std::size_t>(i)] = (3 - i % 3) % 3;
  auto hamming = [&](const std::vector<int>& q) {
    double d = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) d += q[i] != target[i] ? 1.0 : 0.0;
    return d;
  };
  const auto es = exhaustive_search(hamming, 3, 12);
  ASSERT_EQ(es.best.phases, target);
  const auto p = estimate_prior({es.best}, 3, 12);
  SearchConfig one;
  one.k_best = 1;
  const auto tr = idbp_search(12, one, p, hamming);
  EXPECT_EQ(tr.best_sequence.phases, target);
  EXPECT_EQ(tr.best_objective, 0.0);
}

TEST(IdbpSearch, TraceLogFormat) {
  std::mt19937_64 rng(10);
  const auto p = random_prior(3, rng);
  SearchConfig c;
  c.trace_log = true;
  const auto tr = idbp_search(4, c, p, toy);
  std::istringstream is(tr.log);
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    int stage, state;
    double score;
    ASSERT_TRUE(static_cast<bool>(ls >> stage >> state >> score)) << line;
    EXPECT_GE(stage, 1);
    EXPECT_LE(stage, 4);
    EXPECT_GE(state, 0);
    EXPECT_LT(state, 3);
    ++n;
  }
  EXPECT_EQ(n, tr.mi_evaluations);
}

TEST(IdbpSearch, InvalidArguments) {
  const auto p = uniform_prior(3);
  SearchConfig c;
  c.k_best = 4;
  EXPECT_THROW(idbp_search(4, c, p, toy), Error);
  c.k_best = 0;
  EXPECT_THROW(idbp_search(4, c, p, toy), Error);
  EXPECT_THROW(idbp_search(0, SearchConfig{}, p, toy), Error);
  EXPECT_THROW(idbp_search(default_link(1), SearchConfig{}, uniform_prior(2), toy), Error);
}

TEST(IdbpSearch, UniformPolicyFollowsLowestIndices) {
  std::mt19937_64 rng(11);
  const auto p = random_prior(3, rng);
  SearchConfig c;
  c.k_best = 1;
  c.policy = PolicyKind::Uniform;
  const auto tr = idbp_search(6, c, p, toy);
  EXPECT_EQ(tr.best_sequence.phases, std::vector<int>(6, 0));
}
