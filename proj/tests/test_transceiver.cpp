#include <gtest/gtest.h>

#include "risopt/metrics.hpp"
#include "risopt/transceiver.hpp"

using namespace risopt;

namespace {

SystemConfig default_link(std::uint64_t seed) {
  SystemConfig c;
  c.seed = seed;
  return validated(c);
}

/// Square-array link where the RF chain count equals the antenna count.
SystemConfig full_rf(std::uint64_t seed) {
  SystemConfig c;
  c.n_tx = c.n_rx = 8;
  c.n_rf_tx = c.n_rf_rx = 8;
  c.n_streams = 8;
  c.n_ris = 8;
  c.n_interferers = 6;
  c.seed = seed;
  return validated(c);
}

void expect_constant_modulus(const CMatrix& m, double modulus) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) EXPECT_NEAR(std::abs(m(i, j)), modulus, 1e-9);
}

}  // namespace

TEST(RightInverse, PartialIdentity) {
  CMatrix a = CMatrix::Zero(3, 5);
  a.leftCols(3).setIdentity();
  const CMatrix r = right_inverse(a);
  CMatrix expect = CMatrix::Zero(5, 3);
  expect.topRows(3).setIdentity();
  EXPECT_LE((r - expect).norm(), 1e-14);
}

TEST(RightInverse, RandomFullRowRank) {
  std::mt19937_64 rng(1);
  const CMatrix a = random_complex_gaussian(4, 16, rng);
  EXPECT_LE((a * right_inverse(a) - CMatrix::Identity(4, 4)).norm(), 1e-8);
}

TEST(RightInverse, ZeroRowIsRankDeficient) {
  std::mt19937_64 rng(2);
  CMatrix a = random_complex_gaussian(4, 16, rng);
  a.row(2).setZero();
  try {
    right_inverse(a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RankDeficient);
  }
}

TEST(LeftInverse, PartialIdentity) {
  CMatrix a = CMatrix::Zero(5, 3);
  a.topRows(3).setIdentity();
  CMatrix expect = CMatrix::Zero(3, 5);
  expect.leftCols(3).setIdentity();
  EXPECT_LE((left_inverse(a) - expect).norm(), 1e-14);
}

TEST(LeftInverse, RandomFullColumnRank) {
  std::mt19937_64 rng(3);
  const CMatrix a = random_complex_gaussian(16, 4, rng);
  EXPECT_LE((left_inverse(a) * a - CMatrix::Identity(4, 4)).norm(), 1e-8);
}

TEST(LeftInverse, RankDeficient) {
  std::mt19937_64 rng(4);
  CMatrix a = random_complex_gaussian(16, 4, rng);
  a.col(3) = a.col(0) * cplx(2.0, -1.0);
  EXPECT_THROW(left_inverse(a), Error);
}

TEST(HybridPrecoder, ExactWhenRfEqualsAntennas) {
  const auto cfg = full_rf(5);
  std::mt19937_64 rng(5);
  const CMatrix r = random_complex_gaussian(cfg.n_ris, cfg.n_tx, rng);
  const auto d = design_hybrid_precoder(r, cfg);
  EXPECT_LE(d.residual, 1e-6);
  const CMatrix unscaled = d.f_a * d.f_d_tilde / d.power_scale;
  EXPECT_LE((r * unscaled - CMatrix::Identity(cfg.n_ris, cfg.n_ris)).norm(), 1e-4);
}

TEST(HybridCombiner, ExactWhenRfEqualsAntennas) {
  const auto cfg = full_rf(6);
  std::mt19937_64 rng(6);
  const CMatrix p = random_complex_gaussian(cfg.n_rx, cfg.n_ris, rng);
  const auto d = design_hybrid_combiner(p, cfg);
  EXPECT_LE(d.residual, 1e-6);
  const CMatrix unscaled = d.w_d_tilde_h * d.w_a_h / d.power_scale;
  EXPECT_LE((unscaled * p - CMatrix::Identity(cfg.n_ris, cfg.n_ris)).norm(), 1e-4);
}

TEST(HybridPrecoder, BeatsRandomAnalogBaseline) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto cfg = default_link(100 + s);
    const auto ch = synthesize_channel(cfg);
    const auto d = design_hybrid_precoder(ch.r_mat, cfg);
    const CMatrix target = detail::design_target(ch.r_mat, cfg.n_rf_tx, cfg.target_rtol, "r");
    std::mt19937_64 rng(s);
    const CMatrix a = random_constant_modulus(cfg.n_tx, cfg.n_rf_tx, 1.0 / std::sqrt(cfg.n_tx), rng);
    const double baseline = (target - a * (pinv(a) * target)).norm();
    EXPECT_LT(d.residual, baseline) << "seed " << s;
  }
}

TEST(HybridCombiner, BeatsRandomAnalogBaseline) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto cfg = default_link(200 + s);
    const auto ch = synthesize_channel(cfg);
    const auto d = design_hybrid_combiner(ch.p_mat, cfg);
    const CMatrix target = detail::design_target(ch.p_mat, cfg.n_rf_rx, cfg.target_rtol, "p");
    std::mt19937_64 rng(s);
    const CMatrix w = random_constant_modulus(cfg.n_rf_rx, cfg.n_rx, 1.0 / std::sqrt(cfg.n_rx), rng);
    const double baseline = (target - (target * pinv(w)) * w).norm();
    EXPECT_LT(d.residual, baseline) << "seed " << s;
  }
}

TEST(HybridPrecoder, ZeroIterationsReturnsInitialisation) {
  const auto cfg = default_link(7);
  const auto ch = synthesize_channel(cfg);
  const auto d = design_hybrid_precoder(ch.r_mat, cfg, 0);
  ASSERT_EQ(d.residual_history.size(), 1u);
  EXPECT_EQ(d.residual, d.residual_history[0]);
  const CMatrix target = detail::design_target(ch.r_mat, cfg.n_rf_tx, cfg.target_rtol, "r");
  const CMatrix init = detail::svd_phase_init(target, cfg.n_rf_tx, 1.0 / std::sqrt(cfg.n_tx));
  EXPECT_LE((d.f_a - init).norm(), 1e-12);
}

TEST(HybridCombiner, ZeroIterationsReturnsInitialisation) {
  const auto cfg = default_link(8);
  const auto ch = synthesize_channel(cfg);
  const auto d = design_hybrid_combiner(ch.p_mat, cfg, 0);
  ASSERT_EQ(d.residual_history.size(), 1u);
  EXPECT_EQ(d.residual, d.residual_history[0]);
}

TEST(HybridDesign, InvariantsOverSeeds) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto cfg = default_link(300 + s);
    const auto ch = synthesize_channel(cfg);
    const auto pre = design_hybrid_precoder(ch.r_mat, cfg);
    const auto comb = design_hybrid_combiner(ch.p_mat, cfg);
    expect_constant_modulus(pre.f_a, 1.0 / std::sqrt(cfg.n_tx));
    expect_constant_modulus(comb.w_a_h, 1.0 / std::sqrt(cfg.n_rx));
    EXPECT_NEAR((pre.f_a * pre.f_d_tilde).squaredNorm(), cfg.n_streams, 1e-6);
    EXPECT_NEAR((comb.w_d_tilde_h * comb.w_a_h).squaredNorm(), cfg.n_streams, 1e-6);
    EXPECT_EQ(pre.f_d_tilde.rows(), cfg.n_rf_tx);
    EXPECT_EQ(pre.f_d_tilde.cols(), cfg.n_ris);
    EXPECT_EQ(comb.w_d_tilde_h.rows(), cfg.n_ris);
    EXPECT_EQ(comb.w_d_tilde_h.cols(), cfg.n_rf_rx);
    for (std::size_t i = 1; i < pre.residual_history.size(); ++i)
      EXPECT_LE(pre.residual_history[i], pre.residual_history[i - 1]);
    for (std::size_t i = 1; i < comb.residual_history.size(); ++i)
      EXPECT_LE(comb.residual_history[i], comb.residual_history[i - 1]);
    const double q9 = (ch.r_mat * pre.f_a * pre.f_d_tilde - CMatrix::Identity(12, 12)).norm();
    const double q11 = (comb.w_d_tilde_h * comb.w_a_h * ch.p_mat - CMatrix::Identity(12, 12)).norm();
    EXPECT_TRUE(std::isfinite(q9));
    EXPECT_TRUE(std::isfinite(q11));
  }
}

TEST(FinalizeDigital, IdentityPhases) {
  const CMatrix f_s = selection_matrix(6, 3);
  const CVector phi = CVector::Ones(6);
  const auto [f, w] = finalize_digital(f_s, phi);
  EXPECT_LE((w - f_s.adjoint()).norm(), 1e-15);
  EXPECT_LE((w * phi.asDiagonal() * f - CMatrix::Identity(3, 3)).norm(), 1e-15);
}

TEST(FinalizeDigital, ArbitraryAlphabetPhases) {
  const auto cfg = default_link(1);
  const CMatrix f_s = selection_matrix(12, 8);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> u(0, 2);
  std::vector<int> ph(12);
  for (auto& p : ph) p = u(rng);
  const CVector phi = ris_diagonal(ph, cfg.phase_alphabet);
  const auto [f, w] = finalize_digital(f_s, phi);
  EXPECT_LE((w * phi.asDiagonal() * f - CMatrix::Identity(8, 8)).norm(), 1e-12);
}

TEST(FinalizeDigital, RandomOrthonormal) {
  const auto cfg = default_link(1);
  std::mt19937_64 rng(10);
  const CMatrix f_s = random_orthonormal(12, 8, rng);
  std::uniform_int_distribution<int> u(0, 2);
  std::vector<int> ph(12);
  for (auto& p : ph) p = u(rng);
  const CVector phi = ris_diagonal(ph, cfg.phase_alphabet);
  const auto [f, w] = finalize_digital(f_s, phi);
  EXPECT_LE((w * phi.asDiagonal() * f - CMatrix::Identity(8, 8)).norm(), 1e-10);
}

TEST(FinalizeDigital, DimensionMismatch) {
  try {
    finalize_digital(selection_matrix(6, 3), CVector::Ones(5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(TransceiverSetTest, ComposedShapes) {
  const auto cfg = default_link(12);
  const auto ch = synthesize_channel(cfg);
  const auto t = design_transceivers(ch, cfg);
  EXPECT_EQ(t.precoder().rows(), cfg.n_tx);
  EXPECT_EQ(t.precoder().cols(), cfg.n_streams);
  EXPECT_EQ(t.combiner().rows(), cfg.n_streams);
  EXPECT_EQ(t.combiner().cols(), cfg.n_rx);
}

TEST(ZeroForcing, ComposedGainIsIdentity) {
  const auto cfg = default_link(13);
  const auto ch = synthesize_channel(cfg);
  auto t = design_transceivers(ch, cfg);
  const CVector phi = ris_diagonal(std::vector<int>(12, 1), cfg.phase_alphabet);
  const double alpha = aqnm_alpha(cfg.adc_bits);
  t.w_s = zero_forcing_digital(ch, t, phi, alpha);
  const CMatrix k = alpha * t.combiner() * ch.effective(phi) * t.precoder();
  EXPECT_LE((k - CMatrix::Identity(8, 8)).norm(), 1e-6);
}
