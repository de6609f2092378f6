#include <gtest/gtest.h>

#include "risopt/channel.hpp"

using namespace risopt;

namespace {

SystemConfig default_link(std::uint64_t seed) {
  SystemConfig c;
  c.seed = seed;
  return c;
}

Eigen::Index rank_at(const CMatrix& m, double rtol) {
  Eigen::JacobiSVD<CMatrix> svd(m);
  const RVector& s = svd.singularValues();
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) r += s(i) > rtol * s(0) ? 1 : 0;
  return r;
}

}  // namespace

TEST(SteeringVector, BroadsideIsFlat) {
  const CVector v = steering_vector(0.0, 4);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(std::abs(v(k) - cplx(0.5, 0.0)), 0.0, 1e-15);
}

TEST(SteeringVector, EndfireAlternates) {
  const CVector v = steering_vector(kPi / 2.0, 2);
  EXPECT_NEAR(std::abs(v(0) - cplx(1.0 / std::sqrt(2.0), 0.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(v(1) - cplx(-1.0 / std::sqrt(2.0), 0.0)), 0.0, 1e-15);
}

TEST(SteeringVector, UnitNormConstantModulus) {
  const CVector v = steering_vector(0.3, 8);
  EXPECT_NEAR(v.norm(), 1.0, 1e-14);
  for (int k = 0; k < 8; ++k) {
    EXPECT_NEAR(std::abs(v(k)), 1.0 / std::sqrt(8.0), 1e-15);
    EXPECT_NEAR(std::arg(v(k) / v(0)), std::arg(std::polar(1.0, kPi * k * std::sin(0.3))), 1e-12);
  }
}

TEST(SynthesizeChannel, ShapesAndDeterminism) {
  const auto cfg = default_link(7);
  const auto a = synthesize_channel(cfg);
  const auto b = synthesize_channel(cfg);
  EXPECT_EQ(a.p_mat.rows(), 48);
  EXPECT_EQ(a.p_mat.cols(), 12);
  EXPECT_EQ(a.r_mat.rows(), 12);
  EXPECT_EQ(a.r_mat.cols(), 48);
  EXPECT_TRUE(a.p_mat == b.p_mat);
  EXPECT_TRUE(a.r_mat == b.r_mat);
  EXPECT_EQ(a.path_gains.size(), 10u);
}

TEST(SynthesizeChannel, DifferentSeedsDiffer) {
  EXPECT_FALSE(synthesize_channel(default_link(1)).p_mat == synthesize_channel(default_link(2)).p_mat);
}

TEST(SynthesizeChannel, TwoPathRank) {
  SystemConfig cfg = default_link(3);
  cfg.n_interferers = 0;
  cfg.n_ris = 4;
  cfg.n_streams = cfg.n_rf_rx = 2;
  cfg.n_rf_tx = 2;
  for (std::uint64_t s = 0; s < 10; ++s) {
    cfg.seed = s;
    const auto ch = synthesize_channel(cfg);
    EXPECT_EQ(rank_at(ch.p_mat, 1e-10), 2);
    EXPECT_EQ(rank_at(ch.r_mat, 1e-10), 2);
  }
}

TEST(SynthesizeChannel, EffectiveRankBoundedByPaths) {
  const auto cfg = default_link(11);
  const auto ch = synthesize_channel(cfg);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 5; ++t) {
    const CVector phi = random_constant_modulus(12, 1, 1.0, rng).col(0);
    EXPECT_LE(rank_at(ch.effective(phi), 1e-10), 10);
  }
}

TEST(SynthesizeChannel, RrHIsNotIdentity) {
  const auto ch = synthesize_channel(default_link(4));
  const CMatrix g = ch.r_mat * ch.r_mat.adjoint();
  EXPECT_GT((g - CMatrix::Identity(12, 12)).norm(), 1e-3);
}

TEST(SynthesizeChannel, PathCountSingularValues) {
  const auto ch = synthesize_channel(default_link(9));
  EXPECT_GE(rank_at(ch.p_mat, 1e-12), 10);
}

TEST(SynthesizeChannel, RejectsInvalidConfig) {
  SystemConfig cfg = default_link(1);
  cfg.n_ris = 9;
  try {
    synthesize_channel(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidConfig);
  }
  cfg = default_link(1);
  cfg.n_streams = 4;
  EXPECT_THROW(synthesize_channel(cfg), Error);
  cfg = default_link(1);
  cfg.symbol_power = 0.0;
  EXPECT_THROW(synthesize_channel(cfg), Error);
}

TEST(SystemConfigTest, AlphabetWrapped) {
  const auto cfg = validated(SystemConfig{});
  for (double ph : cfg.phase_alphabet) {
    EXPECT_GE(ph, 0.0);
    EXPECT_LT(ph, kTwoPi);
  }
  EXPECT_NEAR(cfg.phase_alphabet[1], 73.0 * kPi / 36.0 - kTwoPi, 1e-14);
}

TEST(SystemConfigTest, NoiseVarFromSnr) {
  SystemConfig cfg;
  cfg.snr_db = 20.0;
  cfg.symbol_power = 2.0;
  EXPECT_NEAR(cfg.noise_var(), 0.02, 1e-15);
}

TEST(ChannelProperties, Submultiplicative) {
  const auto ch = synthesize_channel(default_link(21));
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> u(0, 2);
  const auto cfg = validated(default_link(21));
  for (int t = 0; t < 20; ++t) {
    std::vector<int> ph(12);
    for (auto& p : ph) p = u(rng);
    const CVector phi = ris_diagonal(ph, cfg.phase_alphabet);
    EXPECT_LE(ch.effective(phi).norm(), ch.p_mat.norm() * ch.r_mat.norm() * (1 + 1e-12));
    const CMatrix d = phi.asDiagonal();
    EXPECT_LE((d.adjoint() * d - CMatrix::Identity(12, 12)).norm(), 1e-12);
  }
}
