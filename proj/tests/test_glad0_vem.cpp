#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "glad/generator.hpp"
#include "glad/glad0_vem.hpp"
#include "oracles.hpp"
#include "support.hpp"

namespace glad {
namespace {

using test::max_abs_diff;

std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

TEST(UpdateGamma0, CountsActivityMemberships) {
  Matrix<std::uint8_t> Y(1, 1);
  const auto d = ActivityDataset::make(2, {{0}}, Y);
  auto s = init_state0(d, 2, 1);
  s.lambda_act[0](0, 0) = 1.0;
  s.lambda_act[0](0, 1) = 0.0;
  const std::vector<double> alpha{1.0, 1.0};
  EXPECT_EQ(update_gamma0(0, alpha, s), (std::vector<double>{2.0, 1.0}));
}

TEST(UpdateGamma0, CountsBothPairDirections) {
  const auto d = ActivityDataset::make(1, {{}, {}, {}}, Matrix<std::uint8_t>(3, 3));
  const auto s = init_state0(d, 2, 1);
  const std::vector<double> alpha{1e-300, 1e-300};
  const auto g = update_gamma0(1, alpha, s);
  EXPECT_NEAR(g[0], 2.0, 1e-15);
  EXPECT_NEAR(g[1], 2.0, 1e-15);
}

TEST(UpdatePhi, RejectsSelfPairs) {
  Rng rng(31);
  const auto d = test::random_activity(3, 2, 2, rng);
  const auto P = test::random_params(2, 2, 2, rng);
  const auto s = init_state0(d, 2, 2);
  EXPECT_THROW(update_phi_out(1, 1, d, P, s), std::invalid_argument);
  EXPECT_THROW(update_phi_in(0, 0, d, P, s), std::invalid_argument);
}

TEST(UpdatePhi, ConstantBlockLeavesDigammaTermsOnly) {
  Rng rng(32);
  const auto d = test::random_activity(4, 3, 3, rng);
  auto P = test::random_params(3, 2, 3, rng);
  for (double& b : P.B.data()) b = 0.2;
  const auto s = test::random_state0(d, 3, 2, rng);
  std::vector<double> e(3);
  for (std::size_t g = 0; g < 3; ++g) e[g] = oracle::elog_pi(s.gamma, 0, g);
  EXPECT_LT(max_abs_diff(update_phi_out(0, 2, d, P, s), oracle::exp_normalize(e)), 1e-12);
}

TEST(UpdatePhi, SymmetricGammaAndConstantBlockGiveUniform) {
  Rng rng(33);
  const auto d = test::random_activity(3, 2, 2, rng);
  const auto P = ModelParams::uniform(4, 2, 2);
  auto s = test::random_state0(d, 4, 2, rng);
  for (double& g : s.gamma.data()) g = 1.5;
  for (double x : update_phi_out(0, 1, d, P, s)) EXPECT_NEAR(x, 0.25, 1e-15);
  for (double x : update_phi_in(0, 1, d, P, s)) EXPECT_NEAR(x, 0.25, 1e-15);
}

TEST(UpdatePhi, LinkedReceiverPullsSenderToSameBlock) {
  Matrix<std::uint8_t> Y(2, 2);
  Y(0, 1) = Y(1, 0) = 1;
  const auto d = ActivityDataset::make(1, {{}, {}}, Y);
  auto P = ModelParams::uniform(2, 1, 1);
  P.B(0, 0) = P.B(1, 1) = 0.9;
  P.B(0, 1) = P.B(1, 0) = 0.1;
  auto s = init_state0(d, 2, 1);
  s.phi_in.at(0, 1)[0] = 0.0;
  s.phi_in.at(0, 1)[1] = 1.0;
  const auto out = update_phi_out(0, 1, d, P, s);
  EXPECT_GT(out[1], out[0]);
  const std::vector<double> ref = oracle::phi_out(0, 1, d, P, s);
  EXPECT_LT(max_abs_diff(out, ref), 1e-12);
}

TEST(UpdateLambda0, IdenticalThetaRowsLeaveGammaOnly) {
  Rng rng(34);
  const auto d = test::random_activity(3, 2, 4, rng);
  auto P = test::random_params(2, 2, 2, rng);
  for (std::size_t g = 0; g < 2; ++g) {
    P.theta(g, 0) = 0.3;
    P.theta(g, 1) = 0.7;
  }
  auto s = test::random_state0(d, 2, 2, rng);
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t a = 0; a < d.num_activities(p); ++a) {
      const std::vector<double> e{oracle::elog_pi(s.gamma, p, 0), oracle::elog_pi(s.gamma, p, 1)};
      EXPECT_LT(max_abs_diff(update_lambda0(p, a, P, s), oracle::exp_normalize(e)), 1e-12);
    }
  }
}

TEST(UpdateMu0, OneHotEmissionsPickTheMatchingRole) {
  const auto d = ActivityDataset::make(2, {{1}}, Matrix<std::uint8_t>(1, 1));
  auto P = ModelParams::uniform(1, 2, 2);
  P.beta(0, 0) = 1.0;
  P.beta(1, 0) = 0.0;
  P.beta(0, 1) = 0.0;
  P.beta(1, 1) = 1.0;
  const auto mu = update_mu0(0, 0, d, P, init_state0(d, 1, 2));
  EXPECT_GT(mu[1], 1.0 - 1e-9);
}

TEST(MStep0, OneHotLinkedPairsClampBlock) {
  Matrix<std::uint8_t> Y(3, 3, 1);
  const auto d = ActivityDataset::make(1, {{0}, {0}, {0}}, Y);
  auto s = init_state0(d, 2, 1);
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t q = 0; q < 3; ++q) {
      if (p == q) continue;
      s.phi_out.at(p, q)[0] = 1.0;
      s.phi_out.at(p, q)[1] = 0.0;
      s.phi_in.at(p, q)[0] = 0.0;
      s.phi_in.at(p, q)[1] = 1.0;
    }
  }
  const auto out = m_step0(d, s, ModelParams::uniform(2, 1, 1), 0.0, AlphaMode::kFixed);
  EXPECT_EQ(out.B(0, 1), 1.0 - kBlockEps);
}

TEST(MStep0, SparsityCorrectionDoublesBlockAtHalf) {
  Rng rng(35);
  const auto d = test::random_activity(6, 3, 3, rng);
  const auto s = test::random_state0(d, 2, 2, rng);
  const auto P = test::random_params(2, 2, 3, rng);
  const auto a = m_step0(d, s, P, 0.0, AlphaMode::kFixed);
  const auto b = m_step0(d, s, P, 0.5, AlphaMode::kFixed);
  for (std::size_t i = 0; i < a.B.data().size(); ++i) {
    if (2.0 * a.B.data()[i] < 1.0 - kBlockEps) {
      EXPECT_NEAR(b.B.data()[i], 2.0 * a.B.data()[i], 1e-14);
    }
  }
  EXPECT_THROW(m_step0(d, s, P, 1.0, AlphaMode::kFixed), std::invalid_argument);
}

// ---- transcription oracles ----

class Glad0Oracle : public ::testing::TestWithParam<int> {};

TEST_P(Glad0Oracle, UpdatesMatchStraightLineEvaluation) {
  const int i = GetParam();
  Rng rng(2000 + static_cast<std::uint64_t>(i));
  const std::size_t N = 2 + i % 5, M = 1 + i % 3, K = 1 + i % 4, V = 2 + i % 3;
  const auto d = test::random_activity(N, V, 4, rng);
  const auto P = test::random_params(M, K, V, rng);
  const auto s = test::random_state0(d, M, K, rng);
  for (std::size_t p = 0; p < N; ++p) {
    EXPECT_LT(max_abs_diff(update_gamma0(p, P.alpha, s), oracle::gamma0(p, P.alpha, s)), 1e-12);
    for (std::size_t q = 0; q < N; ++q) {
      if (p == q) continue;
      EXPECT_LT(max_abs_diff(update_phi_out(p, q, d, P, s), oracle::phi_out(p, q, d, P, s)), 1e-12);
      EXPECT_LT(max_abs_diff(update_phi_in(p, q, d, P, s), oracle::phi_in(p, q, d, P, s)), 1e-12);
    }
    for (std::size_t a = 0; a < d.num_activities(p); ++a) {
      EXPECT_LT(max_abs_diff(update_lambda0(p, a, P, s), oracle::lambda0(p, a, P, s)), 1e-12);
      EXPECT_LT(max_abs_diff(update_mu0(p, a, d, P, s), oracle::mu0(p, a, d, P, s)), 1e-12);
    }
  }
  const double rho = 0.25 * static_cast<double>(i % 3);
  const auto ms = m_step0(d, s, P, rho, AlphaMode::kFixed);
  const auto ref = oracle::m_step0(d, s, M, K, rho);
  EXPECT_LT(max_abs_diff(ms.B.data(), ref.B.data()), 1e-12);
  for (std::size_t k = 0; k < K; ++k) {
    if (std::isnan(ref.beta(0, k))) continue;  // role with no activity mass
    for (std::size_t v = 0; v < V; ++v) EXPECT_NEAR(ms.beta(v, k), ref.beta(v, k), 1e-12);
  }
  for (std::size_t g = 0; g < M; ++g) {
    if (std::isnan(ref.theta(g, 0))) continue;
    for (std::size_t k = 0; k < K; ++k) EXPECT_NEAR(ms.theta(g, k), ref.theta(g, k), 1e-12);
  }
  const double e = compute_elbo0(d, P, s);
  EXPECT_NEAR(e, oracle::elbo0(d, P, s), 1e-10 * std::max(1.0, std::abs(e)));
}

INSTANTIATE_TEST_SUITE_P(RandomInstances, Glad0Oracle, ::testing::Range(0, 100));

TEST(ESweep0, EqualsSequentialComposition) {
  Rng rng(36);
  const auto d = test::random_activity(5, 3, 4, rng);
  const auto P = test::random_params(3, 2, 3, rng);
  auto swept = test::random_state0(d, 3, 2, rng);
  auto manual = swept;
  e_step0_sweep(d, P, swept);
  auto put = [](std::span<double> dst, const std::vector<double>& src) {
    std::copy(src.begin(), src.end(), dst.begin());
  };
  for (std::size_t p = 0; p < d.N; ++p) {
    put(manual.gamma.row(p), update_gamma0(p, P.alpha, manual));
    for (std::size_t q = 0; q < d.N; ++q) {
      if (q == p) continue;
      put(manual.phi_out.at(p, q), update_phi_out(p, q, d, P, manual));
      put(manual.phi_in.at(p, q), update_phi_in(p, q, d, P, manual));
    }
    for (std::size_t a = 0; a < d.num_activities(p); ++a) {
      put(manual.lambda_act[p].row(a), update_lambda0(p, a, P, manual));
      put(manual.mu_act[p].row(a), update_mu0(p, a, d, P, manual));
    }
  }
  EXPECT_LT(max_abs_diff(swept.gamma.data(), manual.gamma.data()), 1e-12);
  EXPECT_LT(max_abs_diff(swept.phi_out.data(), manual.phi_out.data()), 1e-12);
  EXPECT_LT(max_abs_diff(swept.phi_in.data(), manual.phi_in.data()), 1e-12);
  for (std::size_t p = 0; p < d.N; ++p) {
    EXPECT_LT(max_abs_diff(swept.lambda_act[p].data(), manual.lambda_act[p].data()), 1e-12);
    EXPECT_LT(max_abs_diff(swept.mu_act[p].data(), manual.mu_act[p].data()), 1e-12);
  }
}

TEST(ESweep0, PreservesSimplexProperty) {
  Rng rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = test::random_activity(6, 3, 5, rng);
    const auto P = test::random_params(3, 2, 3, rng);
    auto s = test::random_state0(d, 3, 2, rng);
    for (int sweep = 0; sweep < 3; ++sweep) e_step0_sweep(d, P, s);
    for (std::size_t p = 0; p < d.N; ++p) {
      for (std::size_t q = 0; q < d.N; ++q) {
        if (p == q) continue;
        double so = 0.0, si = 0.0;
        for (double x : s.phi_out.at(p, q)) so += x;
        for (double x : s.phi_in.at(p, q)) si += x;
        EXPECT_NEAR(so, 1.0, 1e-12);
        EXPECT_NEAR(si, 1.0, 1e-12);
      }
      for (std::size_t a = 0; a < d.num_activities(p); ++a) {
        double sl = 0.0, sm = 0.0;
        for (double x : s.lambda_act[p].row(a)) sl += x;
        for (double x : s.mu_act[p].row(a)) sm += x;
        EXPECT_NEAR(sl, 1.0, 1e-12);
        EXPECT_NEAR(sm, 1.0, 1e-12);
      }
    }
  }
}

// ---- fit0 ----

ActivitySample planted0(std::size_t N, int acts, std::uint64_t seed) {
  ModelParams P = ModelParams::uniform(2, 2, 10, 0.1);
  P.B(0, 0) = P.B(1, 1) = 0.4;
  P.B(0, 1) = P.B(1, 0) = 0.02;
  P.theta(0, 0) = 0.9;
  P.theta(0, 1) = 0.1;
  P.theta(1, 0) = 0.1;
  P.theta(1, 1) = 0.9;
  P.beta = block_beta(10, 2, 0.9);
  return generate_glad0(P, N, std::vector<int>(N, acts), seed);
}

TEST(Fit0, RecoversPlantedGroups) {
  const auto s = planted0(60, 20, 41);
  const auto f = fit0(s.data, 2, 2, Glad0FitConfig{});
  EXPECT_GE(test::agreement(grouping0(f.state), s.truth.G, 2), 0.9);
}

TEST(Fit0, InfiniteToleranceStopsAfterOneIteration) {
  const auto s = planted0(20, 5, 42);
  Glad0FitConfig cfg;
  cfg.tol = std::numeric_limits<double>::infinity();
  cfg.restarts = 1;
  const auto f = fit0(s.data, 2, 2, cfg);
  EXPECT_EQ(f.trace.size(), 1u);
  EXPECT_TRUE(f.converged);
}

TEST(Fit0, DeterministicForFixedSeed) {
  const auto s = planted0(25, 8, 43);
  Glad0FitConfig cfg;
  cfg.restarts = 2;
  const auto a = fit0(s.data, 2, 2, cfg), b = fit0(s.data, 2, 2, cfg);
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.params.B, b.params.B);
  EXPECT_EQ(a.state.gamma, b.state.gamma);
}

TEST(Fit0, TraceIsNonDecreasing) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto s = planted0(30, 10, seed);
    Glad0FitConfig cfg;
    cfg.restarts = 1;
    cfg.seed = seed;
    const auto f = fit0(s.data, 2, 2, cfg);
    for (std::size_t i = 1; i < f.trace.size(); ++i) {
      EXPECT_GE(f.trace[i], f.trace[i - 1] - 1e-8 * std::abs(f.trace[i - 1])) << "seed " << seed;
    }
  }
}

TEST(Fit0, WithoutActivitiesTheLinkFitIgnoresRoleParameters) {
  auto s = planted0(20, 0, 44);
  Glad0FitConfig cfg;
  cfg.max_iters = 15;
  const Glad0Init init = initialize0(s.data, 2, 2, cfg);
  Glad0Init other = init;
  other.params.theta(0, 0) = 0.2;
  other.params.theta(0, 1) = 0.8;
  other.params.beta = block_beta(10, 2, 0.5);
  const auto a = fit0_from(s.data, init, cfg), b = fit0_from(s.data, other, cfg);
  EXPECT_EQ(a.params.B, b.params.B);
  EXPECT_EQ(a.trace, b.trace);
  // The bound is then the mixed-membership link bound alone.
  EXPECT_NEAR(a.trace.back(), oracle::elbo0(s.data, a.params, a.state), 1e-10 * std::abs(a.trace.back()));
}

TEST(Grouping0, FallsBackToGammaWithoutActivities) {
  const auto d = ActivityDataset::make(2, {{0, 1}, {}}, Matrix<std::uint8_t>(2, 2));
  auto s = init_state0(d, 2, 2);
  s.lambda_act[0](0, 0) = 0.9;
  s.lambda_act[0](0, 1) = 0.1;
  s.lambda_act[0](1, 0) = 0.4;
  s.lambda_act[0](1, 1) = 0.6;
  s.gamma(1, 0) = 0.2;
  s.gamma(1, 1) = 3.0;
  EXPECT_EQ(grouping0(s), (std::vector<int>{0, 1}));
  const auto lam = person_lambda0(s);
  EXPECT_NEAR(lam(0, 0), 0.65, 1e-15);
  EXPECT_NEAR(lam(1, 1), 3.0 / 3.2, 1e-15);
  EXPECT_EQ(vec(person_mu0(s, 2).row(1)), (std::vector<double>{0.5, 0.5}));
}

}  // namespace
}  // namespace glad
