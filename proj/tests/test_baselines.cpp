#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "glad/baselines.hpp"
#include "glad/generator.hpp"
#include "support.hpp"

namespace glad {
namespace {

Matrix<std::uint8_t> two_cliques(std::size_t half) {
  Matrix<std::uint8_t> Y(2 * half, 2 * half);
  for (std::size_t p = 0; p < 2 * half; ++p) {
    for (std::size_t q = 0; q < 2 * half; ++q) {
      if (p != q && (p < half) == (q < half)) Y(p, q) = 1;
    }
  }
  return Y;
}

TEST(FitMmsb, SeparatesDisconnectedCliques) {
  const auto d = Dataset::make(Matrix<int>(20, 1, 1), two_cliques(10));
  const auto r = fit_mmsb(d, 2, GladFitConfig{});
  std::vector<int> truth(20);
  for (std::size_t p = 10; p < 20; ++p) truth[p] = 1;
  EXPECT_EQ(test::agreement(r.grouping, truth, 2), 1.0);
  EXPECT_GT(r.B(r.grouping[0], r.grouping[0]), 0.9);
  EXPECT_LT(r.B(r.grouping[0], r.grouping[19]), 0.01);
}

TEST(FitMmsb, NoSignalIsStillDeterministic) {
  Rng rng(91);
  const auto d = Dataset::make(Matrix<int>(15, 2, 1), test::random_links(15, 0.3, rng));
  GladFitConfig cfg;
  cfg.restarts = 2;
  const auto a = fit_mmsb(d, 3, cfg), b = fit_mmsb(d, 3, cfg);
  EXPECT_EQ(a.grouping, b.grouping);
  EXPECT_EQ(a.B, b.B);
}

TEST(FitMmsb, NodePermutationEquivariance) {
  const ModelParams P = [] {
    ModelParams p = ModelParams::uniform(3, 1, 1, 0.05);
    for (std::size_t m = 0; m < 3; ++m) {
      for (std::size_t n = 0; n < 3; ++n) p.B(m, n) = m == n ? 0.5 : 0.02;
    }
    return p;
  }();
  const auto s = generate_glad(P, 60, 1, 92);
  std::vector<std::size_t> perm(60);  // new node i is old node perm[i]
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(93);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  Matrix<int> X(60, 1);
  Matrix<std::uint8_t> Y(60, 60);
  for (std::size_t i = 0; i < 60; ++i) {
    X(i, 0) = s.data.X(perm[i], 0);
    for (std::size_t j = 0; j < 60; ++j) Y(i, j) = s.data.Y(perm[i], perm[j]);
  }
  const auto a = fit_mmsb(s.data, 3, GladFitConfig{});
  const auto b = fit_mmsb(Dataset::make(X, Y), 3, GladFitConfig{});
  std::vector<int> a_permuted(60);
  for (std::size_t i = 0; i < 60; ++i) a_permuted[i] = a.grouping[perm[i]];
  EXPECT_EQ(test::agreement(b.grouping, a_permuted, 3), 1.0);
}

TEST(FitGroupLda, IdenticalCompositionsScoreEqually) {
  Rng rng(94);
  const std::size_t per = 6, M = 3, V = 5;
  Matrix<int> rows(per, V);
  for (int& x : rows.data()) x = static_cast<int>(rng.uniform() * 4.0);
  Matrix<int> X(per * M, V);
  std::vector<int> grouping(per * M);
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t i = 0; i < per; ++i) {
      grouping[m * per + i] = static_cast<int>(m);
      for (std::size_t v = 0; v < V; ++v) X(m * per + i, v) = rows(i, v);
    }
  }
  const auto r = fit_group_lda(X, grouping, M, 2, GroupLdaConfig{});
  EXPECT_NEAR(r.scores[0], r.scores[1], 1e-6);
  EXPECT_NEAR(r.scores[1], r.scores[2], 1e-6);
}

TEST(FitGroupLda, SingleRoleIsMultinomialNegLogLikelihood) {
  Rng rng(95);
  Matrix<int> X(8, 4);
  for (int& x : X.data()) x = 1 + static_cast<int>(rng.uniform() * 3.0);
  const std::vector<int> grouping{0, 0, 0, 1, 1, 1, 1, 0};
  const auto r = fit_group_lda(X, grouping, 2, 1, GroupLdaConfig{});
  std::vector<double> freq(4, 0.0);
  double total = 0.0;
  for (std::size_t p = 0; p < 8; ++p) {
    for (std::size_t v = 0; v < 4; ++v) {
      freq[v] += X(p, v);
      total += X(p, v);
    }
  }
  std::vector<double> expect(2, 0.0);
  for (std::size_t p = 0; p < 8; ++p) {
    for (std::size_t v = 0; v < 4; ++v) {
      expect[static_cast<std::size_t>(grouping[p])] -= X(p, v) * std::log(freq[v] / total);
    }
  }
  EXPECT_NEAR(r.scores[0], expect[0], 1e-9);
  EXPECT_NEAR(r.scores[1], expect[1], 1e-9);
}

TEST(FitGroupLda, SmallGroupsFallBackToGlobalRate) {
  Rng rng(96);
  Matrix<int> X(5, 3);
  for (int& x : X.data()) x = static_cast<int>(rng.uniform() * 4.0);
  const auto r = fit_group_lda(X, {0, 0, 0, 0, 1}, 3, 2, GroupLdaConfig{});
  EXPECT_EQ(r.warnings.size(), 2u);  // group 1 has one member, group 2 none
  for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(r.rates(1, k), r.global_rate[k]);
  EXPECT_EQ(r.scores[2], 0.0);
  EXPECT_THROW(fit_group_lda(X, {0, 0}, 3, 2, GroupLdaConfig{}), std::invalid_argument);
}

TEST(FitGroupLda, TraceNonDecreasingAndDeterministic) {
  InjectionConfig cfg;
  cfg.N = 100;
  cfg.seed = 97;
  const auto s = inject_anomalies(cfg);
  const auto a = fit_group_lda(s.data.X, s.truth.G, cfg.M, cfg.K, GroupLdaConfig{});
  const auto b = fit_group_lda(s.data.X, s.truth.G, cfg.M, cfg.K, GroupLdaConfig{});
  EXPECT_EQ(a.scores, b.scores);
  for (std::size_t i = 1; i < a.trace.size(); ++i) {
    EXPECT_GE(a.trace[i], a.trace[i - 1] - 1e-9 * std::abs(a.trace[i - 1]));
  }
}

TEST(TwoStage, FeatureStageIgnoresLinks) {
  InjectionConfig cfg;
  cfg.N = 50;
  cfg.seed = 98;
  const auto s = inject_anomalies(cfg);
  Rng rng(99);
  const auto other = Dataset::make(s.data.X, test::random_links(50, 0.5, rng));
  const auto g = fit_mmsb(s.data, cfg.M, GladFitConfig{}).grouping;
  const auto a = fit_group_lda(s.data.X, g, cfg.M, cfg.K, GroupLdaConfig{});
  const auto b = fit_group_lda(other.X, g, cfg.M, cfg.K, GroupLdaConfig{});
  EXPECT_EQ(a.scores, b.scores);
  EXPECT_EQ(a.rates, b.rates);
}

}  // namespace
}  // namespace glad
