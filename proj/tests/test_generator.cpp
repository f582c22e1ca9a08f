#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numeric>

#include "glad/generator.hpp"
#include "glad/model.hpp"
#include "support.hpp"

namespace glad {
namespace {

// Upper-tail p-value of Pearson's statistic for counts against probabilities.
double chi_square_p(const std::vector<double>& observed, const std::vector<double>& prob) {
  const double n = std::accumulate(observed.begin(), observed.end(), 0.0);
  double stat = 0.0;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (prob[i] <= 0.0) continue;
    const double e = n * prob[i];
    stat += (observed[i] - e) * (observed[i] - e) / e;
    ++cells;
  }
  boost::math::chi_squared dist(static_cast<double>(cells - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

ModelParams two_group_params() {
  ModelParams p = ModelParams::uniform(2, 2, 4, 0.5);
  p.B(0, 0) = 0.3;
  p.B(1, 1) = 0.2;
  p.B(0, 1) = p.B(1, 0) = 0.05;
  p.theta(0, 0) = 0.8;
  p.theta(0, 1) = 0.2;
  p.theta(1, 0) = 0.3;
  p.theta(1, 1) = 0.7;
  p.beta = block_beta(4, 2, 0.7);
  return p;
}

void expect_symmetric(const Dataset& d) {
  for (std::size_t p = 0; p < d.N; ++p) {
    for (std::size_t q = 0; q < d.N; ++q) ASSERT_EQ(d.Y(p, q), d.Y(q, p));
  }
}

TEST(GenerateGlad, SingleGroupLinksAreIid) {
  ModelParams p = ModelParams::uniform(1, 2, 4, 1.0, 0.3);
  const auto s = generate_glad(p, 400, 5, 1);
  for (int g : s.truth.G) EXPECT_EQ(g, 0);
  double links = 0.0, pairs = 0.0;
  for (std::size_t a = 0; a < 400; ++a) {
    for (std::size_t b = a + 1; b < 400; ++b) {
      links += s.data.Y(a, b);
      pairs += 1.0;
    }
  }
  EXPECT_GT(chi_square_p({links, pairs - links}, {0.3, 0.7}), 0.01);
}

TEST(GenerateGlad, DiagonalBlocksGiveNoCrossGroupLinks) {
  ModelParams p = ModelParams::uniform(3, 2, 4, 1.0);
  for (std::size_t m = 0; m < 3; ++m) {
    for (std::size_t n = 0; n < 3; ++n) p.B(m, n) = m == n ? 1.0 - kBlockEps : kBlockEps;
  }
  const auto s = generate_glad(p, 150, 3, 2);
  for (std::size_t a = 0; a < 150; ++a) {
    for (std::size_t b = a + 1; b < 150; ++b) {
      if (s.truth.G[a] != s.truth.G[b]) {
        EXPECT_EQ(s.data.Y(a, b), 0);
      }
    }
  }
}

TEST(GenerateGlad, WithinGroupFrequencyMatchesBlock) {
  ModelParams p = ModelParams::uniform(1, 1, 2, 1.0, 0.3);
  const auto s = generate_glad(p, 2000, 1, 3);
  double links = 0.0, pairs = 0.0;
  for (std::size_t a = 0; a < 2000; ++a) {
    for (std::size_t b = a + 1; b < 2000; ++b) {
      links += s.data.Y(a, b);
      pairs += 1.0;
    }
  }
  EXPECT_NEAR(links / pairs, 0.3, 0.02);
}

TEST(GenerateGlad, LinkFrequenciesFitBlocksChiSquare) {
  const ModelParams p = two_group_params();
  const auto s = generate_glad(p, 2000, 1, 4);
  expect_symmetric(s.data);
  // Independent Bernoulli cells per block pair: sum the per-block statistics.
  double stat = 0.0;
  int dof = 0;
  for (int g = 0; g < 2; ++g) {
    for (int h = g; h < 2; ++h) {
      double links = 0.0, pairs = 0.0;
      for (std::size_t a = 0; a < 2000; ++a) {
        for (std::size_t b = a + 1; b < 2000; ++b) {
          const int ga = s.truth.G[a], gb = s.truth.G[b];
          if (std::min(ga, gb) != g || std::max(ga, gb) != h) continue;
          links += s.data.Y(a, b);
          pairs += 1.0;
        }
      }
      const double b = p.B(static_cast<std::size_t>(g), static_cast<std::size_t>(h));
      stat += (links - pairs * b) * (links - pairs * b) / (pairs * b * (1.0 - b));
      ++dof;
    }
  }
  boost::math::chi_squared dist(dof);
  EXPECT_GT(boost::math::cdf(boost::math::complement(dist, stat)), 0.01);
}

TEST(GenerateGlad, FeatureFrequenciesFitMixtureChiSquare) {
  const ModelParams p = two_group_params();
  const auto s = generate_glad(p, 2000, 1, 5);
  for (std::size_t g = 0; g < 2; ++g) {
    std::vector<double> counts(4, 0.0), prob(4, 0.0);
    for (std::size_t a = 0; a < 2000; ++a) {
      if (static_cast<std::size_t>(s.truth.G[a]) != g) continue;
      for (std::size_t v = 0; v < 4; ++v) counts[v] += s.data.X(a, v);
    }
    for (std::size_t v = 0; v < 4; ++v) {
      for (std::size_t k = 0; k < 2; ++k) prob[v] += p.theta(g, k) * p.beta(v, k);
    }
    EXPECT_GT(chi_square_p(counts, prob), 0.01) << "group " << g;
  }
}

TEST(GenerateGlad, RoleFrequenciesFitThetaChiSquare) {
  const ModelParams p = two_group_params();
  const auto s = generate_glad(p, 2000, 1, 6);
  for (std::size_t g = 0; g < 2; ++g) {
    std::vector<double> counts(2, 0.0);
    for (std::size_t a = 0; a < 2000; ++a) {
      if (static_cast<std::size_t>(s.truth.G[a]) == g) counts[static_cast<std::size_t>(s.truth.R[a])] += 1.0;
    }
    EXPECT_GT(chi_square_p(counts, {p.theta(g, 0), p.theta(g, 1)}), 0.01);
  }
}

TEST(GenerateGlad, DeterministicUnderSeed) {
  const ModelParams p = two_group_params();
  const auto a = generate_glad(p, 100, 10, 9), b = generate_glad(p, 100, 10, 9);
  EXPECT_EQ(a.data.X, b.data.X);
  EXPECT_EQ(a.data.Y, b.data.Y);
  EXPECT_EQ(a.truth.G, b.truth.G);
  const auto c = generate_glad(p, 100, 10, 10);
  EXPECT_NE(a.data.X, c.data.X);
}

TEST(GenerateGlad, RejectsInvalidParams) {
  ModelParams p = two_group_params();
  p.theta(0, 0) = 0.9;
  EXPECT_THROW(generate_glad(p, 10, 1, 1), std::invalid_argument);
  EXPECT_THROW(generate_glad(two_group_params(), 1, 1, 1), std::invalid_argument);
}

TEST(GenerateGlad0, LargeAlphaGivesUniformMemberships) {
  ModelParams p = two_group_params();
  p.alpha = {1e6, 1e6};
  const auto s = generate_glad0(p, 500, std::vector<int>(500, 20), 7);
  double n0 = 0.0, n = 0.0;
  for (const auto& acts : s.truth.G_act) {
    for (int g : acts) {
      n0 += g == 0 ? 1.0 : 0.0;
      n += 1.0;
    }
  }
  EXPECT_EQ(n, 1e4);
  EXPECT_NEAR(n0 / n, 0.5, 0.02);
}

TEST(GenerateGlad0, NoActivitiesStillLinks) {
  const auto s = generate_glad0(two_group_params(), 50, std::vector<int>(50, 0), 8);
  for (std::size_t p = 0; p < 50; ++p) EXPECT_EQ(s.data.num_activities(p), 0u);
  std::size_t links = 0;
  for (std::uint8_t y : s.data.Y.data()) links += y;
  EXPECT_GT(links, 0u);
}

TEST(GenerateGlad0, OneHotEmissionRevealsRole) {
  ModelParams p = two_group_params();
  p.beta = MatrixD(4, 2, 0.0);
  p.beta(1, 0) = 1.0;
  p.beta(3, 1) = 1.0;
  const auto s = generate_glad0(p, 40, std::vector<int>(40, 10), 9);
  for (std::size_t q = 0; q < 40; ++q) {
    for (std::size_t a = 0; a < s.data.num_activities(q); ++a) {
      EXPECT_EQ(s.data.activities[q][a], s.truth.R_act[q][a] == 0 ? 1 : 3);
    }
  }
}

TEST(GenerateGlad0, ActivityFeaturesFitMixtureChiSquare) {
  const ModelParams p = two_group_params();
  const auto s = generate_glad0(p, 200, std::vector<int>(200, 10), 10);
  for (std::size_t g = 0; g < 2; ++g) {
    std::vector<double> counts(4, 0.0), prob(4, 0.0);
    for (std::size_t q = 0; q < 200; ++q) {
      for (std::size_t a = 0; a < s.data.num_activities(q); ++a) {
        if (static_cast<std::size_t>(s.truth.G_act[q][a]) == g) {
          counts[static_cast<std::size_t>(s.data.activities[q][a])] += 1.0;
        }
      }
    }
    for (std::size_t v = 0; v < 4; ++v) {
      for (std::size_t k = 0; k < 2; ++k) prob[v] += p.theta(g, k) * p.beta(v, k);
    }
    EXPECT_GT(chi_square_p(counts, prob), 0.01);
  }
}

TEST(GenerateDglad, ZeroSigmaFreezesWalk) {
  const ModelParams p = two_group_params();
  MatrixD theta0(2, 2);
  theta0(0, 0) = 1.0;
  theta0(1, 1) = -0.5;
  const auto s = generate_dglad(p, theta0, 0.0, 20, 4, 5, 11);
  ASSERT_EQ(s.theta_path.size(), 5u);
  for (const auto& th : s.theta_path) EXPECT_EQ(th, theta0);
  EXPECT_EQ(s.data.T(), 4u);
  for (const auto& snap : s.data.snapshots) expect_symmetric(snap);
}

TEST(GenerateDglad, SingleFrozenStepMatchesStaticMixture) {
  ModelParams p = two_group_params();
  MatrixD theta0(2, 2);
  theta0(0, 0) = std::log(0.8);
  theta0(0, 1) = std::log(0.2);
  theta0(1, 0) = std::log(0.3);
  theta0(1, 1) = std::log(0.7);
  const auto s = generate_dglad(p, theta0, 0.0, 2000, 1, 1, 12);
  for (std::size_t g = 0; g < 2; ++g) {
    std::vector<double> counts(4, 0.0), prob(4, 0.0);
    for (std::size_t a = 0; a < 2000; ++a) {
      if (static_cast<std::size_t>(s.truth.G_t[0][a]) != g) continue;
      for (std::size_t v = 0; v < 4; ++v) counts[v] += s.data.snapshots[0].X(a, v);
    }
    const auto rate = softmax(theta0.row(g));
    for (std::size_t v = 0; v < 4; ++v) {
      for (std::size_t k = 0; k < 2; ++k) prob[v] += rate[k] * p.beta(v, k);
    }
    EXPECT_GT(chi_square_p(counts, prob), 0.01);
  }
}

TEST(GenerateDglad, RandomWalkDisplacementMatchesVariance) {
  ModelParams p = ModelParams::uniform(4, 2, 2, 1.0);
  const MatrixD theta0(4, 2, 0.0);
  const double sigma = 0.5;
  const std::size_t T = 100;
  double sum_sq = 0.0, n = 0.0;
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    const auto s = generate_dglad(p, theta0, sigma, 2, T, 0, seed);
    for (double x : s.theta_path.back().data()) {
      sum_sq += x * x;
      n += 1.0;
    }
  }
  const double expected = sigma * sigma * static_cast<double>(T);
  EXPECT_NEAR(sum_sq / n, expected, 0.1 * expected);
}

TEST(InjectAnomalies, PlantsOneOfFiveGroups) {
  InjectionConfig cfg;
  const auto s = inject_anomalies(cfg);
  ASSERT_EQ(s.truth.anomalous_groups.size(), 1u);
  const auto g = static_cast<std::size_t>(s.truth.anomalous_groups[0]);
  EXPECT_EQ(s.truth.theta(g, 0), 0.9);
  std::vector<int> sizes(5, 0);
  for (int x : s.truth.G) ++sizes[static_cast<std::size_t>(x)];
  EXPECT_EQ(sizes, std::vector<int>(5, 100));
  EXPECT_EQ(s.data.N, 500u);
  expect_symmetric(s.data);
}

TEST(InjectAnomalies, ZeroFractionIsAllNormal) {
  InjectionConfig cfg;
  cfg.anomaly_fraction = 0.0;
  const auto s = inject_anomalies(cfg);
  EXPECT_TRUE(s.truth.anomalous_groups.empty());
  for (std::size_t m = 0; m < 5; ++m) {
    EXPECT_EQ(s.truth.theta(m, 0), 0.1);
    EXPECT_EQ(s.truth.theta(m, 1), 0.9);
  }
}

TEST(InjectAnomalies, RejectsBadConfig) {
  InjectionConfig cfg;
  cfg.normal_rate = {0.5, 0.6};
  EXPECT_THROW(inject_anomalies(cfg), std::invalid_argument);
  cfg = InjectionConfig{};
  cfg.anomaly_fraction = 1.5;
  EXPECT_THROW(inject_anomalies(cfg), std::invalid_argument);
}

TEST(InjectDynamicChange, FlagsHalfOfGroupsAtChangeTime) {
  InjectionConfig cfg;
  cfg.M = 4;
  cfg.N = 80;
  const auto s = inject_dynamic_change(cfg, 5, 4, 0.5, 0.1, 1);
  ASSERT_EQ(s.truth.change_times.size(), 2u);
  for (const auto& [g, t] : s.truth.change_times) EXPECT_EQ(t, 4);
  const auto none = inject_dynamic_change(cfg, 5, 4, 0.0, 0.1, 1);
  EXPECT_TRUE(none.truth.change_times.empty());
  EXPECT_THROW(inject_dynamic_change(cfg, 5, 1, 0.5, 0.1, 1), std::invalid_argument);
}

TEST(InjectDynamicChange, ChangedGroupsJumpFurthestInEverySeed) {
  InjectionConfig cfg;
  cfg.M = 4;
  cfg.N = 8;
  cfg.trials_per_person = 1;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto s = inject_dynamic_change(cfg, 5, 4, 0.5, 0.1, seed);
    double min_changed = INFINITY, max_other = 0.0;
    for (std::size_t m = 0; m < 4; ++m) {
      double d = 0.0;
      for (std::size_t k = 0; k < 2; ++k) {
        const double x = s.theta_path[4](m, k) - s.theta_path[3](m, k);
        d += x * x;
      }
      d = std::sqrt(d);
      if (s.truth.change_times.count(static_cast<int>(m))) {
        min_changed = std::min(min_changed, d);
      } else {
        max_other = std::max(max_other, d);
      }
    }
    EXPECT_GT(min_changed, max_other) << "seed " << seed;
  }
}

TEST(BlockBeta, ColumnsAreSimplices) {
  const MatrixD b = block_beta(20, 3, 0.8);
  for (std::size_t k = 0; k < 3; ++k) {
    double s = 0.0;
    for (std::size_t v = 0; v < 20; ++v) s += b(v, k);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  EXPECT_THROW(block_beta(2, 3, 0.8), std::invalid_argument);
}

}  // namespace
}  // namespace glad
