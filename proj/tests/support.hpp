#ifndef GLAD_TESTS_SUPPORT_HPP_
#define GLAD_TESTS_SUPPORT_HPP_

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "glad/glad0_vem.hpp"
#include "glad/glad_vem.hpp"
#include "glad/model.hpp"
#include "glad/random.hpp"
#include "glad/scoring.hpp"

namespace glad::test {

inline std::vector<double> random_simplex(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  double s = 0.0;
  for (double& x : v) s += (x = 0.05 + rng.uniform());
  for (double& x : v) x /= s;
  return v;
}

inline void fill_rows_simplex(MatrixD& m, Rng& rng) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto s = random_simplex(m.cols(), rng);
    std::copy(s.begin(), s.end(), m.row(r).begin());
  }
}

inline Matrix<std::uint8_t> random_links(std::size_t N, double density, Rng& rng) {
  Matrix<std::uint8_t> Y(N, N);
  for (std::size_t p = 0; p < N; ++p) {
    for (std::size_t q = p + 1; q < N; ++q) {
      Y(p, q) = Y(q, p) = rng.bernoulli(density) ? 1 : 0;
    }
  }
  return Y;
}

inline Dataset random_dataset(std::size_t N, std::size_t V, Rng& rng, int max_count = 4) {
  Matrix<int> X(N, V);
  for (int& x : X.data()) x = static_cast<int>(rng.uniform() * (max_count + 1));
  return Dataset::make(std::move(X), random_links(N, 0.4, rng));
}

inline ModelParams random_params(std::size_t M, std::size_t K, std::size_t V, Rng& rng) {
  ModelParams p = ModelParams::uniform(M, K, V);
  for (double& a : p.alpha) a = 0.1 + 2.0 * rng.uniform();
  for (double& b : p.B.data()) b = 0.05 + 0.9 * rng.uniform();
  fill_rows_simplex(p.theta, rng);
  MatrixD bt(K, V);
  fill_rows_simplex(bt, rng);
  for (std::size_t v = 0; v < V; ++v) {
    for (std::size_t k = 0; k < K; ++k) p.beta(v, k) = bt(k, v);
  }
  return p;
}

inline GladVariational random_state(std::size_t N, std::size_t M, std::size_t K, Rng& rng) {
  GladVariational s = init_state(N, M, K);
  for (double& g : s.gamma.data()) g = 0.1 + 3.0 * rng.uniform();
  fill_rows_simplex(s.lambda, rng);
  fill_rows_simplex(s.mu, rng);
  return s;
}

inline ActivityDataset random_activity(std::size_t N, std::size_t V, int max_acts, Rng& rng) {
  std::vector<std::vector<int>> acts(N);
  for (auto& a : acts) {
    const int n = static_cast<int>(rng.uniform() * (max_acts + 1));
    for (int i = 0; i < n; ++i) a.push_back(static_cast<int>(rng.uniform() * static_cast<double>(V)));
  }
  return ActivityDataset::make(V, std::move(acts), random_links(N, 0.4, rng));
}

inline Glad0Variational random_state0(const ActivityDataset& d, std::size_t M, std::size_t K, Rng& rng) {
  Glad0Variational s = init_state0(d, M, K);
  for (double& g : s.gamma.data()) g = 0.1 + 3.0 * rng.uniform();
  for (std::size_t p = 0; p < d.N; ++p) {
    for (std::size_t q = 0; q < d.N; ++q) {
      if (p == q) continue;
      auto o = random_simplex(M, rng), i = random_simplex(M, rng);
      std::copy(o.begin(), o.end(), s.phi_out.at(p, q).begin());
      std::copy(i.begin(), i.end(), s.phi_in.at(p, q).begin());
    }
    fill_rows_simplex(s.lambda_act[p], rng);
    fill_rows_simplex(s.mu_act[p], rng);
  }
  return s;
}

// Fraction of nodes whose fitted label maps onto the true label.
inline double agreement(const std::vector<int>& fitted, const std::vector<int>& truth, std::size_t M) {
  const auto map = match_labels(fitted, truth, M);
  std::size_t hit = 0;
  for (std::size_t p = 0; p < fitted.size(); ++p) {
    hit += map[static_cast<std::size_t>(fitted[p])] == truth[p] ? 1 : 0;
  }
  return static_cast<double>(hit) / static_cast<double>(fitted.size());
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = a.size() == b.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("glad_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace glad::test

#endif  // GLAD_TESTS_SUPPORT_HPP_
