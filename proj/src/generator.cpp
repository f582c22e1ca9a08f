#include "glad/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "glad/random.hpp"

namespace glad {
namespace {

std::vector<double> beta_column(const MatrixD& beta, std::size_t k) {
  std::vector<double> col(beta.rows());
  for (std::size_t v = 0; v < beta.rows(); ++v) col[v] = beta(v, k);
  return col;
}

// Draws the symmetric link matrix from per-node groups, upper triangle first.
Matrix<std::uint8_t> draw_links(const MatrixD& B, const std::vector<int>& G,
                                Rng& rng) {
  const std::size_t N = G.size();
  Matrix<std::uint8_t> Y(N, N);
  for (std::size_t p = 0; p < N; ++p) {
    for (std::size_t q = p + 1; q < N; ++q) {
      const double b = B(static_cast<std::size_t>(G[p]), static_cast<std::size_t>(G[q]));
      const std::uint8_t y = rng.bernoulli(b) ? 1 : 0;
      Y(p, q) = y;
      Y(q, p) = y;
    }
  }
  return Y;
}

void draw_features(Matrix<int>& X, std::size_t p, int trials,
                   const std::vector<double>& emission, Rng& rng) {
  for (int a = 0; a < trials; ++a) X(p, rng.categorical(emission)) += 1;
}

void check_rate(const std::vector<double>& rate, std::size_t K, const char* name) {
  if (rate.size() != K) {
    throw std::invalid_argument(std::string(name) + " must have K entries");
  }
  double s = 0.0;
  for (double r : rate) {
    if (r < 0.0) throw std::invalid_argument(std::string(name) + " has a negative entry");
    s += r;
  }
  if (std::abs(s - 1.0) > 1e-9) {
    throw std::invalid_argument(std::string(name) + " must sum to 1");
  }
}

std::size_t count_fraction(double fraction, std::size_t M) {
  if (fraction <= 0.0) return 0;
  const auto n = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(M) - 1e-9));
  return std::clamp<std::size_t>(n, 1, M);
}

// Balanced group labels in a seeded random order.
std::vector<int> even_groups(std::size_t N, std::size_t M, Rng& rng) {
  std::vector<int> G(N);
  for (std::size_t p = 0; p < N; ++p) G[p] = static_cast<int>(p % M);
  std::shuffle(G.begin(), G.end(), rng.engine());
  return G;
}

std::vector<int> pick_groups(std::size_t M, std::size_t n, Rng& rng) {
  std::vector<int> idx(M);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng.engine());
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

MatrixD planted_blocks(std::size_t M, double in, double out) {
  MatrixD B(M, M, clamp_block(out));
  for (std::size_t m = 0; m < M; ++m) B(m, m) = clamp_block(in);
  return B;
}

}  // namespace

void InjectionConfig::check() const {
  if (N < 2) throw std::invalid_argument("N must be at least 2");
  if (M < 1 || K < 1) throw std::invalid_argument("M and K must be positive");
  if (V < K) throw std::invalid_argument("V must be at least K");
  if (anomaly_fraction < 0.0 || anomaly_fraction > 1.0) {
    throw std::invalid_argument("anomaly_fraction must lie in [0, 1]");
  }
  check_rate(normal_rate, K, "normal_rate");
  check_rate(anomalous_rate, K, "anomalous_rate");
  if (trials_per_person < 0) throw std::invalid_argument("trials must be non-negative");
  if (block_in < 0.0 || block_in > 1.0 || block_out < 0.0 || block_out > 1.0) {
    throw std::invalid_argument("block probabilities must lie in [0, 1]");
  }
  if (role_purity <= 0.0 || role_purity > 1.0) {
    throw std::invalid_argument("role_purity must lie in (0, 1]");
  }
}

MatrixD block_beta(std::size_t V, std::size_t K, double purity) {
  if (V < K || K == 0) throw std::invalid_argument("block_beta needs V >= K >= 1");
  MatrixD beta(V, K);
  if (K == 1) {
    for (std::size_t v = 0; v < V; ++v) beta(v, 0) = 1.0 / static_cast<double>(V);
    return beta;
  }
  const std::size_t width = V / K;
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t lo = k * width;
    const std::size_t hi = (k + 1 == K) ? V : lo + width;
    const double own = purity / static_cast<double>(hi - lo);
    const double rest = (V - (hi - lo)) > 0
                            ? (1.0 - purity) / static_cast<double>(V - (hi - lo))
                            : 0.0;
    for (std::size_t v = 0; v < V; ++v) beta(v, k) = (v >= lo && v < hi) ? own : rest;
  }
  return beta;
}

StaticSample generate_glad(const ModelParams& params, std::size_t N,
                           const std::vector<int>& trials, std::uint64_t seed) {
  require_valid(params);
  if (N < 2) throw std::invalid_argument("generate_glad needs N >= 2");
  if (trials.size() != N) throw std::invalid_argument("trials must have N entries");
  Rng rng(seed);
  const std::size_t M = params.M;

  GroundTruth truth;
  truth.pi = MatrixD(N, M);
  truth.G.resize(N);
  truth.R.resize(N);
  for (std::size_t p = 0; p < N; ++p) {
    const auto pi = rng.dirichlet(params.alpha);
    std::copy(pi.begin(), pi.end(), truth.pi.row(p).begin());
    truth.G[p] = static_cast<int>(rng.categorical(pi));
  }
  auto Y = draw_links(params.B, truth.G, rng);

  Matrix<int> X(N, params.V);
  std::vector<std::vector<double>> emissions(params.K);
  for (std::size_t k = 0; k < params.K; ++k) emissions[k] = beta_column(params.beta, k);
  for (std::size_t p = 0; p < N; ++p) {
    const auto g = static_cast<std::size_t>(truth.G[p]);
    truth.R[p] = static_cast<int>(rng.categorical(params.theta.row(g)));
    draw_features(X, p, trials[p], emissions[static_cast<std::size_t>(truth.R[p])], rng);
  }
  truth.theta = params.theta;
  truth.beta = params.beta;
  return {Dataset::make(std::move(X), std::move(Y)), std::move(truth)};
}

StaticSample generate_glad(const ModelParams& params, std::size_t N, int trials,
                           std::uint64_t seed) {
  return generate_glad(params, N, std::vector<int>(N, trials), seed);
}

ActivitySample generate_glad0(const ModelParams& params, std::size_t N,
                              const std::vector<int>& activities,
                              std::uint64_t seed) {
  require_valid(params);
  if (N < 2) throw std::invalid_argument("generate_glad0 needs N >= 2");
  if (activities.size() != N) {
    throw std::invalid_argument("activities must have N entries");
  }
  Rng rng(seed);
  const std::size_t M = params.M;

  GroundTruth truth;
  truth.pi = MatrixD(N, M);
  for (std::size_t p = 0; p < N; ++p) {
    const auto pi = rng.dirichlet(params.alpha);
    std::copy(pi.begin(), pi.end(), truth.pi.row(p).begin());
  }
  // Each unordered pair is observed once: sender p draws from pi_p and the
  // receiver side from pi_q.
  Matrix<std::uint8_t> Y(N, N);
  for (std::size_t p = 0; p < N; ++p) {
    for (std::size_t q = p + 1; q < N; ++q) {
      const auto zs = rng.categorical(truth.pi.row(p));
      const auto zr = rng.categorical(truth.pi.row(q));
      const std::uint8_t y = rng.bernoulli(params.B(zs, zr)) ? 1 : 0;
      Y(p, q) = y;
      Y(q, p) = y;
    }
  }
  std::vector<std::vector<double>> emissions(params.K);
  for (std::size_t k = 0; k < params.K; ++k) emissions[k] = beta_column(params.beta, k);

  std::vector<std::vector<int>> acts(N);
  truth.G_act.resize(N);
  truth.R_act.resize(N);
  truth.G.resize(N);
  for (std::size_t p = 0; p < N; ++p) {
    for (int a = 0; a < activities[p]; ++a) {
      const auto g = rng.categorical(truth.pi.row(p));
      const auto r = rng.categorical(params.theta.row(g));
      acts[p].push_back(static_cast<int>(rng.categorical(emissions[r])));
      truth.G_act[p].push_back(static_cast<int>(g));
      truth.R_act[p].push_back(static_cast<int>(r));
    }
    const auto row = truth.pi.row(p);
    truth.G[p] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  truth.theta = params.theta;
  truth.beta = params.beta;
  return {ActivityDataset::make(params.V, std::move(acts), std::move(Y)),
          std::move(truth)};
}

DynamicSample generate_dglad(const ModelParams& params, const MatrixD& theta0,
                             double sigma, std::size_t N, std::size_t T,
                             int trials, std::uint64_t seed) {
  require_valid(params);
  if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
  if (T < 1) throw std::invalid_argument("T must be at least 1");
  if (N < 2) throw std::invalid_argument("generate_dglad needs N >= 2");
  if (theta0.rows() != params.M || theta0.cols() != params.K) {
    throw std::invalid_argument("theta0 must be M x K");
  }
  Rng rng(seed);
  const std::size_t M = params.M;
  const std::size_t K = params.K;

  DynamicSample out;
  out.theta_path.push_back(theta0);
  out.truth.pi = MatrixD(N, M);
  for (std::size_t p = 0; p < N; ++p) {
    const auto pi = rng.dirichlet(params.alpha);
    std::copy(pi.begin(), pi.end(), out.truth.pi.row(p).begin());
  }
  std::vector<std::vector<double>> emissions(K);
  for (std::size_t k = 0; k < K; ++k) emissions[k] = beta_column(params.beta, k);

  std::vector<Dataset> snapshots;
  for (std::size_t t = 1; t <= T; ++t) {
    MatrixD theta = out.theta_path.back();
    for (double& x : theta.data()) x += rng.normal(0.0, sigma);
    out.theta_path.push_back(theta);

    std::vector<int> G(N), R(N);
    for (std::size_t p = 0; p < N; ++p) {
      G[p] = static_cast<int>(rng.categorical(out.truth.pi.row(p)));
    }
    auto Y = draw_links(params.B, G, rng);
    Matrix<int> X(N, params.V);
    for (std::size_t p = 0; p < N; ++p) {
      const auto rate = softmax(theta.row(static_cast<std::size_t>(G[p])));
      R[p] = static_cast<int>(rng.categorical(rate));
      draw_features(X, p, trials, emissions[static_cast<std::size_t>(R[p])], rng);
    }
    snapshots.push_back(Dataset::make(std::move(X), std::move(Y)));
    out.truth.G_t.push_back(std::move(G));
    out.truth.R_t.push_back(std::move(R));
  }
  out.data = DynamicDataset::make(std::move(snapshots));
  out.truth.beta = params.beta;
  return out;
}

StaticSample inject_anomalies(const InjectionConfig& cfg) {
  cfg.check();
  Rng rng(cfg.seed);
  const std::size_t M = cfg.M;
  const std::size_t K = cfg.K;

  GroundTruth truth;
  truth.anomalous_groups = pick_groups(M, count_fraction(cfg.anomaly_fraction, M), rng);
  truth.normal_rate = cfg.normal_rate;
  truth.anomalous_rate = cfg.anomalous_rate;
  truth.theta = MatrixD(M, K);
  for (std::size_t m = 0; m < M; ++m) {
    const bool anomalous = std::binary_search(truth.anomalous_groups.begin(),
                                              truth.anomalous_groups.end(),
                                              static_cast<int>(m));
    const auto& rate = anomalous ? cfg.anomalous_rate : cfg.normal_rate;
    std::copy(rate.begin(), rate.end(), truth.theta.row(m).begin());
  }
  truth.beta = block_beta(cfg.V, K, cfg.role_purity);
  truth.G = even_groups(cfg.N, M, rng);
  truth.pi = MatrixD(cfg.N, M);
  for (std::size_t p = 0; p < cfg.N; ++p) truth.pi(p, static_cast<std::size_t>(truth.G[p])) = 1.0;

  auto Y = draw_links(planted_blocks(M, cfg.block_in, cfg.block_out), truth.G, rng);
  std::vector<std::vector<double>> emissions(K);
  for (std::size_t k = 0; k < K; ++k) emissions[k] = beta_column(truth.beta, k);
  Matrix<int> X(cfg.N, cfg.V);
  truth.R.resize(cfg.N);
  for (std::size_t p = 0; p < cfg.N; ++p) {
    const auto g = static_cast<std::size_t>(truth.G[p]);
    truth.R[p] = static_cast<int>(rng.categorical(truth.theta.row(g)));
    draw_features(X, p, cfg.trials_per_person,
                  emissions[static_cast<std::size_t>(truth.R[p])], rng);
  }
  return {Dataset::make(std::move(X), std::move(Y)), std::move(truth)};
}

DynamicSample inject_dynamic_change(const InjectionConfig& cfg, std::size_t T,
                                    std::size_t change_time,
                                    double changed_fraction, double sigma,
                                    std::uint64_t seed) {
  cfg.check();
  if (change_time <= 1 || change_time > T) {
    throw std::invalid_argument("change_time must satisfy 1 < change_time <= T");
  }
  if (changed_fraction < 0.0 || changed_fraction > 1.0) {
    throw std::invalid_argument("changed_fraction must lie in [0, 1]");
  }
  if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
  Rng rng(seed);
  const std::size_t M = cfg.M;
  const std::size_t K = cfg.K;
  const std::size_t N = cfg.N;

  DynamicSample out;
  auto& truth = out.truth;
  const auto changed = pick_groups(M, count_fraction(changed_fraction, M), rng);
  for (int m : changed) truth.change_times[m] = static_cast<int>(change_time);
  truth.anomalous_groups = changed;
  truth.normal_rate = cfg.normal_rate;
  truth.anomalous_rate = cfg.anomalous_rate;
  truth.beta = block_beta(cfg.V, K, cfg.role_purity);
  truth.G = even_groups(N, M, rng);
  truth.pi = MatrixD(N, M);
  for (std::size_t p = 0; p < N; ++p) truth.pi(p, static_cast<std::size_t>(truth.G[p])) = 1.0;

  MatrixD theta0(M, K);
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t k = 0; k < K; ++k) theta0(m, k) = safe_log(cfg.normal_rate[k]);
  }
  out.theta_path.push_back(theta0);

  const MatrixD B = planted_blocks(M, cfg.block_in, cfg.block_out);
  std::vector<std::vector<double>> emissions(K);
  for (std::size_t k = 0; k < K; ++k) emissions[k] = beta_column(truth.beta, k);

  std::vector<Dataset> snapshots;
  for (std::size_t t = 1; t <= T; ++t) {
    MatrixD theta = out.theta_path.back();
    for (std::size_t m = 0; m < M; ++m) {
      const bool jumps = t == change_time && truth.change_times.count(static_cast<int>(m));
      for (std::size_t k = 0; k < K; ++k) {
        if (jumps) theta(m, k) = safe_log(cfg.anomalous_rate[k]);
        theta(m, k) += rng.normal(0.0, sigma);
      }
    }
    out.theta_path.push_back(theta);

    auto Y = draw_links(B, truth.G, rng);
    Matrix<int> X(N, cfg.V);
    std::vector<int> R(N);
    for (std::size_t p = 0; p < N; ++p) {
      const auto rate = softmax(theta.row(static_cast<std::size_t>(truth.G[p])));
      R[p] = static_cast<int>(rng.categorical(rate));
      draw_features(X, p, cfg.trials_per_person, emissions[static_cast<std::size_t>(R[p])], rng);
    }
    snapshots.push_back(Dataset::make(std::move(X), std::move(Y)));
    truth.G_t.push_back(truth.G);
    truth.R_t.push_back(std::move(R));
  }
  out.data = DynamicDataset::make(std::move(snapshots));
  return out;
}

}  // namespace glad
