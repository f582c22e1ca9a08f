#include "glad/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "glad/random.hpp"

namespace glad {

MmsbResult fit_mmsb(const Dataset& data, std::size_t M, GladFitConfig config) {
  config.use_pointwise = false;
  MmsbResult out;
  // K = 1: the role side is inert when the point-wise terms are off.
  out.fit = fit(data, M, 1, config);
  out.grouping = map_grouping(out.fit.state.lambda);
  out.B = out.fit.params.B;
  out.alpha = out.fit.params.alpha;
  return out;
}

namespace {

struct LdaRun {
  MatrixD rates, beta, resp;
  std::vector<double> trace;
  bool converged = false;
};

// log prod_v beta_vk^X_pv for every (p, k).
MatrixD log_emission(const Matrix<int>& X, const MatrixD& beta) {
  const std::size_t K = beta.cols();
  MatrixD out(X.rows(), K, 0.0);
  for (std::size_t p = 0; p < X.rows(); ++p) {
    for (std::size_t v = 0; v < X.cols(); ++v) {
      const int x = X(p, v);
      if (x == 0) continue;
      for (std::size_t k = 0; k < K; ++k) out(p, k) += x * safe_log(beta(v, k));
    }
  }
  return out;
}

LdaRun run_lda(const Matrix<int>& X, const std::vector<int>& grouping, std::size_t M,
               std::size_t K, const GroupLdaConfig& config, std::uint64_t seed) {
  const std::size_t N = X.rows();
  const std::size_t V = X.cols();
  Rng rng(seed);
  LdaRun run;
  run.rates = MatrixD(M, K, 1.0 / static_cast<double>(K));
  run.beta = MatrixD(V, K);
  for (std::size_t k = 0; k < K; ++k) {
    double s = 0.0;
    for (std::size_t v = 0; v < V; ++v) s += (run.beta(v, k) = 0.5 + rng.uniform());
    for (std::size_t v = 0; v < V; ++v) run.beta(v, k) /= s;
  }
  run.resp = MatrixD(N, K);
  double prev = -std::numeric_limits<double>::infinity();
  std::vector<double> w(K);
  for (int it = 0; it < config.max_iters; ++it) {
    const MatrixD le = log_emission(X, run.beta);
    long double ll = 0.0L;
    for (std::size_t p = 0; p < N; ++p) {
      const auto g = static_cast<std::size_t>(grouping[p]);
      for (std::size_t k = 0; k < K; ++k) w[k] = safe_log(run.rates(g, k)) + le(p, k);
      ll += log_sum_exp(w);
      normalize_log_weights(w);
      std::copy(w.begin(), w.end(), run.resp.row(p).begin());
    }
    run.trace.push_back(static_cast<double>(ll));

    MatrixD rates(M, K, 0.0);
    std::vector<double> size(M, 0.0);
    MatrixD beta(V, K, 0.0);
    for (std::size_t p = 0; p < N; ++p) {
      const auto g = static_cast<std::size_t>(grouping[p]);
      size[g] += 1.0;
      for (std::size_t k = 0; k < K; ++k) {
        rates(g, k) += run.resp(p, k);
        for (std::size_t v = 0; v < V; ++v) {
          if (X(p, v) != 0) beta(v, k) += X(p, v) * run.resp(p, k);
        }
      }
    }
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t k = 0; k < K; ++k) {
        run.rates(m, k) = size[m] > 0.0 ? rates(m, k) / size[m] : 1.0 / static_cast<double>(K);
      }
    }
    for (std::size_t k = 0; k < K; ++k) {
      double s = 0.0;
      for (std::size_t v = 0; v < V; ++v) s += beta(v, k);
      for (std::size_t v = 0; v < V; ++v) {
        run.beta(v, k) = s > 0.0 ? beta(v, k) / s : 1.0 / static_cast<double>(V);
      }
    }
    const double cur = run.trace.back();
    if (std::abs(cur - prev) <= config.tol * std::max(1.0, std::abs(cur))) {
      run.converged = true;
      break;
    }
    prev = cur;
  }
  return run;
}

}  // namespace

GroupLdaResult fit_group_lda(const Matrix<int>& X, const std::vector<int>& grouping,
                             std::size_t M, std::size_t K, const GroupLdaConfig& config) {
  const std::size_t N = X.rows();
  if (grouping.size() != N) throw std::invalid_argument("grouping must cover every node");
  if (M == 0 || K == 0) throw std::invalid_argument("M and K must be positive");
  for (int g : grouping) {
    if (g < 0 || static_cast<std::size_t>(g) >= M) throw std::invalid_argument("group index out of range");
  }
  LdaRun best;
  bool have = false;
  for (int r = 0; r < std::max(1, config.restarts); ++r) {
    LdaRun run = run_lda(X, grouping, M, K, config, restart_seed(config.seed, r));
    if (!have || run.trace.back() > best.trace.back()) {
      best = std::move(run);
      have = true;
    }
  }

  GroupLdaResult out;
  out.rates = std::move(best.rates);
  out.beta = std::move(best.beta);
  out.resp = std::move(best.resp);
  out.trace = std::move(best.trace);
  out.converged = best.converged;

  std::vector<double> size(M, 0.0);
  for (int g : grouping) size[static_cast<std::size_t>(g)] += 1.0;
  out.global_rate.assign(K, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t k = 0; k < K; ++k) out.global_rate[k] += size[m] * out.rates(m, k) / static_cast<double>(N);
  }
  for (std::size_t m = 0; m < M; ++m) {
    if (size[m] < 2.0) {
      out.warnings.push_back("group " + std::to_string(m) + " has fewer than 2 members; using the global rate");
      for (std::size_t k = 0; k < K; ++k) out.rates(m, k) = out.global_rate[k];
    }
  }

  const MatrixD le = log_emission(X, out.beta);
  out.scores.assign(M, 0.0);
  std::vector<double> w(K);
  for (std::size_t p = 0; p < N; ++p) {
    for (std::size_t k = 0; k < K; ++k) w[k] = safe_log(out.global_rate[k]) + le(p, k);
    out.scores[static_cast<std::size_t>(grouping[p])] -= log_sum_exp(w);
  }
  return out;
}

}  // namespace glad
