

#include "glad/glad_vem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "glad/random.hpp"

namespace glad {
namespace {

struct LogBlocks {
  MatrixD log_b;     // log B
  MatrixD log_1mb;   // log(1 - B)
  explicit LogBlocks(const MatrixD& B) : log_b(B.rows(), B.cols()), log_1mb(B.rows(), B.cols()) {
    for (std::size_t m = 0; m < B.rows(); ++m) {
      for (std::size_t n = 0; n < B.cols(); ++n) {
        const double b = clamp_block(B(m, n));
        log_b(m, n) = f_block(1, b);
        log_1mb(m, n) = f_block(0, b);
      }
    }
  }
};

// Splits sum_{q != p} lambda_q into linked and unlinked parts.
void neighbor_sums(std::size_t p, const Dataset& data, const MatrixD& lambda,
                   std::span<const double> totals, std::vector<double>& linked,
                   std::vector<double>& unlinked) {
  const std::size_t M = lambda.cols();
  linked.assign(M, 0.0);
  const auto yrow = data.Y.row(p);
  for (std::size_t q = 0; q < data.N; ++q) {
    if (q == p || yrow[q] == 0) continue;
    const auto lq = lambda.row(q);
    for (std::size_t n = 0; n < M; ++n) linked[n] += lq[n];
  }
  unlinked.resize(M);
  const auto lp = lambda.row(p);
  for (std::size_t n = 0; n < M; ++n) unlinked[n] = totals[n] - lp[n] - linked[n];
}

void lambda_scores(std::size_t p, const ModelParams& params,
                   const GladVariational& state, const LogBlocks& lb,
                   const std::vector<double>& linked,
                   const std::vector<double>& unlinked, bool use_pointwise,
                   std::vector<double>& out) {
  const std::size_t M = params.M;
  const std::size_t K = params.K;
  const auto gamma = state.gamma.row(p);
  double gsum = 0.0;
  for (double g : gamma) gsum += g;
  const double psi_sum = digamma(gsum);
  out.assign(M, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    double s = digamma(gamma[m]) - psi_sum;
    if (use_pointwise) {
      for (std::size_t k = 0; k < K; ++k) s += state.mu(p, k) * safe_log(params.theta(m, k));
    }
    for (std::size_t n = 0; n < M; ++n) {
      s += linked[n] * lb.log_b(m, n) + unlinked[n] * lb.log_1mb(m, n);
    }
    out[m] = s;
  }
  normalize_log_weights(out);
}

std::vector<double> column_totals(const MatrixD& a) {
  std::vector<double> t(a.cols(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) t[c] += a(r, c);
  }
  return t;
}

double lgamma_sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::lgamma(x);
  return s;
}

void warn(std::vector<std::string>* warnings, std::string msg) {
  if (warnings) warnings->push_back(std::move(msg));
}

// Ratio between within-group and observed density (and observed density and
// between-group) in the starting block matrix.
constexpr double kInitContrast = 4.0;

}  // namespace

GladVariational init_state(std::size_t N, std::size_t M, std::size_t K) {
  GladVariational s;
  s.gamma = MatrixD(N, M, 1.0 / static_cast<double>(M));
  s.lambda = MatrixD(N, M, 1.0 / static_cast<double>(M));
  s.mu = MatrixD(N, K, 1.0 / static_cast<double>(K));
  return s;
}

std::vector<double> update_gamma(std::span<const double> alpha,
                                 std::span<const double> lambda_p) {
  std::vector<double> g(alpha.size());
  for (std::size_t m = 0; m < alpha.size(); ++m) g[m] = alpha[m] + lambda_p[m];
  return g;
}

std::vector<double> update_lambda(std::size_t p, const Dataset& data,
                                  const ModelParams& params,
                                  const GladVariational& state,
                                  bool use_pointwise) {
  const LogBlocks lb(params.B);
  const auto totals = column_totals(state.lambda);
  std::vector<double> linked, unlinked, out;
  neighbor_sums(p, data, state.lambda, totals, linked, unlinked);
  lambda_scores(p, params, state, lb, linked, unlinked, use_pointwise, out);
  return out;
}

std::vector<double> update_mu(std::size_t p, const Dataset& data,
                              const ModelParams& params,
                              const GladVariational& state) {
  const std::size_t K = params.K;
  std::vector<double> out(K, 0.0);
  const auto x = data.X.row(p);
  for (std::size_t k = 0; k < K; ++k) {
    double s = 0.0;
    for (std::size_t v = 0; v < data.V; ++v) {
      if (x[v] != 0) s += x[v] * safe_log(params.beta(v, k));
    }
    for (std::size_t m = 0; m < params.M; ++m) {
      s += state.lambda(p, m) * safe_log(params.theta(m, k));
    }
    out[k] = s;
  }
  normalize_log_weights(out);
  return out;
}

void e_step_sweep(const Dataset& data, const ModelParams& params,
                  GladVariational& state, bool use_pointwise) {
  const std::size_t M = params.M;
  const LogBlocks lb(params.B);
  auto totals = column_totals(state.lambda);
  std::vector<double> linked, unlinked, lam;
  for (std::size_t p = 0; p < data.N; ++p) {
    const auto g = update_gamma(params.alpha, state.lambda.row(p));
    std::copy(g.begin(), g.end(), state.gamma.row(p).begin());

    neighbor_sums(p, data, state.lambda, totals, linked, unlinked);
    lambda_scores(p, params, state, lb, linked, unlinked, use_pointwise, lam);
    auto lrow = state.lambda.row(p);
    for (std::size_t m = 0; m < M; ++m) {
      totals[m] += lam[m] - lrow[m];
      lrow[m] = lam[m];
    }
    if (use_pointwise) {
      const auto mu = update_mu(p, data, params, state);
      std::copy(mu.begin(), mu.end(), state.mu.row(p).begin());
    }
  }
}

int e_step_until_converged(const Dataset& data, const ModelParams& params,
                           GladVariational& state, double tol, int max_sweeps) {
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    const GladVariational before = state;
    e_step_sweep(data, params, state);
    double change = 0.0;
    for (std::size_t i = 0; i < state.lambda.data().size(); ++i) {
      change = std::max(change, std::abs(state.lambda.data()[i] - before.lambda.data()[i]));
    }
    for (std::size_t i = 0; i < state.mu.data().size(); ++i) {
      change = std::max(change, std::abs(state.mu.data()[i] - before.mu.data()[i]));
    }
    if (change < tol) return sweep;
  }
  return max_sweeps;
}

ModelParams m_step(const Dataset& data, const GladVariational& state,
                   const ModelParams& current, const MStepOptions& options,
                   std::vector<std::string>* warnings) {
  const std::size_t N = data.N;
  const std::size_t M = current.M;
  const std::size_t K = current.K;
  const std::size_t V = data.V;
  ModelParams out = current;
  out.V = V;

  if (options.use_pointwise) {
    out.beta = MatrixD(V, K, 0.0);
    for (std::size_t p = 0; p < N; ++p) {
      for (std::size_t v = 0; v < V; ++v) {
        const int x = data.X(p, v);
        if (x == 0) continue;
        for (std::size_t k = 0; k < K; ++k) out.beta(v, k) += x * state.mu(p, k);
      }
    }
    for (std::size_t k = 0; k < K; ++k) {
      double denom = 0.0;
      for (std::size_t v = 0; v < V; ++v) denom += out.beta(v, k);
      if (denom > 0.0) {
        for (std::size_t v = 0; v < V; ++v) out.beta(v, k) /= denom;
      } else {
        for (std::size_t v = 0; v < V; ++v) out.beta(v, k) = 1.0 / static_cast<double>(V);
        warn(warnings, "beta column " + std::to_string(k) + " has no mass; reset to uniform");
      }
    }

    out.theta = MatrixD(M, K, 0.0);
    for (std::size_t p = 0; p < N; ++p) {
      for (std::size_t m = 0; m < M; ++m) {
        const double l = state.lambda(p, m);
        for (std::size_t k = 0; k < K; ++k) out.theta(m, k) += state.mu(p, k) * l;
      }
    }
    for (std::size_t m = 0; m < M; ++m) {
      double denom = 0.0;
      for (double t : out.theta.row(m)) denom += t;
      if (denom > 0.0) {
        for (double& t : out.theta.row(m)) t /= denom;
      } else {
        for (double& t : out.theta.row(m)) t = 1.0 / static_cast<double>(K);
        warn(warnings, "theta row " + std::to_string(m) + " has no mass; reset to uniform");
      }
    }
  }

  // B_{m,n} = sum_{p != q} Y_pq l_pm l_qn / sum_{p != q} l_pm l_qn
  MatrixD num(M, M, 0.0);
  MatrixD den(M, M, 0.0);
  const auto totals = column_totals(state.lambda);
  std::vector<double> linked(M);
  for (std::size_t p = 0; p < N; ++p) {
    std::fill(linked.begin(), linked.end(), 0.0);
    const auto yrow = data.Y.row(p);
    for (std::size_t q = 0; q < N; ++q) {
      if (q == p || yrow[q] == 0) continue;
      const auto lq = state.lambda.row(q);
      for (std::size_t n = 0; n < M; ++n) linked[n] += lq[n];
    }
    const auto lp = state.lambda.row(p);
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t n = 0; n < M; ++n) {
        num(m, n) += lp[m] * linked[n];
        den(m, n) += lp[m] * (totals[n] - lp[n]);
      }
    }
  }
  out.B = MatrixD(M, M);
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t n = 0; n < M; ++n) {
      if (den(m, n) > 0.0) {
        out.B(m, n) = clamp_block(num(m, n) / den(m, n));
      } else {
        out.B(m, n) = 0.5;
        warn(warnings, "B[" + std::to_string(m) + "][" + std::to_string(n) +
                           "] has no pair mass; reset to 0.5");
      }
    }
  }

  if (options.alpha_mode == AlphaMode::kNewton) {
    auto res = newton_alpha(state.gamma, current.alpha);
    if (!res.converged) warn(warnings, "alpha Newton iteration did not converge");
    out.alpha = std::move(res.alpha);
  }
  return out;
}

NewtonAlphaResult newton_alpha(const MatrixD& gamma, std::vector<double> init) {
  const std::size_t N = gamma.rows();
  const std::size_t M = gamma.cols();
  const double n = static_cast<double>(N);
  std::vector<double> ss(M, 0.0);
  for (std::size_t p = 0; p < N; ++p) {
    double gs = 0.0;
    for (double g : gamma.row(p)) gs += g;
    const double psi_sum = digamma(gs);
    for (std::size_t m = 0; m < M; ++m) ss[m] += digamma(gamma(p, m)) - psi_sum;
  }
  auto objective = [&](const std::vector<double>& a) {
    double as = 0.0;
    for (double x : a) as += x;
    double f = n * (std::lgamma(as) - lgamma_sum(a));
    for (std::size_t m = 0; m < M; ++m) f += (a[m] - 1.0) * ss[m];
    return f;
  };

  NewtonAlphaResult res;
  res.alpha = init.size() == M ? std::move(init) : std::vector<double>(M, 1.0);
  for (double& a : res.alpha) {
    if (!(a > 0.0)) a = 1.0;
  }
  std::vector<double> grad(M), q(M), step(M), trial(M);
  for (int it = 0; it < 100; ++it) {
    double as = 0.0;
    for (double a : res.alpha) as += a;
    const double psi_as = digamma(as);
    double gnorm = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      grad[m] = n * (psi_as - digamma(res.alpha[m])) + ss[m];
      gnorm = std::max(gnorm, std::abs(grad[m]));
    }
    res.grad_norm = gnorm;
    res.iterations = it;
    if (gnorm < 1e-8) {
      res.converged = true;
      return res;
    }
    // Hessian = diag(q) + z 11^T, inverted with Sherman-Morrison.
    const double z = n * trigamma(as);
    double sum_gq = 0.0, sum_inv_q = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      q[m] = -n * trigamma(res.alpha[m]);
      sum_gq += grad[m] / q[m];
      sum_inv_q += 1.0 / q[m];
    }
    const double b = sum_gq / (1.0 / z + sum_inv_q);
    for (std::size_t m = 0; m < M; ++m) step[m] = (grad[m] - b) / q[m];

    const double f0 = objective(res.alpha);
    double scale = 1.0;
    bool moved = false;
    for (int half = 0; half < 60; ++half, scale *= 0.5) {
      bool positive = true;
      for (std::size_t m = 0; m < M; ++m) {
        trial[m] = res.alpha[m] - scale * step[m];
        positive = positive && trial[m] > 0.0;
      }
      if (positive && objective(trial) >= f0 - 1e-12 * std::abs(f0)) {
        moved = true;
        break;
      }
    }
    if (!moved) break;
    res.alpha = trial;
  }
  double as = 0.0;
  for (double a : res.alpha) as += a;
  res.grad_norm = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    res.grad_norm = std::max(res.grad_norm,
                             std::abs(n * (digamma(as) - digamma(res.alpha[m])) + ss[m]));
  }
  res.converged = res.grad_norm < 1e-8;
  return res;
}

double compute_elbo(const Dataset& data, const ModelParams& params,
                     const GladVariational& state, bool use_pointwise) {
  const std::size_t N = data.N;
  const std::size_t M = params.M;
  const std::size_t K = params.K;
  const LogBlocks lb(params.B);
  long double total = 0.0L;

  double alpha_sum = 0.0;
  for (double a : params.alpha) alpha_sum += a;
  const double dir_norm = std::lgamma(alpha_sum) - lgamma_sum(params.alpha);

  std::vector<double> elog(M), linked(M), unlinked(M);
  for (std::size_t p = 0; p < N; ++p) {
    const auto gamma = state.gamma.row(p);
    const auto lam = state.lambda.row(p);
    double gsum = 0.0;
    for (double g : gamma) gsum += g;
    const double psi_sum = digamma(gsum);
    for (std::size_t m = 0; m < M; ++m) elog[m] = digamma(gamma[m]) - psi_sum;

    long double term = 0.0L;
    if (use_pointwise) {
      const auto mu = state.mu.row(p);
      for (std::size_t k = 0; k < K; ++k) {
        double lx = 0.0;
        for (std::size_t v = 0; v < data.V; ++v) {
          if (data.X(p, v) != 0) lx += data.X(p, v) * safe_log(params.beta(v, k));
        }
        term += mu[k] * lx;
        for (std::size_t m = 0; m < M; ++m) {
          term += lam[m] * mu[k] * safe_log(params.theta(m, k));
        }
        term -= xlogx(mu[k]);
      }
    }
    for (std::size_t m = 0; m < M; ++m) {
      term += lam[m] * elog[m];
      term += (params.alpha[m] - 1.0) * elog[m];
      term -= (gamma[m] - 1.0) * elog[m];
      term -= xlogx(lam[m]);
    }
    term += dir_norm;
    term -= std::lgamma(gsum) - lgamma_sum(gamma);

    // Unordered pairs p < q.
    std::fill(linked.begin(), linked.end(), 0.0);
    std::fill(unlinked.begin(), unlinked.end(), 0.0);
    const auto yrow = data.Y.row(p);
    for (std::size_t q = p + 1; q < N; ++q) {
      const auto lq = state.lambda.row(q);
      auto& dst = yrow[q] != 0 ? linked : unlinked;
      for (std::size_t n = 0; n < M; ++n) dst[n] += lq[n];
    }
    for (std::size_t m = 0; m < M; ++m) {
      double s = 0.0;
      for (std::size_t n = 0; n < M; ++n) {
        s += linked[n] * lb.log_b(m, n) + unlinked[n] * lb.log_1mb(m, n);
      }
      term += lam[m] * s;
    }
    total += term;
  }
  return static_cast<double>(total);
}

GladInit initialize(const Dataset& data, std::size_t M, std::size_t K,
                    const GladFitConfig& config) {
  Rng rng(config.seed);
  GladInit init{ModelParams::uniform(M, K, data.V, config.alpha0),
                init_state(data.N, M, K)};
  auto perturb = [&](MatrixD& a) {
    for (std::size_t r = 0; r < a.rows(); ++r) {
      double s = 0.0;
      for (double& x : a.row(r)) {
        x *= 1.0 + config.init_noise * (2.0 * rng.uniform() - 1.0);
        s += x;
      }
      for (double& x : a.row(r)) x /= s;
    }
  };
  perturb(init.state.lambda);
  perturb(init.state.mu);
  init.params = m_step(data, init.state, init.params,
                       {AlphaMode::kFixed, config.use_pointwise});
  // Assortative starting blocks around the observed density.
  double links = 0.0;
  for (std::size_t p = 0; p < data.N; ++p) {
    for (std::size_t q = p + 1; q < data.N; ++q) links += data.Y(p, q);
  }
  const double pairs = 0.5 * static_cast<double>(data.N) * static_cast<double>(data.N - 1);
  const double density = pairs > 0.0 ? links / pairs : 0.5;
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t n = 0; n < M; ++n) {
      init.params.B(m, n) = clamp_block(m == n ? std::min(0.9, kInitContrast * density) : density / kInitContrast);
    }
  }
  return init;
}

std::uint64_t restart_seed(std::uint64_t seed, int restart) {
  return seed + static_cast<std::uint64_t>(restart) * 0x9E3779B97F4A7C15ULL;
}

GladFit fit(const Dataset& data, std::size_t M, std::size_t K,
            const GladFitConfig& config) {
  GladFit best;
  bool have_best = false;
  for (int r = 0; r < std::max(1, config.restarts); ++r) {
    GladFitConfig cfg = config;
    cfg.seed = restart_seed(config.seed, r);
    GladFit f = fit_from(data, initialize(data, M, K, cfg), cfg);
    if (!have_best || f.trace.back() > best.trace.back()) {
      best = std::move(f);
      have_best = true;
    }
  }
  std::sort(best.warnings.begin(), best.warnings.end());
  best.warnings.erase(std::unique(best.warnings.begin(), best.warnings.end()),
                      best.warnings.end());
  return best;
}

GladFit fit_from(const Dataset& data, GladInit init, const GladFitConfig& config) {
  GladFit out;
  out.params = std::move(init.params);
  out.state = std::move(init.state);
  const std::size_t M = out.params.M;
  const std::size_t K = out.params.K;
  if (M > data.N) out.warnings.push_back("more groups than nodes");
  if (config.use_pointwise && K > data.V) out.warnings.push_back("more roles than features");

  const MStepOptions mopts{config.alpha_mode, config.use_pointwise};
  double prev = compute_elbo(data, out.params, out.state, config.use_pointwise);
  if (config.max_iters <= 0) out.trace.push_back(prev);
  for (int it = 0; it < config.max_iters; ++it) {
    e_step_sweep(data, out.params, out.state, config.use_pointwise);
    out.params = m_step(data, out.state, out.params, mopts, &out.warnings);
    const double elbo = compute_elbo(data, out.params, out.state, config.use_pointwise);
    if (!std::isfinite(elbo)) {
      std::ostringstream msg;
      msg << "ELBO became non-finite at iteration " << it + 1;
      throw NumericError(msg.str());
    }
    out.trace.push_back(elbo);
    const double rel = std::abs(elbo - prev) / std::max(std::abs(prev), 1e-300);
    prev = elbo;
    if (rel < config.tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

std::vector<int> map_grouping(const MatrixD& lambda) {
  std::vector<int> g(lambda.rows());
  for (std::size_t p = 0; p < lambda.rows(); ++p) {
    const auto row = lambda.row(p);
    g[p] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return g;
}

}  // namespace glad
