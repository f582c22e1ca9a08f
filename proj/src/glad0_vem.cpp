#include "glad/glad0_vem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "glad/random.hpp"

namespace glad {
namespace {

std::vector<double> expected_log_pi(std::span<const double> gamma) {
  double s = 0.0;
  for (double g : gamma) s += g;
  const double psi_sum = digamma(s);
  std::vector<double> out(gamma.size());
  for (std::size_t m = 0; m < gamma.size(); ++m) out[m] = digamma(gamma[m]) - psi_sum;
  return out;
}

double lgamma_sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::lgamma(x);
  return s;
}

void warn(std::vector<std::string>* warnings, std::string msg) {
  if (warnings) warnings->push_back(std::move(msg));
}

// Same starting contrast as the GLAD initializer.
constexpr double kInitContrast = 4.0;

}  // namespace

Glad0Variational init_state0(const ActivityDataset& data, std::size_t M,
                             std::size_t K) {
  const std::size_t N = data.N;
  const double um = 1.0 / static_cast<double>(M);
  const double uk = 1.0 / static_cast<double>(K);
  Glad0Variational s;
  s.gamma = MatrixD(N, M, um);
  s.phi_out = PairTensor(N, M, um);
  s.phi_in = PairTensor(N, M, um);
  for (std::size_t p = 0; p < N; ++p) {
    s.lambda_act.emplace_back(data.num_activities(p), M, um);
    s.mu_act.emplace_back(data.num_activities(p), K, uk);
  }
  return s;
}

std::vector<double> update_gamma0(std::size_t p, std::span<const double> alpha,
                                  const Glad0Variational& state) {
  const std::size_t N = state.gamma.rows();
  const std::size_t M = alpha.size();
  std::vector<double> g(alpha.begin(), alpha.end());
  for (std::size_t q = 0; q < N; ++q) {
    if (q == p) continue;
    const auto out = state.phi_out.at(p, q);
    const auto in = state.phi_in.at(q, p);
    for (std::size_t m = 0; m < M; ++m) g[m] += out[m] + in[m];
  }
  const MatrixD& lam = state.lambda_act[p];
  for (std::size_t a = 0; a < lam.rows(); ++a) {
    for (std::size_t m = 0; m < M; ++m) g[m] += lam(a, m);
  }
  return g;
}

std::vector<double> update_phi_out(std::size_t p, std::size_t q,
                                   const ActivityDataset& data,
                                   const ModelParams& params,
                                   const Glad0Variational& state) {
  if (p == q) throw std::invalid_argument("update_phi_out needs p != q");
  const std::size_t M = params.M;
  auto out = expected_log_pi(state.gamma.row(p));
  const int y = data.Y(p, q);
  const auto in = state.phi_in.at(p, q);
  for (std::size_t g = 0; g < M; ++g) {
    for (std::size_t h = 0; h < M; ++h) out[g] += in[h] * f_block(y, clamp_block(params.B(g, h)));
  }
  normalize_log_weights(out);
  return out;
}

std::vector<double> update_phi_in(std::size_t p, std::size_t q,
                                  const ActivityDataset& data,
                                  const ModelParams& params,
                                  const Glad0Variational& state) {
  if (p == q) throw std::invalid_argument("update_phi_in needs p != q");
  const std::size_t M = params.M;
  auto out = expected_log_pi(state.gamma.row(q));
  const int y = data.Y(p, q);
  const auto sender = state.phi_out.at(p, q);
  for (std::size_t h = 0; h < M; ++h) {
    for (std::size_t g = 0; g < M; ++g) out[h] += sender[g] * f_block(y, clamp_block(params.B(g, h)));
  }
  normalize_log_weights(out);
  return out;
}

std::vector<double> update_lambda0(std::size_t p, std::size_t a,
                                   const ModelParams& params,
                                   const Glad0Variational& state) {
  auto out = expected_log_pi(state.gamma.row(p));
  const auto mu = state.mu_act[p].row(a);
  for (std::size_t g = 0; g < params.M; ++g) {
    for (std::size_t r = 0; r < params.K; ++r) out[g] += mu[r] * safe_log(params.theta(g, r));
  }
  normalize_log_weights(out);
  return out;
}

std::vector<double> update_mu0(std::size_t p, std::size_t a,
                               const ActivityDataset& data,
                               const ModelParams& params,
                               const Glad0Variational& state) {
  const auto x = static_cast<std::size_t>(data.activities[p][a]);
  const auto lam = state.lambda_act[p].row(a);
  std::vector<double> out(params.K, 0.0);
  for (std::size_t r = 0; r < params.K; ++r) {
    double s = safe_log(params.beta(x, r));
    for (std::size_t g = 0; g < params.M; ++g) s += lam[g] * safe_log(params.theta(g, r));
    out[r] = s;
  }
  normalize_log_weights(out);
  return out;
}

double e_step0_sweep(const ActivityDataset& data, const ModelParams& params,
                     Glad0Variational& state) {
  const std::size_t N = data.N;
  const std::size_t M = params.M;
  // Same updates as the per-entry functions, with E[log pi] and the link
  // log-likelihood tables cached.
  MatrixD elog(N, M);
  for (std::size_t p = 0; p < N; ++p) {
    const auto e = expected_log_pi(state.gamma.row(p));
    std::copy(e.begin(), e.end(), elog.row(p).begin());
  }
  MatrixD fb[2] = {MatrixD(M, M), MatrixD(M, M)};
  for (std::size_t g = 0; g < M; ++g) {
    for (std::size_t h = 0; h < M; ++h) {
      fb[0](g, h) = f_block(0, clamp_block(params.B(g, h)));
      fb[1](g, h) = f_block(1, clamp_block(params.B(g, h)));
    }
  }
  const std::size_t K = params.K;
  MatrixD log_theta(M, K), log_beta(data.V, K);
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t r = 0; r < K; ++r) log_theta(m, r) = safe_log(params.theta(m, r));
  }
  for (std::size_t v = 0; v < data.V; ++v) {
    for (std::size_t r = 0; r < K; ++r) log_beta(v, r) = safe_log(params.beta(v, r));
  }
  std::vector<double> w(M), wk(K);
  double change = 0.0;
  for (std::size_t p = 0; p < N; ++p) {
    const auto g = update_gamma0(p, params.alpha, state);
    auto grow = state.gamma.row(p);
    for (std::size_t m = 0; m < M; ++m) {
      change = std::max(change, std::abs(g[m] - grow[m]));
      grow[m] = g[m];
    }
    const auto e = expected_log_pi(grow);
    std::copy(e.begin(), e.end(), elog.row(p).begin());
    for (std::size_t q = 0; q < N; ++q) {
      if (q == p) continue;
      const MatrixD& f = fb[data.Y(p, q) != 0 ? 1 : 0];
      auto out = state.phi_out.at(p, q);
      auto in = state.phi_in.at(p, q);
      for (std::size_t a = 0; a < M; ++a) {
        double s = elog(p, a);
        for (std::size_t b = 0; b < M; ++b) s += in[b] * f(a, b);
        w[a] = s;
      }
      normalize_log_weights(w);
      std::copy(w.begin(), w.end(), out.begin());
      for (std::size_t b = 0; b < M; ++b) {
        double s = elog(q, b);
        for (std::size_t a = 0; a < M; ++a) s += out[a] * f(a, b);
        w[b] = s;
      }
      normalize_log_weights(w);
      std::copy(w.begin(), w.end(), in.begin());
    }
    for (std::size_t a = 0; a < data.num_activities(p); ++a) {
      auto lam = state.lambda_act[p].row(a);
      auto mu = state.mu_act[p].row(a);
      for (std::size_t m = 0; m < M; ++m) {
        double s = elog(p, m);
        for (std::size_t r = 0; r < K; ++r) s += mu[r] * log_theta(m, r);
        w[m] = s;
      }
      normalize_log_weights(w);
      std::copy(w.begin(), w.end(), lam.begin());
      const auto x = static_cast<std::size_t>(data.activities[p][a]);
      for (std::size_t r = 0; r < K; ++r) {
        double s = log_beta(x, r);
        for (std::size_t m = 0; m < M; ++m) s += lam[m] * log_theta(m, r);
        wk[r] = s;
      }
      normalize_log_weights(wk);
      std::copy(wk.begin(), wk.end(), mu.begin());
    }
  }
  return change;
}

ModelParams m_step0(const ActivityDataset& data, const Glad0Variational& state,
                    const ModelParams& current, double rho, AlphaMode alpha_mode,
                    std::vector<std::string>* warnings) {
  if (rho < 0.0 || rho >= 1.0) throw std::invalid_argument("rho must lie in [0, 1)");
  const std::size_t N = data.N;
  const std::size_t M = current.M;
  const std::size_t K = current.K;
  const std::size_t V = data.V;
  ModelParams out = current;
  out.V = V;

  MatrixD num(M, M, 0.0), den(M, M, 0.0);
  for (std::size_t p = 0; p < N; ++p) {
    for (std::size_t q = 0; q < N; ++q) {
      if (q == p) continue;
      const auto po = state.phi_out.at(p, q);
      const auto pi = state.phi_in.at(p, q);
      const int y = data.Y(p, q);
      for (std::size_t g = 0; g < M; ++g) {
        for (std::size_t h = 0; h < M; ++h) {
          const double w = po[g] * pi[h];
          den(g, h) += w;
          if (y != 0) num(g, h) += w;
        }
      }
    }
  }
  out.B = MatrixD(M, M);
  for (std::size_t g = 0; g < M; ++g) {
    for (std::size_t h = 0; h < M; ++h) {
      if (den(g, h) > 0.0) {
        out.B(g, h) = clamp_block(num(g, h) / ((1.0 - rho) * den(g, h)));
      } else {
        out.B(g, h) = 0.5;
        warn(warnings, "B[" + std::to_string(g) + "][" + std::to_string(h) +
                           "] has no pair mass; reset to 0.5");
      }
    }
  }

  out.beta = MatrixD(V, K, 0.0);
  out.theta = MatrixD(M, K, 0.0);
  for (std::size_t p = 0; p < N; ++p) {
    for (std::size_t a = 0; a < data.num_activities(p); ++a) {
      const auto x = static_cast<std::size_t>(data.activities[p][a]);
      const auto mu = state.mu_act[p].row(a);
      const auto lam = state.lambda_act[p].row(a);
      for (std::size_t r = 0; r < K; ++r) {
        out.beta(x, r) += mu[r];
        for (std::size_t g = 0; g < M; ++g) out.theta(g, r) += lam[g] * mu[r];
      }
    }
  }
  for (std::size_t r = 0; r < K; ++r) {
    double s = 0.0;
    for (std::size_t v = 0; v < V; ++v) s += out.beta(v, r);
    for (std::size_t v = 0; v < V; ++v) {
      out.beta(v, r) = s > 0.0 ? out.beta(v, r) / s : 1.0 / static_cast<double>(V);
    }
    if (!(s > 0.0)) warn(warnings, "beta column " + std::to_string(r) + " has no mass; reset to uniform");
  }
  for (std::size_t g = 0; g < M; ++g) {
    double s = 0.0;
    for (double t : out.theta.row(g)) s += t;
    for (double& t : out.theta.row(g)) t = s > 0.0 ? t / s : 1.0 / static_cast<double>(K);
    if (!(s > 0.0)) warn(warnings, "theta row " + std::to_string(g) + " has no mass; reset to uniform");
  }

  if (alpha_mode == AlphaMode::kNewton) {
    auto res = newton_alpha(state.gamma, current.alpha);
    if (!res.converged) warn(warnings, "alpha Newton iteration did not converge");
    out.alpha = std::move(res.alpha);
  }
  return out;
}

double compute_elbo0(const ActivityDataset& data, const ModelParams& params,
                     const Glad0Variational& state) {
  const std::size_t N = data.N;
  const std::size_t M = params.M;
  const std::size_t K = params.K;
  MatrixD elog(N, M);
  for (std::size_t p = 0; p < N; ++p) {
    const auto e = expected_log_pi(state.gamma.row(p));
    std::copy(e.begin(), e.end(), elog.row(p).begin());
  }
  MatrixD fb1(M, M), fb0(M, M), log_theta(M, K);
  for (std::size_t g = 0; g < M; ++g) {
    for (std::size_t h = 0; h < M; ++h) {
      fb1(g, h) = f_block(1, clamp_block(params.B(g, h)));
      fb0(g, h) = f_block(0, clamp_block(params.B(g, h)));
    }
    for (std::size_t r = 0; r < K; ++r) log_theta(g, r) = safe_log(params.theta(g, r));
  }

  double alpha_sum = 0.0;
  for (double a : params.alpha) alpha_sum += a;
  const double dir_norm = std::lgamma(alpha_sum) - lgamma_sum(params.alpha);

  long double total = 0.0L;
  for (std::size_t p = 0; p < N; ++p) {
    const auto gamma = state.gamma.row(p);
    double gsum = 0.0;
    for (double g : gamma) gsum += g;
    long double term = dir_norm - (std::lgamma(gsum) - lgamma_sum(gamma));
    for (std::size_t m = 0; m < M; ++m) {
      term += (params.alpha[m] - gamma[m]) * elog(p, m);
    }

    for (std::size_t q = 0; q < N; ++q) {
      if (q == p) continue;
      const auto po = state.phi_out.at(p, q);
      const auto pi = state.phi_in.at(p, q);
      const MatrixD& fb = data.Y(p, q) != 0 ? fb1 : fb0;
      for (std::size_t g = 0; g < M; ++g) {
        term += po[g] * elog(p, g) + pi[g] * elog(q, g) - xlogx(po[g]) - xlogx(pi[g]);
        double s = 0.0;
        for (std::size_t h = 0; h < M; ++h) s += pi[h] * fb(g, h);
        term += po[g] * s;
      }
    }

    for (std::size_t a = 0; a < data.num_activities(p); ++a) {
      const auto x = static_cast<std::size_t>(data.activities[p][a]);
      const auto lam = state.lambda_act[p].row(a);
      const auto mu = state.mu_act[p].row(a);
      for (std::size_t g = 0; g < M; ++g) {
        term += lam[g] * elog(p, g) - xlogx(lam[g]);
        for (std::size_t r = 0; r < K; ++r) term += lam[g] * mu[r] * log_theta(g, r);
      }
      for (std::size_t r = 0; r < K; ++r) {
        term += mu[r] * safe_log(params.beta(x, r)) - xlogx(mu[r]);
      }
    }
    total += term;
  }
  return static_cast<double>(total);
}

Glad0Init initialize0(const ActivityDataset& data, std::size_t M, std::size_t K,
                      const Glad0FitConfig& config) {
  Rng rng(config.seed);
  Glad0Init init{ModelParams::uniform(M, K, data.V, config.alpha0),
                 init_state0(data, M, K)};
  auto perturb_row = [&](std::span<double> row) {
    double s = 0.0;
    for (double& x : row) {
      x *= 1.0 + config.init_noise * (2.0 * rng.uniform() - 1.0);
      s += x;
    }
    for (double& x : row) x /= s;
  };
  for (std::size_t p = 0; p < data.N; ++p) {
    for (std::size_t q = 0; q < data.N; ++q) {
      if (q == p) continue;
      perturb_row(init.state.phi_out.at(p, q));
      perturb_row(init.state.phi_in.at(p, q));
    }
    for (std::size_t a = 0; a < data.num_activities(p); ++a) {
      perturb_row(init.state.lambda_act[p].row(a));
      perturb_row(init.state.mu_act[p].row(a));
    }
  }
  // Random theta and beta, then normalize.
  for (std::size_t g = 0; g < M; ++g) {
    double s = 0.0;
    for (double& t : init.params.theta.row(g)) s += (t = 0.5 + rng.uniform());
    for (double& t : init.params.theta.row(g)) t /= s;
  }
  for (std::size_t r = 0; r < K; ++r) {
    double s = 0.0;
    for (std::size_t v = 0; v < data.V; ++v) s += (init.params.beta(v, r) = 0.5 + rng.uniform());
    for (std::size_t v = 0; v < data.V; ++v) init.params.beta(v, r) /= s;
  }
  double links = 0.0;
  for (std::size_t p = 0; p < data.N; ++p) {
    for (std::size_t q = p + 1; q < data.N; ++q) links += data.Y(p, q);
  }
  const double pairs = 0.5 * static_cast<double>(data.N) * static_cast<double>(data.N - 1);
  const double density = pairs > 0.0 ? links / pairs : 0.5;
  for (std::size_t g = 0; g < M; ++g) {
    for (std::size_t h = 0; h < M; ++h) {
      init.params.B(g, h) = clamp_block(g == h ? std::min(0.9, kInitContrast * density)
                                               : density / kInitContrast);
    }
  }
  return init;
}

Glad0Fit fit0_from(const ActivityDataset& data, Glad0Init init,
                   const Glad0FitConfig& config) {
  Glad0Fit out;
  out.params = std::move(init.params);
  out.state = std::move(init.state);
  double prev = compute_elbo0(data, out.params, out.state);
  if (config.max_iters <= 0) out.trace.push_back(prev);
  for (int it = 0; it < config.max_iters; ++it) {
    // The E-step continues from the previous posteriors so outer iterations
    // never lose ground.
    for (int inner = 0; inner < config.inner_max; ++inner) {
      if (e_step0_sweep(data, out.params, out.state) < config.inner_tol) break;
    }
    out.params = m_step0(data, out.state, out.params, config.rho, config.alpha_mode,
                         &out.warnings);
    const double elbo = compute_elbo0(data, out.params, out.state);
    if (!std::isfinite(elbo)) {
      std::ostringstream msg;
      msg << "ELBO0 became non-finite at iteration " << it + 1;
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

Glad0Fit fit0(const ActivityDataset& data, std::size_t M, std::size_t K,
              const Glad0FitConfig& config) {
  Glad0Fit best;
  bool have_best = false;
  for (int r = 0; r < std::max(1, config.restarts); ++r) {
    Glad0FitConfig cfg = config;
    cfg.seed = restart_seed(config.seed, r);
    Glad0Fit f = fit0_from(data, initialize0(data, M, K, cfg), cfg);
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

MatrixD person_lambda0(const Glad0Variational& state) {
  const std::size_t N = state.gamma.rows();
  const std::size_t M = state.gamma.cols();
  MatrixD out(N, M, 0.0);
  for (std::size_t p = 0; p < N; ++p) {
    const MatrixD& lam = state.lambda_act[p];
    auto row = out.row(p);
    if (lam.rows() == 0) {
      double s = 0.0;
      for (double g : state.gamma.row(p)) s += g;
      for (std::size_t m = 0; m < M; ++m) row[m] = state.gamma(p, m) / s;
      continue;
    }
    for (std::size_t a = 0; a < lam.rows(); ++a) {
      for (std::size_t m = 0; m < M; ++m) row[m] += lam(a, m);
    }
    for (double& x : row) x /= static_cast<double>(lam.rows());
  }
  return out;
}

MatrixD person_mu0(const Glad0Variational& state, std::size_t K) {
  const std::size_t N = state.gamma.rows();
  MatrixD out(N, K, 0.0);
  for (std::size_t p = 0; p < N; ++p) {
    const MatrixD& mu = state.mu_act[p];
    auto row = out.row(p);
    if (mu.rows() == 0) {
      for (double& x : row) x = 1.0 / static_cast<double>(K);
      continue;
    }
    for (std::size_t a = 0; a < mu.rows(); ++a) {
      for (std::size_t r = 0; r < K; ++r) row[r] += mu(a, r);
    }
    for (double& x : row) x /= static_cast<double>(mu.rows());
  }
  return out;
}

std::vector<int> grouping0(const Glad0Variational& state) {
  return map_grouping(person_lambda0(state));
}

}  // namespace glad
