#include "glad/dglad_mc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace glad {
namespace {

std::vector<double> log_softmax(std::span<const double> theta) {
  const double lse = log_sum_exp(theta);
  std::vector<double> out(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) out[k] = theta[k] - lse;
  return out;
}

std::vector<double> normalized(std::vector<double> logw) {
  normalize_log_weights(logw);
  return logw;
}

}  // namespace

void DGladParams::check(std::size_t V) const {
  const std::size_t m = M();
  if (m == 0 || K() == 0) throw std::invalid_argument("M and K must be positive");
  if (alpha.size() != m) throw std::invalid_argument("alpha must have M entries");
  for (double a : alpha) {
    if (!(a > 0.0)) throw std::invalid_argument("alpha entries must be positive");
  }
  if (B.cols() != m) throw std::invalid_argument("B must be M x M");
  for (double b : B.data()) {
    if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("B entries must lie in (0, 1)");
  }
  if (theta0.rows() != m) throw std::invalid_argument("theta0 must be M x K");
  for (double t : theta0.data()) {
    if (!std::isfinite(t)) throw std::invalid_argument("theta0 must be finite");
  }
  if (beta.rows() != V || beta.cols() != K()) throw std::invalid_argument("beta must be V x K");
  for (std::size_t k = 0; k < K(); ++k) {
    double s = 0.0;
    for (std::size_t v = 0; v < V; ++v) s += beta(v, k);
    if (std::abs(s - 1.0) > kSimplexTol) throw std::invalid_argument("beta columns must sum to 1");
  }
}

double effective_sample_size(std::span<const double> weights) {
  double s2 = 0.0;
  for (double w : weights) s2 += w * w;
  return 1.0 / s2;
}

std::vector<std::size_t> systematic_resample(std::span<const double> weights,
                                             double u) {
  const std::size_t P = weights.size();
  std::vector<std::size_t> idx(P);
  double cdf = weights[0];
  std::size_t j = 0;
  for (std::size_t i = 0; i < P; ++i) {
    const double pos = (static_cast<double>(i) + u) / static_cast<double>(P);
    while (pos > cdf && j + 1 < P) cdf += weights[++j];
    idx[i] = j;
  }
  return idx;
}

FilterResult bootstrap_filter(std::span<const double> theta0, double sigma,
                              std::size_t T, int P, const ParticleLogLik& loglik,
                              Rng& rng) {
  if (P < 2) throw std::invalid_argument("particle count must be at least 2");
  if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
  const std::size_t K = theta0.size();
  const auto np = static_cast<std::size_t>(P);
  FilterResult out;
  out.mean = MatrixD(T, K, 0.0);
  out.ess.assign(T, static_cast<double>(P));
  out.particles = MatrixD(np, K);
  for (std::size_t i = 0; i < np; ++i) {
    for (std::size_t k = 0; k < K; ++k) out.particles(i, k) = theta0[k];
  }
  std::vector<double> logw(np, 0.0);
  out.weights.assign(np, 1.0 / static_cast<double>(P));
  MatrixD next(np, K);

  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < np; ++i) {
      for (std::size_t k = 0; k < K; ++k) {
        out.particles(i, k) = rng.normal(out.particles(i, k), sigma);
      }
      logw[i] = std::log(out.weights[i]) + loglik(t, out.particles.row(i));
    }
    out.weights = logw;
    normalize_log_weights(out.weights);
    for (std::size_t i = 0; i < np; ++i) {
      for (std::size_t k = 0; k < K; ++k) out.mean(t, k) += out.weights[i] * out.particles(i, k);
    }
    out.ess[t] = effective_sample_size(out.weights);
    if (out.ess[t] < 0.5 * static_cast<double>(P)) {
      const auto idx = systematic_resample(out.weights, rng.uniform());
      for (std::size_t i = 0; i < np; ++i) {
        for (std::size_t k = 0; k < K; ++k) next(i, k) = out.particles(idx[i], k);
      }
      std::swap(out.particles, next);
      out.weights.assign(np, 1.0 / static_cast<double>(P));
    }
  }
  return out;
}

DGladTrace init_trace(const DynamicDataset& data, const DGladParams& params,
                      Rng& rng) {
  const std::size_t T = data.T();
  const std::size_t N = data.N();
  const std::size_t M = params.M();
  const std::size_t K = params.K();
  DGladTrace tr;
  const std::vector<double> um(M, 1.0), uk(K, 1.0);
  tr.G.assign(T, std::vector<int>(N));
  tr.R.assign(T, std::vector<int>(N));
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t p = 0; p < N; ++p) {
      tr.R[t][p] = static_cast<int>(rng.categorical(uk));
      tr.G[t][p] = static_cast<int>(rng.categorical(um));
    }
  }
  tr.pi = MatrixD(N, M);
  for (std::size_t p = 0; p < N; ++p) {
    const auto d = rng.dirichlet(params.alpha);
    std::copy(d.begin(), d.end(), tr.pi.row(p).begin());
  }
  tr.theta_hat.assign(T, params.theta0);
  return tr;
}

std::vector<double> role_conditional(std::size_t p, std::size_t t,
                                     const DynamicDataset& data,
                                     const DGladParams& params,
                                     const DGladTrace& trace) {
  const Dataset& snap = data.snapshots[t];
  const auto g = static_cast<std::size_t>(trace.G[t][p]);
  auto logw = log_softmax(trace.theta_hat[t].row(g));
  for (std::size_t v = 0; v < snap.V; ++v) {
    const int x = snap.X(p, v);
    if (x == 0) continue;
    for (std::size_t k = 0; k < logw.size(); ++k) logw[k] += x * safe_log(params.beta(v, k));
  }
  return normalized(std::move(logw));
}

std::vector<double> group_conditional(std::size_t p, std::size_t t,
                                      const DynamicDataset& data,
                                      const DGladParams& params,
                                      const DGladTrace& trace) {
  const Dataset& snap = data.snapshots[t];
  const std::size_t M = params.M();
  const auto r = static_cast<std::size_t>(trace.R[t][p]);
  // Link counts toward each group of the other people at step t.
  std::vector<double> links(M, 0.0), non_links(M, 0.0);
  for (std::size_t q = 0; q < snap.N; ++q) {
    if (q == p) continue;
    const auto h = static_cast<std::size_t>(trace.G[t][q]);
    (snap.Y(p, q) != 0 ? links : non_links)[h] += 1.0;
  }
  std::vector<double> logw(M);
  for (std::size_t g = 0; g < M; ++g) {
    double s = safe_log(trace.pi(p, g)) + log_softmax(trace.theta_hat[t].row(g))[r];
    for (std::size_t h = 0; h < M; ++h) {
      const double b = clamp_block(params.B(g, h));
      s += links[h] * std::log(b) + non_links[h] * std::log1p(-b);
    }
    logw[g] = s;
  }
  return normalized(std::move(logw));
}

int sample_role(std::size_t p, std::size_t t, const DynamicDataset& data,
                const DGladParams& params, const DGladTrace& trace, Rng& rng) {
  return static_cast<int>(rng.categorical(role_conditional(p, t, data, params, trace)));
}

int sample_group(std::size_t p, std::size_t t, const DynamicDataset& data,
                 const DGladParams& params, const DGladTrace& trace, Rng& rng) {
  return static_cast<int>(rng.categorical(group_conditional(p, t, data, params, trace)));
}

std::vector<double> sample_pi(std::size_t p, std::span<const double> alpha,
                              const DGladTrace& trace, Rng& rng) {
  std::vector<double> a(alpha.begin(), alpha.end());
  for (const auto& g : trace.G) a[static_cast<std::size_t>(g[p])] += 1.0;
  return rng.dirichlet(a);
}

void particle_filter_theta(const DynamicDataset& data, const DGladParams& params,
                           DGladTrace& trace, double sigma, int P, Rng& rng) {
  if (P < 2) throw std::invalid_argument("particle count must be at least 2");
  const std::size_t T = data.T();
  const std::size_t N = data.N();
  const std::size_t M = params.M();
  const std::size_t K = params.K();
  // counts[t][m][k] = #{p : G_p^(t) = m, R_p^(t) = k}
  std::vector<MatrixD> counts(T, MatrixD(M, K, 0.0));
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t p = 0; p < N; ++p) {
      counts[t](static_cast<std::size_t>(trace.G[t][p]), static_cast<std::size_t>(trace.R[t][p])) += 1.0;
    }
  }
  trace.particles.assign(M, MatrixD());
  trace.weights.assign(M, {});
  if (trace.theta_hat.size() != T) trace.theta_hat.assign(T, params.theta0);
  for (std::size_t m = 0; m < M; ++m) {
    const ParticleLogLik ll = [&](std::size_t t, std::span<const double> theta) {
      const auto ls = log_softmax(theta);
      double s = 0.0;
      for (std::size_t k = 0; k < K; ++k) s += counts[t](m, k) * ls[k];
      return s;
    };
    auto fr = bootstrap_filter(params.theta0.row(m), sigma, T, P, ll, rng);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t k = 0; k < K; ++k) trace.theta_hat[t](m, k) = fr.mean(t, k);
    }
    trace.particles[m] = std::move(fr.particles);
    trace.weights[m] = std::move(fr.weights);
  }
}

double log_joint(const DynamicDataset& data, const DGladParams& params,
                 const DGladTrace& trace) {
  long double total = 0.0L;
  for (std::size_t t = 0; t < data.T(); ++t) {
    const Dataset& snap = data.snapshots[t];
    for (std::size_t p = 0; p < snap.N; ++p) {
      const auto g = static_cast<std::size_t>(trace.G[t][p]);
      const auto r = static_cast<std::size_t>(trace.R[t][p]);
      total += log_softmax(trace.theta_hat[t].row(g))[r];
      for (std::size_t v = 0; v < snap.V; ++v) {
        if (snap.X(p, v) != 0) total += snap.X(p, v) * safe_log(params.beta(v, r));
      }
      for (std::size_t q = p + 1; q < snap.N; ++q) {
        const double b = clamp_block(params.B(g, static_cast<std::size_t>(trace.G[t][q])));
        total += f_block(snap.Y(p, q), b);
      }
    }
  }
  return static_cast<double>(total);
}

DGladResult run_sampler(const DynamicDataset& data, const DGladParams& params,
                        const DGladConfig& config) {
  params.check(data.V());
  if (config.particles < 2) throw std::invalid_argument("particle count must be at least 2");
  if (config.sweeps < 0 || config.burn_in < 0) {
    throw std::invalid_argument("sweeps and burn_in must be non-negative");
  }
  const std::size_t T = data.T();
  const std::size_t N = data.N();
  Rng rng(config.seed);
  DGladResult res;
  DGladTrace& tr = res.trace;
  tr = init_trace(data, params, rng);

  std::vector<MatrixD> acc(T, MatrixD(params.M(), params.K(), 0.0));
  int kept = 0;
  for (int s = 0; s < config.sweeps; ++s) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t p = 0; p < N; ++p) {
        tr.R[t][p] = sample_role(p, t, data, params, tr, rng);
        tr.G[t][p] = sample_group(p, t, data, params, tr, rng);
      }
    }
    for (std::size_t p = 0; p < N; ++p) {
      const auto d = sample_pi(p, params.alpha, tr, rng);
      std::copy(d.begin(), d.end(), tr.pi.row(p).begin());
    }
    particle_filter_theta(data, params, tr, config.sigma, config.particles, rng);
    tr.sweep = s + 1;
    for (std::size_t t = 0; t < T; ++t) {
      for (double v : tr.theta_hat[t].data()) {
        if (!std::isfinite(v)) {
          std::ostringstream msg;
          msg << "theta estimate became non-finite at sweep " << s + 1 << ", t=" << t + 1;
          throw NumericError(msg.str());
        }
      }
    }
    res.log_joint.push_back(log_joint(data, params, tr));
    if (s >= config.burn_in) {
      ++kept;
      for (std::size_t t = 0; t < T; ++t) {
        auto& a = acc[t].data();
        const auto& h = tr.theta_hat[t].data();
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += h[i];
      }
    }
  }
  if (kept == 0) {
    res.theta_mean = tr.theta_hat;
  } else {
    res.theta_mean = std::move(acc);
    for (auto& m : res.theta_mean) {
      for (double& v : m.data()) v /= kept;
    }
  }
  return res;
}

}  // namespace glad
