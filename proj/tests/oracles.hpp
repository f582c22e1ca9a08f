// Straight-line reference evaluations of the inference updates. Written
// term by term from the model equations, sharing no code with src/ beyond
// the data containers. Digamma comes from Boost.
#ifndef GLAD_TESTS_ORACLES_HPP_
#define GLAD_TESTS_ORACLES_HPP_

#include <algorithm>
#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <vector>

#include "glad/glad0_vem.hpp"
#include "glad/model.hpp"

namespace glad::oracle {

inline double psi(double x) { return boost::math::digamma(x); }

inline double lg(double x) { return std::lgamma(x); }

inline double lb(double b) { return std::log(std::min(std::max(b, 1e-6), 1.0 - 1e-6)); }
inline double l1mb(double b) { return std::log(1.0 - std::min(std::max(b, 1e-6), 1.0 - 1e-6)); }

inline std::vector<double> exp_normalize(std::vector<double> s) {
  const double top = *std::max_element(s.begin(), s.end());
  double z = 0.0;
  for (double& x : s) {
    x = std::exp(x - top);
    z += x;
  }
  for (double& x : s) x /= z;
  return s;
}

inline double elog_pi(const MatrixD& gamma, std::size_t p, std::size_t m) {
  double total = 0.0;
  for (std::size_t j = 0; j < gamma.cols(); ++j) total += gamma(p, j);
  return psi(gamma(p, m)) - psi(total);
}

inline double xlx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

// ---- GLAD ----

inline std::vector<double> lambda(std::size_t p, const Dataset& d, const ModelParams& P,
                                  const GladVariational& s) {
  std::vector<double> score(P.M, 0.0);
  for (std::size_t m = 0; m < P.M; ++m) {
    score[m] = elog_pi(s.gamma, p, m);
    for (std::size_t k = 0; k < P.K; ++k) score[m] += s.mu(p, k) * std::log(P.theta(m, k));
    for (std::size_t q = 0; q < d.N; ++q) {
      if (q == p) continue;
      for (std::size_t n = 0; n < P.M; ++n) {
        const double f = d.Y(p, q) ? lb(P.B(m, n)) : l1mb(P.B(m, n));
        score[m] += s.lambda(q, n) * f;
      }
    }
  }
  return exp_normalize(score);
}

inline std::vector<double> mu(std::size_t p, const Dataset& d, const ModelParams& P,
                              const GladVariational& s) {
  std::vector<double> score(P.K, 0.0);
  for (std::size_t k = 0; k < P.K; ++k) {
    for (std::size_t v = 0; v < d.V; ++v) score[k] += d.X(p, v) * std::log(P.beta(v, k));
    for (std::size_t m = 0; m < P.M; ++m) score[k] += s.lambda(p, m) * std::log(P.theta(m, k));
  }
  return exp_normalize(score);
}

struct Closed {
  MatrixD beta, theta, B;
};

inline Closed m_step(const Dataset& d, const GladVariational& s, std::size_t M, std::size_t K) {
  Closed c{MatrixD(d.V, K, 0.0), MatrixD(M, K, 0.0), MatrixD(M, M, 0.0)};
  for (std::size_t k = 0; k < K; ++k) {
    double z = 0.0;
    for (std::size_t v = 0; v < d.V; ++v) {
      for (std::size_t p = 0; p < d.N; ++p) c.beta(v, k) += d.X(p, v) * s.mu(p, k);
      z += c.beta(v, k);
    }
    for (std::size_t v = 0; v < d.V; ++v) c.beta(v, k) /= z;
  }
  for (std::size_t m = 0; m < M; ++m) {
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t p = 0; p < d.N; ++p) c.theta(m, k) += s.lambda(p, m) * s.mu(p, k);
      z += c.theta(m, k);
    }
    for (std::size_t k = 0; k < K; ++k) c.theta(m, k) /= z;
  }
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t n = 0; n < M; ++n) {
      double num = 0.0, den = 0.0;
      for (std::size_t p = 0; p < d.N; ++p) {
        for (std::size_t q = 0; q < d.N; ++q) {
          if (p == q) continue;
          const double w = s.lambda(p, m) * s.lambda(q, n);
          num += d.Y(p, q) * w;
          den += w;
        }
      }
      c.B(m, n) = std::min(std::max(num / den, 1e-6), 1.0 - 1e-6);
    }
  }
  return c;
}

inline double elbo(const Dataset& d, const ModelParams& P, const GladVariational& s) {
  double a_sum = 0.0, lg_a = 0.0;
  for (double a : P.alpha) {
    a_sum += a;
    lg_a += lg(a);
  }
  double e_pi = 0.0, e_g = 0.0, e_r = 0.0, e_x = 0.0, e_y = 0.0, h_pi = 0.0, h_g = 0.0, h_r = 0.0;
  for (std::size_t p = 0; p < d.N; ++p) {
    double g_sum = 0.0, lg_g = 0.0;
    for (std::size_t m = 0; m < P.M; ++m) {
      g_sum += s.gamma(p, m);
      lg_g += lg(s.gamma(p, m));
    }
    e_pi += lg(a_sum) - lg_a;
    h_pi -= lg(g_sum) - lg_g;
    for (std::size_t m = 0; m < P.M; ++m) {
      const double el = elog_pi(s.gamma, p, m);
      e_pi += (P.alpha[m] - 1.0) * el;
      h_pi -= (s.gamma(p, m) - 1.0) * el;
      e_g += s.lambda(p, m) * el;
      h_g -= xlx(s.lambda(p, m));
      for (std::size_t k = 0; k < P.K; ++k) e_r += s.lambda(p, m) * s.mu(p, k) * std::log(P.theta(m, k));
    }
    for (std::size_t k = 0; k < P.K; ++k) {
      h_r -= xlx(s.mu(p, k));
      for (std::size_t v = 0; v < d.V; ++v) e_x += s.mu(p, k) * d.X(p, v) * std::log(P.beta(v, k));
    }
    for (std::size_t q = p + 1; q < d.N; ++q) {
      for (std::size_t m = 0; m < P.M; ++m) {
        for (std::size_t n = 0; n < P.M; ++n) {
          const double f = d.Y(p, q) ? lb(P.B(m, n)) : l1mb(P.B(m, n));
          e_y += s.lambda(p, m) * s.lambda(q, n) * f;
        }
      }
    }
  }
  return e_pi + e_g + e_r + e_x + e_y + h_pi + h_g + h_r;
}

// ---- GLAD0 ----

inline std::vector<double> gamma0(std::size_t p, const std::vector<double>& alpha, const Glad0Variational& s) {
  std::vector<double> g = alpha;
  const std::size_t N = s.gamma.rows();
  for (std::size_t m = 0; m < alpha.size(); ++m) {
    for (std::size_t q = 0; q < N; ++q) {
      if (q != p) g[m] += s.phi_out.at(p, q)[m] + s.phi_in.at(q, p)[m];
    }
    for (std::size_t a = 0; a < s.lambda_act[p].rows(); ++a) g[m] += s.lambda_act[p](a, m);
  }
  return g;
}

inline std::vector<double> phi_out(std::size_t p, std::size_t q, const ActivityDataset& d,
                                   const ModelParams& P, const Glad0Variational& s) {
  std::vector<double> score(P.M);
  for (std::size_t g = 0; g < P.M; ++g) {
    score[g] = elog_pi(s.gamma, p, g);
    for (std::size_t h = 0; h < P.M; ++h) {
      score[g] += s.phi_in.at(p, q)[h] * (d.Y(p, q) ? lb(P.B(g, h)) : l1mb(P.B(g, h)));
    }
  }
  return exp_normalize(score);
}

inline std::vector<double> phi_in(std::size_t p, std::size_t q, const ActivityDataset& d,
                                  const ModelParams& P, const Glad0Variational& s) {
  std::vector<double> score(P.M);
  for (std::size_t h = 0; h < P.M; ++h) {
    score[h] = elog_pi(s.gamma, q, h);
    for (std::size_t g = 0; g < P.M; ++g) {
      score[h] += s.phi_out.at(p, q)[g] * (d.Y(p, q) ? lb(P.B(g, h)) : l1mb(P.B(g, h)));
    }
  }
  return exp_normalize(score);
}

inline std::vector<double> lambda0(std::size_t p, std::size_t a, const ModelParams& P,
                                   const Glad0Variational& s) {
  std::vector<double> score(P.M);
  for (std::size_t g = 0; g < P.M; ++g) {
    score[g] = elog_pi(s.gamma, p, g);
    for (std::size_t r = 0; r < P.K; ++r) score[g] += s.mu_act[p](a, r) * std::log(P.theta(g, r));
  }
  return exp_normalize(score);
}

inline std::vector<double> mu0(std::size_t p, std::size_t a, const ActivityDataset& d,
                               const ModelParams& P, const Glad0Variational& s) {
  const auto x = static_cast<std::size_t>(d.activities[p][a]);
  std::vector<double> score(P.K);
  for (std::size_t r = 0; r < P.K; ++r) {
    score[r] = std::log(P.beta(x, r));
    for (std::size_t g = 0; g < P.M; ++g) score[r] += s.lambda_act[p](a, g) * std::log(P.theta(g, r));
  }
  return exp_normalize(score);
}

inline Closed m_step0(const ActivityDataset& d, const Glad0Variational& s, std::size_t M,
                      std::size_t K, double rho) {
  Closed c{MatrixD(d.V, K, 0.0), MatrixD(M, K, 0.0), MatrixD(M, M, 0.0)};
  for (std::size_t g = 0; g < M; ++g) {
    for (std::size_t h = 0; h < M; ++h) {
      double num = 0.0, den = 0.0;
      for (std::size_t p = 0; p < d.N; ++p) {
        for (std::size_t q = 0; q < d.N; ++q) {
          if (p == q) continue;
          const double w = s.phi_out.at(p, q)[g] * s.phi_in.at(p, q)[h];
          num += d.Y(p, q) * w;
          den += w;
        }
      }
      c.B(g, h) = std::min(std::max(num / ((1.0 - rho) * den), 1e-6), 1.0 - 1e-6);
    }
  }
  for (std::size_t p = 0; p < d.N; ++p) {
    for (std::size_t a = 0; a < d.activities[p].size(); ++a) {
      const auto x = static_cast<std::size_t>(d.activities[p][a]);
      for (std::size_t r = 0; r < K; ++r) {
        c.beta(x, r) += s.mu_act[p](a, r);
        for (std::size_t g = 0; g < M; ++g) c.theta(g, r) += s.lambda_act[p](a, g) * s.mu_act[p](a, r);
      }
    }
  }
  for (std::size_t r = 0; r < K; ++r) {
    double z = 0.0;
    for (std::size_t v = 0; v < d.V; ++v) z += c.beta(v, r);
    for (std::size_t v = 0; v < d.V; ++v) c.beta(v, r) /= z;
  }
  for (std::size_t g = 0; g < M; ++g) {
    double z = 0.0;
    for (std::size_t r = 0; r < K; ++r) z += c.theta(g, r);
    for (std::size_t r = 0; r < K; ++r) c.theta(g, r) /= z;
  }
  return c;
}

inline double elbo0(const ActivityDataset& d, const ModelParams& P, const Glad0Variational& s) {
  double a_sum = 0.0, lg_a = 0.0;
  for (double a : P.alpha) {
    a_sum += a;
    lg_a += lg(a);
  }
  double total = 0.0;
  for (std::size_t p = 0; p < d.N; ++p) {
    double g_sum = 0.0, lg_g = 0.0;
    for (std::size_t m = 0; m < P.M; ++m) {
      g_sum += s.gamma(p, m);
      lg_g += lg(s.gamma(p, m));
    }
    total += (lg(a_sum) - lg_a) - (lg(g_sum) - lg_g);
    for (std::size_t m = 0; m < P.M; ++m) {
      total += (P.alpha[m] - s.gamma(p, m)) * elog_pi(s.gamma, p, m);
    }
    for (std::size_t q = 0; q < d.N; ++q) {
      if (q == p) continue;
      for (std::size_t g = 0; g < P.M; ++g) {
        const double o = s.phi_out.at(p, q)[g], i = s.phi_in.at(p, q)[g];
        total += o * elog_pi(s.gamma, p, g) + i * elog_pi(s.gamma, q, g) - xlx(o) - xlx(i);
        for (std::size_t h = 0; h < P.M; ++h) {
          total += o * s.phi_in.at(p, q)[h] * (d.Y(p, q) ? lb(P.B(g, h)) : l1mb(P.B(g, h)));
        }
      }
    }
    for (std::size_t a = 0; a < d.activities[p].size(); ++a) {
      const auto x = static_cast<std::size_t>(d.activities[p][a]);
      for (std::size_t g = 0; g < P.M; ++g) {
        const double l = s.lambda_act[p](a, g);
        total += l * elog_pi(s.gamma, p, g) - xlx(l);
        for (std::size_t r = 0; r < P.K; ++r) total += l * s.mu_act[p](a, r) * std::log(P.theta(g, r));
      }
      for (std::size_t r = 0; r < P.K; ++r) {
        total += s.mu_act[p](a, r) * std::log(P.beta(x, r)) - xlx(s.mu_act[p](a, r));
      }
    }
  }
  return total;
}

// ---- exact posterior for tiny instances ----

// Marginal posteriors of G_p and R_p under p(G, R | X, Y, Theta) with each
// pi_p integrated out, by enumeration of all M^N K^N configurations.
struct ExactMarginals {
  MatrixD group;  // N x M
  MatrixD role;   // N x K
};

inline ExactMarginals enumerate_posterior(const Dataset& d, const ModelParams& P) {
  const std::size_t N = d.N, M = P.M, K = P.K;
  double a_sum = 0.0;
  for (double a : P.alpha) a_sum += a;
  std::size_t configs = 1;
  for (std::size_t p = 0; p < N; ++p) configs *= M * K;
  std::vector<double> logp(configs);
  std::vector<std::vector<std::size_t>> Gs(configs, std::vector<std::size_t>(N)), Rs = Gs;
  for (std::size_t c = 0; c < configs; ++c) {
    std::size_t code = c;
    for (std::size_t p = 0; p < N; ++p) {
      Gs[c][p] = code % M;
      code /= M;
      Rs[c][p] = code % K;
      code /= K;
    }
    double lp = 0.0;
    for (std::size_t p = 0; p < N; ++p) {
      lp += std::log(P.alpha[Gs[c][p]] / a_sum) + std::log(P.theta(Gs[c][p], Rs[c][p]));
      for (std::size_t v = 0; v < d.V; ++v) lp += d.X(p, v) * std::log(P.beta(v, Rs[c][p]));
      for (std::size_t q = p + 1; q < N; ++q) {
        const double b = P.B(Gs[c][p], Gs[c][q]);
        lp += d.Y(p, q) ? std::log(b) : std::log(1.0 - b);
      }
    }
    logp[c] = lp;
  }
  const auto w = exp_normalize(logp);
  ExactMarginals out{MatrixD(N, M, 0.0), MatrixD(N, K, 0.0)};
  for (std::size_t c = 0; c < configs; ++c) {
    for (std::size_t p = 0; p < N; ++p) {
      out.group(p, Gs[c][p]) += w[c];
      out.role(p, Rs[c][p]) += w[c];
    }
  }
  return out;
}

}  // namespace glad::oracle

#endif  // GLAD_TESTS_ORACLES_HPP_
