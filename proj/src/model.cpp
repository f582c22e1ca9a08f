#include "glad/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace glad {

Dataset Dataset::make(Matrix<int> X, Matrix<std::uint8_t> Y) {
  Dataset d;
  d.N = X.rows();
  d.V = X.cols();
  if (Y.rows() != d.N || Y.cols() != d.N) {
    throw std::invalid_argument("link matrix must be N x N with N = feature rows");
  }
  for (std::size_t p = 0; p < d.N; ++p) {
    for (std::size_t q = p + 1; q < d.N; ++q) {
      if (Y(p, q) > 1 || Y(q, p) > 1) {
        throw std::invalid_argument("link matrix must be binary");
      }
      if (Y(p, q) != Y(q, p)) {
        std::ostringstream msg;
        msg << "link matrix not symmetric at (" << p << ", " << q << ")";
        throw std::invalid_argument(msg.str());
      }
    }
  }
  d.empty_rows.assign(d.N, 1);
  for (std::size_t p = 0; p < d.N; ++p) {
    for (std::size_t v = 0; v < d.V; ++v) {
      if (X(p, v) < 0) {
        throw std::invalid_argument("feature counts must be non-negative");
      }
      if (X(p, v) > 0) d.empty_rows[p] = 0;
    }
  }
  d.X = std::move(X);
  d.Y = std::move(Y);
  return d;
}

int Dataset::trials(std::size_t p) const {
  int total = 0;
  for (int c : X.row(p)) total += c;
  return total;
}

ActivityDataset ActivityDataset::make(std::size_t V,
                                      std::vector<std::vector<int>> activities,
                                      Matrix<std::uint8_t> Y) {
  ActivityDataset d;
  d.N = activities.size();
  d.V = V;
  for (const auto& acts : activities) {
    for (int f : acts) {
      if (f < 0 || static_cast<std::size_t>(f) >= V) {
        throw std::invalid_argument("activity feature index out of range");
      }
    }
  }
  // Reuse the symmetry checks of Dataset.
  Dataset::make(Matrix<int>(d.N, V), Y);
  d.activities = std::move(activities);
  d.Y = std::move(Y);
  return d;
}

Dataset ActivityDataset::aggregate() const {
  Matrix<int> X(N, V);
  for (std::size_t p = 0; p < N; ++p) {
    for (int f : activities[p]) X(p, static_cast<std::size_t>(f)) += 1;
  }
  return Dataset::make(std::move(X), Y);
}

DynamicDataset DynamicDataset::make(std::vector<Dataset> snapshots) {
  if (snapshots.empty()) {
    throw std::invalid_argument("dynamic dataset needs at least one snapshot");
  }
  for (const auto& s : snapshots) {
    if (s.N != snapshots[0].N || s.V != snapshots[0].V) {
      throw std::invalid_argument("all snapshots must share N and V");
    }
  }
  DynamicDataset d;
  d.snapshots = std::move(snapshots);
  return d;
}

ModelParams ModelParams::uniform(std::size_t M, std::size_t K, std::size_t V,
                                 double alpha, double block) {
  ModelParams p;
  p.M = M;
  p.K = K;
  p.V = V;
  p.alpha.assign(M, alpha);
  p.B = MatrixD(M, M, block);
  p.theta = MatrixD(M, K, 1.0 / static_cast<double>(K));
  p.beta = MatrixD(V, K, 1.0 / static_cast<double>(V));
  return p;
}

double f_block(int y, double b) {
  if (!(b > 0.0 && b < 1.0)) {
    throw std::domain_error("block probability must lie in (0, 1)");
  }
  return y != 0 ? std::log(b) : std::log1p(-b);
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("log_sum_exp of empty vector");
  const double mx = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

std::vector<double> softmax(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("softmax of empty vector");
  std::vector<double> out(v.begin(), v.end());
  normalize_log_weights(out);
  return out;
}

void normalize_log_weights(std::span<double> logw) {
  const double mx = *std::max_element(logw.begin(), logw.end());
  double s = 0.0;
  for (double& x : logw) {
    x = std::exp(x - mx);
    s += x;
  }
  for (double& x : logw) x /= s;
}

double digamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("digamma requires x > 0");
  double result = 0.0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli-number series for ln x - 1/(2x) - sum B_2k / (2k x^2k).
  const double series =
      inv2 * (1.0 / 12 -
              inv2 * (1.0 / 120 -
                      inv2 * (1.0 / 252 -
                              inv2 * (1.0 / 240 -
                                      inv2 * (1.0 / 132 -
                                              inv2 * (691.0 / 32760 -
                                                      inv2 / 12.0))))));
  return result + std::log(x) - 0.5 * inv - series;
}

double trigamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("trigamma requires x > 0");
  double result = 0.0;
  while (x < 10.0) {
    result += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv * (1.0 + inv * (0.5 +
             inv * (1.0 / 6 -
                    inv2 * (1.0 / 30 -
                            inv2 * (1.0 / 42 -
                                    inv2 * (1.0 / 30 -
                                            inv2 * (5.0 / 66 -
                                                    inv2 * (691.0 / 2730 -
                                                            inv2 * 7.0 / 6))))))));
  return result + series;
}

double safe_log(double x) { return std::log(std::max(x, kLogFloor)); }

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

std::vector<std::string> validate(const ModelParams& params) {
  std::vector<std::string> out;
  auto fmt = [](double v) {
    std::ostringstream s;
    s << v;
    return s.str();
  };
  if (params.alpha.size() != params.M) {
    out.push_back("alpha has " + std::to_string(params.alpha.size()) +
                  " entries, expected " + std::to_string(params.M));
  }
  for (std::size_t m = 0; m < params.alpha.size(); ++m) {
    if (!(params.alpha[m] > 0.0)) {
      out.push_back("alpha_" + std::to_string(m) + " not positive");
    }
  }
  if (params.B.rows() != params.M || params.B.cols() != params.M) {
    out.push_back("B is not M x M");
  } else {
    for (std::size_t m = 0; m < params.M; ++m) {
      for (std::size_t n = 0; n < params.M; ++n) {
        const double b = params.B(m, n);
        if (!(b >= kBlockEps && b <= 1.0 - kBlockEps)) {
          out.push_back("B[" + std::to_string(m) + "][" + std::to_string(n) +
                        "] = " + fmt(b) + " outside [eps, 1-eps]");
        }
      }
    }
  }
  if (params.theta.rows() != params.M || params.theta.cols() != params.K) {
    out.push_back("theta is not M x K");
  } else {
    for (std::size_t m = 0; m < params.M; ++m) {
      double s = 0.0;
      bool negative = false;
      for (double t : params.theta.row(m)) {
        s += t;
        negative = negative || t < 0.0;
      }
      if (negative) out.push_back("theta row " + std::to_string(m) + " has a negative entry");
      if (std::abs(s - 1.0) > kSimplexTol) {
        out.push_back("theta row " + std::to_string(m) + " sums to " + fmt(s));
      }
    }
  }
  if (params.beta.rows() != params.V || params.beta.cols() != params.K) {
    out.push_back("beta is not V x K");
  } else {
    for (std::size_t k = 0; k < params.K; ++k) {
      double s = 0.0;
      bool negative = false;
      for (std::size_t v = 0; v < params.V; ++v) {
        s += params.beta(v, k);
        negative = negative || params.beta(v, k) < 0.0;
      }
      if (negative) out.push_back("beta column " + std::to_string(k) + " has a negative entry");
      if (std::abs(s - 1.0) > kSimplexTol) {
        out.push_back("beta column " + std::to_string(k) + " sums to " + fmt(s));
      }
    }
  }
  return out;
}

void require_valid(const ModelParams& params) {
  const auto violations = validate(params);
  if (violations.empty()) return;
  std::string msg = "invalid model parameters:";
  for (const auto& v : violations) msg += " " + v + ";";
  throw std::invalid_argument(msg);
}

}  // namespace glad
