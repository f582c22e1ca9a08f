#include "glad/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "glad/glad_vem.hpp"

namespace glad {

GroupScores static_group_score(const MatrixD& lambda, const MatrixD& mu,
                               const MatrixD& theta, std::vector<int> grouping) {
  const std::size_t N = lambda.rows();
  const std::size_t M = theta.rows();
  const std::size_t K = theta.cols();
  if (mu.rows() != N || lambda.cols() != M || mu.cols() != K) {
    throw std::invalid_argument("lambda, mu and theta shapes disagree");
  }
  if (grouping.empty()) grouping = map_grouping(lambda);
  if (grouping.size() != N) throw std::invalid_argument("grouping must cover every node");
  GroupScores out;
  out.scores.assign(M, 0.0);
  std::vector<int> size(M, 0);
  for (std::size_t p = 0; p < N; ++p) {
    const int g = grouping[p];
    if (g < 0 || static_cast<std::size_t>(g) >= M) throw std::invalid_argument("group index out of range");
    ++size[static_cast<std::size_t>(g)];
    double s = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t k = 0; k < K; ++k) s += lambda(p, m) * mu(p, k) * safe_log(theta(m, k));
    }
    out.scores[static_cast<std::size_t>(g)] -= s;
  }
  for (std::size_t m = 0; m < M; ++m) {
    if (size[m] == 0) out.warnings.push_back("group " + std::to_string(m) + " is empty; score 0");
  }
  return out;
}

MatrixD group_rates(const MatrixD& mu, const std::vector<int>& grouping, std::size_t M) {
  const std::size_t K = mu.cols();
  MatrixD rates(M, K, 0.0);
  std::vector<double> size(M, 0.0);
  for (std::size_t p = 0; p < mu.rows(); ++p) {
    const auto g = static_cast<std::size_t>(grouping.at(p));
    size.at(g) += 1.0;
    for (std::size_t k = 0; k < K; ++k) rates(g, k) += mu(p, k);
  }
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t k = 0; k < K; ++k) {
      rates(m, k) = size[m] > 0.0 ? rates(m, k) / size[m] : 1.0 / static_cast<double>(K);
    }
  }
  return rates;
}

GroupScores global_rate_score(const MatrixD& mu, const std::vector<int>& grouping,
                              std::size_t M) {
  const std::size_t N = mu.rows();
  const std::size_t K = mu.cols();
  if (grouping.size() != N) throw std::invalid_argument("grouping must cover every node");
  std::vector<double> rbar(K, 0.0);
  for (std::size_t p = 0; p < N; ++p) {
    for (std::size_t k = 0; k < K; ++k) rbar[k] += mu(p, k) / static_cast<double>(N);
  }
  GroupScores out;
  out.scores.assign(M, 0.0);
  std::vector<int> size(M, 0);
  for (std::size_t p = 0; p < N; ++p) {
    const auto g = static_cast<std::size_t>(grouping[p]);
    if (g >= M) throw std::invalid_argument("group index out of range");
    ++size[g];
    for (std::size_t k = 0; k < K; ++k) out.scores[g] -= mu(p, k) * safe_log(rbar[k]);
  }
  for (std::size_t m = 0; m < M; ++m) {
    if (size[m] == 0) out.warnings.push_back("group " + std::to_string(m) + " is empty; score 0");
  }
  return out;
}

std::vector<double> oracle_rate_score(const MatrixD& rates,
                                      const std::vector<double>& normal_rate) {
  if (rates.cols() != normal_rate.size()) {
    throw std::invalid_argument("normal rate length must equal K");
  }
  std::vector<double> out(rates.rows(), 0.0);
  for (std::size_t m = 0; m < rates.rows(); ++m) {
    for (std::size_t k = 0; k < rates.cols(); ++k) out[m] += std::abs(rates(m, k) - normal_rate[k]);
  }
  return out;
}

std::vector<int> hungarian(const MatrixD& cost) {
  const std::size_t n = cost.rows();
  if (cost.cols() != n) throw std::invalid_argument("assignment cost must be square");
  const double inf = std::numeric_limits<double>::infinity();
  // Shortest augmenting paths with potentials; index 0 is a sentinel.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> out(n, 0);
  for (std::size_t j = 1; j <= n; ++j) out[match[j] - 1] = static_cast<int>(j - 1);
  return out;
}

std::vector<int> match_labels(const std::vector<int>& fitted,
                              const std::vector<int>& truth, std::size_t M) {
  if (fitted.size() != truth.size()) throw std::invalid_argument("label vectors differ in length");
  MatrixD cost(M, M, 0.0);
  for (std::size_t p = 0; p < fitted.size(); ++p) {
    cost(static_cast<std::size_t>(fitted[p]), static_cast<std::size_t>(truth[p])) -= 1.0;
  }
  return hungarian(cost);
}

std::vector<int> match_roles(const MatrixD& beta_fit, const MatrixD& beta_truth) {
  const std::size_t K = beta_fit.cols();
  if (beta_truth.cols() != K || beta_truth.rows() != beta_fit.rows()) {
    throw std::invalid_argument("emission matrices differ in shape");
  }
  MatrixD cost(K, K, 0.0);
  for (std::size_t a = 0; a < K; ++a) {
    for (std::size_t b = 0; b < K; ++b) {
      for (std::size_t v = 0; v < beta_fit.rows(); ++v) cost(a, b) += std::abs(beta_fit(v, a) - beta_truth(v, b));
    }
  }
  return hungarian(cost);
}

MatrixD permute_columns(const MatrixD& rates, const std::vector<int>& map) {
  MatrixD out(rates.rows(), rates.cols());
  for (std::size_t r = 0; r < rates.rows(); ++r) {
    for (std::size_t k = 0; k < rates.cols(); ++k) out(r, static_cast<std::size_t>(map.at(k))) = rates(r, k);
  }
  return out;
}

std::vector<int> rank_groups(const std::vector<double>& scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)]; });
  return order;
}

std::vector<int> top_fraction(const std::vector<double>& scores, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("fraction must lie in (0, 1]");
  const double raw = fraction * static_cast<double>(scores.size());
  // Guard against 0.2 * 5 = 1.0000000000000002.
  auto n = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  n = std::min(n, scores.size());
  auto order = rank_groups(scores);
  order.resize(n);
  std::sort(order.begin(), order.end());
  return order;
}

Metrics metrics_from_counts(int tp, int fp, int fn) {
  Metrics m;
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  m.accuracy = m.recall;
  return m;
}

Metrics evaluate(const std::vector<int>& flagged, const std::vector<int>& anomalous) {
  if (anomalous.empty()) throw std::invalid_argument("ground truth has no anomalous groups");
  int tp = 0;
  for (int g : flagged) {
    if (std::find(anomalous.begin(), anomalous.end(), g) != anomalous.end()) ++tp;
  }
  const int fp = static_cast<int>(flagged.size()) - tp;
  const int fn = static_cast<int>(anomalous.size()) - tp;
  return metrics_from_counts(tp, fp, fn);
}

std::vector<std::vector<double>> dynamic_change_score(const std::vector<MatrixD>& theta_hat) {
  if (theta_hat.size() < 2) throw std::invalid_argument("change scores need at least two snapshots");
  std::vector<std::vector<double>> out;
  for (std::size_t t = 1; t < theta_hat.size(); ++t) {
    const MatrixD& a = theta_hat[t];
    const MatrixD& b = theta_hat[t - 1];
    std::vector<double> row(a.rows(), 0.0);
    for (std::size_t m = 0; m < a.rows(); ++m) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += (a(m, k) - b(m, k)) * (a(m, k) - b(m, k));
      row[m] = std::sqrt(s);
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<Alarm> alarms(const std::vector<std::vector<double>>& change_scores,
                          double threshold) {
  std::vector<Alarm> out;
  for (std::size_t i = 0; i < change_scores.size(); ++i) {
    for (std::size_t m = 0; m < change_scores[i].size(); ++m) {
      if (change_scores[i][m] >= threshold) out.push_back({static_cast<int>(m), static_cast<int>(i + 2)});
    }
  }
  return out;
}

std::vector<FprPoint> fpr_curve(const std::vector<std::vector<double>>& change_scores,
                                const std::map<int, int>& change_times,
                                std::vector<double> thresholds) {
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < change_scores.size(); ++i) {
    const int t = static_cast<int>(i + 2);
    for (std::size_t m = 0; m < change_scores[i].size(); ++m) {
      const auto it = change_times.find(static_cast<int>(m));
      (it != change_times.end() && it->second == t ? pos : neg).push_back(change_scores[i][m]);
    }
  }
  if (thresholds.empty()) {
    for (const auto& row : change_scores) thresholds.insert(thresholds.end(), row.begin(), row.end());
  }
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  std::vector<FprPoint> out;
  for (double tau : thresholds) {
    const auto above = [tau](const std::vector<double>& v) {
      return static_cast<double>(std::count_if(v.begin(), v.end(), [tau](double s) { return s >= tau; }));
    };
    FprPoint pt;
    pt.threshold = tau;
    pt.fpr = neg.empty() ? 0.0 : above(neg) / static_cast<double>(neg.size());
    pt.recall = pos.empty() ? 0.0 : above(pos) / static_cast<double>(pos.size());
    out.push_back(pt);
  }
  return out;
}

}  // namespace glad
