#ifndef GLAD_SCORING_HPP_
#define GLAD_SCORING_HPP_

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "glad/generator.hpp"
#include "glad/model.hpp"

namespace glad {

struct GroupScores {
  std::vector<double> scores;
  std::vector<std::string> warnings;
};

// -sum_{p in G} sum_m sum_k lambda_pm mu_pk log theta_mk. An empty grouping
// means argmax_m lambda_pm.
GroupScores static_group_score(const MatrixD& lambda, const MatrixD& mu,
                               const MatrixD& theta, std::vector<int> grouping = {});

// Role-weighted member rate of every group: mean of mu over its members
// (uniform over K for empty groups).
MatrixD group_rates(const MatrixD& mu, const std::vector<int>& grouping, std::size_t M);

// -sum_{p in G} sum_k mu_pk log rbar_k with rbar the member-weighted mean of
// the group rates over the whole population.
GroupScores global_rate_score(const MatrixD& mu, const std::vector<int>& grouping,
                              std::size_t M);

// L1 distance between each group's rate (roles already aligned to the
// truth's) and the known normal rate.
std::vector<double> oracle_rate_score(const MatrixD& rates,
                                      const std::vector<double>& normal_rate);

// Minimum-cost perfect assignment on a square cost matrix; result[i] is the
// column assigned to row i.
std::vector<int> hungarian(const MatrixD& cost);

// Maps fitted labels onto truth labels maximizing the number of agreeing
// nodes; result[fitted] = truth.
std::vector<int> match_labels(const std::vector<int>& fitted,
                              const std::vector<int>& truth, std::size_t M);

// Maps fitted roles onto truth roles by minimum L1 distance between the
// columns of the two emission matrices; result[fitted] = truth.
std::vector<int> match_roles(const MatrixD& beta_fit, const MatrixD& beta_truth);

// Reorders the K columns of rates so column map[k] receives column k.
MatrixD permute_columns(const MatrixD& rates, const std::vector<int>& map);

// Groups by descending score, ties to the lower index.
std::vector<int> rank_groups(const std::vector<double>& scores);
// ceil(fraction * M) top groups, sorted ascending. Throws unless
// 0 < fraction <= 1.
std::vector<int> top_fraction(const std::vector<double>& scores, double fraction);

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  bool operator==(const Metrics&) const = default;
};

// Detection accuracy = |flagged & anomalous| / |anomalous|. Throws when the
// anomalous set is empty.
Metrics evaluate(const std::vector<int>& flagged, const std::vector<int>& anomalous);
Metrics metrics_from_counts(int tp, int fp, int fn);

// scores[t - 1][m] = ||theta^(t) - theta^(t-1)||_2 for t = 1..T-1 (0-based
// snapshot index t). Throws when fewer than two snapshots are given.
std::vector<std::vector<double>> dynamic_change_score(const std::vector<MatrixD>& theta_hat);

struct Alarm {
  int group = 0;
  int t = 0;  // 1-based snapshot of the later side of the difference
  bool operator==(const Alarm&) const = default;
};

// Pairs with score >= threshold.
std::vector<Alarm> alarms(const std::vector<std::vector<double>>& change_scores,
                          double threshold);

struct FprPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double recall = 0.0;
  bool operator==(const FprPoint&) const = default;
};

// change_scores in truth labels; change_times maps group -> 1-based snapshot.
// A (group, t) pair is positive only at its change time. An empty threshold
// grid uses every observed score.
std::vector<FprPoint> fpr_curve(const std::vector<std::vector<double>>& change_scores,
                                const std::map<int, int>& change_times,
                                std::vector<double> thresholds = {});

struct AnomalyReport {
  std::string score_kind;
  std::vector<double> group_scores;
  std::vector<int> ranking;
  std::vector<int> flagged;
  std::vector<std::vector<double>> change_scores;
  std::vector<Alarm> alarms;
  std::optional<Metrics> metrics;
  std::vector<FprPoint> fpr;
  std::vector<int> label_map;  // fitted group -> truth group, when known
  std::vector<std::string> warnings;
  bool operator==(const AnomalyReport&) const = default;
};

}  // namespace glad

#endif  // GLAD_SCORING_HPP_
