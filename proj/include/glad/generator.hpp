#ifndef GLAD_GENERATOR_HPP_
#define GLAD_GENERATOR_HPP_

#include <cstdint>
#include <map>
#include <vector>

#include "glad/model.hpp"

namespace glad {

// Latent variables behind a generated dataset. Group and role indices are
// 0-based. Only the fields relevant to the generating process are filled.
struct GroundTruth {
  MatrixD pi;                              // N x M
  std::vector<int> G;                      // static group per person
  std::vector<int> R;                      // static role per person
  std::vector<std::vector<int>> G_t;       // T x N (dynamic)
  std::vector<std::vector<int>> R_t;       // T x N (dynamic)
  std::vector<std::vector<int>> G_act;     // per person, per activity
  std::vector<std::vector<int>> R_act;
  std::vector<int> anomalous_groups;       // sorted
  std::map<int, int> change_times;         // group -> timestamp (1-based)

  // Rates known to an evaluation oracle (injection only).
  std::vector<double> normal_rate;
  std::vector<double> anomalous_rate;
  MatrixD theta;                           // M x K, static rates used
  MatrixD beta;                            // V x K
};

struct StaticSample {
  Dataset data;
  GroundTruth truth;
};

struct ActivitySample {
  ActivityDataset data;
  GroundTruth truth;
};

struct DynamicSample {
  DynamicDataset data;
  GroundTruth truth;
  std::vector<MatrixD> theta_path;  // T + 1 entries of M x K, index 0 = theta0
};

// Planted-partition configuration for anomaly injection.
struct InjectionConfig {
  std::size_t N = 500;
  std::size_t M = 5;
  std::size_t K = 2;
  std::size_t V = 20;
  double anomaly_fraction = 0.2;
  std::vector<double> normal_rate{0.1, 0.9};
  std::vector<double> anomalous_rate{0.9, 0.1};
  int trials_per_person = 50;
  double block_in = 0.2;
  double block_out = 0.05;
  // Mass each role's emission puts on its own block of features.
  double role_purity = 0.8;
  std::uint64_t seed = 1;

  void check() const;
};

StaticSample generate_glad(const ModelParams& params, std::size_t N,
                           const std::vector<int>& trials, std::uint64_t seed);
StaticSample generate_glad(const ModelParams& params, std::size_t N,
                           int trials, std::uint64_t seed);

ActivitySample generate_glad0(const ModelParams& params, std::size_t N,
                              const std::vector<int>& activities,
                              std::uint64_t seed);

// theta0 is M x K in unconstrained (pre-softmax) space; params.theta is
// ignored. pi_p is drawn once and G_p^(t) is redrawn from it at every t.
DynamicSample generate_dglad(const ModelParams& params, const MatrixD& theta0,
                             double sigma, std::size_t N, std::size_t T,
                             int trials, std::uint64_t seed);

// ceil(anomaly_fraction * M) groups get the anomalous rate (at least one when
// the fraction is positive). Nodes are split evenly across groups.
StaticSample inject_anomalies(const InjectionConfig& cfg);

// Groups keep fixed members. Rates follow a slow random walk (stddev sigma)
// in log space from log(normal_rate); ceil(changed_fraction * M) groups jump
// to log(anomalous_rate) at change_time and walk from there.
DynamicSample inject_dynamic_change(const InjectionConfig& cfg, std::size_t T,
                                    std::size_t change_time,
                                    double changed_fraction, double sigma,
                                    std::uint64_t seed);

// V x K emission matrix where role k puts `purity` mass uniformly on its own
// contiguous block of features and spreads the rest over the others.
MatrixD block_beta(std::size_t V, std::size_t K, double purity);

}  // namespace glad

#endif  // GLAD_GENERATOR_HPP_
