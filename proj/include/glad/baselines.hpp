#ifndef GLAD_BASELINES_HPP_
#define GLAD_BASELINES_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "glad/glad_vem.hpp"
#include "glad/model.hpp"

namespace glad {

struct MmsbResult {
  std::vector<int> grouping;
  MatrixD B;
  std::vector<double> alpha;
  GladFit fit;
};

// Links-only stage: the GLAD fit with every activity term switched off.
MmsbResult fit_mmsb(const Dataset& data, std::size_t M, GladFitConfig config);

struct GroupLdaConfig {
  int max_iters = 500;
  double tol = 1e-8;
  std::uint64_t seed = 1;
  int restarts = 5;
};

struct GroupLdaResult {
  MatrixD rates;                    // M x K per-group mixture weights
  MatrixD beta;                     // V x K shared emissions
  std::vector<double> global_rate;  // member-weighted mean of group rates
  MatrixD resp;                     // N x K role responsibilities
  std::vector<double> scores;       // per group
  std::vector<double> trace;        // data log-likelihood per iteration
  bool converged = false;
  std::vector<std::string> warnings;
};

// Features-only stage: multinomial mixture with shared emissions and one
// weight vector per group, then
//   score(G) = -sum_{p in G} log sum_k rbar_k prod_v beta_vk^X_pv
// under the global rate rbar. The multinomial coefficient is omitted.
// Groups with fewer than two members take the global rate.
GroupLdaResult fit_group_lda(const Matrix<int>& X, const std::vector<int>& grouping,
                             std::size_t M, std::size_t K, const GroupLdaConfig& config);

}  // namespace glad

#endif  // GLAD_BASELINES_HPP_
