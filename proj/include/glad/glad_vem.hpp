#ifndef GLAD_GLAD_VEM_HPP_
#define GLAD_GLAD_VEM_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "glad/model.hpp"

namespace glad {

enum class AlphaMode { kFixed, kNewton };

struct GladFitConfig {
  int max_iters = 200;
  double tol = 1e-6;
  std::uint64_t seed = 1;
  AlphaMode alpha_mode = AlphaMode::kFixed;
  double alpha0 = 0.1;
  // Multiplicative +-noise applied to the uniform initial posteriors.
  double init_noise = 0.01;
  // false drops the activity side entirely (pure MMSB on Y).
  bool use_pointwise = true;
  // Independent seeded starts; the run with the highest final ELBO is kept.
  int restarts = 10;
};

struct GladFit {
  ModelParams params;
  GladVariational state;
  std::vector<double> trace;  // ELBO after each E+M iteration
  bool converged = false;
  std::vector<std::string> warnings;
};

struct MStepOptions {
  AlphaMode alpha_mode = AlphaMode::kFixed;
  bool use_pointwise = true;
};

struct NewtonAlphaResult {
  std::vector<double> alpha;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
};

// gamma = lambda = 1/M and mu = 1/K everywhere.
GladVariational init_state(std::size_t N, std::size_t M, std::size_t K);

std::vector<double> update_gamma(std::span<const double> alpha,
                                 std::span<const double> lambda_p);

// Group posterior of node p given everything else; the pairwise term sums
// over every q != p.
std::vector<double> update_lambda(std::size_t p, const Dataset& data,
                                  const ModelParams& params,
                                  const GladVariational& state,
                                  bool use_pointwise = true);

std::vector<double> update_mu(std::size_t p, const Dataset& data,
                              const ModelParams& params,
                              const GladVariational& state);

// One Gauss-Seidel pass: gamma_p, lambda_p, mu_p for p = 0..N-1.
void e_step_sweep(const Dataset& data, const ModelParams& params,
                  GladVariational& state, bool use_pointwise = true);

// Sweeps with Theta held fixed until no lambda/mu entry moves more than tol.
// Returns the number of sweeps run.
int e_step_until_converged(const Dataset& data, const ModelParams& params,
                           GladVariational& state, double tol, int max_sweeps);

// Closed-form beta, theta and B; alpha from Newton when requested, otherwise
// copied from `current`. Zero denominators fall back to uniform entries and
// append a warning.
ModelParams m_step(const Dataset& data, const GladVariational& state,
                   const ModelParams& current, const MStepOptions& options,
                   std::vector<std::string>* warnings = nullptr);

// Maximizes sum_p E_q[log Dir(pi_p | alpha)] over alpha.
NewtonAlphaResult newton_alpha(const MatrixD& gamma,
                               std::vector<double> init = {});

// Evidence lower bound. Pairs enter once per unordered pair; the multinomial
// coefficient of X is omitted (constant in all parameters).
double compute_elbo(const Dataset& data, const ModelParams& params,
                     const GladVariational& state, bool use_pointwise = true);

struct GladInit {
  ModelParams params;
  GladVariational state;
};

// Seeded symmetry-broken starting point for fit.
GladInit initialize(const Dataset& data, std::size_t M, std::size_t K,
                    const GladFitConfig& config);

GladFit fit(const Dataset& data, std::size_t M, std::size_t K,
            const GladFitConfig& config);
// Seed used by restart r of fit.
std::uint64_t restart_seed(std::uint64_t seed, int restart);
// Runs the EM loop from a caller-supplied starting point.
GladFit fit_from(const Dataset& data, GladInit init, const GladFitConfig& config);

// argmax_m lambda_{p,m} per node.
std::vector<int> map_grouping(const MatrixD& lambda);

}  // namespace glad

#endif  // GLAD_GLAD_VEM_HPP_
