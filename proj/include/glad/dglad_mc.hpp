#ifndef GLAD_DGLAD_MC_HPP_
#define GLAD_DGLAD_MC_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "glad/model.hpp"
#include "glad/random.hpp"

namespace glad {

// Fixed inputs of the sampler. theta0 is M x K in unconstrained space.
struct DGladParams {
  std::vector<double> alpha;  // M
  MatrixD B;                  // M x M
  MatrixD beta;               // V x K
  MatrixD theta0;             // M x K

  std::size_t M() const { return B.rows(); }
  std::size_t K() const { return theta0.cols(); }
  void check(std::size_t V) const;
};

struct DGladConfig {
  int sweeps = 200;
  int burn_in = 100;
  int particles = 100;
  double sigma = 0.1;
  std::uint64_t seed = 1;
};

struct DGladTrace {
  std::vector<std::vector<int>> G;      // T x N
  std::vector<std::vector<int>> R;      // T x N
  MatrixD pi;                           // N x M
  std::vector<MatrixD> theta_hat;       // T entries of M x K
  std::vector<MatrixD> particles;       // per group: P x K at the last t
  std::vector<std::vector<double>> weights;  // per group: P
  int sweep = 0;
};

struct DGladResult {
  DGladTrace trace;
  std::vector<MatrixD> theta_mean;  // post-burn-in average of theta_hat
  std::vector<double> log_joint;    // log p(X, Y | G, R) after each sweep
};

// Log-likelihood of one group's observations at step t given a particle.
using ParticleLogLik = std::function<double(std::size_t t, std::span<const double> theta)>;

struct FilterResult {
  MatrixD mean;                  // T x K weighted means
  MatrixD particles;             // P x K at the last step
  std::vector<double> weights;   // P, on the simplex
  std::vector<double> ess;       // T, before any resampling
};

// Bootstrap filter for a K-dimensional Gaussian random walk started at
// theta0. Resamples systematically when ESS < P / 2.
FilterResult bootstrap_filter(std::span<const double> theta0, double sigma,
                              std::size_t T, int P, const ParticleLogLik& loglik,
                              Rng& rng);

// Systematic resampling indices from normalized weights with one uniform.
std::vector<std::size_t> systematic_resample(std::span<const double> weights,
                                             double u);
double effective_sample_size(std::span<const double> weights);

// Starting state: uniform-random G and R, pi ~ Dir(alpha), theta_hat = theta0.
DGladTrace init_trace(const DynamicDataset& data, const DGladParams& params,
                      Rng& rng);

// Conditional probabilities used by the samplers (normalized).
std::vector<double> role_conditional(std::size_t p, std::size_t t,
                                     const DynamicDataset& data,
                                     const DGladParams& params,
                                     const DGladTrace& trace);
std::vector<double> group_conditional(std::size_t p, std::size_t t,
                                      const DynamicDataset& data,
                                      const DGladParams& params,
                                      const DGladTrace& trace);

int sample_role(std::size_t p, std::size_t t, const DynamicDataset& data,
                const DGladParams& params, const DGladTrace& trace, Rng& rng);
int sample_group(std::size_t p, std::size_t t, const DynamicDataset& data,
                 const DGladParams& params, const DGladTrace& trace, Rng& rng);
// Dir(alpha + per-group counts of G_p over t).
std::vector<double> sample_pi(std::size_t p, std::span<const double> alpha,
                              const DGladTrace& trace, Rng& rng);

// Per-group filter over the current assignments; fills theta_hat, particles
// and weights. Throws std::invalid_argument when P < 2.
void particle_filter_theta(const DynamicDataset& data, const DGladParams& params,
                           DGladTrace& trace, double sigma, int P, Rng& rng);

double log_joint(const DynamicDataset& data, const DGladParams& params,
                 const DGladTrace& trace);

DGladResult run_sampler(const DynamicDataset& data, const DGladParams& params,
                        const DGladConfig& config);

}  // namespace glad

#endif  // GLAD_DGLAD_MC_HPP_
