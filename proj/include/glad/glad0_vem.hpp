#ifndef GLAD_GLAD0_VEM_HPP_
#define GLAD_GLAD0_VEM_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "glad/glad_vem.hpp"
#include "glad/model.hpp"

namespace glad {

// N x N array of M-vectors, one per ordered pair. Diagonal slots are unused.
class PairTensor {
 public:
  PairTensor() = default;
  PairTensor(std::size_t N, std::size_t M, double fill)
      : N_(N), M_(M), data_(N * N * M, fill) {}

  std::span<double> at(std::size_t p, std::size_t q) {
    return {data_.data() + (p * N_ + q) * M_, M_};
  }
  std::span<const double> at(std::size_t p, std::size_t q) const {
    return {data_.data() + (p * N_ + q) * M_, M_};
  }
  std::size_t N() const { return N_; }
  std::size_t M() const { return M_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t N_ = 0;
  std::size_t M_ = 0;
  std::vector<double> data_;
};

struct Glad0Variational {
  MatrixD gamma;                    // N x M
  PairTensor phi_out;               // z_{p->q}, drawn from pi_p
  PairTensor phi_in;                // z_{p<-q}, drawn from pi_q
  std::vector<MatrixD> lambda_act;  // per person: A_p x M
  std::vector<MatrixD> mu_act;      // per person: A_p x K
};

struct Glad0FitConfig {
  int max_iters = 200;
  double tol = 1e-6;
  int inner_max = 50;
  double inner_tol = 1e-6;
  std::uint64_t seed = 1;
  AlphaMode alpha_mode = AlphaMode::kFixed;
  double alpha0 = 0.1;
  double rho = 0.0;
  double init_noise = 0.01;
  int restarts = 3;
};

struct Glad0Fit {
  ModelParams params;
  Glad0Variational state;
  std::vector<double> trace;
  bool converged = false;
  std::vector<std::string> warnings;
};

// Uniform posteriors (gamma = 1/M).
Glad0Variational init_state0(const ActivityDataset& data, std::size_t M,
                             std::size_t K);

// gamma_p = alpha + sum_{q != p} [phi_{p->q} + phi_{q<-p}] + sum_a lambda_pa.
// The second sum gathers every pair-side membership drawn from pi_p.
std::vector<double> update_gamma0(std::size_t p, std::span<const double> alpha,
                                  const Glad0Variational& state);

// Throw std::invalid_argument when p == q.
std::vector<double> update_phi_out(std::size_t p, std::size_t q,
                                   const ActivityDataset& data,
                                   const ModelParams& params,
                                   const Glad0Variational& state);
std::vector<double> update_phi_in(std::size_t p, std::size_t q,
                                  const ActivityDataset& data,
                                  const ModelParams& params,
                                  const Glad0Variational& state);

std::vector<double> update_lambda0(std::size_t p, std::size_t a,
                                   const ModelParams& params,
                                   const Glad0Variational& state);
std::vector<double> update_mu0(std::size_t p, std::size_t a,
                               const ActivityDataset& data,
                               const ModelParams& params,
                               const Glad0Variational& state);

// One Gauss-Seidel pass over people; returns the largest gamma change.
double e_step0_sweep(const ActivityDataset& data, const ModelParams& params,
                     Glad0Variational& state);

// B with the (1 - rho) sparsity correction, beta and theta from activity
// posteriors, alpha as in m_step.
ModelParams m_step0(const ActivityDataset& data, const Glad0Variational& state,
                    const ModelParams& current, double rho, AlphaMode alpha_mode,
                    std::vector<std::string>* warnings = nullptr);

// Lower bound on log p(X, Y | Theta) over ordered pairs p != q and all
// activities.
double compute_elbo0(const ActivityDataset& data, const ModelParams& params,
                     const Glad0Variational& state);

struct Glad0Init {
  ModelParams params;
  Glad0Variational state;
};

Glad0Init initialize0(const ActivityDataset& data, std::size_t M, std::size_t K,
                      const Glad0FitConfig& config);

Glad0Fit fit0(const ActivityDataset& data, std::size_t M, std::size_t K,
              const Glad0FitConfig& config);
Glad0Fit fit0_from(const ActivityDataset& data, Glad0Init init,
                   const Glad0FitConfig& config);

// argmax of the activity-averaged lambda, falling back to gamma for people
// with no activities.
std::vector<int> grouping0(const Glad0Variational& state);

// Person-level summaries: mean lambda_act (gamma-normalized when A_p = 0)
// and mean mu_act (uniform when A_p = 0).
MatrixD person_lambda0(const Glad0Variational& state);
MatrixD person_mu0(const Glad0Variational& state, std::size_t K);

}  // namespace glad

#endif  // GLAD_GLAD0_VEM_HPP_
