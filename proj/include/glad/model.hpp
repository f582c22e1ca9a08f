#ifndef GLAD_MODEL_HPP_
#define GLAD_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "glad/matrix.hpp"

namespace glad {

// Clamp applied to every Bernoulli probability before taking logs.
inline constexpr double kBlockEps = 1e-6;
// Floor applied to simplex entries before taking logs.
inline constexpr double kLogFloor = 1e-12;
inline constexpr double kSimplexTol = 1e-9;

// Raised when an inference loop produces a non-finite objective.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One network snapshot: aggregated activity counts X (N x V) and a symmetric
// binary link matrix Y (N x N). Diagonal entries of Y are stored but never
// read by any likelihood.
struct Dataset {
  std::size_t N = 0;
  std::size_t V = 0;
  Matrix<int> X;
  Matrix<std::uint8_t> Y;
  std::vector<std::uint8_t> empty_rows;  // 1 where X row has no positive entry

  // Validates shape, symmetry, binary links and non-negative counts.
  static Dataset make(Matrix<int> X, Matrix<std::uint8_t> Y);

  int trials(std::size_t p) const;
  bool link(std::size_t p, std::size_t q) const { return Y(p, q) != 0; }
};

// Activity-level data: each activity is a single categorical draw, stored as
// the index of its one-hot feature.
struct ActivityDataset {
  std::size_t N = 0;
  std::size_t V = 0;
  std::vector<std::vector<int>> activities;
  Matrix<std::uint8_t> Y;

  static ActivityDataset make(std::size_t V,
                              std::vector<std::vector<int>> activities,
                              Matrix<std::uint8_t> Y);

  std::size_t num_activities(std::size_t p) const {
    return activities[p].size();
  }
  // Collapses activities into per-person counts.
  Dataset aggregate() const;
};

struct DynamicDataset {
  std::vector<Dataset> snapshots;

  static DynamicDataset make(std::vector<Dataset> snapshots);

  std::size_t T() const { return snapshots.size(); }
  std::size_t N() const { return snapshots.empty() ? 0 : snapshots[0].N; }
  std::size_t V() const { return snapshots.empty() ? 0 : snapshots[0].V; }
};

// Model parameters: Dirichlet prior alpha (M), block matrix B (M x M), role
// mixture rates theta (M x K, rows on the simplex) and activity mixture rates
// beta (V x K, columns on the simplex).
struct ModelParams {
  std::size_t M = 0;
  std::size_t K = 0;
  std::size_t V = 0;
  std::vector<double> alpha;
  MatrixD B;
  MatrixD theta;
  MatrixD beta;

  // Uniform theta/beta, constant B, symmetric alpha.
  static ModelParams uniform(std::size_t M, std::size_t K, std::size_t V,
                             double alpha = 0.1, double block = 0.5);
};

// Free parameters of the GLAD variational posterior.
struct GladVariational {
  MatrixD gamma;   // N x M, Dirichlet posterior of pi_p
  MatrixD lambda;  // N x M, posterior of G_p
  MatrixD mu;      // N x K, posterior of R_p
};

// y log b + (1 - y) log(1 - b). Throws std::domain_error unless 0 < b < 1.
double f_block(int y, double b);

// Max-shifted soft-max. Throws std::invalid_argument on empty input.
std::vector<double> softmax(std::span<const double> v);
double log_sum_exp(std::span<const double> v);
// Turns unnormalized log weights into a probability vector in place.
void normalize_log_weights(std::span<double> logw);

// Digamma and trigamma via recurrence shift and asymptotic series.
// Both throw std::domain_error for x <= 0.
double digamma(double x);
double trigamma(double x);

inline double clamp_block(double b) {
  return b < kBlockEps ? kBlockEps : (b > 1.0 - kBlockEps ? 1.0 - kBlockEps : b);
}
// log(max(x, kLogFloor))
double safe_log(double x);
// x log x with 0 log 0 = 0.
double xlogx(double x);

// Every violated ModelParams invariant, with indices. Empty means valid.
std::vector<std::string> validate(const ModelParams& params);
// Throws std::invalid_argument listing the violations.
void require_valid(const ModelParams& params);

}  // namespace glad

#endif  // GLAD_MODEL_HPP_
