#ifndef GLAD_RANDOM_HPP_
#define GLAD_RANDOM_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace glad {

// Seeded random stream. Every sampler owns one; nothing reads global state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal(double mean = 0.0, double sd = 1.0) {
    if (sd == 0.0) return mean;
    return std::normal_distribution<double>(mean, sd)(engine_);
  }
  double gamma(double shape) {
    return std::gamma_distribution<double>(shape, 1.0)(engine_);
  }
  bool bernoulli(double p) { return uniform() < p; }

  // Inverse-CDF draw from unnormalized non-negative weights.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    const double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    // u landed on the rounding edge; return the last positive weight.
    for (std::size_t i = weights.size(); i-- > 0;) {
      if (weights[i] > 0.0) return i;
    }
    return weights.size() - 1;
  }

  std::vector<double> dirichlet(std::span<const double> alpha) {
    std::vector<double> out(alpha.size());
    double total = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      out[i] = gamma(alpha[i]);
      total += out[i];
    }
    if (total <= 0.0) {
      // All gamma draws underflowed (tiny alpha); fall back to a vertex.
      std::vector<double> w(alpha.begin(), alpha.end());
      out.assign(alpha.size(), 0.0);
      out[categorical(w)] = 1.0;
      return out;
    }
    for (double& x : out) x /= total;
    return out;
  }

  std::uint64_t next_u64() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace glad

#endif  // GLAD_RANDOM_HPP_
