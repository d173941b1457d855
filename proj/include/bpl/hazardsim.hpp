#pragma once

// Monte Carlo sampling of pipelines with random hazards. Every element after
// the first takes j cycles to complete after its predecessor, with j drawn
// from a distribution b_1..b_p; the first element takes p cycles.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "bpl/model.hpp"

namespace bpl {

/// probs[j - 1] = b_j, the probability that an element is a hazard of type j.
struct HazardDistribution {
  std::vector<double> probs;

  std::int64_t depth() const { return static_cast<std::int64_t>(probs.size()); }

  void validate() const {
    if (probs.empty()) throw invalid_config("hazard distribution must be nonempty");
    double sum = 0.0;
    for (double b : probs) {
      if (!(b >= 0.0)) throw invalid_config("hazard probabilities must be >= 0");
      sum += b;
    }
    if (std::abs(sum - 1.0) > kRelTolerance)
      throw invalid_config("hazard probabilities must sum to 1");
  }

  /// Expected cycles per element after the first: sum of j * b_j.
  double expected_cycles() const {
    double m = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j) m += static_cast<double>(j + 1) * probs[j];
    return m;
  }
};

struct SampleStats {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t trials = 0;
};

/// Single hazard of type (p - q)^+ + 1 with probability 1/q, the rest at j = 1.
inline HazardDistribution simplified_distribution(std::int64_t p, std::int64_t q) {
  if (p < 1 || q < 1) throw invalid_config("p and q must be >= 1");
  HazardDistribution d;
  d.probs.assign(static_cast<std::size_t>(p), 0.0);
  const double share = 1.0 / static_cast<double>(q);
  d.probs[0] += 1.0 - share;
  d.probs[static_cast<std::size_t>(detail::positive_part(p - q))] += share;
  return d;
}

/// Restart (type p) with probability b, the structural hazard with
/// probability (1 - b)/q, one cycle otherwise. Coinciding types add up.
inline HazardDistribution restart_distribution(std::int64_t p, std::int64_t q,
                                               const RestartModel& r) {
  if (p < 1 || q < 1) throw invalid_config("p and q must be >= 1");
  r.validate();
  const double b = r.probability;
  const double share = 1.0 / static_cast<double>(q);
  HazardDistribution d;
  d.probs.assign(static_cast<std::size_t>(p), 0.0);
  d.probs[0] += (1.0 - b) * (1.0 - share);
  d.probs[static_cast<std::size_t>(detail::positive_part(p - q))] += (1.0 - b) * share;
  d.probs[static_cast<std::size_t>(p - 1)] += b;
  return d;
}

/// p + (n - 1) * sum(j * b_j), in cycles.
inline double analytic_mean_cycles(std::int64_t p, const HazardDistribution& d, std::int64_t n) {
  d.validate();
  if (d.depth() != p) throw invalid_config("distribution support must match the depth");
  if (n < 1) throw invalid_config("element count must be >= 1");
  return static_cast<double>(p) + static_cast<double>(n - 1) * d.expected_cycles();
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Draw from [0, 1) with 53 random bits; mt19937_64 output is fixed by the
// standard, so samples are identical on every platform.
inline double unit_uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

class HazardSampler {
 public:
  explicit HazardSampler(const HazardDistribution& d) {
    cdf_.reserve(d.probs.size());
    double acc = 0.0;
    for (std::size_t j = 0; j < d.probs.size(); ++j) {
      acc += d.probs[j];
      cdf_.push_back(acc);
      if (d.probs[j] > 0.0) last_ = j;
    }
  }

  std::int64_t operator()(std::mt19937_64& gen) const {
    const double u = unit_uniform(gen);
    for (std::size_t j = 0; j < last_; ++j)
      if (u < cdf_[j]) return static_cast<std::int64_t>(j + 1);
    return static_cast<std::int64_t>(last_ + 1);
  }

 private:
  std::vector<double> cdf_;
  std::size_t last_ = 0;
};

inline std::int64_t sample_with(const HazardSampler& sampler, std::int64_t p, std::int64_t n,
                                std::uint64_t seed) {
  std::mt19937_64 gen(splitmix64(seed));
  std::int64_t total = p;
  for (std::int64_t i = 2; i <= n; ++i) total += sampler(gen);
  return total;
}

}  // namespace detail

/// Seed of replication `trial` derived from a base seed.
inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) {
  return detail::splitmix64(seed ^ detail::splitmix64(trial));
}

/// One realization of the completion time in cycles.
inline std::int64_t sample_cycles(std::int64_t p, const HazardDistribution& d, std::int64_t n,
                                  std::uint64_t seed) {
  d.validate();
  if (d.depth() != p) throw invalid_config("distribution support must match the depth");
  if (n < 1) throw invalid_config("element count must be >= 1");
  return detail::sample_with(detail::HazardSampler(d), p, n, seed);
}

/// Mean and standard error of `trials` independent replications.
inline SampleStats monte_carlo_mean(std::int64_t p, const HazardDistribution& d, std::int64_t n,
                                    std::int64_t trials, std::uint64_t seed) {
  d.validate();
  if (d.depth() != p) throw invalid_config("distribution support must match the depth");
  if (n < 1) throw invalid_config("element count must be >= 1");
  if (trials < 2) throw invalid_config("at least 2 trials are required");
  const detail::HazardSampler sampler(d);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::int64_t k = 0; k < trials; ++k) {
    const auto x = static_cast<double>(
        detail::sample_with(sampler, p, n, trial_seed(seed, static_cast<std::uint64_t>(k))));
    const double delta = x - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (x - mean);
  }
  SampleStats st;
  st.mean = mean;
  st.trials = trials;
  const double var = m2 / static_cast<double>(trials - 1);
  st.std_error = std::sqrt(var / static_cast<double>(trials));
  return st;
}

}  // namespace bpl
