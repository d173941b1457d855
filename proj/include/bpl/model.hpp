#pragma once

// Closed-form timing models for bounded pipelines: a pipeline of depth p whose
// number of simultaneously active stages never exceeds q.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

namespace bpl {

// Raised when an argument violates a type invariant (bad p, q, n, b, ...).
class invalid_config : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a valid configuration falls outside an optimal-depth formula's
// domain (t_o <= 0, n < 2 for the restart formula, ...).
class precondition_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double kRelTolerance = 1e-9;

inline bool approx_equal(double a, double b, double rel = kRelTolerance) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) <= rel * scale;
}

namespace detail {

inline std::int64_t positive_part(std::int64_t x) { return x > 0 ? x : 0; }

}  // namespace detail

/// Depth, device count and delay decomposition of a uniform bounded pipeline.
struct PipelineConfig {
  std::int64_t depth = 1;       // p
  std::int64_t devices = 1;     // q
  double logical_delay = 0.0;   // t_p
  double latch_overhead = 1.0;  // t_o

  /// Unit-cycle configuration (t_p = 0, t_o = 1) so that h = 1.
  static PipelineConfig unit_cycle(std::int64_t p, std::int64_t q) {
    return PipelineConfig{p, q, 0.0, 1.0};
  }

  void validate() const {
    if (depth < 1) throw invalid_config("depth must be >= 1");
    if (devices < 1) throw invalid_config("device count must be >= 1");
    if (!(logical_delay >= 0.0) || !std::isfinite(logical_delay))
      throw invalid_config("logical delay must be finite and >= 0");
    if (!(latch_overhead >= 0.0) || !std::isfinite(latch_overhead))
      throw invalid_config("latch overhead must be finite and >= 0");
    if (logical_delay == 0.0 && latch_overhead == 0.0)
      throw invalid_config("logical delay and latch overhead cannot both be zero");
  }

  PipelineConfig with_depth(std::int64_t p) const {
    PipelineConfig c = *this;
    c.depth = p;
    return c;
  }
};

struct Workload {
  std::int64_t elements = 1;  // n

  void validate() const {
    if (elements < 1) throw invalid_config("element count must be >= 1");
  }
};

struct RestartModel {
  double probability = 0.0;  // b

  void validate() const {
    if (!(probability >= 0.0 && probability <= 1.0))
      throw invalid_config("restart probability must lie in [0, 1]");
  }
};

/// f(x) = A x + B + C / x on x > 0.
struct HyperbolaCoeffs {
  double linear = 0.0;    // A
  double constant = 0.0;  // B
  double inverse = 0.0;   // C

  double operator()(double x) const { return linear * x + constant + inverse / x; }

  /// Abscissa of the minimum, sqrt(C/A); empty when A = 0.
  std::optional<double> argmin() const {
    if (linear <= 0.0) return std::nullopt;
    return std::sqrt(inverse / linear);
  }
};

struct HyperbolaPair {
  HyperbolaCoeffs constrained;    // branch taken for x >= q
  HyperbolaCoeffs unconstrained;  // branch taken for x <= q
};

struct DepthRecommendation {
  double real_optimum = 1.0;
  std::int64_t integer_optimum = 1;
  double predicted_time = 0.0;
};

/// Pipeline cycle h = t_p / p + t_o.
inline double cycle_time(const PipelineConfig& cfg) {
  cfg.validate();
  return cfg.logical_delay / static_cast<double>(cfg.depth) + cfg.latch_overhead;
}

/// Cycle count of the bounded pipeline: p + n - 1 + (p - q)^+ floor((n - 1) / q).
inline std::int64_t bounded_cycles(std::int64_t p, std::int64_t q, std::int64_t n) {
  if (p < 1 || q < 1 || n < 1) throw invalid_config("p, q and n must all be >= 1");
  return p + n - 1 + detail::positive_part(p - q) * ((n - 1) / q);
}

inline double bounded_time(const PipelineConfig& cfg, const Workload& w) {
  cfg.validate();
  w.validate();
  return static_cast<double>(bounded_cycles(cfg.depth, cfg.devices, w.elements)) *
         cycle_time(cfg);
}

/// Coefficients of the two hyperbolas whose pointwise maximum is the bounded
/// time as a function of a real depth x.
inline HyperbolaPair hyperbola_coeffs(std::int64_t q, const Workload& w, double t_p,
                                      double t_o) {
  if (q < 1) throw invalid_config("device count must be >= 1");
  w.validate();
  const auto m = w.elements - 1;
  const auto quot = static_cast<double>(m / q);
  const auto rem = static_cast<double>(m % q);
  HyperbolaPair out;
  out.constrained = {t_o * (1.0 + quot), t_o * rem + t_p * (1.0 + quot), t_p * rem};
  out.unconstrained = {t_o, static_cast<double>(m) * t_o + t_p,
                       static_cast<double>(m) * t_p};
  return out;
}

namespace detail {

// Pick the better of floor/ceil of a real optimum (clamped below at 1) under
// the given time function; ties go to the smaller depth.
template <class TimeFn>
DepthRecommendation integerize(double real_opt, TimeFn&& time_at) {
  const double r = std::max(1.0, real_opt);
  const auto lo = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(r)));
  const auto hi = std::max<std::int64_t>(lo, static_cast<std::int64_t>(std::ceil(r)));
  const double t_lo = time_at(lo);
  const double t_hi = time_at(hi);
  DepthRecommendation rec;
  rec.real_optimum = r;
  if (t_hi < t_lo && !approx_equal(t_hi, t_lo)) {
    rec.integer_optimum = hi;
    rec.predicted_time = t_hi;
  } else {
    rec.integer_optimum = lo;
    rec.predicted_time = t_lo;
  }
  return rec;
}

inline void require_positive_overhead(double t_o) {
  if (!(t_o > 0.0))
    throw precondition_error("optimal depth requires latch overhead t_o > 0");
}

}  // namespace detail

/// Optimal depth of the bounded pipeline for a fixed amount of data.
inline DepthRecommendation optimal_depth_exact(std::int64_t q, const Workload& w, double t_p,
                                               double t_o) {
  if (q < 1) throw invalid_config("device count must be >= 1");
  w.validate();
  detail::require_positive_overhead(t_o);
  if (!(t_p > 0.0))
    throw precondition_error("optimal depth requires logical delay t_p > 0");

  const auto m = w.elements - 1;
  const double quot = static_cast<double>(m / q);
  const double rem = static_cast<double>(m % q);
  const double p0 = std::sqrt(rem * t_p / ((1.0 + quot) * t_o));
  const double p1 = std::sqrt(static_cast<double>(m) * t_p / t_o);
  const double real = std::max(p0, std::min(static_cast<double>(q), p1));

  const PipelineConfig base{1, q, t_p, t_o};
  return detail::integerize(real, [&](std::int64_t p) {
    return bounded_time(base.with_depth(p), w);
  });
}

/// Expected time of the simplified pipeline: one hazard of type (p - q)^+ + 1
/// with probability 1/q.
inline double simplified_time(const PipelineConfig& cfg, const Workload& w) {
  cfg.validate();
  w.validate();
  const double q = static_cast<double>(cfg.devices);
  const double hazard = static_cast<double>(detail::positive_part(cfg.depth - cfg.devices) + 1);
  const double per_element = 1.0 - 1.0 / q + hazard / q;
  return (static_cast<double>(cfg.depth) +
          static_cast<double>(w.elements - 1) * per_element) *
         cycle_time(cfg);
}

/// Strict upper bound on simplified_time - bounded_time; zero when p <= q.
inline double simplified_error_bound(const PipelineConfig& cfg) {
  cfg.validate();
  return static_cast<double>(detail::positive_part(cfg.depth - cfg.devices)) *
         (cfg.latch_overhead + cfg.logical_delay / static_cast<double>(cfg.depth));
}

inline DepthRecommendation optimal_depth_simplified(std::int64_t q, const Workload& w,
                                                    double t_p, double t_o) {
  if (q < 1) throw invalid_config("device count must be >= 1");
  w.validate();
  detail::require_positive_overhead(t_o);
  if (!(t_p >= 0.0)) throw invalid_config("logical delay must be >= 0");

  const double real =
      std::min(static_cast<double>(q), std::sqrt(static_cast<double>(w.elements - 1) * t_p / t_o));
  const PipelineConfig base{1, q, t_p, t_o};
  return detail::integerize(real, [&](std::int64_t p) {
    return simplified_time(base.with_depth(p), w);
  });
}

/// Expected time of the two-hazard pipeline: restart with probability b plus
/// the simplified pipeline's structural hazard.
inline double restart_time(const PipelineConfig& cfg, const Workload& w, const RestartModel& r) {
  cfg.validate();
  w.validate();
  r.validate();
  const double b = r.probability;
  const double p = static_cast<double>(cfg.depth);
  const double q = static_cast<double>(cfg.devices);
  const double hazard = static_cast<double>(detail::positive_part(cfg.depth - cfg.devices) + 1);
  const double per_element = (1.0 - b) * (1.0 - 1.0 / q) + hazard * (1.0 - b) / q + b * p;
  return (p + static_cast<double>(w.elements - 1) * per_element) * cycle_time(cfg);
}

inline DepthRecommendation optimal_depth_restart(std::int64_t q, const Workload& w, double t_p,
                                                 double t_o, const RestartModel& r) {
  if (q < 1) throw invalid_config("device count must be >= 1");
  w.validate();
  r.validate();
  if (w.elements < 2)
    throw precondition_error("restart optimal depth requires at least 2 elements");
  detail::require_positive_overhead(t_o);
  if (!(t_p >= 0.0)) throw invalid_config("logical delay must be >= 0");

  const double b = r.probability;
  const double m = static_cast<double>(w.elements - 1);
  const double real =
      std::min(static_cast<double>(q), std::sqrt((1.0 - b) * t_p / ((1.0 / m + b) * t_o)));
  const PipelineConfig base{1, q, t_p, t_o};
  return detail::integerize(real, [&](std::int64_t p) {
    return restart_time(base.with_depth(p), w, r);
  });
}

/// Generalized Amdahl law: T_q = (g_1/1 + g_2/2 + ... + g_q/q) T_1, where g_i is
/// the share of work executed at concurrency level i.
inline double generalized_amdahl(std::span<const double> fractions, double sequential_time) {
  if (fractions.empty()) throw invalid_config("fraction vector must be nonempty");
  double sum = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] >= 0.0)) throw invalid_config("fractions must be >= 0");
    sum += fractions[i];
    weighted += fractions[i] / static_cast<double>(i + 1);
  }
  if (std::abs(sum - 1.0) > kRelTolerance)
    throw invalid_config("fractions must sum to 1 (got " + std::to_string(sum) + ")");
  return weighted * sequential_time;
}

}  // namespace bpl
