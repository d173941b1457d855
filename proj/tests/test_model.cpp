#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "bpl/model.hpp"
#include "oracles.hpp"

using namespace bpl;

namespace {

PipelineConfig unit(std::int64_t p, std::int64_t q) { return PipelineConfig::unit_cycle(p, q); }

double rel(double x) { return 1e-9 * std::max(1.0, std::abs(x)); }

}  // namespace

TEST(CycleTime, Examples) {
  EXPECT_NEAR(cycle_time({5, 5, 1.0, 0.3}), 0.5, rel(0.5));
  EXPECT_EQ(cycle_time({1, 1, 0.0, 1.0}), 1.0);
  EXPECT_EQ(cycle_time({4, 1, 4.0, 0.0}), 1.0);
}

TEST(PipelineConfig, RejectsInvalid) {
  EXPECT_THROW(cycle_time({0, 1, 1.0, 1.0}), invalid_config);
  EXPECT_THROW(cycle_time({1, 0, 1.0, 1.0}), invalid_config);
  EXPECT_THROW(cycle_time({1, 1, 0.0, 0.0}), invalid_config);
  EXPECT_THROW(cycle_time({1, 1, -1.0, 1.0}), invalid_config);
  EXPECT_THROW(bounded_time(unit(2, 2), Workload{0}), invalid_config);
}

TEST(BoundedTime, ReservationTableExample) {
  EXPECT_EQ(bounded_time(unit(4, 3), Workload{8}), 13.0);
  EXPECT_EQ(bounded_cycles(4, 3, 8), 13);
}

TEST(BoundedTime, DeepPipelineMatchesCycleOracle) {
  // Frozen from oracle::pipeline_cycles(10, 5, 50).
  EXPECT_EQ(oracle::pipeline_cycles(10, 5, 50), 104);
  EXPECT_EQ(bounded_time(unit(10, 5), Workload{50}), 104.0);
}

TEST(BoundedTime, UnconstrainedAndSingleElement) {
  for (std::int64_t p = 1; p <= 9; ++p)
    for (std::int64_t n = 1; n <= 15; ++n) {
      const PipelineConfig cfg{p, p, 2.5, 0.7};
      const double h = cycle_time(cfg);
      EXPECT_NEAR(bounded_time(cfg, Workload{n}), static_cast<double>(p + n - 1) * h, rel(h * 30));
      for (std::int64_t q = p; q <= p + 3; ++q)
        EXPECT_EQ(bounded_cycles(p, q, n), p + n - 1);
      for (std::int64_t q = 1; q <= p; ++q) EXPECT_EQ(bounded_cycles(p, q, 1), p);
    }
}

TEST(BoundedTime, OracleEquivalenceOnGrid) {
  for (std::int64_t p = 1; p <= 8; ++p)
    for (std::int64_t q = 1; q <= p; ++q)
      for (std::int64_t n = 1; n <= 12; ++n)
        ASSERT_EQ(bounded_cycles(p, q, n), oracle::pipeline_cycles(p, q, n))
            << "p=" << p << " q=" << q << " n=" << n;
}

TEST(BoundedTime, CycleIntegrality) {
  for (std::int64_t p = 1; p <= 20; ++p)
    for (std::int64_t q = 1; q <= 25; ++q)
      for (std::int64_t n = 1; n <= 40; ++n) {
        const double t = bounded_time(unit(p, q), Workload{n});
        ASSERT_GE(t, 0.0);
        ASSERT_EQ(t, std::floor(t));
      }
}

TEST(HyperbolaCoeffs, Examples) {
  const auto hc = hyperbola_coeffs(3, Workload{8}, 0.0, 1.0);
  EXPECT_EQ(hc.constrained.linear, 3.0);
  EXPECT_EQ(hc.constrained.constant, 1.0);
  EXPECT_EQ(hc.constrained.inverse, 0.0);
  EXPECT_EQ(hc.constrained(4.0), 13.0);

  const auto one = hyperbola_coeffs(4, Workload{1}, 3.0, 0.5);
  EXPECT_EQ(one.constrained.inverse, 0.0);
  EXPECT_EQ(one.unconstrained.inverse, 0.0);
}

TEST(HyperbolaCoeffs, ConstrainedEqualsUnconstrainedWhenDevicesCoverData) {
  for (std::int64_t n = 1; n <= 10; ++n)
    for (std::int64_t q = n; q <= 12; ++q) {
      const auto hc = hyperbola_coeffs(q, Workload{n}, 7.0, 0.3);
      EXPECT_DOUBLE_EQ(hc.constrained.linear, hc.unconstrained.linear);
      EXPECT_DOUBLE_EQ(hc.constrained.constant, hc.unconstrained.constant);
      EXPECT_DOUBLE_EQ(hc.constrained.inverse, hc.unconstrained.inverse);
    }
}

// The bounded time is the constrained branch for p >= q and the unconstrained
// branch for p <= q; the minima satisfy p0 <= p1, strictly once n >= q + 1.
TEST(HyperbolaCoeffs, BranchesReproduceBoundedTime) {
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<std::int64_t> qd(1, 20), nd(1, 200), pd(1, 60);
  std::uniform_real_distribution<double> td(0.01, 20.0);
  for (int i = 0; i < 2000; ++i) {
    const auto q = qd(gen), n = nd(gen), p = pd(gen);
    const double tp = td(gen), to = td(gen);
    const auto hc = hyperbola_coeffs(q, Workload{n}, tp, to);
    const double t = bounded_time({p, q, tp, to}, Workload{n});
    const double x = static_cast<double>(p);
    if (p >= q) {
      ASSERT_NEAR(hc.constrained(x), t, 1e-9 * t);
    }
    if (p <= q) {
      ASSERT_NEAR(hc.unconstrained(x), t, 1e-9 * t);
    }
    ASSERT_NEAR(std::max(hc.constrained(x), hc.unconstrained(x)), t, 1e-9 * t);
    const double p0 = *hc.constrained.argmin();
    const double p1 = *hc.unconstrained.argmin();
    ASSERT_LE(p0, p1);
    if (n >= q + 1) {
      ASSERT_LT(p0, p1);
    }
  }
  EXPECT_FALSE((HyperbolaCoeffs{0.0, 1.0, 1.0}.argmin().has_value()));
}

TEST(OptimalDepthExact, DataSensitivity) {
  // q=15, t_p=10, t_o=0.02. For n=150 the real optimum is sqrt(700) and the
  // exhaustive scan puts the integer minimum at 26 (T(26) < T(27)).
  const auto a = optimal_depth_exact(15, Workload{150}, 10.0, 0.02);
  EXPECT_NEAR(a.real_optimum, std::sqrt(700.0), 1e-9);
  const auto scan = oracle::exhaustive_min(
      [](std::int64_t p) { return bounded_time({p, 15, 10.0, 0.02}, Workload{150}); }, 400);
  EXPECT_EQ(scan.depth, 26);
  EXPECT_EQ(a.integer_optimum, scan.depth);
  EXPECT_LT(bounded_time({26, 15, 10.0, 0.02}, Workload{150}),
            bounded_time({27, 15, 10.0, 0.02}, Workload{150}));

  const auto b = optimal_depth_exact(15, Workload{151}, 10.0, 0.02);
  EXPECT_EQ(b.real_optimum, 15.0);
  EXPECT_EQ(b.integer_optimum, 15);
}

TEST(OptimalDepthExact, MultithreadedExperimentParameters) {
  const auto r = optimal_depth_exact(5, Workload{20}, 100.0, 3.0);
  EXPECT_NEAR(r.real_optimum, std::sqrt(100.0 / 3.0), 1e-9);
  EXPECT_NEAR(r.real_optimum, 5.77, 0.01);
  EXPECT_EQ(r.integer_optimum, 6);
  EXPECT_NEAR(r.predicted_time, 28.0 * (100.0 / 6.0 + 3.0), 1e-9);
}

TEST(OptimalDepthExact, SingleElementClampsToOne) {
  const auto r = optimal_depth_exact(4, Workload{1}, 10.0, 1.0);
  EXPECT_EQ(r.real_optimum, 1.0);
  EXPECT_EQ(r.integer_optimum, 1);
}

TEST(OptimalDepthExact, RejectsDegenerateDelays) {
  EXPECT_THROW(optimal_depth_exact(4, Workload{10}, 10.0, 0.0), precondition_error);
  EXPECT_THROW(optimal_depth_exact(4, Workload{10}, 0.0, 1.0), precondition_error);
  EXPECT_THROW(optimal_depth_exact(4, Workload{10}, 1.0, -2.0), precondition_error);
  // bounded_time itself still accepts t_o = 0.
  EXPECT_NO_THROW(bounded_time({4, 2, 1.0, 0.0}, Workload{10}));
}

TEST(OptimalDepthExact, IntegerOptimumIsFloorOrCeil) {
  for (std::int64_t q = 1; q <= 12; ++q)
    for (std::int64_t n = 1; n <= 80; n += 3) {
      const auto r = optimal_depth_exact(q, Workload{n}, 4.0, 0.1);
      const auto lo = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(r.real_optimum)));
      const auto hi = static_cast<std::int64_t>(std::ceil(r.real_optimum));
      EXPECT_TRUE(r.integer_optimum == lo || r.integer_optimum == hi);
      EXPECT_EQ(r.predicted_time, bounded_time({r.integer_optimum, q, 4.0, 0.1}, Workload{n}));
    }
}

TEST(OptimalDepthExact, ArgminOnGrid) {
  for (std::int64_t q = 2; q <= 10; ++q)
    for (std::int64_t n = 2; n <= 60; ++n)
      for (double tp : {1.0, 10.0})
        for (double to : {0.02, 0.3, 1.0}) {
          const auto r = optimal_depth_exact(q, Workload{n}, tp, to);
          const auto scan = oracle::exhaustive_min(
              [&](std::int64_t p) { return bounded_time({p, q, tp, to}, Workload{n}); }, 200);
          ASSERT_TRUE(approx_equal(r.predicted_time, scan.time))
              << "q=" << q << " n=" << n << " tp=" << tp << " to=" << to;
        }
}

TEST(SimplifiedTime, Examples) {
  EXPECT_NEAR(simplified_time(unit(10, 5), Workload{50}), 108.0, 1e-9);
  EXPECT_EQ(simplified_error_bound(unit(10, 5)), 5.0);
  for (std::int64_t p = 1; p <= 6; ++p) {
    EXPECT_NEAR(simplified_time({p, 3, 2.0, 0.5}, Workload{1}), p * cycle_time({p, 3, 2.0, 0.5}),
                1e-9);
    EXPECT_EQ(simplified_error_bound({p, 6, 2.0, 0.5}), 0.0);
  }
}

TEST(SimplifiedTime, SandwichAroundBoundedTime) {
  for (std::int64_t p = 1; p <= 30; ++p)
    for (std::int64_t q = 1; q <= 12; ++q)
      for (std::int64_t n = 1; n <= 60; n += 1)
        for (double to : {0.02, 0.3, 1.0}) {
          const PipelineConfig cfg{p, q, 10.0, to};
          const Workload w{n};
          const double gap = simplified_time(cfg, w) - bounded_time(cfg, w);
          const double bound = simplified_error_bound(cfg);
          const double tol = 1e-9 * bounded_time(cfg, w);
          if (p <= q) {
            ASSERT_NEAR(gap, 0.0, tol);
            ASSERT_EQ(bound, 0.0);
          } else {
            ASSERT_GE(gap, -tol);
            ASSERT_LT(gap, bound);
          }
        }
}

TEST(OptimalDepthSimplified, Examples) {
  const auto a = optimal_depth_simplified(5, Workload{20}, 100.0, 3.0);
  EXPECT_EQ(a.real_optimum, 5.0);
  EXPECT_EQ(a.integer_optimum, 5);
  for (std::int64_t n : {150, 151}) {
    const auto r = optimal_depth_simplified(15, Workload{n}, 10.0, 0.02);
    EXPECT_EQ(r.integer_optimum, 15);
  }
  EXPECT_EQ(optimal_depth_simplified(3, Workload{1}, 5.0, 1.0).integer_optimum, 1);
  EXPECT_THROW(optimal_depth_simplified(3, Workload{4}, 5.0, 0.0), precondition_error);
}

TEST(RestartTime, Examples) {
  // b = 0 reduces to the simplified model.
  for (std::int64_t p = 1; p <= 12; ++p) {
    const PipelineConfig cfg{p, 4, 3.0, 0.2};
    EXPECT_NEAR(restart_time(cfg, Workload{17}, {0.0}), simplified_time(cfg, Workload{17}), 1e-9);
    // b = 1: every element restarts.
    EXPECT_NEAR(restart_time(unit(p, 4), Workload{9}, {1.0}), 9.0 * p, 1e-9);
  }
  // 5 + 19 * (0.9*0.8 + 0.9*0.2 + 0.1*5) = 31.6
  EXPECT_NEAR(restart_time(unit(5, 5), Workload{20}, {0.1}), 31.6, 1e-9);
  EXPECT_THROW(restart_time(unit(5, 5), Workload{20}, {1.5}), invalid_config);
}

TEST(OptimalDepthRestart, Examples) {
  for (std::int64_t n : {2, 20, 151})
    for (std::int64_t q : {1, 5, 15}) {
      const auto a = optimal_depth_restart(q, Workload{n}, 10.0, 0.02, {0.0});
      const auto b = optimal_depth_simplified(q, Workload{n}, 10.0, 0.02);
      EXPECT_DOUBLE_EQ(a.real_optimum, b.real_optimum);
      EXPECT_EQ(a.integer_optimum, b.integer_optimum);
    }
  EXPECT_EQ(optimal_depth_restart(5, Workload{20}, 100.0, 3.0, {1.0}).integer_optimum, 1);

  const auto r = optimal_depth_restart(5, Workload{20}, 100.0, 3.0, {0.2});
  EXPECT_EQ(r.real_optimum, 5.0);  // sqrt(80 / ((1/19 + 0.2) * 3)) > 5
  const auto scan = oracle::exhaustive_min(
      [](std::int64_t p) { return restart_time({p, 5, 100.0, 3.0}, Workload{20}, {0.2}); }, 50);
  EXPECT_EQ(r.integer_optimum, scan.depth);

  EXPECT_THROW(optimal_depth_restart(5, Workload{1}, 1.0, 1.0, {0.1}), precondition_error);
  EXPECT_THROW(optimal_depth_restart(5, Workload{3}, 1.0, 0.0, {0.1}), precondition_error);
}

TEST(OptimalDepthRestart, ArgminOnGrid) {
  for (std::int64_t q = 2; q <= 10; ++q)
    for (std::int64_t n = 2; n <= 60; ++n)
      for (double tp : {1.0, 10.0})
        for (double to : {0.02, 0.3, 1.0})
          for (double b : {0.0, 0.05, 0.3}) {
            const auto r = optimal_depth_restart(q, Workload{n}, tp, to, {b});
            const auto scan = oracle::exhaustive_min(
                [&](std::int64_t p) { return restart_time({p, q, tp, to}, Workload{n}, {b}); },
                200);
            ASSERT_TRUE(approx_equal(r.predicted_time, scan.time))
                << "q=" << q << " n=" << n << " tp=" << tp << " to=" << to << " b=" << b;
          }
}

TEST(GeneralizedAmdahl, Examples) {
  const std::vector<double> g{2.0 / 32, 6.0 / 32, 24.0 / 32};
  EXPECT_NEAR(generalized_amdahl(g, 32.0), 13.0, 1e-9);
  const std::vector<double> serial{1.0};
  EXPECT_EQ(generalized_amdahl(serial, 7.5), 7.5);
  const std::vector<double> parallel{0.0, 0.0, 0.0, 1.0};
  EXPECT_EQ(generalized_amdahl(parallel, 8.0), 2.0);
}

TEST(GeneralizedAmdahl, RejectsBadFractions) {
  const std::vector<double> short_sum{0.5, 0.4};
  EXPECT_THROW(generalized_amdahl(short_sum, 1.0), invalid_config);
  const std::vector<double> negative{1.5, -0.5};
  EXPECT_THROW(generalized_amdahl(negative, 1.0), invalid_config);
  EXPECT_THROW(generalized_amdahl(std::vector<double>{}, 1.0), invalid_config);
}
