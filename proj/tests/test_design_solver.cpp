#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "hybrid/design_solver.hpp"
#include "hybrid/errors.hpp"

using namespace hybrid;

namespace {

ScenarioParams car(count_t n, double target = 0.98) {
  ScenarioParams p;
  p.n_consumers = n;
  p.p_nonsurge = 0.1;
  p.p_surge = 0.3;
  p.p_bad = 0.01;
  return p.with_targets(target);
}

ScenarioParams charger(count_t n, double target = 0.98) {
  ScenarioParams p;
  p.n_consumers = n;
  p.p_nonsurge = 0.005;
  p.p_surge = 0.015;
  p.p_bad = 0.01;
  return p.with_targets(target);
}

// Cdf by summing lgamma-based pmf terms; independent of the library kernels.
double naive_cdf(count_t a, count_t n, double p) {
  if (a < 0) return 0.0;
  if (a >= n) return 1.0;
  double s = 0.0;
  for (count_t k = 0; k <= a; ++k) {
    s += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(double(n - k) + 1.0) +
                  k * std::log(p) + (n - k) * std::log1p(-p));
  }
  return s;
}

struct NaiveBest {
  double cost = INFINITY;
  Design d;
};

// Triple loop over every design with the real cost; ties go to smaller M, T, Q.
NaiveBest naive_optimum(const ScenarioParams& p, const CostModel& model) {
  NaiveBest best;
  const count_t n = p.n_consumers;
  for (count_t m = 0; m <= n; ++m) {
    if (naive_cdf(m, n, p.p_nonsurge) < p.qos_target_ns) continue;
    for (count_t t = 0; t <= 3 * n; ++t) {
      for (count_t q = 0; q <= std::min(m, t); ++q) {
        if (naive_cdf(q, t, p.p_bad) < p.qos_target_b) continue;
        if (naive_cdf(m - q + t, n, p.p_surge) < p.qos_target_s) break;
        const double c = model.per_item_main * (1.0 - model.discount.at(m)) * m + model.per_item_prosumer * t;
        if (c < best.cost * (1 - 1e-12)) {
          best.cost = c;
          best.d = {m, t, q};
        }
        break;  // larger q only costs the same and lowers QoS_s
      }
    }
  }
  return best;
}

}  // namespace

TEST(Feasible, TableRow) { EXPECT_TRUE(feasible(car(1000), {120, 216, 6})); }

TEST(Feasible, StructuralViolations) {
  EXPECT_FALSE(feasible(car(100), {101, 50, 2}));
  EXPECT_FALSE(feasible(car(1000), {120, 3, 6}));
  EXPECT_FALSE(feasible(car(1000), {5, 300, 6}));
  EXPECT_FALSE(feasible(car(1000), {119, 216, 6}));
}

TEST(SolveMinCost, CarSmallRow) {
  const DesignReport r = solve_min_cost(car(1000), car_mg4_2025());
  EXPECT_NEAR(double(r.design.m), 120, 1);
  EXPECT_NEAR(double(r.design.t), 216, 2);
  EXPECT_NEAR(double(r.design.q), 6, 1);
  EXPECT_NEAR(r.cost_real, 1.22e6, 0.02 * 1.22e6);
  EXPECT_TRUE(feasible(car(1000), r.design));
}

TEST(SolveMinCost, CarLargeRow) {
  const DesignReport r = solve_min_cost(car(50000, 0.99), car_mg4_2025());
  EXPECT_NEAR(double(r.design.m), 5157, 5);
  EXPECT_NEAR(double(r.design.t), 10208, 10);
  EXPECT_NEAR(double(r.design.q), 126, 2);
  EXPECT_NEAR(r.cost_real, 49.64e6, 0.02 * 49.64e6);
}

TEST(SolveMinCost, ChargerRow) {
  const DesignReport r = solve_min_cost(charger(10000), charger_dc60_2025());
  EXPECT_NEAR(double(r.design.m), 65, 1);
  EXPECT_NEAR(double(r.design.t), 114, 2);
  EXPECT_NEAR(double(r.design.q), 4, 1);
  EXPECT_NEAR(r.cost_real, 1.74e6, 0.02 * 1.74e6);
}

TEST(SolveMinCost, OracleFlagWhenRequested) {
  SolverOpts opts;
  opts.verify_with_oracle = true;
  EXPECT_TRUE(solve_min_cost(charger(1000), charger_dc60_2025(), opts).oracle_verified);
  EXPECT_FALSE(solve_min_cost(charger(1000), charger_dc60_2025()).oracle_verified);
}

TEST(SolveMinCost, PerConsumerIsAnnualised) {
  const DesignReport r = solve_min_cost(charger(1000), charger_dc60_2025());
  EXPECT_NEAR(r.cost_per_consumer, r.cost_real / 10.0 / 1000.0, 1e-9);
  EXPECT_NEAR(r.cost_per_consumer, 28.56, 0.05 * 28.56);
}

TEST(SolveMinCost, InfeasibleUnderPoolCap) {
  SolverOpts opts;
  opts.max_shared_items = 50;
  try {
    solve_min_cost(car(1000), car_mg4_2025(), opts);
    FAIL();
  } catch (const InfeasibleError& e) {
    EXPECT_EQ(e.constraint(), "qos_ns");
  }
}

TEST(SolveMinCost, RejectsInvalidParams) {
  ScenarioParams p = car(1000);
  p.p_bad = 0.0;
  EXPECT_THROW(solve_min_cost(p, car_mg4_2025()), ValidationError);
  SolverOpts opts;
  opts.optimality_gap = -1;
  EXPECT_THROW(solve_min_cost(car(1000), car_mg4_2025(), opts), ValidationError);
}

TEST(BruteForce, ChargerSmallRow) {
  const DesignReport r = brute_force_design(charger(1000), charger_dc60_2025());
  EXPECT_NEAR(double(r.design.m), 10, 1);
  EXPECT_NEAR(double(r.design.t), 14, 1);
  EXPECT_NEAR(double(r.design.q), 1, 1);
  EXPECT_TRUE(r.oracle_verified);
}

TEST(BruteForce, PureB2CWhenProsumersDisabled) {
  ScanOpts opts;
  opts.max_prosumers = 0;
  const DesignReport r = brute_force_design(car(1000), car_mg4_2025(), opts);
  EXPECT_EQ(r.design.t, 0);
  EXPECT_EQ(r.design.q, 0);
  EXPECT_EQ(r.design.m, min_items_for_qos(1000, 0.3, 0.98));
}

TEST(BruteForce, AgreesWithSolverOnCar5000) {
  const double oracle = brute_force_design(car(5000), car_mg4_2025()).cost_real;
  const double solver = solve_min_cost(car(5000), car_mg4_2025()).cost_real;
  EXPECT_GE(solver, oracle * (1 - 1e-12));
  EXPECT_LE(solver, oracle * 1.01);
}

TEST(BruteForce, MatchesNaiveTripleLoop) {
  // Small populations with a schedule whose breakpoints fall inside the range.
  CostModel model = car_mg4_2025();
  model.discount = DiscountSchedule({{1, 0.0}, {4, 0.05}, {9, 0.15}, {15, 0.2}});
  for (count_t n : {12, 25, 40}) {
    for (double target : {0.9, 0.98}) {
      const ScenarioParams p = car(n, target);
      const NaiveBest best = naive_optimum(p, model);
      const DesignReport scan = brute_force_design(p, model);
      const DesignReport full = exhaustive_design(p, model);
      EXPECT_NEAR(scan.cost_real, best.cost, 1e-6) << n << ' ' << target;
      EXPECT_EQ(scan.design, best.d) << n << ' ' << target;
      EXPECT_EQ(full.design, best.d) << n << ' ' << target;
    }
  }
}

TEST(BruteForce, SerialEqualsParallel) {
  for (const auto& p : {car(1000), car(5000, 0.99), charger(10000)}) {
    const CostModel& model = p.p_surge > 0.1 ? car_mg4_2025() : charger_dc60_2025();
    ScanOpts serial;
    serial.exec = Exec::serial;
    const DesignReport a = brute_force_design(p, model, serial);
    const DesignReport b = brute_force_design(p, model);
    EXPECT_EQ(a.design, b.design);
    EXPECT_EQ(a.cost_real, b.cost_real);
  }
}

TEST(BruteForce, InfeasibleUnderCap) {
  ScanOpts opts;
  opts.max_shared_items = 10;
  EXPECT_THROW(brute_force_design(car(1000), car_mg4_2025(), opts), InfeasibleError);
}

TEST(DesignProperties, SolverOutputAlwaysFeasibleAndDominated) {
  for (count_t n : {200, 1000, 3000}) {
    for (double target : {0.9, 0.95, 0.98, 0.99}) {
      for (bool is_car : {true, false}) {
        const ScenarioParams p = is_car ? car(n, target) : charger(n, target);
        const CostModel& model = is_car ? car_mg4_2025() : charger_dc60_2025();
        const DesignReport r = solve_min_cost(p, model);
        const DesignReport o = brute_force_design(p, model);
        EXPECT_TRUE(feasible(p, r.design)) << n << ' ' << target;
        EXPECT_GE(r.cost_real, o.cost_real * (1 - 1e-12));
        EXPECT_LE(r.cost_real, o.cost_real * 1.01) << n << ' ' << target << ' ' << is_car;
      }
    }
  }
}

TEST(DesignProperties, RaisingATargetNeverLowersCost) {
  const ScenarioParams base = car(2000, 0.95);
  const double c0 = brute_force_design(base, car_mg4_2025()).cost_real;
  for (int which = 0; which < 3; ++which) {
    ScenarioParams p = base;
    (which == 0 ? p.qos_target_ns : which == 1 ? p.qos_target_s : p.qos_target_b) = 0.99;
    EXPECT_GE(brute_force_design(p, car_mg4_2025()).cost_real, c0) << which;
  }
}

TEST(DesignProperties, ProsumerChannelNeverHurts) {
  ScanOpts pure;
  pure.max_prosumers = 0;
  for (count_t n : {1000, 5000, 10000, 50000}) {
    EXPECT_LE(brute_force_design(car(n), car_mg4_2025()).cost_real,
              brute_force_design(car(n), car_mg4_2025(), pure).cost_real);
    EXPECT_LE(brute_force_design(charger(n), charger_dc60_2025()).cost_real,
              brute_force_design(charger(n), charger_dc60_2025(), pure).cost_real);
  }
}

TEST(CompareApproaches, PureB2CPoolSizes) {
  const auto c = compare_approaches(car(1000), car_mg4_2025());
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[1].approach, "pure-b2c");
  EXPECT_NEAR(double(c[1].design.m), 330, 1);
  const auto h = compare_approaches(charger(1000), charger_dc60_2025());
  EXPECT_NEAR(double(h[1].design.m), 23, 1);
}

TEST(CompareApproaches, HybridCheapestOwnershipDearest) {
  for (count_t n : {1000, 5000, 10000, 50000}) {
    for (double target : {0.98, 0.99}) {
      for (bool is_car : {true, false}) {
        const auto c = is_car ? compare_approaches(car(n, target), car_mg4_2025())
                              : compare_approaches(charger(n, target), charger_dc60_2025());
        EXPECT_EQ(c[0].approach, "hybrid");
        EXPECT_EQ(c[2].approach, "ownership");
        EXPECT_LT(c[0].cost_real, c[1].cost_real) << n;
        EXPECT_LT(c[1].cost_real, c[2].cost_real) << n;
      }
    }
  }
}

TEST(Sweep, CostNonDecreasingInTarget) {
  const std::vector<double> grid{0.8, 0.85, 0.9, 0.95, 0.97, 0.98, 0.99, 0.995, 0.999};
  const auto pts = sweep_cost_vs_qos(car(1000), car_mg4_2025(), grid);
  ASSERT_EQ(pts.size(), grid.size());
  for (size_t i = 1; i < pts.size(); ++i) {
    ASSERT_TRUE(pts[i].feasible);
    EXPECT_GE(pts[i].total_cost, pts[i - 1].total_cost);
  }
}

TEST(Sweep, PerConsumerCostsAcrossPopulations) {
  const std::vector<count_t> ns{1000, 5000, 10000, 50000};
  const auto pts = sweep_cost_vs_n(car(1000), car_mg4_2025(), ns);
  const double expect[] = {1220, 1065, 1013, 990};
  for (size_t i = 0; i < pts.size(); ++i) {
    EXPECT_NEAR(pts[i].cost_per_consumer, expect[i], 0.02 * expect[i]);
    if (i > 0) {
      EXPECT_GE(pts[i].total_cost, pts[i - 1].total_cost);
      EXPECT_LE(pts[i].cost_per_consumer, pts[i - 1].cost_per_consumer);
      EXPECT_NEAR(pts[i].total_cost, brute_force_design(car(ns[i]), car_mg4_2025()).cost_real,
                  0.01 * pts[i].total_cost);
    }
  }
}

TEST(Sweep, ChargerEconomyOfScale) {
  const std::vector<count_t> ns{1000, 5000, 10000, 50000};
  const auto pts = sweep_cost_vs_n(charger(1000), charger_dc60_2025(), ns);
  for (size_t i = 1; i < pts.size(); ++i) EXPECT_LE(pts[i].cost_per_consumer, pts[i - 1].cost_per_consumer);
}

TEST(Sweep, SerialEqualsParallel) {
  const std::vector<double> grid{0.9, 0.95, 0.99};
  const auto a = sweep_cost_vs_qos(car(3000), car_mg4_2025(), grid, {}, Exec::serial);
  const auto b = sweep_cost_vs_qos(car(3000), car_mg4_2025(), grid, {}, Exec::parallel);
  for (size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(a[i].design, b[i].design);
    EXPECT_EQ(a[i].total_cost, b[i].total_cost);
  }
}

TEST(Sweep, InfeasiblePointsBecomeGaps) {
  SolverOpts opts;
  opts.max_shared_items = 110;
  const std::vector<double> grid{0.5, 0.999};
  const auto pts = sweep_cost_vs_qos(car(1000), car_mg4_2025(), grid, opts);
  EXPECT_TRUE(pts[0].feasible);
  EXPECT_FALSE(pts[1].feasible);
}
