#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "hybrid/errors.hpp"
#include "hybrid/partition.hpp"

using namespace hybrid;

namespace {

PartitionSetup table_setup(count_t n, count_t m, count_t t) {
  PartitionSetup s;
  s.params.n_consumers = n;
  s.params.p_nonsurge = 0.1;
  s.params.p_surge = 0.3;
  s.params.p_bad = 0.01;
  s.m = m;
  s.t = t;
  return s;
}

AimdConfig traced(std::uint64_t seed, count_t iterations) {
  AimdConfig c;
  c.seed = seed;
  c.max_iterations = iterations;
  c.record_trace = true;
  return c;
}

// Objective recomputed from scratch by summing pmf terms.
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

count_t naive_scan(PartitionProblem problem, const PartitionSetup& s) {
  count_t best_q = 0;
  double best = -INFINITY;
  for (count_t q = 0; q <= std::min(s.m, s.t); ++q) {
    const double qs = naive_cdf(s.m - q + s.t, s.params.n_consumers, s.params.p_surge);
    const double qb = naive_cdf(q, s.t, s.params.p_bad);
    const double v = problem == PartitionProblem::maximize ? qs + qb : -std::fabs(qs - qb);
    if (v > best + 1e-13) {
      best = v;
      best_q = q;
    }
  }
  return best_q;
}

}  // namespace

TEST(AimdStep, AdditiveIncreaseBelowCapacity) {
  const PartitionSetup s = table_setup(1000, 120, 215);
  AimdConfig c;
  c.gamma = 0.01;
  AimdState st;
  st.z = 50.0;
  st.q = 3.0;
  const AimdState next = aimd_step_maximize(st, c, s, CounterRng(1));
  EXPECT_EQ(next.z, 51.0);
  EXPECT_EQ(next.q, 4.0);
  EXPECT_FALSE(next.capacity_event);
  EXPECT_EQ(next.capacity_count, 0);
  EXPECT_EQ(next.iteration, 1);
}

TEST(AimdStep, CertainBackoffHalvesBoth) {
  const PartitionSetup s = table_setup(1000, 120, 215);
  AimdConfig c;
  c.beta = 0.5;
  c.gamma = 1e12;
  AimdState st;
  st.z = 100.0;
  st.q = 25.0;
  for (auto step : {aimd_step_maximize, aimd_step_equalize}) {
    const AimdState next = step(st, c, s, CounterRng(3));
    EXPECT_TRUE(next.capacity_event);
    EXPECT_EQ(next.z, 50.0);
    EXPECT_EQ(next.q, 12.5);
    EXPECT_EQ(next.z_avg, 100.0);
    EXPECT_EQ(next.q_avg, 25.0);
  }
}

TEST(AimdStep, ZeroGammaNeverBacksOffWithoutFloor) {
  const PartitionSetup s = table_setup(1000, 120, 215);
  AimdConfig c;
  c.gamma = 0.0;
  c.lambda_min = 0.0;
  c.z_init = 100.0;
  c.q_init = 5.0;
  c.max_iterations = 5000;
  c.record_trace = true;
  const PartitionResult r = run_partition(PartitionProblem::equalize, s, c);
  const auto& rows = r.trace.iterations;
  for (size_t i = 1; i < rows.size(); ++i) EXPECT_GE(rows[i].z, rows[i - 1].z);
  // Once at the boundary the sum stays within one increment of it.
  for (const auto& row : rows) {
    if (row.iter > 20) {
      EXPECT_GE(row.z + row.q, 120.0);
      EXPECT_LT(row.z + row.q, 122.0);
    }
  }
}

TEST(AimdStep, RequiresGamma) {
  const PartitionSetup s = table_setup(1000, 120, 215);
  EXPECT_THROW(aimd_step_maximize(AimdState{}, AimdConfig{}, s, CounterRng(1)), ValidationError);
}

TEST(AimdRun, SymmetricAgentsStayEqual) {
  AimdConfig c;
  c.z_init = 3.0;
  c.q_init = 3.0;
  c.shared_draw = true;
  c.max_iterations = 200000;
  c.record_trace = true;
  const BackoffRule rule = [](double z, double q) { return BackoffProbabilities{1.0 / z, 1.0 / q}; };
  const AimdTrace t = aimd_run(c, 60.0, 5.0, rule);
  ASSERT_GT(t.capacity_count, 1000);
  for (const auto& row : t.iterations) {
    ASSERT_EQ(row.z, row.q);
    ASSERT_EQ(row.z_avg, row.q_avg);
  }
}

TEST(AimdRun, InvariantsOnRecordedTraces) {
  for (auto problem : {PartitionProblem::maximize, PartitionProblem::equalize}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const PartitionSetup s = table_setup(1000, 120, 215);
      const AimdConfig c = traced(seed, 300000);
      const PartitionResult r = run_partition(problem, s, c);
      const double m = 120.0;
      const double alpha = c.alpha;
      bool seen_capacity = false;
      double zsum = 0.0;
      double qsum = 0.0;
      count_t k = 0;
      for (const auto& row : r.trace.iterations) {
        ASSERT_GT(row.z, 0.0);
        ASSERT_GT(row.q, 0.0);
        if (seen_capacity) ASSERT_LT(row.z + row.q, m + 2 * alpha);
        if (row.capacity_event) {
          seen_capacity = true;
          zsum += row.z;
          qsum += row.q;
          ++k;
          ASSERT_NEAR(row.z_avg, zsum / double(k), 1e-9 * std::max(1.0, row.z_avg));
          ASSERT_NEAR(row.q_avg, qsum / double(k), 1e-9 * std::max(1.0, row.q_avg));
        }
      }
      EXPECT_EQ(k, r.trace.capacity_count);
    }
  }
}

TEST(AimdRun, SameSeedIsBitIdentical) {
  const PartitionSetup s = table_setup(5000, 545, 1040);
  for (auto problem : {PartitionProblem::maximize, PartitionProblem::equalize}) {
    const PartitionResult a = run_partition(problem, s, traced(42, 100000));
    const PartitionResult b = run_partition(problem, s, traced(42, 100000));
    ASSERT_EQ(a.trace.iterations.size(), b.trace.iterations.size());
    for (size_t i = 0; i < a.trace.iterations.size(); ++i) {
      const auto& x = a.trace.iterations[i];
      const auto& y = b.trace.iterations[i];
      ASSERT_TRUE(x.z == y.z && x.q == y.q && x.z_avg == y.z_avg && x.q_avg == y.q_avg &&
                  x.capacity_event == y.capacity_event);
    }
    const PartitionResult c = run_partition(problem, s, traced(43, 100000));
    EXPECT_NE(a.trace.q_avg, c.trace.q_avg);
  }
}

TEST(AimdRun, RejectsBadConfig) {
  AimdConfig c;
  c.beta = 1.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = AimdConfig{};
  c.gamma = -1.0;
  EXPECT_THROW(c.validate(), ValidationError);
  EXPECT_THROW(aimd_run(AimdConfig{}, 10.0, 1.0, {}), ValidationError);
}

TEST(AimdRun, FirstCapacityEvent) {
  const AimdState s = first_capacity_event(10.0, 2.0, 20.0, 1.0);
  EXPECT_EQ(s.z, 14.0);
  EXPECT_EQ(s.q, 6.0);
}

TEST(ClampBackoff, Edges) {
  EXPECT_EQ(clamp_backoff(0.0, 5.0, 1e-4), 1e-4);
  EXPECT_EQ(clamp_backoff(1.0, INFINITY, 1e-4), 1.0);
  EXPECT_EQ(clamp_backoff(2.0, 1.0, 1e-4), 1.0);
  EXPECT_EQ(clamp_backoff(1e-9, 1.0, 1e-4), 1e-4);
  EXPECT_DOUBLE_EQ(clamp_backoff(0.1, 2.0, 1e-4), 0.2);
}

TEST(CounterRngTest, UniformAndIndependentOfOrder) {
  const CounterRng r(9);
  double sum = 0.0;
  for (std::uint64_t e = 0; e < 100000; ++e) {
    const double u = r.uniform(e, 0);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000.0, 0.5, 0.01);
  EXPECT_EQ(r.uniform(77, 1), CounterRng(9).uniform(77, 1));
  EXPECT_NE(r.uniform(77, 0), r.uniform(77, 1));
}

TEST(Calibration, LargerRateHitsTarget) {
  const PartitionSetup s = table_setup(1000, 120, 215);
  for (auto problem : {PartitionProblem::maximize, PartitionProblem::equalize}) {
    const AimdConfig c = with_default_start(AimdConfig{}, s);
    const double gamma = calibrate_gamma(problem, s, c);
    const AimdState first = first_capacity_event(*c.z_init, *c.q_init, double(s.m), c.alpha);
    const BackoffRule rule = problem == PartitionProblem::maximize ? maximize_rule(s) : equalize_rule(s);
    const BackoffProbabilities raw = rule(first.z, first.q);
    EXPECT_NEAR(gamma * std::max(raw.consumer, raw.prosumer), default_calibration_target(problem), 1e-12);
  }
}

TEST(ScanOracle, TableScenarios) {
  struct Row {
    count_t n, m, t, q_max, q_eq;
  };
  for (const Row r : {Row{1000, 120, 215, 7, 5}, Row{5000, 545, 1040, 20, 17}, Row{10000, 1060, 2065, 34, 30},
                      Row{50000, 5150, 10200, 133, 124}}) {
    const PartitionSetup s = table_setup(r.n, r.m, r.t);
    EXPECT_NEAR(double(scan_oracle(PartitionProblem::maximize, s).q_opt), double(r.q_max), 1.0) << r.n;
    EXPECT_NEAR(double(scan_oracle(PartitionProblem::equalize, s).q_opt), double(r.q_eq), 1.0) << r.n;
  }
}

TEST(ScanOracle, MatchesNaiveScan) {
  for (const auto& s : {table_setup(1000, 120, 215), table_setup(300, 40, 70), table_setup(5000, 545, 1040)}) {
    for (auto problem : {PartitionProblem::maximize, PartitionProblem::equalize}) {
      EXPECT_EQ(scan_oracle(problem, s).q_opt, naive_scan(problem, s)) << s.params.n_consumers;
    }
  }
}

TEST(ScanOracle, SerialEqualsParallel) {
  const PartitionSetup s = table_setup(50000, 5150, 10200);
  for (auto problem : {PartitionProblem::maximize, PartitionProblem::equalize}) {
    const OracleResult a = scan_oracle(problem, s, Exec::serial);
    const OracleResult b = scan_oracle(problem, s, Exec::parallel);
    EXPECT_EQ(a.q_opt, b.q_opt);
    EXPECT_EQ(a.objective, b.objective);
  }
}

TEST(ScanOracle, ZeroReserveEndpoint) {
  const PartitionSetup s = table_setup(1000, 120, 215);
  EXPECT_NEAR(prosumer_qos(s, 0.0), std::pow(0.99, 215), 1e-13);
}

TEST(ScanOracle, MaximizeConsensusSignChange) {
  for (const auto& s : {table_setup(1000, 120, 215), table_setup(10000, 1060, 2065)}) {
    const count_t q = scan_oracle(PartitionProblem::maximize, s).q_opt;
    auto diff = [&](count_t x) {
      return binom_pmf(s.m - x + s.t, s.params.n_consumers, s.params.p_surge) - binom_pmf(x, s.t, s.params.p_bad);
    };
    EXPECT_LT(diff(q - 1) * diff(q + 1), 0.0);
  }
}

TEST(RunPartition, SmallScenarioNearTable) {
  const PartitionSetup s = table_setup(1000, 120, 215);
  AimdConfig c;
  c.seed = 7;
  const PartitionResult mx = run_partition(PartitionProblem::maximize, s, c);
  EXPECT_NEAR(mx.trace.q_avg, 7.0, 1.0);
  const PartitionResult eq = run_partition(PartitionProblem::equalize, s, c);
  EXPECT_NEAR(double(eq.q_star), 5.0, 1.0);
  EXPECT_LT(std::fabs(eq.qos.qos_s - eq.qos.qos_b), 0.02);
}

TEST(RunPartition, LargeMaximize) {
  const PartitionSetup s = table_setup(50000, 5150, 10200);
  const PartitionResult r = run_partition(PartitionProblem::maximize, s, AimdConfig{});
  EXPECT_NEAR(double(r.q_star), 133.0, 2.0);
  EXPECT_NEAR(50.0 * (r.qos.qos_s + r.qos.qos_b), 99.09, 0.5);
}

TEST(RunPartition, MidEqualize) {
  const PartitionSetup s = table_setup(10000, 1060, 2065);
  const PartitionResult r = run_partition(PartitionProblem::equalize, s, AimdConfig{});
  EXPECT_NEAR(double(r.q_star), 30.0, 2.0);
}

TEST(RunPartition, QStarIsBestRounding) {
  const PartitionSetup s = table_setup(5000, 545, 1040);
  const PartitionResult r = run_partition(PartitionProblem::maximize, s, AimdConfig{});
  const count_t lo = static_cast<count_t>(std::floor(r.trace.q_avg));
  EXPECT_TRUE(r.q_star == lo || r.q_star == lo + 1);
  EXPECT_GE(partition_objective(PartitionProblem::maximize, s, r.q_star),
            partition_objective(PartitionProblem::maximize, s, r.q_star == lo ? lo + 1 : lo));
}

TEST(RunPartition, SeedsSerialEqualsParallel) {
  const PartitionSetup s = table_setup(1000, 120, 215);
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4};
  AimdConfig c;
  c.max_iterations = 200000;
  const auto a = run_partition_seeds(PartitionProblem::maximize, s, c, seeds, Exec::serial);
  const auto b = run_partition_seeds(PartitionProblem::maximize, s, c, seeds, Exec::parallel);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].q_star, b[i].q_star);
    EXPECT_EQ(a[i].trace.q_avg, b[i].trace.q_avg);
  }
}

TEST(RunPartition, UnconvergedWhenCapped) {
  const PartitionSetup s = table_setup(1000, 120, 215);
  AimdConfig c;
  c.max_iterations = 1000;
  EXPECT_FALSE(run_partition(PartitionProblem::maximize, s, c).converged);
}

TEST(PartitionSetupTest, Validation) {
  EXPECT_THROW(table_setup(100, 101, 10).validate(), ValidationError);
  EXPECT_THROW(table_setup(100, 10, 0).validate(), ValidationError);
  EXPECT_THROW(parse_partition_problem("minimize"), UsageError);
  EXPECT_EQ(parse_partition_problem("equalize"), PartitionProblem::equalize);
}
