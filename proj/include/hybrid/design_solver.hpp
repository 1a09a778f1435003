#pragma once

// Minimum-cost dimensioning of a hybrid supply scheme: choose the shared
// pool M, prosumer pool T and reserve Q so that all three QoS targets hold
// at the lowest real cost.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hybrid/cost_model.hpp"
#include "hybrid/exec.hpp"
#include "hybrid/qos.hpp"

namespace hybrid {

struct Design {
  count_t m = 0;
  count_t t = 0;
  count_t q = 0;

  bool operator==(const Design&) const = default;
};

struct DesignReport {
  Design design;
  double cost_real = 0.0;
  double cost_per_consumer = 0.0;  // per consumer per year
  QosReport qos;
  int solver_iterations = 0;
  bool oracle_verified = false;
};

struct SolverOpts {
  double optimality_gap = 0.01;
  bool verify_with_oracle = false;
  int multistart = 5;
  // Upper limit on the shared pool besides M <= N (e.g. a fleet budget).
  std::optional<count_t> max_shared_items;

  void validate() const;
  bool operator==(const SolverOpts&) const = default;
};

// All seven constraints, QoS with the exact integer cdf.
bool feasible(const ScenarioParams& params, const Design& d);

// Relaxed solve with the smooth cost, then integer recovery valued at the real cost.
DesignReport solve_min_cost(const ScenarioParams& params, const CostModel& model,
                            const SolverOpts& opts = {});

struct ScanOpts {
  // Largest prosumer pool considered; 0 forces a pure B2C design.
  std::optional<count_t> max_prosumers;
  std::optional<count_t> max_shared_items;
  Exec exec = Exec::parallel;
};

// Exact integer optimum by the structured scan over T.
DesignReport brute_force_design(const ScenarioParams& params, const CostModel& model,
                                const ScanOpts& opts = {});

// Exhaustive scan over every (M, T, Q); O(N^3) cdf-free inner loop, for small N.
DesignReport exhaustive_design(const ScenarioParams& params, const CostModel& model,
                               const ScanOpts& opts = {});

// Real cost and QoS of a given design.
DesignReport evaluate_design(const ScenarioParams& params, const CostModel& model, const Design& d);

struct ApproachCost {
  std::string approach;  // hybrid, pure-b2c, ownership
  Design design;
  double cost_real = 0.0;
  double cost_per_consumer = 0.0;
  QosReport qos;
};

std::vector<ApproachCost> compare_approaches(const ScenarioParams& params, const CostModel& model,
                                             const SolverOpts& opts = {});

struct SweepPoint {
  double x = 0.0;
  bool feasible = false;  // false marks a gap row
  double total_cost = 0.0;
  double cost_per_consumer = 0.0;
  Design design;
};

std::vector<SweepPoint> sweep_cost_vs_qos(const ScenarioParams& params, const CostModel& model,
                                          std::span<const double> qos_grid,
                                          const SolverOpts& opts = {}, Exec exec = Exec::parallel);

std::vector<SweepPoint> sweep_cost_vs_n(const ScenarioParams& params, const CostModel& model,
                                        std::span<const count_t> n_grid,
                                        const SolverOpts& opts = {}, Exec exec = Exec::parallel);

}  // namespace hybrid
