#pragma once

// Best-effort partition of a fixed shared pool M between the unreserved
// share Z = M - Q and the prosumer reserve Q, either maximising
// QoS_s + QoS_b or equalising the two.

#include <span>
#include <string_view>
#include <vector>

#include "hybrid/aimd.hpp"
#include "hybrid/exec.hpp"
#include "hybrid/qos.hpp"

namespace hybrid {

enum class PartitionProblem { maximize, equalize };

PartitionProblem parse_partition_problem(std::string_view name);
std::string_view to_string(PartitionProblem p);

struct PartitionSetup {
  ScenarioParams params;
  count_t m = 0;
  count_t t = 0;

  void validate() const;
};

// QoS_s(z) = P[X_s <= z + T] and QoS_b(q) = P[X_b <= q] on the continuous extension.
double consumer_qos(const PartitionSetup& s, double z);
double prosumer_qos(const PartitionSetup& s, double q);

BackoffRule maximize_rule(const PartitionSetup& s);
BackoffRule equalize_rule(const PartitionSetup& s);

// One step of the respective algorithm; config.gamma must be set.
AimdState aimd_step_maximize(const AimdState& state, const AimdConfig& config,
                             const PartitionSetup& setup, const CounterRng& rng);
AimdState aimd_step_equalize(const AimdState& state, const AimdConfig& config,
                             const PartitionSetup& setup, const CounterRng& rng);

// Default start: Q at the prosumers' mean demand plus alpha, Z one alpha
// below filling the pool.
AimdConfig with_default_start(const AimdConfig& config, const PartitionSetup& setup);

// Gamma giving the larger backoff probability `target_lambda` at the first
// capacity event (0.05 maximising, 0.5 equalising unless given).
double calibrate_gamma(PartitionProblem problem, const PartitionSetup& setup, const AimdConfig& config);
double default_calibration_target(PartitionProblem problem);

// Exact objective at integer q: QoS_s + QoS_b, or -|QoS_s - QoS_b|.
double partition_objective(PartitionProblem problem, const PartitionSetup& setup, count_t q);

struct PartitionResult {
  AimdTrace trace;
  count_t q_star = 0;
  QosReport qos;
  bool converged = false;
};

PartitionResult run_partition(PartitionProblem problem, const PartitionSetup& setup,
                              const AimdConfig& config);

// One run per seed, concurrently when exec is parallel.
std::vector<PartitionResult> run_partition_seeds(PartitionProblem problem, const PartitionSetup& setup,
                                                 const AimdConfig& config,
                                                 std::span<const std::uint64_t> seeds,
                                                 Exec exec = Exec::parallel);

struct OracleResult {
  count_t q_opt = 0;
  double objective = 0.0;  // QoS_s + QoS_b, or |QoS_s - QoS_b|
};

// Centralised scan over q in [0, min(M, T)]; ties go to smaller q.
OracleResult scan_oracle(PartitionProblem problem, const PartitionSetup& setup,
                         Exec exec = Exec::parallel);

}  // namespace hybrid
