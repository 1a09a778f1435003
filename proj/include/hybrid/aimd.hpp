#pragma once

// Two-agent AIMD engine. A consumer agent holds Z (unreserved pool share)
// and a prosumer agent holds Q (reserve). While Z + Q < M both grow by
// alpha; when the sum reaches M a capacity event is broadcast, the running
// averages are updated and each agent backs off to beta * value with its own
// probability. Agents that do not back off hold their state.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "hybrid/qos.hpp"

namespace hybrid {

struct AimdConfig {
  double alpha = 1.0;
  double beta = 0.9995;
  std::optional<double> gamma;  // calibrated at the first capacity event when unset
  std::optional<double> z_init;
  std::optional<double> q_init;
  count_t max_iterations = 2'000'000;
  std::uint64_t seed = 1;
  count_t convergence_window = 50'000;
  double convergence_tol = 1e-4;
  double lambda_min = 1e-4;
  bool record_trace = false;
  // Both agents use the same uniform draw (symmetry experiments).
  bool shared_draw = false;

  void validate() const;
  bool operator==(const AimdConfig&) const = default;
};

// Counter-based uniform generator: the draw for (event, agent) is a pure
// function of the seed, so runs are reproducible and order independent.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}
  double uniform(std::uint64_t event, std::uint32_t agent) const;
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

struct AimdState {
  double z = 0.0;
  double q = 0.0;
  count_t iteration = 0;       // l, number of completed steps
  count_t capacity_count = 0;  // k
  double z_avg = 0.0;
  double q_avg = 0.0;
  bool capacity_event = false;  // whether the last step was one
};

struct BackoffProbabilities {
  double consumer = 0.0;
  double prosumer = 0.0;
};

// Raw backoff rates from the updated averages; the engine scales by gamma
// and clamps into [lambda_min, 1]. Infinite rates mean certain backoff.
using BackoffRule = std::function<BackoffProbabilities(double z_avg, double q_avg)>;

AimdState aimd_step(const AimdState& state, const AimdConfig& config, double m, double gamma,
                    const BackoffRule& raw_rates, const CounterRng& rng);

double clamp_backoff(double gamma, double raw_rate, double lambda_min);

struct TraceRow {
  count_t iter = 0;
  double z = 0.0;
  double q = 0.0;
  bool capacity_event = false;
  double z_avg = 0.0;
  double q_avg = 0.0;
};

struct AimdTrace {
  std::vector<TraceRow> iterations;  // empty unless record_trace
  count_t capacity_count = 0;
  double z_avg = 0.0;
  double q_avg = 0.0;
  std::optional<count_t> converged_at;
  double gamma = 0.0;
};

// Runs until convergence or max_iterations from (z_init, q_init).
AimdTrace aimd_run(const AimdConfig& config, double m, double gamma, const BackoffRule& raw_rates);

// Deterministic state at the first capacity event (no randomness before it).
AimdState first_capacity_event(double z0, double q0, double m, double alpha);

}  // namespace hybrid
