#include "hybrid/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hybrid/errors.hpp"

namespace hybrid {

PartitionProblem parse_partition_problem(std::string_view name) {
  if (name == "maximize") return PartitionProblem::maximize;
  if (name == "equalize") return PartitionProblem::equalize;
  throw UsageError("unknown problem '" + std::string(name) + "' (maximize|equalize)");
}

std::string_view to_string(PartitionProblem p) {
  return p == PartitionProblem::maximize ? "maximize" : "equalize";
}

void PartitionSetup::validate() const {
  params.validate();
  if (m < 1) throw ValidationError("m", "shared pool must be >= 1");
  if (m > params.n_consumers) throw ValidationError("m", "shared pool exceeds the consumer population");
  if (t < 1) throw ValidationError("t", "prosumer pool must be >= 1");
}

double consumer_qos(const PartitionSetup& s, double z) {
  return binom_cdf_cont(z + static_cast<double>(s.t), static_cast<double>(s.params.n_consumers),
                        s.params.p_surge);
}

double prosumer_qos(const PartitionSetup& s, double q) {
  return binom_cdf_cont(q, static_cast<double>(s.t), s.params.p_bad);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inverse_rate(double value, double density) {
  const double d = value * density;
  return d > 0.0 ? 1.0 / d : kInf;
}

}  // namespace

BackoffRule maximize_rule(const PartitionSetup& s) {
  const double n = static_cast<double>(s.params.n_consumers);
  const double t = static_cast<double>(s.t);
  const double ps = s.params.p_surge;
  const double pb = s.params.p_bad;
  return [=](double z_avg, double q_avg) {
    return BackoffProbabilities{inverse_rate(z_avg, binom_pmf_cont(z_avg + t, n, ps)),
                                inverse_rate(q_avg, binom_pmf_cont(q_avg, t, pb))};
  };
}

BackoffRule equalize_rule(const PartitionSetup& s) {
  return [s](double z_avg, double q_avg) {
    return BackoffProbabilities{z_avg > 0.0 ? consumer_qos(s, z_avg) / z_avg : kInf,
                                q_avg > 0.0 ? prosumer_qos(s, q_avg) / q_avg : kInf};
  };
}

namespace {

BackoffRule rule_for(PartitionProblem problem, const PartitionSetup& s) {
  return problem == PartitionProblem::maximize ? maximize_rule(s) : equalize_rule(s);
}

AimdState step_with(PartitionProblem problem, const AimdState& state, const AimdConfig& config,
                    const PartitionSetup& setup, const CounterRng& rng) {
  if (!config.gamma) throw ValidationError("gamma", "must be set for a single step");
  return aimd_step(state, config, static_cast<double>(setup.m), *config.gamma, rule_for(problem, setup), rng);
}

}  // namespace

AimdState aimd_step_maximize(const AimdState& state, const AimdConfig& config,
                             const PartitionSetup& setup, const CounterRng& rng) {
  return step_with(PartitionProblem::maximize, state, config, setup, rng);
}

AimdState aimd_step_equalize(const AimdState& state, const AimdConfig& config,
                             const PartitionSetup& setup, const CounterRng& rng) {
  return step_with(PartitionProblem::equalize, state, config, setup, rng);
}

AimdConfig with_default_start(const AimdConfig& config, const PartitionSetup& setup) {
  AimdConfig out = config;
  const double m = static_cast<double>(setup.m);
  double q0 = config.q_init.value_or(static_cast<double>(setup.t) * setup.params.p_bad + config.alpha);
  double z0 = config.z_init.value_or(m - q0 - config.alpha);
  if (!config.z_init && !config.q_init && z0 <= 0.0) {
    z0 = q0 = 0.5 * std::max(m - config.alpha, 0.5 * m);
  }
  out.z_init = z0;
  out.q_init = q0;
  return out;
}

double default_calibration_target(PartitionProblem problem) {
  return problem == PartitionProblem::maximize ? 0.05 : 0.5;
}

double calibrate_gamma(PartitionProblem problem, const PartitionSetup& setup, const AimdConfig& config) {
  if (config.gamma) return *config.gamma;
  const AimdConfig start = with_default_start(config, setup);
  const AimdState e = first_capacity_event(*start.z_init, *start.q_init, static_cast<double>(setup.m),
                                           start.alpha);
  const BackoffProbabilities raw = rule_for(problem, setup)(e.z, e.q);
  const double top = std::max(raw.consumer, raw.prosumer);
  const double target = default_calibration_target(problem);
  return std::isfinite(top) && top > 0.0 ? target / top : target;
}

double partition_objective(PartitionProblem problem, const PartitionSetup& setup, count_t q) {
  const count_t n = setup.params.n_consumers;
  const double s = binom_cdf(setup.m - q + setup.t, n, setup.params.p_surge);
  const double b = binom_cdf(q, setup.t, setup.params.p_bad);
  return problem == PartitionProblem::maximize ? s + b : -std::fabs(s - b);
}

PartitionResult run_partition(PartitionProblem problem, const PartitionSetup& setup,
                              const AimdConfig& config) {
  setup.validate();
  config.validate();
  const AimdConfig start = with_default_start(config, setup);
  if (!(*start.z_init + *start.q_init < static_cast<double>(setup.m))) {
    throw ValidationError("z_init", "z_init + q_init must be below the shared pool");
  }
  const double gamma = calibrate_gamma(problem, setup, start);

  PartitionResult r;
  r.trace = aimd_run(start, static_cast<double>(setup.m), gamma, rule_for(problem, setup));
  r.converged = r.trace.converged_at.has_value();

  const count_t hi = std::min(setup.m, setup.t);
  const double q_avg = std::clamp(r.trace.q_avg, 0.0, static_cast<double>(hi));
  const auto lo_q = static_cast<count_t>(std::floor(q_avg));
  const auto hi_q = std::min(static_cast<count_t>(std::ceil(q_avg)), hi);
  r.q_star = lo_q;
  if (hi_q != lo_q &&
      partition_objective(problem, setup, hi_q) > partition_objective(problem, setup, lo_q)) {
    r.q_star = hi_q;
  }
  r.qos = qos_all(setup.params, setup.m, setup.t, r.q_star);
  return r;
}

std::vector<PartitionResult> run_partition_seeds(PartitionProblem problem, const PartitionSetup& setup,
                                                 const AimdConfig& config,
                                                 std::span<const std::uint64_t> seeds, Exec exec) {
  std::vector<PartitionResult> out(seeds.size());
  auto one = [&](size_t i) {
    AimdConfig c = config;
    c.seed = seeds[i];
    out[i] = run_partition(problem, setup, c);
  };
  if (exec == Exec::serial) {
    for (size_t i = 0; i < seeds.size(); ++i) one(i);
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (size_t i = 0; i < seeds.size(); ++i) one(i);
  }
  return out;
}

OracleResult scan_oracle(PartitionProblem problem, const PartitionSetup& setup, Exec exec) {
  setup.validate();
  const count_t hi = std::min(setup.m, setup.t);
  std::vector<double> value(static_cast<size_t>(hi + 1));
  if (exec == Exec::serial) {
    for (count_t q = 0; q <= hi; ++q) value[static_cast<size_t>(q)] = partition_objective(problem, setup, q);
  } else {
#pragma omp parallel for schedule(static)
    for (count_t q = 0; q <= hi; ++q) value[static_cast<size_t>(q)] = partition_objective(problem, setup, q);
  }
  const auto best = std::max_element(value.begin(), value.end());  // first maximum: smallest q
  OracleResult r;
  r.q_opt = static_cast<count_t>(best - value.begin());
  r.objective = problem == PartitionProblem::maximize ? *best : -*best;
  return r;
}

}  // namespace hybrid
