#include "hybrid/aimd.hpp"

#include <algorithm>
#include <cmath>

#include "hybrid/errors.hpp"

namespace hybrid {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void AimdConfig::validate() const {
  if (!(alpha > 0.0)) throw ValidationError("alpha", "must be > 0");
  if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("beta", "must lie in (0, 1)");
  if (gamma && !(*gamma >= 0.0)) throw ValidationError("gamma", "must be >= 0");
  if (z_init && !(*z_init >= 0.0)) throw ValidationError("z_init", "must be >= 0");
  if (q_init && !(*q_init >= 0.0)) throw ValidationError("q_init", "must be >= 0");
  if (max_iterations < 1) throw ValidationError("max_iterations", "must be >= 1");
  if (convergence_window < 1) throw ValidationError("convergence_window", "must be >= 1");
  if (!(convergence_tol > 0.0)) throw ValidationError("convergence_tol", "must be > 0");
  if (!(lambda_min >= 0.0 && lambda_min <= 1.0)) throw ValidationError("lambda_min", "must lie in [0, 1]");
}

double CounterRng::uniform(std::uint64_t event, std::uint32_t agent) const {
  const std::uint64_t h = splitmix64(splitmix64(seed_) ^ (event * 2 + agent));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double clamp_backoff(double gamma, double raw_rate, double lambda_min) {
  if (gamma == 0.0) return lambda_min;
  const double v = gamma * raw_rate;
  if (!std::isfinite(v)) return 1.0;
  return std::clamp(v, lambda_min, 1.0);
}

AimdState aimd_step(const AimdState& state, const AimdConfig& config, double m, double gamma,
                    const BackoffRule& raw_rates, const CounterRng& rng) {
  AimdState next = state;
  next.iteration = state.iteration + 1;
  next.capacity_event = false;
  if (state.z + state.q < m) {
    next.z += config.alpha;
    next.q += config.alpha;
    return next;
  }
  next.capacity_event = true;
  const count_t k = state.capacity_count + 1;
  next.capacity_count = k;
  const double kd = static_cast<double>(k);
  next.z_avg = state.z_avg + (state.z - state.z_avg) / kd;
  next.q_avg = state.q_avg + (state.q - state.q_avg) / kd;

  const BackoffProbabilities raw = raw_rates(next.z_avg, next.q_avg);
  const double lc = clamp_backoff(gamma, raw.consumer, config.lambda_min);
  const double lp = clamp_backoff(gamma, raw.prosumer, config.lambda_min);
  const auto event = static_cast<std::uint64_t>(k);
  const double uc = rng.uniform(event, 0);
  const double up = config.shared_draw ? uc : rng.uniform(event, 1);
  if (uc < lc) next.z = config.beta * state.z;
  if (up < lp) next.q = config.beta * state.q;
  return next;
}

AimdState first_capacity_event(double z0, double q0, double m, double alpha) {
  AimdState s;
  s.z = z0;
  s.q = q0;
  const double gap = m - z0 - q0;
  if (gap > 0.0) {
    const double j = std::ceil(gap / (2.0 * alpha));
    s.z += j * alpha;
    s.q += j * alpha;
    // Guard against rounding leaving the sum a hair below m.
    while (s.z + s.q < m) {
      s.z += alpha;
      s.q += alpha;
    }
  }
  return s;
}

AimdTrace aimd_run(const AimdConfig& config, double m, double gamma, const BackoffRule& raw_rates) {
  config.validate();
  if (!config.z_init || !config.q_init) throw ValidationError("z_init", "initial state must be set");
  if (!(gamma >= 0.0)) throw ValidationError("gamma", "must be >= 0");

  const CounterRng rng(config.seed);
  AimdState s;
  s.z = *config.z_init;
  s.q = *config.q_init;
  AimdTrace trace;
  trace.gamma = gamma;
  if (config.record_trace) trace.iterations.reserve(static_cast<size_t>(std::min<count_t>(config.max_iterations, 1 << 22)));

  const count_t window = config.convergence_window;
  double z_mark = 0.0;
  double q_mark = 0.0;
  while (s.iteration < config.max_iterations) {
    const AimdState next = aimd_step(s, config, m, gamma, raw_rates, rng);
    if (config.record_trace) {
      trace.iterations.push_back({next.iteration, s.z, s.q, next.capacity_event, next.z_avg, next.q_avg});
    }
    s = next;
    if (s.capacity_event && s.capacity_count % window == 0) {
      const bool settled = s.capacity_count > window &&
                           std::fabs(s.z_avg - z_mark) <= config.convergence_tol * std::fabs(z_mark) &&
                           std::fabs(s.q_avg - q_mark) <= config.convergence_tol * std::fabs(q_mark);
      if (settled) {
        trace.converged_at = s.iteration;
        break;
      }
      z_mark = s.z_avg;
      q_mark = s.q_avg;
    }
  }
  trace.capacity_count = s.capacity_count;
  trace.z_avg = s.z_avg;
  trace.q_avg = s.q_avg;
  return trace;
}

}  // namespace hybrid
