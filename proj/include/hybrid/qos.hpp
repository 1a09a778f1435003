#pragma once

// Binomial quality-of-service metrics for the three demand scenarios of a
// hybrid supply scheme:
//
//   ns  non-surge:  X ~ Bin(N, p_ns), served by the whole shared pool M
//   s   surge:      X ~ Bin(N, p_s),  served by M - Q + T items
//   b   bad return: X ~ Bin(T, p_b),  served by the reserve Q
//
// QoS_i = P[X_i <= A_i]. All tails are evaluated through the regularized
// incomplete beta function with a saddle-point pmf prefactor, so nothing
// underflows for populations up to ~1e6.

#include <cstdint>

namespace hybrid {

using count_t = std::int64_t;

struct ScenarioParams {
  count_t n_consumers = 1;
  double p_nonsurge = 0.1;
  double p_surge = 0.3;
  double p_bad = 0.01;
  double qos_target_ns = 0.98;
  double qos_target_s = 0.98;
  double qos_target_b = 0.98;

  // Throws ValidationError naming the offending field.
  void validate() const;

  // Copy with all three targets set to `target`.
  ScenarioParams with_targets(double target) const;

  bool operator==(const ScenarioParams&) const = default;
};

struct QosReport {
  double qos_ns = 0.0;
  double qos_s = 0.0;
  double qos_b = 0.0;
};

/// Regularized incomplete beta I_x(a, b) for a, b > 0, x in [0, 1].
double regularized_beta(double x, double a, double b);

/// Exact binomial pmf P[X = k]; 0 outside [0, n].
double binom_pmf(count_t k, count_t n, double p);

/// P[X <= a] for X ~ Bin(n, p). 1 for a >= n, 0 for a < 0.
double binom_cdf(count_t a, count_t n, double p);

/// P[X > a], computed directly (no cancellation when the cdf is near 1).
double binom_upper_tail(count_t a, count_t n, double p);

/// Continuous extension of the cdf, I_{1-p}(n - x, x + 1). Exact at integer
/// x, non-decreasing, 0 for x <= -1 and 1 for x >= n. `n` may be fractional;
/// the design relaxation treats the prosumer count T as a real.
double binom_cdf_cont(double x, double n, double p);

/// 1 - binom_cdf_cont, evaluated without cancellation.
double binom_upper_tail_cont(double x, double n, double p);

/// Continuous pmf C(n,x) p^x (1-p)^(n-x) via the gamma function; 0 outside [0, n].
double binom_pmf_cont(double x, double n, double p);

/// QoS for a concrete design: A_ns = m, A_s = m - q + t, A_b = q (over t prosumers).
QosReport qos_all(const ScenarioParams& params, count_t m, count_t t, count_t q);

/// Smallest a >= 0 with binom_cdf(a, n, p) >= target.
count_t min_items_for_qos(count_t n, double p, double target);

/// Normal approximation of the reserve: T p_b + y * sqrt(T p_b (1 - p_b)),
/// with y the standard normal quantile at `target_qos_b`.
double normal_approx_reserve(count_t t, double p_b, double target_qos_b);

/// Standard normal quantile.
double normal_quantile(double probability);

}  // namespace hybrid
