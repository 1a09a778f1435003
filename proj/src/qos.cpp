#include "hybrid/qos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

#include "hybrid/errors.hpp"

namespace hybrid {
namespace {

constexpr double kLnSqrt2Pi = 0.918938533204672741780329736406;

void check_probability(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError(std::string(what) + " must lie in (0, 1)");
  }
}

// Stirling remainder: ln Gamma(x+1) - [(x + 1/2) ln x - x + ln sqrt(2 pi)].
double stirling_error(double x) {
  if (x <= 15.0) {
    return std::lgamma(x + 1.0) - (x + 0.5) * std::log(x) + x - kLnSqrt2Pi;
  }
  constexpr double s0 = 1.0 / 12.0;
  constexpr double s1 = 1.0 / 360.0;
  constexpr double s2 = 1.0 / 1260.0;
  constexpr double s3 = 1.0 / 1680.0;
  constexpr double s4 = 1.0 / 1188.0;
  const double xx = x * x;
  if (x > 500.0) return (s0 - s1 / xx) / x;
  if (x > 80.0) return (s0 - (s1 - s2 / xx) / xx) / x;
  if (x > 35.0) return (s0 - (s1 - (s2 - s3 / xx) / xx) / xx) / x;
  return (s0 - (s1 - (s2 - (s3 - s4 / xx) / xx) / xx) / xx) / x;
}

// Deviance term x ln(x / np) + np - x, with a series near x == np.
double deviance(double x, double np) {
  if (std::fabs(x - np) < 0.1 * (x + np)) {
    double v = (x - np) / (x + np);
    double s = (x - np) * v;
    double ej = 2.0 * x * v;
    v *= v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v;
      const double next = s + ej / (2 * j + 1);
      if (next == s) return next;
      s = next;
    }
    return s;
  }
  return x * std::log(x / np) + np - x;
}

// Saddle-point binomial density, valid for real 0 <= x <= n.
double pmf_raw(double x, double n, double p) {
  const double q = 1.0 - p;
  if (x < 0.0 || x > n) return 0.0;
  if (x == 0.0) return n == 0.0 ? 1.0 : std::exp(n * std::log1p(-p));
  if (x == n) return std::exp(n * std::log(p));
  const double lc = stirling_error(n) - stirling_error(x) - stirling_error(n - x) -
                    deviance(x, n * p) - deviance(n - x, n * q);
  const double lf = std::log(2.0 * std::numbers::pi) + std::log(x) + std::log1p(-x / n);
  return std::exp(lc - 0.5 * lf);
}

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 20000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < eps) break;
  }
  return h;
}

struct Tails {
  double lower;  // P[X <= x]
  double upper;  // P[X > x]
};

// Both tails of the continuous binomial cdf at x in (-1, n). Only the tail on
// the convergent side of the continued fraction is computed; the other is
// its complement.
Tails binomial_tails(double x, double n, double p) {
  const double q = 1.0 - p;
  const double a = n - x;  // lower tail is I_q(a, b)
  const double b = x + 1.0;
  // C(n, x) p^(x+1) q^(n-x): prefactor of I_q(n-x, x+1) including the 1/a.
  double front_lower;
  if (x >= 0.0) {
    front_lower = p * pmf_raw(x, n, p);
  } else {
    front_lower = q * pmf_raw(x + 1.0, n, p) * b / a;
  }
  if (q < (a + 1.0) / (a + b + 2.0)) {
    const double lower = std::clamp(front_lower * beta_continued_fraction(a, b, q), 0.0, 1.0);
    return {lower, 1.0 - lower};
  }
  const double front_upper = front_lower * a / b;
  const double upper = std::clamp(front_upper * beta_continued_fraction(b, a, p), 0.0, 1.0);
  return {1.0 - upper, upper};
}

}  // namespace

void ScenarioParams::validate() const {
  if (n_consumers < 1) throw ValidationError("n_consumers", "must be >= 1");
  auto prob = [](const char* name, double v) {
    if (!(v > 0.0 && v < 1.0)) throw ValidationError(name, "probability must lie in (0, 1)");
  };
  prob("p_nonsurge", p_nonsurge);
  prob("p_surge", p_surge);
  prob("p_bad", p_bad);
  auto target = [](const char* name, double v) {
    if (!(v > 0.0 && v <= 1.0)) throw ValidationError(name, "target must lie in (0, 1]");
  };
  target("qos_target_ns", qos_target_ns);
  target("qos_target_s", qos_target_s);
  target("qos_target_b", qos_target_b);
}

ScenarioParams ScenarioParams::with_targets(double target) const {
  ScenarioParams out = *this;
  out.qos_target_ns = out.qos_target_s = out.qos_target_b = target;
  return out;
}

double regularized_beta(double x, double a, double b) {
  if (!(a > 0.0 && b > 0.0)) throw DomainError("regularized_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("regularized_beta: x must lie in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double binom_pmf(count_t k, count_t n, double p) {
  check_probability(p, "p");
  if (n < 0) throw DomainError("n must be >= 0");
  if (k < 0 || k > n) return 0.0;
  return pmf_raw(static_cast<double>(k), static_cast<double>(n), p);
}

double binom_cdf(count_t a, count_t n, double p) {
  check_probability(p, "p");
  if (n < 0) throw DomainError("n must be >= 0");
  if (a < 0) return 0.0;
  if (a >= n) return 1.0;
  return binomial_tails(static_cast<double>(a), static_cast<double>(n), p).lower;
}

double binom_upper_tail(count_t a, count_t n, double p) {
  check_probability(p, "p");
  if (n < 0) throw DomainError("n must be >= 0");
  if (a < 0) return 1.0;
  if (a >= n) return 0.0;
  return binomial_tails(static_cast<double>(a), static_cast<double>(n), p).upper;
}

double binom_cdf_cont(double x, double n, double p) {
  check_probability(p, "p");
  if (!(n >= 0.0)) throw DomainError("n must be >= 0");
  if (x >= n) return 1.0;
  if (x <= -1.0) return 0.0;
  return binomial_tails(x, n, p).lower;
}

double binom_upper_tail_cont(double x, double n, double p) {
  check_probability(p, "p");
  if (!(n >= 0.0)) throw DomainError("n must be >= 0");
  if (x >= n) return 0.0;
  if (x <= -1.0) return 1.0;
  return binomial_tails(x, n, p).upper;
}

double binom_pmf_cont(double x, double n, double p) {
  check_probability(p, "p");
  if (!(n >= 0.0)) throw DomainError("n must be >= 0");
  if (!(x >= 0.0 && x <= n)) return 0.0;
  return pmf_raw(x, n, p);
}

QosReport qos_all(const ScenarioParams& params, count_t m, count_t t, count_t q) {
  if (q < 0 || t < 0 || m < 0) throw DomainError("qos_all: counts must be non-negative");
  if (q > m) throw DomainError("qos_all: reserve q exceeds shared pool m");
  const count_t n = params.n_consumers;
  return {binom_cdf(m, n, params.p_nonsurge),
          binom_cdf(m - q + t, n, params.p_surge),
          binom_cdf(q, t, params.p_bad)};
}

count_t min_items_for_qos(count_t n, double p, double target) {
  check_probability(p, "p");
  if (n < 0) throw DomainError("n must be >= 0");
  if (!(target > 0.0 && target <= 1.0)) throw DomainError("target must lie in (0, 1]");
  count_t lo = 0;
  count_t hi = n;  // binom_cdf(n) == 1 always satisfies
  while (lo < hi) {
    const count_t mid = lo + (hi - lo) / 2;
    if (binom_cdf(mid, n, p) >= target) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  while (lo > 0 && binom_cdf(lo - 1, n, p) >= target) --lo;
  while (binom_cdf(lo, n, p) < target) ++lo;
  return lo;
}

double normal_quantile(double probability) {
  if (!(probability > 0.0 && probability < 1.0)) {
    throw DomainError("normal_quantile: probability must lie in (0, 1)");
  }
  return boost::math::quantile(boost::math::normal_distribution<double>(), probability);
}

double normal_approx_reserve(count_t t, double p_b, double target_qos_b) {
  check_probability(p_b, "p_b");
  if (t < 1) throw DomainError("normal_approx_reserve: t must be >= 1");
  const double mean = static_cast<double>(t) * p_b;
  const double y = normal_quantile(target_qos_b);
  if (y == 0.0) return mean;
  return mean + y * std::sqrt(mean * (1.0 - p_b));
}

}  // namespace hybrid
