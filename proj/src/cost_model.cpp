#include "hybrid/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hybrid/errors.hpp"

namespace hybrid {
namespace {

constexpr double kGolden = 0.6180339887498949;

template <class F>
double golden_minimise(F&& f, double lo, double hi, double tol) {
  double a = lo;
  double b = hi;
  double c = b - kGolden * (b - a);
  double d = a + kGolden * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (std::fabs(b - a) > tol * (1.0 + std::fabs(a) + std::fabs(b))) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

struct FitSamples {
  std::vector<double> m;
  std::vector<double> d;
  std::vector<double> weight;  // 1 / (1 - d): relative error of the unit price
};

FitSamples sample_schedule(const DiscountSchedule& schedule, count_t sample_max) {
  FitSamples s;
  s.m.reserve(static_cast<size_t>(sample_max));
  for (count_t m = 1; m <= sample_max; ++m) {
    const double d = schedule.at(m);
    s.m.push_back(static_cast<double>(m));
    s.d.push_back(d);
    s.weight.push_back(1.0 / (1.0 - d));
  }
  return s;
}

// Least-squares amplitude for a fixed rate (linear in A), clamped to [0, cap].
double ls_amplitude(const FitSamples& s, double rate, double cap) {
  double num = 0.0;
  double den = 0.0;
  for (size_t i = 0; i < s.m.size(); ++i) {
    const double phi = -std::expm1(-rate * s.m[i]);
    num += phi * s.d[i];
    den += phi * phi;
  }
  return den > 0.0 ? std::clamp(num / den, 0.0, cap) : 0.0;
}

double ls_error(const FitSamples& s, double amplitude, double rate) {
  double sse = 0.0;
  for (size_t i = 0; i < s.m.size(); ++i) {
    const double r = amplitude * -std::expm1(-rate * s.m[i]) - s.d[i];
    sse += r * r;
  }
  return sse;
}

double max_rel_error(const FitSamples& s, double amplitude, double rate) {
  double worst = 0.0;
  for (size_t i = 0; i < s.m.size(); ++i) {
    const double r = amplitude * -std::expm1(-rate * s.m[i]) - s.d[i];
    worst = std::max(worst, std::fabs(r) * s.weight[i]);
  }
  return worst;
}

// max_i w_i |A phi_i - d_i| is convex in A.
double minimax_amplitude(const FitSamples& s, double rate, double cap) {
  return golden_minimise([&](double a) { return max_rel_error(s, a, rate); }, 0.0, cap, 1e-10);
}

// Grid scan over log(rate) then golden refinement around the best cell.
template <class Objective>
double search_log_rate(Objective&& objective) {
  constexpr double lo = -14.0;  // ln 1e-6
  constexpr double hi = 2.3;    // ln 10
  constexpr int cells = 300;
  const double step = (hi - lo) / cells;
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= cells; ++i) {
    const double v = objective(lo + i * step);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a = lo + std::max(0, best - 1) * step;
  const double b = lo + std::min(cells, best + 1) * step;
  return golden_minimise(objective, a, b, 1e-7);
}

}  // namespace

DiscountSchedule::DiscountSchedule(std::vector<DiscountBreakpoint> breakpoints)
    : breakpoints_(std::move(breakpoints)) {
  validate();
}

void DiscountSchedule::validate() const {
  if (breakpoints_.empty()) throw ValidationError("discount", "schedule has no breakpoints");
  if (breakpoints_.front().min_quantity != 1) {
    throw ValidationError("discount", "first breakpoint must start at quantity 1");
  }
  for (size_t i = 0; i < breakpoints_.size(); ++i) {
    const auto& bp = breakpoints_[i];
    if (!(bp.discount >= 0.0 && bp.discount < 1.0)) {
      throw ValidationError("discount", "discount fraction must lie in [0, 1)");
    }
    if (i > 0) {
      if (bp.min_quantity <= breakpoints_[i - 1].min_quantity) {
        throw ValidationError("discount", "breakpoint quantities must be strictly increasing");
      }
      if (bp.discount < breakpoints_[i - 1].discount) {
        throw ValidationError("discount", "discounts must be non-decreasing");
      }
    }
  }
}

double DiscountSchedule::at(count_t m) const {
  double d = 0.0;
  for (const auto& bp : breakpoints_) {
    if (m < bp.min_quantity) break;
    d = bp.discount;
  }
  return d;
}

double DiscountSchedule::max_discount() const {
  return breakpoints_.empty() ? 0.0 : breakpoints_.back().discount;
}

count_t DiscountSchedule::next_breakpoint_above(count_t m) const {
  for (const auto& bp : breakpoints_) {
    if (bp.min_quantity > m) return bp.min_quantity;
  }
  return -1;
}

bool DiscountSchedule::all_zero() const {
  return std::all_of(breakpoints_.begin(), breakpoints_.end(),
                     [](const DiscountBreakpoint& bp) { return bp.discount == 0.0; });
}

double SmoothDiscount::at(double m) const { return amplitude * -std::expm1(-rate * m); }

void SmoothDiscount::validate() const {
  if (!(amplitude >= 0.0 && amplitude < 1.0)) {
    throw ValidationError("smooth_amplitude", "must lie in [0, 1)");
  }
  if (!(rate > 0.0)) throw ValidationError("smooth_rate", "must be > 0");
}

SmoothDiscount fit_smooth_discount(const DiscountSchedule& schedule, count_t sample_max,
                                   FitCriterion criterion) {
  schedule.validate();
  if (schedule.all_zero()) return {0.0, 1.0};
  if (sample_max < 1) throw DomainError("fit_smooth_discount: sample_max must be >= 1");

  const FitSamples s = sample_schedule(schedule, sample_max);
  const double cap = std::min(schedule.max_discount() + 0.05, 0.999);

  const double ls_log_rate = search_log_rate([&](double lr) {
    const double rate = std::exp(lr);
    return ls_error(s, ls_amplitude(s, rate, cap), rate);
  });
  SmoothDiscount fit{ls_amplitude(s, std::exp(ls_log_rate), cap), std::exp(ls_log_rate)};
  if (criterion == FitCriterion::least_squares) return fit;

  const double mm_log_rate = search_log_rate([&](double lr) {
    const double rate = std::exp(lr);
    return max_rel_error(s, minimax_amplitude(s, rate, cap), rate);
  });
  SmoothDiscount mm{minimax_amplitude(s, std::exp(mm_log_rate), cap), std::exp(mm_log_rate)};
  // Alternate the two coordinates until the error stops moving.
  double err = max_rel_error(s, mm.amplitude, mm.rate);
  for (int pass = 0; pass < 20; ++pass) {
    const double lr = golden_minimise(
        [&](double x) { return max_rel_error(s, mm.amplitude, std::exp(x)); },
        std::log(mm.rate) - 0.5, std::log(mm.rate) + 0.5, 1e-9);
    mm.rate = std::exp(lr);
    mm.amplitude = minimax_amplitude(s, mm.rate, cap);
    const double next = max_rel_error(s, mm.amplitude, mm.rate);
    if (std::fabs(err - next) <= 1e-6 * err) {
      err = next;
      break;
    }
    err = next;
  }
  return err <= max_rel_error(s, fit.amplitude, fit.rate) ? mm : fit;
}

CostVariant parse_cost_variant(std::string_view name) {
  if (name == "linear") return CostVariant::linear;
  if (name == "real") return CostVariant::real;
  if (name == "approx") return CostVariant::approx;
  throw UsageError("unknown cost variant '" + std::string(name) + "' (linear|real|approx)");
}

std::string_view to_string(CostVariant v) {
  switch (v) {
    case CostVariant::linear: return "linear";
    case CostVariant::real: return "real";
    case CostVariant::approx: return "approx";
  }
  return "?";
}

void CostModel::validate() const {
  if (!(per_item_main > 0.0)) throw ValidationError("per_item_main", "must be > 0");
  if (!(per_item_prosumer > 0.0)) throw ValidationError("per_item_prosumer", "must be > 0");
  if (horizon_years < 1) throw ValidationError("horizon_years", "must be >= 1");
  if (fit_range < 1) throw ValidationError("fit_range", "must be >= 1");
  discount.validate();
  smooth.validate();
}

double CostModel::discount_at(double m, CostVariant v) const {
  switch (v) {
    case CostVariant::linear: return 0.0;
    case CostVariant::real: return discount.at(static_cast<count_t>(std::floor(m)));
    case CostVariant::approx: return smooth.at(m);
  }
  return 0.0;
}

double CostModel::pool_cost(double m, CostVariant v) const {
  return per_item_main * (1.0 - discount_at(m, v)) * m;
}

double discount_real(count_t m, const DiscountSchedule& schedule) {
  if (m < 0) throw DomainError("discount_real: m must be >= 0");
  return schedule.at(m);
}

CostBreakdown cost_breakdown(count_t m, count_t t, count_t q, const CostModel& model,
                             CostVariant variant) {
  if (q < 0 || t < 0 || m < q) throw DomainError("cost_eval: requires m >= q >= 0 and t >= 0");
  const double unit = model.per_item_main * (1.0 - model.discount_at(static_cast<double>(m), variant));
  return {unit * static_cast<double>(m - q), unit * static_cast<double>(q),
          model.prosumer_cost(static_cast<double>(t))};
}

double cost_eval(count_t m, count_t t, count_t q, const CostModel& model, CostVariant variant) {
  return cost_breakdown(m, t, q, model, variant).total();
}

DiscountSchedule car_discount_schedule() {
  return DiscountSchedule({{1, 0.00}, {10, 0.03}, {50, 0.05}, {100, 0.10},
                           {200, 0.15}, {500, 0.20}, {1000, 0.25}});
}

DiscountSchedule charger_discount_schedule() {
  return DiscountSchedule({{1, 0.00}, {10, 0.05}, {20, 0.10}, {50, 0.15}, {100, 0.20}, {200, 0.25}});
}

CostModel car_mg4_2025() {
  static const CostModel model = [] {
    CostModel m;
    m.name = "car-mg4-2025";
    m.per_item_main = 6500.0;           // renewal 5400 + insurance 654 + parking 372 + service 72
    m.per_item_prosumer = 12.0 * 200.0;  // per year
    m.discount = car_discount_schedule();
    m.horizon_years = 1;
    m.fit_range = 1500;
    m.smooth = fit_smooth_discount(m.discount, m.fit_range);
    return m;
  }();
  return model;
}

CostModel charger_dc60_2025() {
  static const CostModel model = [] {
    CostModel m;
    m.name = "charger-dc60-2025";
    m.per_item_main = 20000.0 + 10.0 * 648.0;  // purchase + ten years of maintenance
    m.per_item_prosumer = 10.0 * 12.0 * 20.0;
    m.discount = charger_discount_schedule();
    m.horizon_years = 10;
    m.fit_range = 400;
    m.smooth = fit_smooth_discount(m.discount, m.fit_range);
    return m;
  }();
  return model;
}

CostModel builtin_cost_model(std::string_view name) {
  if (name == "car-mg4-2025") return car_mg4_2025();
  if (name == "charger-dc60-2025") return charger_dc60_2025();
  throw ValidationError("cost_model", "unknown built-in cost model '" + std::string(name) + "'");
}

}  // namespace hybrid
