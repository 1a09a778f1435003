#pragma once

// Component costs of a hybrid supply design. The shared pool is bought in
// volume, so its unit cost carries a quantity discount D(M); prosumer access
// is paid per prosumer. The three-term split
//   C(M, T, Q) = f(M - Q) + g(Q) + h(T)
// is kept in CostBreakdown: f and g share the discounted pool unit cost.

#include <string>
#include <string_view>
#include <vector>

#include "hybrid/qos.hpp"

namespace hybrid {

struct DiscountBreakpoint {
  count_t min_quantity = 1;
  double discount = 0.0;

  bool operator==(const DiscountBreakpoint&) const = default;
};

// Piecewise-constant volume discount D_R(m).
class DiscountSchedule {
 public:
  DiscountSchedule() = default;
  explicit DiscountSchedule(std::vector<DiscountBreakpoint> breakpoints);

  void validate() const;

  // Discount of the bracket containing m; 0 below the first breakpoint.
  double at(count_t m) const;
  double max_discount() const;
  // Smallest breakpoint strictly above m, or -1.
  count_t next_breakpoint_above(count_t m) const;

  const std::vector<DiscountBreakpoint>& breakpoints() const { return breakpoints_; }
  bool all_zero() const;

  bool operator==(const DiscountSchedule&) const = default;

 private:
  std::vector<DiscountBreakpoint> breakpoints_;
};

// D_A(m) = A (1 - exp(-B m)).
struct SmoothDiscount {
  double amplitude = 0.0;
  double rate = 1.0;

  double at(double m) const;
  void validate() const;

  bool operator==(const SmoothDiscount&) const = default;
};

enum class FitCriterion { minimax, least_squares };

// Fit D_A to D_R on the integers [1, sample_max]. minimax minimises the
// largest relative error of the discounted unit price (1 - D); least_squares
// minimises the squared discount residuals. Both cap A at max(D_R) + 0.05.
SmoothDiscount fit_smooth_discount(const DiscountSchedule& schedule, count_t sample_max,
                                   FitCriterion criterion = FitCriterion::minimax);

enum class CostVariant { linear, real, approx };

CostVariant parse_cost_variant(std::string_view name);
std::string_view to_string(CostVariant v);

struct CostModel {
  std::string name;
  double per_item_main = 1.0;      // shared item, per horizon
  double per_item_prosumer = 1.0;  // prosumer access, per horizon
  DiscountSchedule discount;
  SmoothDiscount smooth;
  count_t horizon_years = 1;
  count_t fit_range = 1000;

  void validate() const;

  double discount_at(double m, CostVariant v) const;
  // f + g, as a function of the (possibly fractional) pool size.
  double pool_cost(double m, CostVariant v) const;
  // h
  double prosumer_cost(double t) const { return per_item_prosumer * t; }

  bool operator==(const CostModel&) const = default;
};

struct CostBreakdown {
  double unreserved = 0.0;  // f(M - Q)
  double reserve = 0.0;     // g(Q)
  double prosumer = 0.0;    // h(T)
  double total() const { return unreserved + reserve + prosumer; }
};

double discount_real(count_t m, const DiscountSchedule& schedule);

CostBreakdown cost_breakdown(count_t m, count_t t, count_t q, const CostModel& model,
                             CostVariant variant);

double cost_eval(count_t m, count_t t, count_t q, const CostModel& model, CostVariant variant);

// Built-in use-case models.
DiscountSchedule car_discount_schedule();
DiscountSchedule charger_discount_schedule();
CostModel car_mg4_2025();
CostModel charger_dc60_2025();

// Resolves "car-mg4-2025" / "charger-dc60-2025"; throws ValidationError otherwise.
CostModel builtin_cost_model(std::string_view name);

}  // namespace hybrid
