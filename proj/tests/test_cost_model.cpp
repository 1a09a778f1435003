#include <cmath>

#include <gtest/gtest.h>

#include "hybrid/cost_model.hpp"
#include "hybrid/errors.hpp"

using namespace hybrid;

namespace {

// Plain least-squares fit by dense grid over (A, B), independent of the library search.
SmoothDiscount grid_least_squares(const DiscountSchedule& s, count_t range) {
  SmoothDiscount best;
  double best_err = INFINITY;
  for (double a = 0.0; a <= 0.4; a += 0.002) {
    for (double lb = -9.0; lb <= 0.0; lb += 0.02) {
      const double b = std::exp(lb);
      double err = 0.0;
      for (count_t m = 1; m <= range; ++m) {
        const double r = a * (1.0 - std::exp(-b * m)) - s.at(m);
        err += r * r;
      }
      if (err < best_err) {
        best_err = err;
        best = {a, b};
      }
    }
  }
  return best;
}

}  // namespace

TEST(DiscountReal, CarSchedule) {
  const auto s = car_discount_schedule();
  EXPECT_EQ(discount_real(5, s), 0.0);
  EXPECT_EQ(discount_real(120, s), 0.10);
  EXPECT_EQ(discount_real(9, s), 0.0);
  EXPECT_EQ(discount_real(10, s), 0.03);
  EXPECT_EQ(discount_real(999, s), 0.20);
  EXPECT_EQ(discount_real(1000, s), 0.25);
  EXPECT_EQ(discount_real(100000, s), 0.25);
}

TEST(DiscountReal, ChargerSchedule) {
  const auto s = charger_discount_schedule();
  EXPECT_EQ(discount_real(10, s), 0.05);
  EXPECT_EQ(discount_real(19, s), 0.05);
  EXPECT_EQ(discount_real(200, s), 0.25);
}

TEST(DiscountReal, RejectsNegative) { EXPECT_THROW(discount_real(-1, car_discount_schedule()), DomainError); }

TEST(DiscountSchedule, ValidatesShape) {
  EXPECT_THROW(DiscountSchedule(std::vector<DiscountBreakpoint>{}), ValidationError);
  EXPECT_THROW(DiscountSchedule({{2, 0.0}}), ValidationError);
  EXPECT_THROW(DiscountSchedule({{1, 0.0}, {5, 1.0}}), ValidationError);
  EXPECT_THROW(DiscountSchedule({{1, 0.1}, {5, 0.05}}), ValidationError);
  EXPECT_THROW(DiscountSchedule({{1, 0.0}, {5, 0.1}, {5, 0.2}}), ValidationError);
}

TEST(DiscountSchedule, NextBreakpoint) {
  const auto s = car_discount_schedule();
  EXPECT_EQ(s.next_breakpoint_above(1), 10);
  EXPECT_EQ(s.next_breakpoint_above(120), 200);
  EXPECT_EQ(s.next_breakpoint_above(1000), -1);
}

TEST(SmoothFit, AllZeroScheduleIsDegenerate) {
  const SmoothDiscount d = fit_smooth_discount(DiscountSchedule({{1, 0.0}, {10, 0.0}}), 100);
  EXPECT_EQ(d.amplitude, 0.0);
  EXPECT_EQ(d.rate, 1.0);
  EXPECT_EQ(d.at(50.0), 0.0);
}

TEST(SmoothFit, CarAmplitudeNearMaximumDiscount) {
  const SmoothDiscount d = fit_smooth_discount(car_discount_schedule(), 1500);
  EXPECT_NEAR(d.amplitude, 0.25, 0.05);
  EXPECT_EQ(d.at(0.0), 0.0);
}

TEST(SmoothFit, LeastSquaresMatchesGridOracle) {
  for (auto [schedule, range] : {std::pair{car_discount_schedule(), count_t{1500}},
                                 std::pair{charger_discount_schedule(), count_t{400}}}) {
    const SmoothDiscount fit = fit_smooth_discount(schedule, range, FitCriterion::least_squares);
    const SmoothDiscount grid = grid_least_squares(schedule, range);
    EXPECT_NEAR(fit.amplitude, grid.amplitude, 0.005);
    EXPECT_NEAR(std::log(fit.rate), std::log(grid.rate), 0.05);
  }
}

TEST(SmoothFit, MinimaxNoWorseThanLeastSquaresOnWorstCase) {
  const auto s = charger_discount_schedule();
  const SmoothDiscount mm = fit_smooth_discount(s, 400, FitCriterion::minimax);
  const SmoothDiscount ls = fit_smooth_discount(s, 400, FitCriterion::least_squares);
  auto worst = [&](const SmoothDiscount& d) {
    double w = 0.0;
    for (count_t m = 1; m <= 400; ++m) w = std::max(w, std::fabs(d.at(double(m)) - s.at(m)) / (1.0 - s.at(m)));
    return w;
  };
  EXPECT_LE(worst(mm), worst(ls) + 1e-12);
}

TEST(CostEval, CarTableRow) {
  EXPECT_DOUBLE_EQ(cost_eval(120, 216, 6, car_mg4_2025(), CostVariant::real), 6500.0 * 0.9 * 120 + 2400.0 * 216);
  EXPECT_DOUBLE_EQ(cost_eval(120, 216, 6, car_mg4_2025(), CostVariant::real), 1220400.0);
}

TEST(CostEval, ChargerTableRow) {
  EXPECT_NEAR(cost_eval(10, 14, 1, charger_dc60_2025(), CostVariant::real), 285160.0, 1e-6);
}

TEST(CostEval, ZeroDesignIsFree) {
  for (auto v : {CostVariant::linear, CostVariant::real, CostVariant::approx}) {
    EXPECT_EQ(cost_eval(0, 0, 0, car_mg4_2025(), v), 0.0);
    EXPECT_EQ(cost_eval(0, 0, 0, charger_dc60_2025(), v), 0.0);
  }
}

TEST(CostEval, BreakdownSumsToTotal) {
  const CostBreakdown b = cost_breakdown(120, 216, 6, car_mg4_2025(), CostVariant::real);
  EXPECT_DOUBLE_EQ(b.unreserved, 6500.0 * 0.9 * 114);
  EXPECT_DOUBLE_EQ(b.reserve, 6500.0 * 0.9 * 6);
  EXPECT_DOUBLE_EQ(b.prosumer, 2400.0 * 216);
  EXPECT_DOUBLE_EQ(b.total(), cost_eval(120, 216, 6, car_mg4_2025(), CostVariant::real));
}

TEST(CostEval, RejectsBadDesign) {
  EXPECT_THROW(cost_eval(3, 1, 4, car_mg4_2025(), CostVariant::real), DomainError);
  EXPECT_THROW(cost_eval(3, -1, 0, car_mg4_2025(), CostVariant::real), DomainError);
}

TEST(CostVariantName, RoundTrip) {
  for (auto v : {CostVariant::linear, CostVariant::real, CostVariant::approx}) {
    EXPECT_EQ(parse_cost_variant(to_string(v)), v);
  }
  EXPECT_THROW(parse_cost_variant("cheap"), UsageError);
}

TEST(CostProperties, RealNeverAboveLinear) {
  for (const CostModel& model : {car_mg4_2025(), charger_dc60_2025()}) {
    for (count_t m = 0; m <= 6000; m += 7) {
      for (count_t t : {0, 13, 500}) {
        EXPECT_LE(cost_eval(m, t, 0, model, CostVariant::real), cost_eval(m, t, 0, model, CostVariant::linear));
      }
    }
  }
}

TEST(CostProperties, StrictlyIncreasingInTAndWithinBrackets) {
  for (const CostModel& model : {car_mg4_2025(), charger_dc60_2025()}) {
    for (auto v : {CostVariant::linear, CostVariant::real, CostVariant::approx}) {
      for (count_t m = 1; m < 6000; m += 3) {
        EXPECT_LT(cost_eval(m, 10, 0, model, v), cost_eval(m, 11, 0, model, v));
        // Step discounts drop the price at a breakpoint, so compare inside a bracket only.
        if (v != CostVariant::real || model.discount.at(m) == model.discount.at(m + 1)) {
          EXPECT_LT(cost_eval(m, 10, 0, model, v), cost_eval(m + 1, 10, 0, model, v)) << model.name << ' ' << m;
        }
      }
    }
  }
}

TEST(CostProperties, ApproxTracksReal) {
  for (const CostModel& model : {car_mg4_2025(), charger_dc60_2025()}) {
    double worst = 0.0;
    for (count_t m = 1; m <= 6000; ++m) {
      const double real = cost_eval(m, 0, 0, model, CostVariant::real);
      const double approx = cost_eval(m, 0, 0, model, CostVariant::approx);
      worst = std::max(worst, std::fabs(approx - real) / real);
    }
    EXPECT_LE(worst, 0.05) << model.name;
  }
}

TEST(CostProperties, ApproxConcaveBelowInflection) {
  for (const CostModel& model : {car_mg4_2025(), charger_dc60_2025()}) {
    const double inflection = 2.0 / model.smooth.rate;
    auto f = [&](double m) { return model.pool_cost(m, CostVariant::approx); };
    for (double m = 2.0; m + 1.0 < inflection; m += 1.0) {
      EXPECT_LE(f(m + 1) - 2 * f(m) + f(m - 1), 1e-9) << model.name << ' ' << m;
    }
    // Beyond 2/B the exponential form turns convex.
    const double m = 3.0 * inflection;
    EXPECT_GT(f(m + 1) - 2 * f(m) + f(m - 1), 0.0) << model.name;
  }
}

TEST(BuiltinModels, Parameters) {
  const CostModel car = builtin_cost_model("car-mg4-2025");
  EXPECT_EQ(car.per_item_main, 6500.0);
  EXPECT_EQ(car.per_item_prosumer, 2400.0);
  EXPECT_EQ(car.horizon_years, 1);
  const CostModel charger = builtin_cost_model("charger-dc60-2025");
  EXPECT_EQ(charger.per_item_main, 26480.0);
  EXPECT_EQ(charger.per_item_prosumer, 2400.0);
  EXPECT_EQ(charger.horizon_years, 10);
  EXPECT_THROW(builtin_cost_model("bike"), ValidationError);
}
