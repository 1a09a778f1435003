#pragma once

#include <cmath>
#include <optional>

#include "hybrid/design_solver.hpp"

namespace hybrid::detail {

struct Candidate {
  double cost = 0.0;
  Design d;
  bool valid = false;
};

// Lower real cost wins; near-ties go to smaller M, then T, then Q.
inline bool better(const Candidate& a, const Candidate& b) {
  if (!a.valid) return false;
  if (!b.valid) return true;
  const double tol = 1e-9 * std::max(std::fabs(a.cost), std::fabs(b.cost));
  if (a.cost < b.cost - tol) return true;
  if (a.cost > b.cost + tol) return false;
  if (a.d.m != b.d.m) return a.d.m < b.d.m;
  if (a.d.t != b.d.t) return a.d.t < b.d.t;
  return a.d.q < b.d.q;
}

struct Limits {
  count_t min_m_ns = 0;  // smallest M meeting the non-surge target
  count_t min_a_s = 0;   // smallest M - Q + T meeting the surge target
  count_t m_cap = 0;
  count_t t_cap = 0;
};

Limits design_limits(const ScenarioParams& params, std::optional<count_t> max_shared_items,
                     std::optional<count_t> max_prosumers);

// Smallest reserve meeting the bad-return target for t prosumers.
count_t min_reserve(count_t t, const ScenarioParams& params);

}  // namespace hybrid::detail
