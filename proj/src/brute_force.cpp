#include <algorithm>
#include <vector>

#include <omp.h>

#include "design_internal.hpp"
#include "hybrid/errors.hpp"

namespace hybrid {
namespace detail {

Limits design_limits(const ScenarioParams& params, std::optional<count_t> max_shared_items,
                     std::optional<count_t> max_prosumers) {
  params.validate();
  const count_t n = params.n_consumers;
  Limits lim;
  lim.min_m_ns = min_items_for_qos(n, params.p_nonsurge, params.qos_target_ns);
  lim.min_a_s = min_items_for_qos(n, params.p_surge, params.qos_target_s);
  lim.m_cap = std::min(n, max_shared_items.value_or(n));
  lim.t_cap = std::min(n, max_prosumers.value_or(n));
  if (lim.m_cap < 0 || lim.t_cap < 0) throw DomainError("design limits must be non-negative");
  if (lim.min_m_ns > lim.m_cap) {
    throw InfeasibleError("qos_ns", "non-surge target needs " + std::to_string(lim.min_m_ns) +
                                        " shared items but at most " + std::to_string(lim.m_cap) +
                                        " are allowed");
  }
  return lim;
}

count_t min_reserve(count_t t, const ScenarioParams& params) {
  return t == 0 ? 0 : min_items_for_qos(t, params.p_bad, params.qos_target_b);
}

}  // namespace detail

namespace {

using detail::Candidate;

// The real cost depends on (M, T) only and, for fixed T, is increasing in M
// inside each discount bracket. The scan is exact under that structure.
bool structured_scan_applies(const CostModel& model) {
  if (!(model.per_item_main > 0.0 && model.per_item_prosumer > 0.0)) return false;
  for (const auto& bp : model.discount.breakpoints()) {
    if (!(bp.discount >= 0.0 && bp.discount < 1.0)) return false;
  }
  return true;
}

// Best design over T in [t_begin, t_end).
Candidate scan_t_range(const ScenarioParams& params, const CostModel& model,
                       const detail::Limits& lim, count_t t_begin, count_t t_end) {
  const count_t n = params.n_consumers;
  Candidate best;
  count_t qmin = detail::min_reserve(t_begin, params);
  for (count_t t = t_begin; t < t_end; ++t) {
    // The reserve requirement never shrinks as T grows.
    while (t > 0 && binom_cdf(qmin, t, params.p_bad) < params.qos_target_b) ++qmin;
    const count_t m_lo = std::max({lim.min_m_ns, lim.min_a_s - t + qmin, qmin});
    auto consider = [&](count_t m) {
      if (m > lim.m_cap) return;
      const count_t q = std::max(qmin, m + t - n);
      if (q > m || q > t) return;
      const Candidate c{cost_eval(m, t, q, model, CostVariant::real), {m, t, q}, true};
      if (detail::better(c, best)) best = c;
    };
    consider(m_lo);
    for (count_t bp = model.discount.next_breakpoint_above(m_lo); bp > 0 && bp <= lim.m_cap;
         bp = model.discount.next_breakpoint_above(bp)) {
      consider(bp);
    }
  }
  return best;
}

Candidate scan_structured(const ScenarioParams& params, const CostModel& model,
                          const detail::Limits& lim, Exec exec) {
  const count_t t_end = lim.t_cap + 1;
  if (exec == Exec::serial) return scan_t_range(params, model, lim, 0, t_end);

  const int chunks = std::max(1, omp_get_max_threads() * 4);
  std::vector<Candidate> partial(static_cast<size_t>(chunks));
#pragma omp parallel for schedule(dynamic, 1)
  for (int c = 0; c < chunks; ++c) {
    const count_t lo = t_end * c / chunks;
    const count_t hi = t_end * (c + 1) / chunks;
    if (lo < hi) partial[static_cast<size_t>(c)] = scan_t_range(params, model, lim, lo, hi);
  }
  Candidate best;
  for (const auto& c : partial) {
    if (detail::better(c, best)) best = c;
  }
  return best;
}

Candidate scan_exhaustive(const ScenarioParams& params, const CostModel& model,
                          const detail::Limits& lim, Exec exec) {
  const count_t n = params.n_consumers;
  std::vector<count_t> qmin(static_cast<size_t>(lim.t_cap + 1));
  for (count_t t = 0; t <= lim.t_cap; ++t) qmin[static_cast<size_t>(t)] = detail::min_reserve(t, params);

  const count_t m_count = lim.m_cap + 1;
  std::vector<Candidate> per_m(static_cast<size_t>(m_count));
  auto scan_m = [&](count_t m) {
    Candidate best;
    if (m < lim.min_m_ns) return best;
    for (count_t t = 0; t <= lim.t_cap; ++t) {
      for (count_t q = 0; q <= std::min(m, t); ++q) {
        const count_t a_s = m - q + t;
        if (q < qmin[static_cast<size_t>(t)] || a_s < lim.min_a_s || a_s > n) continue;
        const Candidate c{cost_eval(m, t, q, model, CostVariant::real), {m, t, q}, true};
        if (detail::better(c, best)) best = c;
        break;  // cost does not depend on Q; smallest feasible Q wins ties
      }
    }
    return best;
  };
  if (exec == Exec::serial) {
    for (count_t m = 0; m < m_count; ++m) per_m[static_cast<size_t>(m)] = scan_m(m);
  } else {
#pragma omp parallel for schedule(dynamic, 8)
    for (count_t m = 0; m < m_count; ++m) per_m[static_cast<size_t>(m)] = scan_m(m);
  }
  Candidate best;
  for (const auto& c : per_m) {
    if (detail::better(c, best)) best = c;
  }
  return best;
}

DesignReport finish(const ScenarioParams& params, const CostModel& model, const Candidate& best) {
  if (!best.valid) {
    throw InfeasibleError("qos_s", "no design meets the surge target within the allowed pool sizes");
  }
  DesignReport r = evaluate_design(params, model, best.d);
  r.oracle_verified = true;
  return r;
}

}  // namespace

DesignReport brute_force_design(const ScenarioParams& params, const CostModel& model,
                                const ScanOpts& opts) {
  const auto lim = detail::design_limits(params, opts.max_shared_items, opts.max_prosumers);
  if (!structured_scan_applies(model)) return exhaustive_design(params, model, opts);
  return finish(params, model, scan_structured(params, model, lim, opts.exec));
}

DesignReport exhaustive_design(const ScenarioParams& params, const CostModel& model,
                               const ScanOpts& opts) {
  const auto lim = detail::design_limits(params, opts.max_shared_items, opts.max_prosumers);
  return finish(params, model, scan_exhaustive(params, model, lim, opts.exec));
}

}  // namespace hybrid
