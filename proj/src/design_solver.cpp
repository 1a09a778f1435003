#include "hybrid/design_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "design_internal.hpp"
#include "hybrid/errors.hpp"
#include "hybrid/sqp.hpp"

namespace hybrid {
namespace {

using detail::Candidate;

constexpr double kProbitCap = 40.0;

// Phi^-1 of the continuous cdf, evaluated on whichever tail is small.
double probit_cdf(double x, double n, double p) {
  if (x >= n) return kProbitCap;
  if (x <= -1.0) return -kProbitCap;
  const double lower = binom_cdf_cont(x, n, p);
  if (lower < 0.5) return lower > 0.0 ? std::max(normal_quantile(lower), -kProbitCap) : -kProbitCap;
  const double upper = binom_upper_tail_cont(x, n, p);
  return upper > 0.0 ? std::min(-normal_quantile(upper), kProbitCap) : kProbitCap;
}

double probit_target(double target) {
  return normal_quantile(std::min(target, 1.0 - 1e-15));
}

double normal_items(double n, double p, double target) {
  return n * p + probit_target(target) * std::sqrt(n * p * (1.0 - p));
}

Candidate make_candidate(const ScenarioParams& params, const CostModel& model,
                         const detail::Limits& lim, const Design& d) {
  if (d.m < 0 || d.t < 0 || d.q < 0 || d.m > lim.m_cap || d.t > lim.t_cap) return {};
  if (!feasible(params, d)) return {};
  return {cost_eval(d.m, d.t, d.q, model, CostVariant::real), d, true};
}

// Cheapest completion of a fixed T: minimal reserve, minimal pool.
Candidate complete_for_t(const ScenarioParams& params, const CostModel& model,
                         const detail::Limits& lim, count_t t) {
  if (t < 0 || t > lim.t_cap) return {};
  const count_t qmin = detail::min_reserve(t, params);
  const count_t m = std::max({lim.min_m_ns, lim.min_a_s - t + qmin, qmin});
  const count_t q = std::max(qmin, m + t - params.n_consumers);
  return make_candidate(params, model, lim, {m, t, q});
}

// Steepest descent over the +-2 box, plus jumps of M onto the next discount
// breakpoint that trade pool items for prosumers at constant surge capacity.
Candidate local_search(const ScenarioParams& params, const CostModel& model,
                       const detail::Limits& lim, Candidate best) {
  for (int round = 0; round < 1000 && best.valid; ++round) {
    Candidate next = best;
    const Design c = best.d;
    for (count_t dm = -2; dm <= 2; ++dm) {
      for (count_t dt = -2; dt <= 2; ++dt) {
        for (count_t dq = -2; dq <= 2; ++dq) {
          const Candidate cand = make_candidate(params, model, lim, {c.m + dm, c.t + dt, c.q + dq});
          if (detail::better(cand, next)) next = cand;
        }
      }
    }
    const count_t bp = model.discount.next_breakpoint_above(c.m);
    if (bp > 0 && bp <= lim.m_cap) {
      const count_t shift = bp - c.m;
      for (const Design& d : {Design{bp, c.t - shift, c.q}, Design{bp, c.t, c.q}}) {
        Candidate cand = make_candidate(params, model, lim, d);
        if (!cand.valid && d.t >= 0) cand = complete_for_t(params, model, lim, d.t);
        if (detail::better(cand, next)) next = cand;
      }
    }
    if (!detail::better(next, best)) break;
    best = next;
  }
  return best;
}

Candidate recover_integer(const ScenarioParams& params, const CostModel& model,
                          const detail::Limits& lim, std::span<const double> x) {
  Candidate best;
  const auto rm = static_cast<count_t>(std::llround(x[0]));
  const auto rt = static_cast<count_t>(std::llround(x[1]));
  const auto rq = static_cast<count_t>(std::llround(x[2]));
  for (count_t dm = -1; dm <= 1; ++dm) {
    for (count_t dt = -1; dt <= 1; ++dt) {
      for (count_t dq = -1; dq <= 1; ++dq) {
        const Candidate c = make_candidate(params, model, lim, {rm + dm, rt + dt, rq + dq});
        if (detail::better(c, best)) best = c;
      }
    }
  }
  if (!best.valid) {
    for (count_t dt = -2; dt <= 2; ++dt) {
      const Candidate c = complete_for_t(params, model, lim, rt + dt);
      if (detail::better(c, best)) best = c;
    }
  }
  return local_search(params, model, lim, best);
}

struct Relaxation {
  NlpProblem problem;
  std::array<double, 3> scale{};
};

Relaxation build_relaxation(const ScenarioParams& params, const CostModel& model,
                            const detail::Limits& lim, std::array<double, 3> scale) {
  const double n = static_cast<double>(params.n_consumers);
  const double z_ns = probit_target(params.qos_target_ns);
  const double z_s = probit_target(params.qos_target_s);
  const double z_b = probit_target(params.qos_target_b);
  Relaxation r;
  r.scale = scale;
  auto& p = r.problem;
  p.num_vars = 3;
  p.num_constraints = 7;
  p.objective = [&model, scale](std::span<const double> u) {
    return model.pool_cost(u[0] * scale[0], CostVariant::approx) +
           model.prosumer_cost(u[1] * scale[1]);
  };
  p.constraints = [params, n, z_ns, z_s, z_b, scale](std::span<const double> u, std::span<double> c) {
    const double m = u[0] * scale[0];
    const double t = u[1] * scale[1];
    const double q = u[2] * scale[2];
    c[0] = probit_cdf(m, n, params.p_nonsurge) - z_ns;
    c[1] = probit_cdf(m - q + t, n, params.p_surge) - z_s;
    c[2] = probit_cdf(q, std::max(t, 0.0), params.p_bad) - z_b;
    c[3] = (n - m) / scale[0];
    c[4] = (m - q) / scale[0];
    c[5] = (t - q) / scale[1];
    c[6] = (n - (m - q + t)) / scale[0];
  };
  p.lower = {0.0, 0.0, 0.0};
  p.upper = {static_cast<double>(lim.m_cap) / scale[0], static_cast<double>(lim.t_cap) / scale[1],
             static_cast<double>(lim.m_cap) / scale[2]};
  return r;
}

}  // namespace

void SolverOpts::validate() const {
  if (!(optimality_gap >= 0.0)) throw ValidationError("optimality_gap", "must be >= 0");
  if (multistart < 1) throw ValidationError("multistart", "must be >= 1");
  if (max_shared_items && *max_shared_items < 0) {
    throw ValidationError("max_shared_items", "must be >= 0");
  }
}

bool feasible(const ScenarioParams& params, const Design& d) {
  const count_t n = params.n_consumers;
  if (d.m < 0 || d.t < 0 || d.q < 0) return false;
  if (d.m > n || d.q > d.m || d.q > d.t || d.m - d.q + d.t > n) return false;
  const QosReport r = qos_all(params, d.m, d.t, d.q);
  return r.qos_ns >= params.qos_target_ns && r.qos_s >= params.qos_target_s &&
         r.qos_b >= params.qos_target_b;
}

DesignReport evaluate_design(const ScenarioParams& params, const CostModel& model, const Design& d) {
  DesignReport r;
  r.design = d;
  r.cost_real = cost_eval(d.m, d.t, d.q, model, CostVariant::real);
  r.cost_per_consumer = r.cost_real / static_cast<double>(model.horizon_years) /
                        static_cast<double>(params.n_consumers);
  r.qos = qos_all(params, d.m, d.t, d.q);
  return r;
}

DesignReport solve_min_cost(const ScenarioParams& params, const CostModel& model,
                            const SolverOpts& opts) {
  opts.validate();
  model.validate();
  const auto lim = detail::design_limits(params, opts.max_shared_items, std::nullopt);
  const double n = static_cast<double>(params.n_consumers);

  // Normal-approximation anchors: the non-surge pool, the surge capacity and
  // the prosumer count at which the two meet.
  const double m_ns = std::clamp(normal_items(n, params.p_nonsurge, params.qos_target_ns), 1.0, n);
  const double a_s = std::clamp(normal_items(n, params.p_surge, params.qos_target_s), 1.0, n);
  auto reserve = [&](double t) {
    return t < 1.0 ? 0.0 : std::max(0.0, normal_approx_reserve(static_cast<count_t>(t), params.p_bad,
                                                                 std::min(params.qos_target_b, 1.0 - 1e-15)));
  };
  double t_kink = std::max(0.0, a_s - m_ns);
  for (int i = 0; i < 50; ++i) t_kink = std::clamp(a_s - m_ns + reserve(t_kink), 0.0, n);

  const std::array<double, 3> scale{std::max(1.0, m_ns), std::max(1.0, t_kink),
                                    std::max(1.0, reserve(t_kink))};
  const Relaxation relax = build_relaxation(params, model, lim, scale);

  static constexpr std::array<double, 5> kStartFractions{1.0, 0.8, 1.2, 0.5, 0.0};
  SqpOptions sqp_opts;
  sqp_opts.max_iterations = 100;
  sqp_opts.step_tolerance = 1e-8;
  sqp_opts.feasibility_tolerance = 1e-7;

  Candidate best;
  int iterations = 0;
  const int starts = std::min<int>(opts.multistart, static_cast<int>(kStartFractions.size()));
  for (int s = 0; s < starts || (s < opts.multistart && !best.valid); ++s) {
    const double frac = s < static_cast<int>(kStartFractions.size()) ? kStartFractions[static_cast<size_t>(s)]
                                                                       : 1.0 + 0.25 * s;
    const double t0 = std::min(t_kink * frac, static_cast<double>(lim.t_cap));
    const double q0 = std::min(reserve(t0), t0);
    const double m0 = std::clamp(std::max(m_ns, a_s - t0 + q0), q0, static_cast<double>(lim.m_cap));
    const SqpResult res = minimize_sqp(relax.problem, {m0 / scale[0], t0 / scale[1], q0 / scale[2]}, sqp_opts);
    iterations += res.iterations;
    const std::array<double, 3> x{res.x[0] * scale[0], res.x[1] * scale[1], res.x[2] * scale[2]};
    const Candidate c = recover_integer(params, model, lim, x);
    if (detail::better(c, best)) best = c;
  }

  DesignReport report;
  if (!best.valid) {
    // The relaxation failed to land near any feasible point; use the scan.
    ScanOpts scan;
    scan.max_shared_items = opts.max_shared_items;
    report = brute_force_design(params, model, scan);
  } else {
    report = evaluate_design(params, model, best.d);
  }
  report.solver_iterations = iterations;
  report.oracle_verified = false;
  if (opts.verify_with_oracle) {
    ScanOpts scan;
    scan.max_shared_items = opts.max_shared_items;
    const DesignReport oracle = brute_force_design(params, model, scan);
    report.oracle_verified = report.cost_real <= oracle.cost_real * (1.0 + opts.optimality_gap) + 1e-9;
  }
  return report;
}

std::vector<ApproachCost> compare_approaches(const ScenarioParams& params, const CostModel& model,
                                             const SolverOpts& opts) {
  params.validate();
  const count_t n = params.n_consumers;
  std::vector<ApproachCost> out;
  auto add = [&](std::string name, const Design& d) {
    const DesignReport r = evaluate_design(params, model, d);
    out.push_back({std::move(name), d, r.cost_real, r.cost_per_consumer, r.qos});
  };
  add("hybrid", solve_min_cost(params, model, opts).design);
  const count_t b2c = std::max(min_items_for_qos(n, params.p_surge, params.qos_target_s),
                               min_items_for_qos(n, params.p_nonsurge, params.qos_target_ns));
  add("pure-b2c", {b2c, 0, 0});
  add("ownership", {n, 0, 0});
  return out;
}

namespace {

template <class Grid, class MakeParams>
std::vector<SweepPoint> run_sweep(const Grid& grid, MakeParams&& make_params, const CostModel& model,
                                  const SolverOpts& opts, Exec exec) {
  if (grid.empty()) throw ValidationError("grid", "sweep grid is empty");
  std::vector<SweepPoint> out(grid.size());
  auto point = [&](size_t i) {
    SweepPoint sp;
    sp.x = static_cast<double>(grid[i]);
    try {
      const DesignReport r = solve_min_cost(make_params(grid[i]), model, opts);
      sp.feasible = true;
      sp.total_cost = r.cost_real;
      sp.cost_per_consumer = r.cost_per_consumer;
      sp.design = r.design;
    } catch (const InfeasibleError&) {
      sp.feasible = false;
    }
    out[i] = sp;
  };
  // Validate up front so bad grid values surface as errors, not gap rows.
  for (const auto& g : grid) make_params(g).validate();
  if (exec == Exec::serial) {
    for (size_t i = 0; i < grid.size(); ++i) point(i);
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (size_t i = 0; i < grid.size(); ++i) point(i);
  }
  return out;
}

}  // namespace

std::vector<SweepPoint> sweep_cost_vs_qos(const ScenarioParams& params, const CostModel& model,
                                          std::span<const double> qos_grid, const SolverOpts& opts,
                                          Exec exec) {
  return run_sweep(qos_grid, [&](double target) { return params.with_targets(target); }, model, opts, exec);
}

std::vector<SweepPoint> sweep_cost_vs_n(const ScenarioParams& params, const CostModel& model,
                                        std::span<const count_t> n_grid, const SolverOpts& opts,
                                        Exec exec) {
  return run_sweep(n_grid,
                   [&](count_t n) {
                     ScenarioParams p = params;
                     p.n_consumers = n;
                     return p;
                   },
                   model, opts, exec);
}

}  // namespace hybrid
