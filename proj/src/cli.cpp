#include "hybrid/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hybrid/design_solver.hpp"
#include "hybrid/errors.hpp"
#include "hybrid/partition.hpp"
#include "hybrid/report.hpp"
#include "hybrid/scenario.hpp"

namespace hybrid {

std::filesystem::path default_output_dir() {
  const char* env = std::getenv("HYBRID_SUPPLY_OUT_DIR");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path(".");
}

std::filesystem::path default_golden_dir() { return HYBRID_GOLDEN_DIR; }

namespace {

std::filesystem::path resolve_output(const std::string& path) {
  const std::filesystem::path p(path);
  return p.is_absolute() ? p : default_output_dir() / p;
}

// Writes through `fn` to the named file, or to `out` when no file is given.
template <class Fn>
void emit(const std::string& file, std::ostream& out, Fn&& fn) {
  if (file.empty()) {
    fn(out);
    return;
  }
  const auto path = resolve_output(file);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write " + path.string());
  fn(f);
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    try {
      size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad grid value '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError("empty grid");
  return out;
}

struct Tolerances {
  count_t m = 1;
  count_t t = 2;
  count_t t_large = 10;
  count_t large_n = 50000;
  count_t q = 1;
  double cost_rel = 0.02;
  count_t q_star = 1;
  double qos_pp = 1.0;
};

Tolerances load_tolerances(const std::filesystem::path& dir) {
  namespace pt = boost::property_tree;
  Tolerances tol;
  const auto path = dir / "tolerances.ini";
  if (!std::filesystem::exists(path)) return tol;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(path.string(), static_cast<long>(e.line()), e.message());
  }
  tol.m = tree.get("min_cost.m", tol.m);
  tol.t = tree.get("min_cost.t", tol.t);
  tol.t_large = tree.get("min_cost.t_large_n", tol.t_large);
  tol.large_n = tree.get("min_cost.large_n", tol.large_n);
  tol.q = tree.get("min_cost.q", tol.q);
  tol.cost_rel = tree.get("min_cost.cost_rel", tol.cost_rel);
  tol.q_star = tree.get("best_effort.q_star", tol.q_star);
  tol.qos_pp = tree.get("best_effort.qos_pp", tol.qos_pp);
  return tol;
}

CsvTable read_golden(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open golden file");
  return read_csv(in, path.string());
}

double field(const CsvTable& t, size_t row, const std::string& col) {
  return std::stod(t.rows[row][t.column(col)]);
}

// Compares regenerated design rows with a golden table; prints one line per row.
bool diff_design(const std::vector<DesignRow>& rows, const CsvTable& golden, const Tolerances& tol,
                 const std::string& label, std::ostream& out) {
  bool ok = true;
  for (size_t i = 0; i < golden.rows.size(); ++i) {
    const auto n = static_cast<count_t>(field(golden, i, "N"));
    const double target = field(golden, i, "qos_target");
    const auto it = std::find_if(rows.begin(), rows.end(), [&](const DesignRow& r) {
      return r.n == n && std::fabs(r.qos_target - target) < 1e-9;
    });
    if (it == rows.end()) {
      out << label << " N=" << n << " target=" << target << ": missing\n";
      ok = false;
      continue;
    }
    const auto& d = it->report.design;
    const count_t t_tol = n >= tol.large_n ? tol.t_large : tol.t;
    const double cost = field(golden, i, "cost_total");
    const bool row_ok = std::llabs(d.m - static_cast<count_t>(field(golden, i, "M"))) <= tol.m &&
                        std::llabs(d.t - static_cast<count_t>(field(golden, i, "T"))) <= t_tol &&
                        std::llabs(d.q - static_cast<count_t>(field(golden, i, "Q"))) <= tol.q &&
                        std::fabs(it->report.cost_real - cost) <= tol.cost_rel * cost;
    out << label << " N=" << n << " target=" << target << ": " << (row_ok ? "ok" : "MISMATCH") << " (M=" << d.m
        << " T=" << d.t << " Q=" << d.q << " cost=" << format_number(it->report.cost_real) << ")\n";
    ok = ok && row_ok;
  }
  return ok;
}

bool diff_best_effort(const std::vector<BestEffortRow>& rows, const CsvTable& golden, const Tolerances& tol,
                      std::ostream& out) {
  bool ok = true;
  for (size_t i = 0; i < golden.rows.size(); ++i) {
    const auto n = static_cast<count_t>(field(golden, i, "N"));
    const auto problem = parse_partition_problem(golden.rows[i][golden.column("problem")]);
    const auto it = std::find_if(rows.begin(), rows.end(),
                                 [&](const BestEffortRow& r) { return r.n == n && r.problem == problem; });
    if (it == rows.end()) {
      out << "best-effort N=" << n << " " << to_string(problem) << ": missing\n";
      ok = false;
      continue;
    }
    const bool row_ok = std::llabs(it->q_star - static_cast<count_t>(field(golden, i, "q_star"))) <= tol.q_star &&
                        std::fabs(it->qos_s - field(golden, i, "qos_s")) <= tol.qos_pp &&
                        std::fabs(it->qos_b - field(golden, i, "qos_b")) <= tol.qos_pp;
    out << "best-effort N=" << n << " " << to_string(problem) << ": " << (row_ok ? "ok" : "MISMATCH")
        << " (q*=" << it->q_star << " qos_s=" << format_number(it->qos_s) << " qos_b=" << format_number(it->qos_b)
        << ")\n";
    ok = ok && row_ok;
  }
  return ok;
}

count_t median(std::vector<count_t> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hybrid supply scheme design: QoS, minimum-cost dimensioning and AIMD partitioning"};
  app.require_subcommand(1);

  // qos
  auto* qos = app.add_subcommand("qos", "QoS of an explicit (M, T, Q) design");
  std::string qos_scenario;
  ScenarioParams qp;
  count_t qm = 0, qt = 0, qq = 0;
  qos->add_option("--scenario", qos_scenario, "built-in name or scenario file (supplies N and p values)");
  qos->add_option("--n", qp.n_consumers, "consumer population N");
  qos->add_option("--p-ns", qp.p_nonsurge, "non-surge request probability");
  qos->add_option("--p-s", qp.p_surge, "surge request probability");
  qos->add_option("--p-b", qp.p_bad, "bad-return probability");
  qos->add_option("--m", qm, "shared pool M")->required();
  qos->add_option("--t", qt, "prosumer pool T")->required();
  qos->add_option("--q", qq, "reserve Q")->required();

  // design
  auto* design = app.add_subcommand("design", "minimum-cost design");
  std::string design_scenario, design_out;
  bool no_verify = false;
  design->add_option("--scenario", design_scenario, "built-in name or scenario file")->required();
  design->add_option("--out", design_out, "CSV output file (default stdout)");
  design->add_flag("--no-verify", no_verify, "skip the exact oracle check");

  // partition
  auto* partition = app.add_subcommand("partition", "AIMD partition of a fixed pool");
  std::string part_scenario, part_problem = "maximize", trace_out;
  std::optional<count_t> part_m, part_t, part_max_iter;
  std::optional<std::uint64_t> part_seed;
  partition->add_option("--scenario", part_scenario, "built-in name or scenario file")->required();
  partition->add_option("--m", part_m, "shared pool M");
  partition->add_option("--t", part_t, "prosumer pool T");
  partition->add_option("--problem", part_problem, "maximize or equalize");
  partition->add_option("--seed", part_seed, "override the scenario seed");
  partition->add_option("--max-iterations", part_max_iter, "iteration cap");
  partition->add_option("--trace", trace_out, "write the full trace CSV to this file");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "cost curve over QoS targets or populations");
  std::string sweep_scenario, sweep_axis = "qos", sweep_grid, sweep_out;
  sweep->add_option("--scenario", sweep_scenario, "built-in name or scenario file")->required();
  sweep->add_option("--axis", sweep_axis, "qos or n");
  sweep->add_option("--grid", sweep_grid, "comma-separated grid values")->required();
  sweep->add_option("--out", sweep_out, "CSV output file (default stdout)");

  // compare
  auto* compare = app.add_subcommand("compare", "hybrid vs pure B2C vs ownership");
  std::string compare_scenario, compare_out;
  compare->add_option("--scenario", compare_scenario, "built-in name or scenario file")->required();
  compare->add_option("--out", compare_out, "CSV output file (default stdout)");

  // reproduce
  auto* reproduce = app.add_subcommand("reproduce", "regenerate the result tables and diff with goldens");
  std::string golden_dir = default_golden_dir().string(), out_dir;
  int seeds = 5;
  reproduce->add_option("--golden-dir", golden_dir, "directory with golden CSVs");
  reproduce->add_option("--out-dir", out_dir, "where to write regenerated CSVs");
  reproduce->add_option("--seeds", seeds, "AIMD seeds per best-effort row (median)")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*qos) {
    ScenarioParams p = qp;
    if (!qos_scenario.empty()) {
      p = resolve_scenario(qos_scenario).params;
      if (qos->count("--n")) p.n_consumers = qp.n_consumers;
    }
    p.validate();
    const QosReport r = qos_all(p, qm, qt, qq);
    out << "qos_ns,qos_s,qos_b\n"
        << format_number(r.qos_ns) << ',' << format_number(r.qos_s) << ',' << format_number(r.qos_b) << '\n';
    return kExitOk;
  }

  if (*design) {
    const ScenarioFile s = resolve_scenario(design_scenario);
    SolverOpts opts = s.solver;
    opts.verify_with_oracle = !no_verify;
    const DesignReport r = solve_min_cost(s.params, s.cost_model, opts);
    const DesignRow row{s.params.n_consumers, s.params.qos_target_s, r};
    emit(design_out, out, [&](std::ostream& o) { write_design_csv(o, std::span(&row, 1)); });
    if (opts.verify_with_oracle && !r.oracle_verified) {
      err << "design exceeds the oracle optimum by more than the optimality gap\n";
      return kExitInfeasible;
    }
    return kExitOk;
  }

  if (*partition) {
    const ScenarioFile s = resolve_scenario(part_scenario);
    PartitionSetup setup;
    setup.params = s.params;
    if (!part_m && !s.shared_pool) throw UsageError("--m is required for this scenario");
    if (!part_t && !s.prosumers) throw UsageError("--t is required for this scenario");
    setup.m = part_m ? *part_m : *s.shared_pool;
    setup.t = part_t ? *part_t : *s.prosumers;
    AimdConfig cfg = s.aimd;
    if (part_seed) cfg.seed = *part_seed;
    if (part_max_iter) cfg.max_iterations = *part_max_iter;
    cfg.record_trace = !trace_out.empty();
    const PartitionProblem problem = parse_partition_problem(part_problem);
    const PartitionResult r = run_partition(problem, setup, cfg);
    if (!trace_out.empty()) emit(trace_out, out, [&](std::ostream& o) { write_trace_csv(o, r.trace); });
    out << "problem,M,T,q_star,z_avg,q_avg,capacity_events,converged,qos_ns,qos_s,qos_b\n"
        << to_string(problem) << ',' << setup.m << ',' << setup.t << ',' << r.q_star << ','
        << format_number(r.trace.z_avg) << ',' << format_number(r.trace.q_avg) << ',' << r.trace.capacity_count
        << ',' << (r.converged ? "true" : "false") << ',' << format_number(r.qos.qos_ns) << ','
        << format_number(r.qos.qos_s) << ',' << format_number(r.qos.qos_b) << '\n';
    if (!r.converged) {
      err << "not converged within " << cfg.max_iterations << " iterations\n";
      return kExitInfeasible;
    }
    return kExitOk;
  }

  if (*sweep) {
    const ScenarioFile s = resolve_scenario(sweep_scenario);
    const std::vector<double> grid = parse_grid(sweep_grid);
    std::vector<SweepPoint> points;
    if (sweep_axis == "qos") {
      points = sweep_cost_vs_qos(s.params, s.cost_model, grid, s.solver);
    } else if (sweep_axis == "n") {
      std::vector<count_t> ns;
      for (double g : grid) {
        if (g != std::floor(g)) throw UsageError("population grid values must be integers");
        ns.push_back(static_cast<count_t>(g));
      }
      points = sweep_cost_vs_n(s.params, s.cost_model, ns, s.solver);
    } else {
      throw UsageError("unknown axis '" + sweep_axis + "' (qos|n)");
    }
    emit(sweep_out, out, [&](std::ostream& o) { write_sweep_csv(o, points); });
    return kExitOk;
  }

  if (*compare) {
    const ScenarioFile s = resolve_scenario(compare_scenario);
    const auto rows = compare_approaches(s.params, s.cost_model, s.solver);
    emit(compare_out, out, [&](std::ostream& o) { write_compare_csv(o, rows); });
    return kExitOk;
  }

  // reproduce
  const std::filesystem::path dir = out_dir.empty() ? default_output_dir() : std::filesystem::path(out_dir);
  std::filesystem::create_directories(dir);
  const Tolerances tol = load_tolerances(golden_dir);
  bool ok = true;
  for (const char* kind : {"car", "charger"}) {
    std::vector<DesignRow> rows;
    for (const auto& name : builtin_scenario_names()) {
      if (name.rfind(std::string(kind) + "-", 0) != 0) continue;
      const ScenarioFile s = builtin_scenario(name);
      SolverOpts opts = s.solver;
      opts.verify_with_oracle = true;
      rows.push_back({s.params.n_consumers, s.params.qos_target_s, solve_min_cost(s.params, s.cost_model, opts)});
    }
    const std::string file = std::string("min_cost_") + kind + ".csv";
    emit((dir / file).string(), out, [&](std::ostream& o) { write_design_csv(o, rows); });
    ok = diff_design(rows, read_golden(std::filesystem::path(golden_dir) / file), tol, kind, out) && ok;
  }

  std::vector<BestEffortRow> be;
  std::vector<std::uint64_t> seed_list;
  for (int i = 0; i < seeds; ++i) seed_list.push_back(static_cast<std::uint64_t>(i + 1));
  for (const count_t n : {1000, 5000, 10000, 50000}) {
    const ScenarioFile s = builtin_scenario("car-n" + std::to_string(n));
    const PartitionSetup setup{s.params, *s.shared_pool, *s.prosumers};
    for (const auto problem : {PartitionProblem::maximize, PartitionProblem::equalize}) {
      const auto runs = run_partition_seeds(problem, setup, s.aimd, seed_list);
      std::vector<count_t> stars;
      for (const auto& r : runs) stars.push_back(r.q_star);
      const count_t q = median(stars);
      const QosReport rep = qos_all(setup.params, setup.m, setup.t, q);
      be.push_back({n, setup.m, setup.t, problem, q, 100.0 * rep.qos_s, 100.0 * rep.qos_b});
    }
  }
  emit((dir / "best_effort.csv").string(), out, [&](std::ostream& o) { write_best_effort_csv(o, be); });
  ok = diff_best_effort(be, read_golden(std::filesystem::path(golden_dir) / "best_effort.csv"), tol, out) && ok;
  out << (ok ? "reproduce: all rows within tolerance\n" : "reproduce: some rows out of tolerance\n");
  return ok ? kExitOk : kExitInfeasible;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    return run(argc, argv, out, err);
  } catch (const InfeasibleError& e) {
    err << "infeasible (" << e.constraint() << "): " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "invalid " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace hybrid
