#include "hybrid/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "hybrid/errors.hpp"

namespace hybrid {

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_design_csv(std::ostream& out, std::span<const DesignRow> rows) {
  out << "N,qos_target,M,T,Q,cost_total,cost_per_consumer,qos_ns,qos_s,qos_b,oracle_verified\n";
  for (const auto& r : rows) {
    const auto& d = r.report;
    out << r.n << ',' << format_number(r.qos_target) << ',' << d.design.m << ',' << d.design.t << ','
        << d.design.q << ',' << format_number(d.cost_real) << ',' << format_number(d.cost_per_consumer) << ','
        << format_number(d.qos.qos_ns) << ',' << format_number(d.qos.qos_s) << ','
        << format_number(d.qos.qos_b) << ',' << (d.oracle_verified ? "true" : "false") << '\n';
  }
}

void write_trace_csv(std::ostream& out, const AimdTrace& trace) {
  out << "iter,z,q,capacity_event,z_avg,q_avg\n";
  for (const auto& r : trace.iterations) {
    out << r.iter << ',' << format_number(r.z) << ',' << format_number(r.q) << ','
        << (r.capacity_event ? 1 : 0) << ',' << format_number(r.z_avg) << ',' << format_number(r.q_avg)
        << '\n';
  }
}

void write_sweep_csv(std::ostream& out, std::span<const SweepPoint> points) {
  out << "x,total_cost,cost_per_consumer\n";
  for (const auto& p : points) {
    // Infeasible grid points stay in the curve as empty cost fields.
    out << format_number(p.x) << ',';
    if (p.feasible) out << format_number(p.total_cost) << ',' << format_number(p.cost_per_consumer);
    else out << ',';
    out << '\n';
  }
}

void write_compare_csv(std::ostream& out, std::span<const ApproachCost> rows) {
  out << "approach,M,T,Q,cost_total,cost_per_consumer,qos_ns,qos_s,qos_b\n";
  for (const auto& r : rows) {
    out << r.approach << ',' << r.design.m << ',' << r.design.t << ',' << r.design.q << ','
        << format_number(r.cost_real) << ',' << format_number(r.cost_per_consumer) << ','
        << format_number(r.qos.qos_ns) << ',' << format_number(r.qos.qos_s) << ','
        << format_number(r.qos.qos_b) << '\n';
  }
}

void write_best_effort_csv(std::ostream& out, std::span<const BestEffortRow> rows) {
  out << "N,M,T,problem,q_star,q_star_share,qos_s,qos_b,qos_avg\n";
  for (const auto& r : rows) {
    out << r.n << ',' << r.m << ',' << r.t << ',' << to_string(r.problem) << ',' << r.q_star << ','
        << format_number(100.0 * static_cast<double>(r.q_star) / static_cast<double>(r.m)) << ','
        << format_number(r.qos_s) << ',' << format_number(r.qos_b) << ','
        << format_number(0.5 * (r.qos_s + r.qos_b)) << '\n';
  }
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ParseError("csv", 1, "missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(std::istream& in, const std::string& origin) {
  auto split = [](const std::string& line) {
    std::vector<std::string> f;
    std::istringstream s(line);
    for (std::string cell; std::getline(s, cell, ',');) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    return f;
  };
  CsvTable t;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    auto row = split(line);
    if (row.size() != t.header.size()) {
      throw ParseError(origin, line_no, "expected " + std::to_string(t.header.size()) + " fields");
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ParseError(origin, line_no, "empty CSV");
  return t;
}

}  // namespace hybrid
