#pragma once

// CSV writers. Every table starts with a header row; numbers use '.' and
// lines end in LF.

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hybrid/aimd.hpp"
#include "hybrid/design_solver.hpp"
#include "hybrid/partition.hpp"

namespace hybrid {

struct DesignRow {
  count_t n = 0;
  double qos_target = 0.0;
  DesignReport report;
};

// Shortest round-trip decimal text for v.
std::string format_number(double v);

void write_design_csv(std::ostream& out, std::span<const DesignRow> rows);
void write_trace_csv(std::ostream& out, const AimdTrace& trace);
void write_sweep_csv(std::ostream& out, std::span<const SweepPoint> points);
void write_compare_csv(std::ostream& out, std::span<const ApproachCost> rows);

struct BestEffortRow {
  count_t n = 0;
  count_t m = 0;
  count_t t = 0;
  PartitionProblem problem = PartitionProblem::maximize;
  count_t q_star = 0;
  double qos_s = 0.0;  // percent
  double qos_b = 0.0;  // percent
};

void write_best_effort_csv(std::ostream& out, std::span<const BestEffortRow> rows);

// Minimal CSV reader for the golden files: header plus rows of fields.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};
CsvTable read_csv(std::istream& in, const std::string& origin);

}  // namespace hybrid
