#pragma once

// Dense sequential quadratic programming for small smooth problems
//
//   minimise f(x)  subject to  c(x) >= 0,  lower <= x <= upper.
//
// Gradients are central finite differences, the Hessian of the Lagrangian
// is a Powell-damped BFGS approximation, and each QP subproblem is solved
// exactly by enumerating active sets, which is cheap for a handful of
// variables. Globalisation is an l1 exact-penalty backtracking line search.

#include <functional>
#include <span>
#include <vector>

namespace hybrid {

struct NlpProblem {
  std::size_t num_vars = 0;
  std::size_t num_constraints = 0;
  std::function<double(std::span<const double>)> objective;
  // Writes num_constraints values; feasible iff all >= 0.
  std::function<void(std::span<const double>, std::span<double>)> constraints;
  std::vector<double> lower;
  std::vector<double> upper;
};

struct SqpOptions {
  int max_iterations = 200;
  double step_tolerance = 1e-9;
  double feasibility_tolerance = 1e-9;
  double fd_step = 1e-6;
};

struct SqpResult {
  std::vector<double> x;
  double objective = 0.0;
  double max_violation = 0.0;
  int iterations = 0;
  bool converged = false;
};

SqpResult minimize_sqp(const NlpProblem& problem, std::vector<double> x0,
                       const SqpOptions& options = {});

// Convex QP  min 1/2 d'Hd + g'd  s.t.  A d + b >= 0, solved by active-set
// enumeration. Returns false when no feasible KKT point exists.
struct QpSolution {
  std::vector<double> d;
  std::vector<double> multipliers;
};
bool solve_small_qp(const std::vector<double>& hessian, const std::vector<double>& gradient,
                    const std::vector<std::vector<double>>& rows, const std::vector<double>& offsets,
                    QpSolution& out);

}  // namespace hybrid
