#include "hybrid/sqp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "hybrid/errors.hpp"

namespace hybrid {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Linearisation {
  double f = 0.0;
  VectorXd grad;
  VectorXd c;
  MatrixXd jac;  // num_constraints x num_vars
};

double clamp_to(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

VectorXd eval_constraints(const NlpProblem& p, const VectorXd& x) {
  VectorXd c(static_cast<Eigen::Index>(p.num_constraints));
  p.constraints(std::span<const double>(x.data(), x.size()), std::span<double>(c.data(), c.size()));
  return c;
}

double eval_objective(const NlpProblem& p, const VectorXd& x) {
  return p.objective(std::span<const double>(x.data(), x.size()));
}

Linearisation linearise(const NlpProblem& p, const VectorXd& x, double fd_step) {
  const auto n = static_cast<Eigen::Index>(p.num_vars);
  const auto m = static_cast<Eigen::Index>(p.num_constraints);
  Linearisation lin;
  lin.f = eval_objective(p, x);
  lin.c = eval_constraints(p, x);
  lin.grad.resize(n);
  lin.jac.resize(m, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = fd_step * std::max(1.0, std::fabs(x[i]));
    VectorXd hi = x;
    VectorXd lo = x;
    hi[i] = std::min(x[i] + h, p.upper[i]);
    lo[i] = std::max(x[i] - h, p.lower[i]);
    const double span = hi[i] - lo[i];
    if (span <= 0.0) {
      lin.grad[i] = 0.0;
      lin.jac.col(i).setZero();
      continue;
    }
    lin.grad[i] = (eval_objective(p, hi) - eval_objective(p, lo)) / span;
    lin.jac.col(i) = (eval_constraints(p, hi) - eval_constraints(p, lo)) / span;
  }
  return lin;
}

double violation(const VectorXd& c) {
  double v = 0.0;
  for (Eigen::Index j = 0; j < c.size(); ++j) v += std::max(0.0, -c[j]);
  return v;
}

double max_violation(const VectorXd& c) {
  double v = 0.0;
  for (Eigen::Index j = 0; j < c.size(); ++j) v = std::max(v, -c[j]);
  return v;
}

// Calls fn(subset) for every subset of {0..total-1} with size <= max_size.
template <class Fn>
void for_each_subset(int total, int max_size, Fn&& fn) {
  std::vector<int> subset;
  auto recurse = [&](auto&& self, int start) -> void {
    fn(subset);
    if (static_cast<int>(subset.size()) == max_size) return;
    for (int i = start; i < total; ++i) {
      subset.push_back(i);
      self(self, i + 1);
      subset.pop_back();
    }
  };
  recurse(recurse, 0);
}

}  // namespace

bool solve_small_qp(const std::vector<double>& hessian, const std::vector<double>& gradient,
                    const std::vector<std::vector<double>>& rows, const std::vector<double>& offsets,
                    QpSolution& out) {
  const auto n = static_cast<Eigen::Index>(gradient.size());
  const int total = static_cast<int>(rows.size());
  MatrixXd H = Eigen::Map<const MatrixXd>(hessian.data(), n, n);
  const VectorXd g = Eigen::Map<const VectorXd>(gradient.data(), n);
  MatrixXd A(total, n);
  VectorXd b(total);
  for (int j = 0; j < total; ++j) {
    A.row(j) = Eigen::Map<const VectorXd>(rows[static_cast<size_t>(j)].data(), n).transpose();
    b[j] = offsets[static_cast<size_t>(j)];
  }

  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for_each_subset(total, static_cast<int>(n), [&](const std::vector<int>& active) {
    const auto k = static_cast<Eigen::Index>(active.size());
    MatrixXd kkt = MatrixXd::Zero(n + k, n + k);
    VectorXd rhs(n + k);
    kkt.topLeftCorner(n, n) = H;
    rhs.head(n) = -g;
    for (Eigen::Index r = 0; r < k; ++r) {
      const auto row = A.row(active[static_cast<size_t>(r)]);
      kkt.block(0, n + r, n, 1) = -row.transpose();
      kkt.block(n + r, 0, 1, n) = row;
      rhs[n + r] = -b[active[static_cast<size_t>(r)]];
    }
    Eigen::FullPivLU<MatrixXd> lu(kkt);
    if (lu.rank() < n + k) return;
    const VectorXd sol = lu.solve(rhs);
    const VectorXd d = sol.head(n);
    const VectorXd lambda = sol.tail(k);
    for (Eigen::Index r = 0; r < k; ++r) {
      if (lambda[r] < -1e-10) return;
    }
    const VectorXd slack = A * d + b;
    for (int j = 0; j < total; ++j) {
      if (slack[j] < -1e-9 * (1.0 + std::fabs(b[j]))) return;
    }
    const double value = 0.5 * d.dot(H * d) + g.dot(d);
    if (value < best) {
      best = value;
      found = true;
      out.d.assign(d.data(), d.data() + n);
      out.multipliers.assign(static_cast<size_t>(total), 0.0);
      for (Eigen::Index r = 0; r < k; ++r) {
        out.multipliers[static_cast<size_t>(active[static_cast<size_t>(r)])] = lambda[r];
      }
    }
  });
  return found;
}

SqpResult minimize_sqp(const NlpProblem& problem, std::vector<double> x0, const SqpOptions& options) {
  const auto n = static_cast<Eigen::Index>(problem.num_vars);
  const auto m = static_cast<Eigen::Index>(problem.num_constraints);
  if (x0.size() != problem.num_vars || problem.lower.size() != problem.num_vars ||
      problem.upper.size() != problem.num_vars) {
    throw DomainError("minimize_sqp: dimension mismatch");
  }

  VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = clamp_to(x0[static_cast<size_t>(i)], problem.lower[i], problem.upper[i]);

  Linearisation lin = linearise(problem, x, options.fd_step);
  const double fscale = std::max(1.0, std::fabs(lin.f));
  MatrixXd B = MatrixXd::Identity(n, n);
  double penalty = 1.0;

  SqpResult result;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    // QP rows: nonlinear constraints then the bound constraints.
    std::vector<std::vector<double>> rows;
    std::vector<double> offsets;
    for (Eigen::Index j = 0; j < m; ++j) {
      std::vector<double> row(static_cast<size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) row[static_cast<size_t>(i)] = lin.jac(j, i);
      rows.push_back(std::move(row));
      offsets.push_back(lin.c[j]);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      std::vector<double> e(static_cast<size_t>(n), 0.0);
      e[static_cast<size_t>(i)] = 1.0;
      rows.push_back(e);
      offsets.push_back(x[i] - problem.lower[i]);
      e[static_cast<size_t>(i)] = -1.0;
      rows.push_back(e);
      offsets.push_back(problem.upper[i] - x[i]);
    }

    std::vector<double> hess(B.data(), B.data() + n * n);
    std::vector<double> grad(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) grad[static_cast<size_t>(i)] = lin.grad[i] / fscale;

    QpSolution qp;
    bool solved = solve_small_qp(hess, grad, rows, offsets, qp);
    // Inconsistent linearisation: shrink the violated offsets toward zero.
    for (double tau = 0.5; !solved && tau >= 0.0; tau = tau > 1e-3 ? tau * 0.5 : -1.0) {
      std::vector<double> relaxed = offsets;
      for (auto& o : relaxed) {
        if (o < 0.0) o *= tau;
      }
      solved = solve_small_qp(hess, grad, rows, relaxed, qp);
    }
    if (!solved) {
      std::vector<double> relaxed = offsets;
      for (auto& o : relaxed) o = std::max(o, 0.0);
      if (!solve_small_qp(hess, grad, rows, relaxed, qp)) break;
    }

    const VectorXd d = Eigen::Map<const VectorXd>(qp.d.data(), n);
    VectorXd lambda(m);
    double lambda_max = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      lambda[j] = qp.multipliers[static_cast<size_t>(j)];
      lambda_max = std::max(lambda_max, lambda[j]);
    }
    const double cur_violation = max_violation(lin.c);
    if (d.lpNorm<Eigen::Infinity>() <= options.step_tolerance * (1.0 + x.lpNorm<Eigen::Infinity>()) &&
        cur_violation <= options.feasibility_tolerance) {
      result.converged = true;
      break;
    }

    penalty = std::max(penalty, 1.1 * lambda_max);
    auto merit = [&](const VectorXd& xs, double f, const VectorXd& c) {
      (void)xs;
      return f / fscale + penalty * violation(c);
    };
    const double phi0 = merit(x, lin.f, lin.c);
    double slope = lin.grad.dot(d) / fscale - penalty * violation(lin.c);
    if (slope >= 0.0) slope = -1e-12;

    double alpha = 1.0;
    VectorXd x_new;
    VectorXd c_new;
    double f_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = x + alpha * d;
      for (Eigen::Index i = 0; i < n; ++i) x_new[i] = clamp_to(x_new[i], problem.lower[i], problem.upper[i]);
      f_new = eval_objective(problem, x_new);
      c_new = eval_constraints(problem, x_new);
      if (merit(x_new, f_new, c_new) <= phi0 + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // Stalled: restart curvature and stop if even that made no progress.
      if (B.isIdentity()) break;
      B.setIdentity();
      continue;
    }

    Linearisation next = linearise(problem, x_new, options.fd_step);
    const VectorXd s = x_new - x;
    const VectorXd grad_l_old = lin.grad / fscale - lin.jac.transpose() * lambda;
    const VectorXd grad_l_new = next.grad / fscale - next.jac.transpose() * lambda;
    VectorXd y = grad_l_new - grad_l_old;
    const VectorXd Bs = B * s;
    const double sBs = s.dot(Bs);
    if (sBs > 1e-300) {
      double sy = s.dot(y);
      if (sy < 0.2 * sBs) {
        const double theta = 0.8 * sBs / (sBs - sy);
        y = theta * y + (1.0 - theta) * Bs;
        sy = s.dot(y);
      }
      if (sy > 1e-300) B += (y * y.transpose()) / sy - (Bs * Bs.transpose()) / sBs;
    }
    x = x_new;
    lin = std::move(next);
  }

  result.x.assign(x.data(), x.data() + n);
  result.objective = lin.f;
  result.max_violation = max_violation(lin.c);
  result.iterations = iter;
  return result;
}

}  // namespace hybrid
