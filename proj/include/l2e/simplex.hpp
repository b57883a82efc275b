#pragma once

#include <Eigen/Dense>
#include <vector>

namespace l2e::lp {

enum class ConstraintSense { le, ge, eq };

struct Constraint {
  Eigen::VectorXd coeffs;
  ConstraintSense sense = ConstraintSense::le;
  double rhs = 0.0;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::optimal;
  Eigen::VectorXd x;
  double objective = 0.0;
};

// Minimize c'x subject to the constraints and x >= 0, by the two-phase
// dense tableau simplex method with Bland's rule (anti-cycling). Intended
// for the small dense programs that arise in curve fitting; not a
// general-purpose sparse solver.
LpResult solve(const Eigen::VectorXd& c,
               const std::vector<Constraint>& constraints);

}  // namespace l2e::lp
