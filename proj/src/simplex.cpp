#include "l2e/simplex.hpp"

#include <cmath>
#include <limits>

#include "l2e/errors.hpp"

namespace l2e::lp {

namespace {

constexpr double kCostTol = 1e-9;   // reduced-cost optimality tolerance
constexpr double kPivotTol = 1e-9;  // entries below this are treated as zero
constexpr double kFeasTol = 1e-7;   // rhs / residual feasibility tolerance

// The full program in standard form: structural, slack/surplus, and
// artificial columns. Kept immutable so the working tableau can be rebuilt
// exactly from it for any basis, which resets accumulated pivot roundoff.
struct Program {
  Eigen::MatrixXd a;  // m x total
  Eigen::VectorXd b;  // m, nonnegative
  int n_struct = 0;
  int n_slack = 0;

  int m() const { return static_cast<int>(a.rows()); }
  int total() const { return static_cast<int>(a.cols()); }
};

struct Tableau {
  Eigen::MatrixXd rows;  // m x (total + 1), last column is the rhs
  Eigen::VectorXd obj;   // total + 1, last entry is -objective value
  std::vector<int> basis;

  int m() const { return static_cast<int>(rows.rows()); }
  int cols() const { return static_cast<int>(rows.cols()) - 1; }

  void pivot(int r, int c) {
    rows.row(r) /= rows(r, c);
    for (int i = 0; i < m(); ++i) {
      if (i == r) continue;
      const double f = rows(i, c);
      if (f != 0.0) {
        rows.row(i) -= f * rows.row(r);
        rows(i, c) = 0.0;
      }
    }
    const double f = obj[c];
    if (f != 0.0) {
      obj.transpose() -= f * rows.row(r);
      obj[c] = 0.0;
    }
    basis[r] = c;
  }

  // One simplex sweep with Bland's rule, at most `budget` pivots. Rows with
  // entries at or below `leave_tol` never block or host a pivot. Returns:
  //   0 = no improving column (locally optimal for this tableau)
  //   1 = entering column with no blocking row (looks unbounded)
  //   2 = pivot budget exhausted (caller should refactorize and resume)
  int iterate(int usable_cols, int budget, double leave_tol) {
    for (int step = 0; step < budget; ++step) {
      int enter = -1;
      for (int j = 0; j < usable_cols; ++j) {
        if (obj[j] < -kCostTol) {
          enter = j;
          break;  // Bland: smallest improving index
        }
      }
      if (enter < 0) return 0;

      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m(); ++i) {
        const double a = rows(i, enter);
        if (a > leave_tol) {
          const double ratio = std::max(rows(i, cols()), 0.0) / a;
          if (ratio < best_ratio - 1e-12 ||
              (ratio < best_ratio + 1e-12 &&
               (leave < 0 || basis[i] < basis[leave]))) {
            best_ratio = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return 1;
      pivot(leave, enter);
    }
    return 2;
  }
};

// Rebuilds the tableau exactly from the original program for the current
// basis: rows = B^{-1}[A | b], objective row priced out for the basis.
// Returns false when the recorded basis matrix is numerically singular or
// the implied basic point is infeasible beyond tolerance.
bool refactor(Tableau& t, const Program& p, const Eigen::VectorXd& cost) {
  const int m = p.m();
  Eigen::MatrixXd basis_mat(m, m);
  for (int i = 0; i < m; ++i) basis_mat.col(i) = p.a.col(t.basis[i]);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(basis_mat);
  if (!lu.isInvertible()) return false;

  t.rows.resize(m, p.total() + 1);
  t.rows.leftCols(p.total()) = lu.solve(p.a);
  Eigen::VectorXd xb = lu.solve(p.b);
  for (int i = 0; i < m; ++i) {
    if (xb[i] < -kFeasTol) return false;
    if (xb[i] < 0.0) xb[i] = 0.0;
  }
  t.rows.col(p.total()) = xb;
  // Snap the basic columns to exact unit vectors.
  for (int i = 0; i < m; ++i) {
    t.rows.col(t.basis[i]).setZero();
    t.rows(i, t.basis[i]) = 1.0;
  }

  t.obj.resize(p.total() + 1);
  t.obj.head(p.total()) = cost;
  t.obj[p.total()] = 0.0;
  for (int i = 0; i < m; ++i) {
    const double cb = cost[t.basis[i]];
    if (cb != 0.0) t.obj.transpose() -= cb * t.rows.row(i);
  }
  for (int i = 0; i < m; ++i) t.obj[t.basis[i]] = 0.0;
  return true;
}

// Minimizes `cost` over the program starting from the basis recorded in the
// tableau, refactorizing every few pivots and re-verifying every optimality
// or unboundedness claim on a freshly rebuilt tableau. When a rebuilt basis
// turns out singular or infeasible (a pivot chosen on roundoff noise), the
// last validated basis is restored and the pivot tolerance escalated so the
// same bad pivot is rejected. Returns optimal or unbounded; irrecoverable
// numerical failure surfaces as infeasible.
LpStatus minimize(Tableau& t, const Program& p, const Eigen::VectorXd& cost,
                  int usable_cols) {
  const int budget = 16;
  const int max_rounds = 64 + 32 * p.m();
  double leave_tol = kPivotTol;
  if (!refactor(t, p, cost)) return LpStatus::infeasible;
  std::vector<int> good_basis = t.basis;
  for (int round = 0; round < max_rounds; ++round) {
    const int state = t.iterate(usable_cols, budget, leave_tol);
    if (!refactor(t, p, cost)) {
      // The basis reached through working-tableau pivots is numerically
      // invalid; back up and retry with a stricter pivot threshold.
      if (leave_tol >= 1e-4) return LpStatus::infeasible;
      leave_tol *= 1e3;
      t.basis = good_basis;
      if (!refactor(t, p, cost)) return LpStatus::infeasible;
      continue;
    }
    good_basis = t.basis;
    if (state == 2) continue;  // budget spent; resume on the fresh tableau
    // Re-test the claim against exactly recomputed reduced costs.
    int enter = -1;
    for (int j = 0; j < usable_cols; ++j)
      if (t.obj[j] < -kCostTol) {
        enter = j;
        break;
      }
    if (enter < 0) return LpStatus::optimal;
    if (state == 1) {
      bool blocked = false;
      for (int i = 0; i < p.m() && !blocked; ++i)
        if (t.rows(i, enter) > leave_tol) blocked = true;
      if (!blocked) return LpStatus::unbounded;
    }
  }
  return LpStatus::infeasible;  // failed to converge within the round cap
}

}  // namespace

LpResult solve(const Eigen::VectorXd& c,
               const std::vector<Constraint>& constraints) {
  const int n = static_cast<int>(c.size());
  const int m = static_cast<int>(constraints.size());
  for (const auto& con : constraints)
    if (con.coeffs.size() != n)
      throw InvalidInput("lp: constraint width differs from objective");

  // Rows are normalized to nonnegative rhs first; the effective sense after
  // normalization decides the slack sign and whether an artificial variable
  // is needed.
  std::vector<int> slack_col(m, -1), art_col(m, -1);
  std::vector<ConstraintSense> sense(m);
  Eigen::MatrixXd a(m, n);
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) {
    a.row(i) = constraints[i].coeffs.transpose();
    b[i] = constraints[i].rhs;
    sense[i] = constraints[i].sense;
    if (b[i] < 0.0) {
      a.row(i) = -a.row(i);
      b[i] = -b[i];
      if (sense[i] == ConstraintSense::le)
        sense[i] = ConstraintSense::ge;
      else if (sense[i] == ConstraintSense::ge)
        sense[i] = ConstraintSense::le;
    }
  }
  int n_slack = 0, n_art = 0;
  for (int i = 0; i < m; ++i) {
    if (constraints[i].sense != ConstraintSense::eq)
      slack_col[i] = n + n_slack++;
    if (sense[i] != ConstraintSense::le) ++n_art;
  }

  Program p;
  p.n_struct = n;
  p.n_slack = n_slack;
  p.a = Eigen::MatrixXd::Zero(m, n + n_slack + n_art);
  p.b = b;
  int art = n + n_slack;
  std::vector<int> start_basis(m, -1);
  for (int i = 0; i < m; ++i) {
    p.a.block(i, 0, 1, n) = a.row(i);
    if (slack_col[i] >= 0)
      p.a(i, slack_col[i]) = sense[i] == ConstraintSense::le ? 1.0 : -1.0;
    if (sense[i] == ConstraintSense::le) {
      start_basis[i] = slack_col[i];
    } else {
      art_col[i] = art++;
      p.a(i, art_col[i]) = 1.0;
      start_basis[i] = art_col[i];
    }
  }
  const int total = p.total();

  Tableau t;
  t.basis = start_basis;

  LpResult result;

  if (n_art > 0) {
    // Phase 1: minimize the sum of artificials over every column.
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(total);
    phase1.segment(n + n_slack, n_art).setOnes();
    const LpStatus st = minimize(t, p, phase1, total);
    if (st != LpStatus::optimal) {
      result.status = LpStatus::infeasible;
      return result;
    }
    double art_sum = 0.0;
    for (int i = 0; i < m; ++i)
      if (t.basis[i] >= n + n_slack) art_sum += t.rows(i, total);
    if (art_sum > kFeasTol) {
      result.status = LpStatus::infeasible;
      return result;
    }
    // Drive remaining zero-valued artificials out of the basis where a
    // nonzero pivot exists; rows with none are redundant and keep their
    // artificial basic at value zero, which is harmless.
    for (int i = 0; i < m; ++i) {
      if (t.basis[i] < n + n_slack) continue;
      for (int j = 0; j < n + n_slack; ++j)
        if (std::abs(t.rows(i, j)) > 1e-7) {
          t.pivot(i, j);
          break;
        }
    }
  }

  // Phase 2: the original objective; artificials may not re-enter.
  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(total);
  phase2.head(n) = c;
  const LpStatus st = minimize(t, p, phase2, n + n_slack);
  if (st != LpStatus::optimal) {
    result.status = st;
    return result;
  }

  result.status = LpStatus::optimal;
  result.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i)
    if (t.basis[i] >= 0 && t.basis[i] < n) result.x[t.basis[i]] = t.rows(i, total);
  result.objective = c.dot(result.x);
  return result;
}

}  // namespace l2e::lp
