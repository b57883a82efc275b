#pragma once

#include <Eigen/Dense>
#include <variant>
#include <vector>

#include "l2e/bspline.hpp"
#include "l2e/core.hpp"
#include "l2e/learners.hpp"
#include "l2e/resampling.hpp"

namespace l2e {

// Three-parameter power law, delta -+ beta * n^(-gamma). The shape is
// monotone toward the asymptote delta: increasing metrics approach it from
// below, decreasing ones from above.
struct PowerLawFit {
  double delta = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  Direction direction = Direction::increasing;
  double residual_sse = 0.0;
  bool degenerate = false;  // a constant curve fits as well as the best fit
};

// Shape-constrained B-spline fitted by least absolute deviations.
struct SplineFit {
  BSplineBasis basis;
  Eigen::VectorXd theta;
  Direction direction = Direction::increasing;
  double l1_objective = 0.0;
  // Indices (into the trajectory's consecutive pairs/triples) where the
  // monotonicity or curvature constraint is tight at the solution.
  std::vector<int> active_monotone;
  std::vector<int> active_curvature;
};

// Generalized logistic curve
//   f(n) = A + (K - A) / (1 + exp(-B (n - M)))^(1/nu)
// used to detect an S-shaped (pre-inflection) trajectory.
struct LogisticFit {
  double left_asymptote = 0.0;   // A
  double right_asymptote = 0.0;  // K
  double growth_rate = 0.0;      // B
  double location = 0.0;         // M
  double asymmetry = 1.0;        // nu
  double inflection = 0.0;       // M - ln(nu)/B
  double residual_sse = 0.0;
  bool degenerate = false;
};

using LearningCurve = std::variant<PowerLawFit, SplineFit>;

// The (delta, gamma) starting pairs used by the power-law fit; beta is
// closed-form given the pair. Exposed so tests can check that the returned
// fit is at least as good as every start.
std::vector<std::pair<double, double>> power_law_starts(
    const LearningTrajectory& trajectory);

// Multi-start projected Nelder-Mead least-squares power-law fit. Needs at
// least 3 trajectory points. A trajectory that a constant explains as well
// as the optimizer's best candidate is returned with beta = 0 and the
// degenerate flag set.
PowerLawFit fit_power_law(const LearningTrajectory& trajectory);

// L1 spline fit with monotonicity and direction-appropriate curvature
// constraints enforced at the trajectory abscissas, solved as a linear
// program. interior_knots < 0 selects min(J - 2, 5). Needs J >= degree + 2.
SplineFit fit_spline(const LearningTrajectory& trajectory, int degree = 2,
                     int interior_knots = -1);

// Least-squares generalized logistic fit. Needs J >= 6.
LogisticFit fit_logistic(const LearningTrajectory& trajectory);

double evaluate_curve(const PowerLawFit& fit, double n);
double evaluate_curve(const SplineFit& fit, double n);
double evaluate_curve(const LogisticFit& fit, double n);
double evaluate_curve(const LearningCurve& curve, double n);

struct RefitResult {
  LearningTrajectory trajectory;
  PowerLawFit fit;
  std::vector<int> sizes;
};

// Rebuilds the trajectory on [inflection, N - min_test] and refits the
// power law there, for trajectories whose early points sit before the
// S-curve inflection. Throws InsufficientRange when the remaining range
// cannot hold a usable grid (fewer than 3 sizes, or the inflection sits
// within two grid steps of the top).
RefitResult refit_after_inflection(const Dataset& data,
                                   const LearnerSpec& learner, Metric metric,
                                   const LogisticFit& logistic,
                                   const SubsamplePlan& plan, double alpha,
                                   int workers = 1);

}  // namespace l2e
