#include "l2e/curvefit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "l2e/simplex.hpp"
#include "l2e/stats.hpp"

namespace l2e {

namespace {

constexpr int kNmMaxIter = 2000;
constexpr double kNmTol = 1e-8;

struct NmResult {
  Eigen::VectorXd x;
  double value = 0.0;
};

// Nelder-Mead with standard coefficients. Stops when every vertex is
// within tol of the best one (infinity norm) or after max_iter reflections.
NmResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& fn,
                     const Eigen::VectorXd& x0, double step) {
  const int d = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> xs(d + 1, x0);
  std::vector<double> fs(d + 1);
  for (int i = 0; i < d; ++i) xs[i + 1][i] += step * std::max(1.0, std::abs(x0[i]));
  for (int i = 0; i <= d; ++i) fs[i] = fn(xs[i]);

  auto order = [&]() {
    std::vector<int> idx(d + 1);
    for (int i = 0; i <= d; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return fs[a] < fs[b]; });
    std::vector<Eigen::VectorXd> nx(d + 1);
    std::vector<double> nf(d + 1);
    for (int i = 0; i <= d; ++i) {
      nx[i] = xs[idx[i]];
      nf[i] = fs[idx[i]];
    }
    xs = std::move(nx);
    fs = std::move(nf);
  };

  for (int iter = 0; iter < kNmMaxIter; ++iter) {
    order();
    double spread = 0.0;
    for (int i = 1; i <= d; ++i)
      spread = std::max(spread, (xs[i] - xs[0]).cwiseAbs().maxCoeff());
    if (spread < kNmTol) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) centroid += xs[i];
    centroid /= static_cast<double>(d);

    const Eigen::VectorXd xr = centroid + (centroid - xs[d]);
    const double fr = fn(xr);
    if (fr < fs[0]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - xs[d]);
      const double fe = fn(xe);
      if (fe < fr) {
        xs[d] = xe;
        fs[d] = fe;
      } else {
        xs[d] = xr;
        fs[d] = fr;
      }
    } else if (fr < fs[d - 1]) {
      xs[d] = xr;
      fs[d] = fr;
    } else {
      const bool outside = fr < fs[d];
      const Eigen::VectorXd xc =
          centroid + 0.5 * ((outside ? xr : xs[d]) - centroid);
      const double fc = fn(xc);
      if (fc < (outside ? fr : fs[d])) {
        xs[d] = xc;
        fs[d] = fc;
      } else {
        for (int i = 1; i <= d; ++i) {
          xs[i] = xs[0] + 0.5 * (xs[i] - xs[0]);
          fs[i] = fn(xs[i]);
        }
      }
    }
  }
  order();
  return NmResult{xs[0], fs[0]};
}

double power_eval(double delta, double beta, double gamma, double sign,
                  double n) {
  return delta + sign * beta * std::exp(-gamma * std::log(n));
}

struct PowerBox {
  double delta_lo, delta_hi;
  double sign;  // -1 approaches delta from below (increasing metric)
};

Eigen::Vector3d project_power(Eigen::Vector3d v, const PowerBox& box) {
  v[0] = std::clamp(v[0], box.delta_lo, box.delta_hi);
  v[1] = std::max(v[1], 0.0);
  v[2] = std::clamp(v[2], 0.0, 50.0);
  return v;
}

double power_sse(const Eigen::Vector3d& v, const PowerBox& box,
                 const std::vector<double>& ns, const std::vector<double>& ys) {
  double sse = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double r = power_eval(v[0], v[1], v[2], box.sign, ns[i]) - ys[i];
    sse += r * r;
  }
  return sse;
}

// Least-squares beta for fixed (delta, gamma), clamped to be nonnegative.
double solve_beta(double delta, double gamma, double sign,
                  const std::vector<double>& ns, const std::vector<double>& ys) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double t = std::exp(-gamma * std::log(ns[i]));
    num += t * (ys[i] - delta);
    den += t * t;
  }
  if (den <= 0.0) return 0.0;
  return std::max(sign * num / den, 0.0);
}

void trajectory_arrays(const LearningTrajectory& traj, std::vector<double>* ns,
                       std::vector<double>* ys) {
  for (const auto& pt : traj.points) {
    ns->push_back(static_cast<double>(pt.size));
    ys->push_back(pt.estimate);
  }
}

// Stable evaluation of the generalized logistic at parameter vector
// (A, K, log B, M, log nu).
double logistic_eval(const Eigen::VectorXd& v, double n) {
  const double a = v[0], k = v[1];
  const double b = std::exp(v[2]);
  const double m = v[3];
  const double nu = std::exp(v[4]);
  const double u = -b * (n - m);
  const double log_denom = (u > 35.0 ? u : std::log1p(std::exp(u))) / nu;
  return a + (k - a) * std::exp(-log_denom);
}

Eigen::VectorXd project_logistic(Eigen::VectorXd v, double n_lo, double n_hi) {
  const double span = std::max(n_hi - n_lo, 1.0);
  v[2] = std::clamp(v[2], std::log(1e-6), std::log(1e3));
  v[3] = std::clamp(v[3], n_lo - 5.0 * span, n_hi + 5.0 * span);
  v[4] = std::clamp(v[4], std::log(0.01), std::log(100.0));
  return v;
}

}  // namespace

std::vector<std::pair<double, double>> power_law_starts(
    const LearningTrajectory& traj) {
  std::vector<double> ys;
  for (const auto& pt : traj.points) ys.push_back(pt.estimate);
  const double y_min = *std::min_element(ys.begin(), ys.end());
  const double y_max = *std::max_element(ys.begin(), ys.end());

  std::vector<double> deltas;
  if (metric_direction(traj.metric) == Direction::increasing) {
    deltas = {std::clamp(y_max, 0.5, 1.0), 0.75, 1.0,
              std::clamp(0.5 * (y_max + 1.0), 0.5, 1.0)};
  } else {
    deltas = {std::max(y_min, 0.0), std::max(0.5 * y_min, 0.0),
              std::max(2.0 * y_min, 0.0), 0.0};
  }
  const std::vector<double> gammas = {0.3, 0.7, 1.0, 1.5};

  std::vector<std::pair<double, double>> starts;
  for (double d : deltas)
    for (double g : gammas) starts.emplace_back(d, g);
  return starts;
}

PowerLawFit fit_power_law(const LearningTrajectory& traj) {
  if (traj.points.size() < 3)
    throw InsufficientPoints("power law: need at least 3 trajectory points");
  std::vector<double> ns, ys;
  trajectory_arrays(traj, &ns, &ys);

  const Direction dir = metric_direction(traj.metric);
  PowerBox box;
  box.sign = dir == Direction::increasing ? -1.0 : 1.0;
  if (dir == Direction::increasing) {
    box.delta_lo = 0.5;
    box.delta_hi = 1.0;
  } else {
    box.delta_lo = 0.0;
    box.delta_hi = std::numeric_limits<double>::infinity();
  }

  auto objective = [&](const Eigen::VectorXd& v) {
    return power_sse(project_power(v, box), box, ns, ys);
  };

  Eigen::Vector3d best = Eigen::Vector3d::Zero();
  double best_sse = std::numeric_limits<double>::infinity();
  for (const auto& [delta0, gamma0] : power_law_starts(traj)) {
    Eigen::Vector3d x0(delta0, solve_beta(delta0, gamma0, box.sign, ns, ys),
                       gamma0);
    NmResult r = nelder_mead(objective, x0, 0.25);
    if (r.value < best_sse) {
      best_sse = r.value;
      best = project_power(r.x, box);
    }
  }
  // One polishing restart from the winner.
  {
    NmResult r = nelder_mead(objective, best, 0.05);
    if (r.value < best_sse) {
      best_sse = r.value;
      best = project_power(r.x, box);
    }
  }

  // A constant curve is nested in the family (beta = 0); when it matches
  // the optimizer the trajectory carries no usable trend.
  const double delta_flat =
      std::clamp(stats::mean(ys), box.delta_lo, box.delta_hi);
  double flat_sse = 0.0;
  for (double y : ys) flat_sse += (y - delta_flat) * (y - delta_flat);

  PowerLawFit fit;
  fit.direction = dir;
  if (flat_sse <= best_sse + 1e-10 * (1.0 + flat_sse)) {
    fit.delta = delta_flat;
    fit.beta = 0.0;
    fit.gamma = power_law_starts(traj).front().second;
    fit.residual_sse = flat_sse;
    fit.degenerate = true;
  } else {
    fit.delta = best[0];
    fit.beta = best[1];
    fit.gamma = best[2];
    fit.residual_sse = best_sse;
    fit.degenerate = false;
  }
  return fit;
}

SplineFit fit_spline(const LearningTrajectory& traj, int degree,
                     int interior_knots) {
  const int j_count = static_cast<int>(traj.points.size());
  if (degree < 1) throw InvalidInput("spline: degree must be at least 1");
  if (j_count < degree + 2)
    throw InsufficientPoints("spline: need at least degree + 2 points");

  std::vector<double> ns, ys;
  trajectory_arrays(traj, &ns, &ys);
  const int m_knots =
      interior_knots < 0 ? std::min(j_count - 2, 5) : interior_knots;
  BSplineBasis basis = BSplineBasis::from_quantile_knots(ns, degree, m_knots);
  const int nb = basis.size();
  const Direction dir = metric_direction(traj.metric);

  // Variables: [a (nb) | c (nb) | u (J) | v (J)], theta = a - c, all >= 0.
  // Minimize sum(u + v) subject to B theta + u - v = y and the shape rows.
  const int n_var = 2 * nb + 2 * j_count;
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(n_var);
  cost.segment(2 * nb, 2 * j_count).setOnes();

  std::vector<Eigen::VectorXd> rows(j_count);
  for (int i = 0; i < j_count; ++i) rows[i] = basis.evaluate(ns[i]);

  auto theta_row = [&](const Eigen::VectorXd& w) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n_var);
    r.head(nb) = w;
    r.segment(nb, nb) = -w;
    return r;
  };

  std::vector<lp::Constraint> cons;
  for (int i = 0; i < j_count; ++i) {
    Eigen::VectorXd r = theta_row(rows[i]);
    r[2 * nb + i] = 1.0;
    r[2 * nb + j_count + i] = -1.0;
    cons.push_back({r, lp::ConstraintSense::eq, ys[i]});
  }
  for (int i = 0; i + 1 < j_count; ++i) {
    // f(n_{i+1}) - f(n_i), nondecreasing for improving metrics and
    // nonincreasing otherwise.
    Eigen::VectorXd r = theta_row(rows[i + 1] - rows[i]);
    cons.push_back({r,
                    dir == Direction::increasing ? lp::ConstraintSense::ge
                                                 : lp::ConstraintSense::le,
                    0.0});
  }
  for (int i = 0; i + 2 < j_count; ++i) {
    // Scaled second divided difference:
    //   d1 * f(n_{i+2}) - (d1 + d2) * f(n_{i+1}) + d2 * f(n_i)
    // nonpositive (concave) for increasing metrics, nonnegative (convex)
    // for decreasing ones.
    const double d1 = ns[i + 1] - ns[i];
    const double d2 = ns[i + 2] - ns[i + 1];
    Eigen::VectorXd w = d1 * rows[i + 2] - (d1 + d2) * rows[i + 1] + d2 * rows[i];
    cons.push_back({theta_row(w),
                    dir == Direction::increasing ? lp::ConstraintSense::le
                                                 : lp::ConstraintSense::ge,
                    0.0});
  }

  lp::LpResult sol = lp::solve(cost, cons);
  if (sol.status != lp::LpStatus::optimal)
    throw FitFailure("spline: constrained L1 program did not solve");

  SplineFit fit{basis,
                sol.x.head(nb) - sol.x.segment(nb, nb),
                dir,
                sol.objective,
                {},
                {}};

  std::vector<double> fitted(j_count);
  for (int i = 0; i < j_count; ++i) fitted[i] = rows[i].dot(fit.theta);
  for (int i = 0; i + 1 < j_count; ++i)
    if (std::abs(fitted[i + 1] - fitted[i]) <= 1e-8)
      fit.active_monotone.push_back(i);
  for (int i = 0; i + 2 < j_count; ++i) {
    const double d1 = ns[i + 1] - ns[i];
    const double d2 = ns[i + 2] - ns[i + 1];
    const double dd = (fitted[i + 2] - fitted[i + 1]) / d2 -
                      (fitted[i + 1] - fitted[i]) / d1;
    if (std::abs(dd) <= 1e-8) fit.active_curvature.push_back(i);
  }
  return fit;
}

LogisticFit fit_logistic(const LearningTrajectory& traj) {
  const int j_count = static_cast<int>(traj.points.size());
  if (j_count < 6)
    throw InsufficientPoints("logistic: need at least 6 trajectory points");
  std::vector<double> ns, ys;
  trajectory_arrays(traj, &ns, &ys);
  const double n_lo = ns.front(), n_hi = ns.back();
  const double y_min = *std::min_element(ys.begin(), ys.end());
  const double y_max = *std::max_element(ys.begin(), ys.end());

  LogisticFit fit;
  if (y_max - y_min < 1e-10) {
    fit.left_asymptote = fit.right_asymptote = stats::mean(ys);
    fit.growth_rate = 1e-6;
    fit.location = 0.5 * (n_lo + n_hi);
    fit.asymmetry = 1.0;
    fit.inflection = std::numeric_limits<double>::quiet_NaN();
    fit.residual_sse = 0.0;
    for (double y : ys) {
      const double r = y - fit.left_asymptote;
      fit.residual_sse += r * r;
    }
    fit.degenerate = true;
    return fit;
  }

  auto objective = [&](const Eigen::VectorXd& v) {
    const Eigen::VectorXd pv = project_logistic(v, n_lo, n_hi);
    double sse = 0.0;
    for (int i = 0; i < j_count; ++i) {
      const double r = logistic_eval(pv, ns[i]) - ys[i];
      sse += r * r;
    }
    return sse;
  };

  double max_slope = 0.0;
  for (int i = 0; i + 1 < j_count; ++i)
    max_slope = std::max(
        max_slope, std::abs((ys[i + 1] - ys[i]) / (ns[i + 1] - ns[i])));
  const double b_base =
      std::max(4.0 * max_slope / std::max(std::abs(ys.back() - ys.front()),
                                          1e-3),
               1e-4);

  Eigen::VectorXd best;
  double best_sse = std::numeric_limits<double>::infinity();
  for (double mq : {0.25, 0.5, 0.75}) {
    for (double bf : {0.5, 1.0, 2.0}) {
      Eigen::VectorXd x0(5);
      x0 << ys.front(), ys.back(), std::log(b_base * bf),
          n_lo + mq * (n_hi - n_lo), 0.0;
      NmResult r = nelder_mead(objective, x0, 0.25);
      if (r.value < best_sse) {
        best_sse = r.value;
        best = project_logistic(r.x, n_lo, n_hi);
      }
    }
  }
  {
    NmResult r = nelder_mead(objective, best, 0.05);
    if (r.value < best_sse) {
      best_sse = r.value;
      best = project_logistic(r.x, n_lo, n_hi);
    }
  }

  fit.left_asymptote = best[0];
  fit.right_asymptote = best[1];
  fit.growth_rate = std::exp(best[2]);
  fit.location = best[3];
  fit.asymmetry = std::exp(best[4]);
  fit.inflection = fit.location - std::log(fit.asymmetry) / fit.growth_rate;
  fit.residual_sse = best_sse;
  fit.degenerate = std::abs(fit.right_asymptote - fit.left_asymptote) < 1e-8 ||
                   !std::isfinite(fit.inflection);
  return fit;
}

double evaluate_curve(const PowerLawFit& fit, double n) {
  if (!(n > 0.0)) throw InvalidInput("curve: n must be positive");
  const double sign = fit.direction == Direction::increasing ? -1.0 : 1.0;
  return power_eval(fit.delta, fit.beta, fit.gamma, sign, n);
}

double evaluate_curve(const SplineFit& fit, double n) {
  if (!(n > 0.0)) throw InvalidInput("curve: n must be positive");
  return fit.basis.evaluate(n).dot(fit.theta);
}

double evaluate_curve(const LogisticFit& fit, double n) {
  if (!(n > 0.0)) throw InvalidInput("curve: n must be positive");
  Eigen::VectorXd v(5);
  v << fit.left_asymptote, fit.right_asymptote, std::log(fit.growth_rate),
      fit.location, std::log(fit.asymmetry);
  return logistic_eval(v, n);
}

double evaluate_curve(const LearningCurve& curve, double n) {
  return std::visit([n](const auto& fit) { return evaluate_curve(fit, n); },
                    curve);
}

RefitResult refit_after_inflection(const Dataset& data,
                                   const LearnerSpec& learner, Metric metric,
                                   const LogisticFit& logistic,
                                   const SubsamplePlan& plan, double alpha,
                                   int workers) {
  if (logistic.degenerate || !std::isfinite(logistic.inflection))
    throw InvalidInput("refit: logistic fit has no usable inflection");
  plan.validate(data);
  const int j_count = static_cast<int>(plan.sizes.size());
  const int n_max = data.n_rows() - plan.min_test;
  const double step =
      static_cast<double>(plan.sizes.back() - plan.sizes.front()) /
      static_cast<double>(std::max(j_count - 1, 1));

  if (!(logistic.inflection < static_cast<double>(n_max) - 2.0 * step))
    throw InsufficientRange(
        "refit: inflection leaves no post-inflection range; acquire more "
        "samples");

  const int n_lo = std::max(
      {static_cast<int>(std::ceil(logistic.inflection)), plan.sizes.front(), 2});
  std::vector<int> sizes = homogeneous_grid(n_lo, n_max, j_count);
  if (sizes.size() < 3)
    throw InsufficientRange(
        "refit: fewer than 3 usable sizes past the inflection; acquire more "
        "samples");

  SubsamplePlan refit_plan = plan;
  refit_plan.sizes = sizes;

  RefitResult out;
  out.sizes = sizes;
  out.trajectory =
      build_trajectory(data, learner, metric, refit_plan, alpha, workers);
  out.fit = fit_power_law(out.trajectory);
  return out;
}

}  // namespace l2e
