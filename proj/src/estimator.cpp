#include "l2e/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "l2e/stats.hpp"

namespace l2e {

namespace {

double grid_step(const std::vector<int>& sizes) {
  if (sizes.size() < 2) return 1.0;
  return static_cast<double>(sizes.back() - sizes.front()) /
         static_cast<double>(sizes.size() - 1);
}

LearningCurve fit_curve(const LearningTrajectory& traj,
                        const EstimatorConfig& config) {
  if (config.fitter == FitterKind::spline)
    return fit_spline(traj, config.spline_degree, config.spline_knots);
  return fit_power_law(traj);
}

}  // namespace

double clamp_metric(double value, Metric metric) {
  return metric == Metric::auc ? std::clamp(value, 0.0, 1.0)
                               : std::max(value, 0.0);
}

double point_estimate(const LearningCurve& curve, double n, Metric metric) {
  return clamp_metric(evaluate_curve(curve, n), metric);
}

double VarianceModel::at(double curve_value, int test_size) const {
  if (test_size < 1) throw InvalidInput("variance model: empty test set");
  if (metric == Metric::auc) {
    int pos = static_cast<int>(
        std::lround(positive_share * static_cast<double>(test_size)));
    pos = std::clamp(pos, 1, std::max(test_size - 1, 1));
    const int neg = std::max(test_size - pos, 1);
    return bamber_variance(clamp_metric(curve_value, metric), pos, neg);
  }
  return faber_variance(clamp_metric(curve_value, metric), test_size);
}

int select_n_opt_mse(const LearningCurve& curve, int total_rows,
                     const VarianceModel& variance, int lo, int hi,
                     Metric metric) {
  if (lo < 1 || lo > hi || hi >= total_rows)
    throw InvalidInput("n_opt: need 1 <= lo <= hi < N");
  const double f_full =
      point_estimate(curve, static_cast<double>(total_rows), metric);
  int best = lo;
  double best_obj = std::numeric_limits<double>::infinity();
  for (int n = lo; n <= hi; ++n) {
    const double f_n = point_estimate(curve, static_cast<double>(n), metric);
    const double bias = metric_direction(metric) == Direction::increasing
                            ? f_full - f_n
                            : f_n - f_full;
    const double obj = bias * bias + variance.at(f_n, total_rows - n);
    if (obj < best_obj) {  // strict: ties keep the smaller n
      best_obj = obj;
      best = n;
    }
  }
  return best;
}

int select_n_opt_bias_margin(const LearningCurve& curve, int total_rows,
                             Metric metric, double margin_fraction, int lo,
                             int hi, bool* margin_violated) {
  if (lo < 1 || lo > hi || hi >= total_rows)
    throw InvalidInput("n_opt: need 1 <= lo <= hi < N");
  if (!(margin_fraction > 0.0))
    throw InvalidInput("n_opt: margin fraction must be positive");
  const double f_full =
      point_estimate(curve, static_cast<double>(total_rows), metric);
  const double margin = margin_fraction * std::abs(f_full);
  if (margin_violated) *margin_violated = false;
  for (int n = lo; n <= hi; ++n) {
    const double f_n = point_estimate(curve, static_cast<double>(n), metric);
    const double gap = metric_direction(metric) == Direction::increasing
                           ? f_full - f_n
                           : f_n - f_full;
    if (gap <= margin) return n;
  }
  if (margin_violated) *margin_violated = true;
  return hi;
}

double median_bound(const std::vector<double>& split_bounds, Metric metric) {
  if (split_bounds.size() < 2)
    throw InvalidInput("median_bound: need at least 2 split bounds");
  return metric == Metric::auc ? stats::lower_median(split_bounds)
                               : stats::upper_median(split_bounds);
}

SubsamplePlan default_plan(const Dataset& data, int n_min, int count,
                           int repeats, std::uint64_t seed, int min_test) {
  data.validate();
  const int n_max = data.n_rows() - min_test;
  if (n_max < n_min)
    throw InvalidInput("plan: dataset too small for the requested grid");
  SubsamplePlan plan;
  plan.sizes = homogeneous_grid(n_min, n_max, count);
  plan.repeats = repeats;
  plan.balanced = data.task == Task::classification;
  plan.seed = seed;
  plan.min_test = min_test;
  return plan;
}

BoundReport learn2evaluate(const Dataset& data, const LearnerSpec& learner,
                           Metric metric, const EstimatorConfig& config) {
  LearningTrajectory traj = build_trajectory(data, learner, metric,
                                             config.plan, config.alpha,
                                             config.workers);
  return learn2evaluate(data, learner, metric, config, traj);
}

BoundReport learn2evaluate(const Dataset& data, const LearnerSpec& learner,
                           Metric metric, const EstimatorConfig& config,
                           const LearningTrajectory& trajectory) {
  data.validate();
  if (!(config.alpha > 0.0 && config.alpha < 0.5))
    throw InvalidInput("learn2evaluate: alpha outside (0, 0.5)");

  BoundReport report;
  report.metric = metric;
  report.alpha = config.alpha;
  report.selection_rule = config.selection;
  report.trajectory = trajectory;
  report.fitter_used = config.fitter;

  const LearningTrajectory* traj = &report.trajectory;

  // The auto fitter looks for an S-shaped trajectory; when the logistic
  // inflection sits inside the grid it rebuilds the trajectory past the
  // inflection and falls back to the plain power law otherwise.
  if (config.fitter == FitterKind::auto_s_shape) {
    report.fitter_used = FitterKind::power_law;
    if (traj->points.size() >= 6) {
      LogisticFit logistic = fit_logistic(*traj);
      const double step = grid_step(config.plan.sizes);
      if (!logistic.degenerate &&
          logistic.inflection >
              static_cast<double>(traj->points.front().size) + step) {
        try {
          RefitResult refit =
              refit_after_inflection(data, learner, metric, logistic,
                                     config.plan, config.alpha, config.workers);
          report.trajectory = std::move(refit.trajectory);
          report.curve = std::move(refit.fit);
          report.s_shape_refit = true;
        } catch (const InsufficientRange&) {
          report.recommend_more_samples = true;
        }
      }
    }
  }
  if (!report.s_shape_refit) report.curve = fit_curve(*traj, config);

  const int total = data.n_rows();
  report.point_estimate =
      point_estimate(report.curve, static_cast<double>(total), metric);

  const int lo = traj->points.front().size;
  const int hi = traj->points.back().size;
  if (config.selection == SelectionRule::mse_min) {
    VarianceModel vm;
    vm.metric = metric;
    if (metric == Metric::auc)
      vm.positive_share = static_cast<double>(data.count_positive()) /
                          static_cast<double>(total);
    report.n_opt = select_n_opt_mse(report.curve, total, vm, lo, hi, metric);
  } else {
    report.n_opt = select_n_opt_bias_margin(report.curve, total, metric,
                                            config.margin_fraction, lo, hi,
                                            &report.margin_violated);
  }

  // Split records at n_opt: reuse the trajectory's when n_opt lies on the
  // grid, else run a fresh repeated hold-out there (same seed streams).
  const auto* at_opt = traj->splits_for(report.n_opt);
  if (at_opt != nullptr) {
    report.bound_splits = *at_opt;
  } else {
    report.bound_splits = repeated_holdout(
        data, learner, metric, report.n_opt, config.plan.repeats, config.alpha,
        config.plan.seed, config.workers);
  }

  std::vector<double> bounds;
  bounds.reserve(report.bound_splits.size());
  for (const auto& e : report.bound_splits) bounds.push_back(e.bound);
  report.bound = median_bound(bounds, metric);

  const double f_opt = point_estimate(
      report.curve, static_cast<double>(report.n_opt), metric);
  // Signed extrapolation gap f(N) - f(n_opt): nonnegative for AUC,
  // nonpositive for PMSE. Adding it moves an AUC lower bound up and a PMSE
  // upper bound down, recentering the bound at the full sample size.
  report.empirical_bias = report.point_estimate - f_opt;
  report.bound_bc = report.bound + report.empirical_bias;
  return report;
}

}  // namespace l2e
