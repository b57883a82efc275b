#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "l2e/core.hpp"
#include "l2e/curvefit.hpp"
#include "l2e/learners.hpp"
#include "l2e/resampling.hpp"

namespace l2e {

enum class FitterKind { power_law, spline, auto_s_shape };
enum class SelectionRule { mse_min, bias_margin };

constexpr const char* to_string(FitterKind f) {
  switch (f) {
    case FitterKind::power_law: return "power_law";
    case FitterKind::spline: return "spline";
    default: return "auto_s_shape";
  }
}
constexpr const char* to_string(SelectionRule s) {
  return s == SelectionRule::mse_min ? "mse_min" : "bias_margin";
}

struct EstimatorConfig {
  FitterKind fitter = FitterKind::power_law;
  SelectionRule selection = SelectionRule::mse_min;
  double margin_fraction = 0.02;  // bias-margin rule: m = fraction * |f(N)|
  double alpha = 0.05;
  SubsamplePlan plan;
  int spline_degree = 2;
  int spline_knots = -1;  // < 0 selects min(J - 2, 5)
  int workers = 1;
};

// Plug-in variance model for the mean-squared-error criterion that picks
// n_opt: the closed-form AUC variance at the curve value with
// class-proportional test counts, or the PMSE normal-approximation
// variance.
struct VarianceModel {
  Metric metric = Metric::auc;
  double positive_share = 0.5;  // classification only

  double at(double curve_value, int test_size) const;
};

struct BoundReport {
  Metric metric = Metric::auc;
  double alpha = 0.05;
  double point_estimate = 0.0;  // f(N)
  int n_opt = 0;
  double bound = 0.0;           // median of the K split bounds at n_opt
  double bound_bc = 0.0;        // bound + empirical_bias, exactly
  double empirical_bias = 0.0;  // signed gap f(N) - f(n_opt)
  SelectionRule selection_rule = SelectionRule::mse_min;
  FitterKind fitter_used = FitterKind::power_law;
  LearningCurve curve;
  LearningTrajectory trajectory;
  std::vector<SplitEstimate> bound_splits;  // the K records at n_opt
  bool margin_violated = false;   // bias-margin rule found no admissible n
  bool s_shape_refit = false;     // auto fitter rebuilt past the inflection
  bool recommend_more_samples = false;
};

// Metric-appropriate clamp: AUC into [0, 1], PMSE into [0, inf).
double clamp_metric(double value, Metric metric);

// Curve value at the full sample size, clamped to the metric's range.
double point_estimate(const LearningCurve& curve, double n, Metric metric);

// Smallest n in [lo, hi] minimizing squared extrapolation bias plus the
// plug-in variance at test size N - n. Ties go to the smaller n.
int select_n_opt_mse(const LearningCurve& curve, int total_rows,
                     const VarianceModel& variance, int lo, int hi,
                     Metric metric);

// Smallest n in [lo, hi] whose curve value is within the margin
// m = margin_fraction * |f(N)| of f(N). Falls back to hi (and sets
// *margin_violated) when even hi misses the margin.
int select_n_opt_bias_margin(const LearningCurve& curve, int total_rows,
                             Metric metric, double margin_fraction, int lo,
                             int hi, bool* margin_violated = nullptr);

// Median aggregation of per-split bounds: lower median for lower (AUC)
// bounds, upper median for upper (PMSE) bounds. Needs at least 2 bounds.
double median_bound(const std::vector<double>& split_bounds, Metric metric);

// Evenly spaced default plan: `count` sizes over [n_min, N - min_test].
SubsamplePlan default_plan(const Dataset& data, int n_min = 20, int count = 10,
                           int repeats = 50, std::uint64_t seed = 0,
                           int min_test = 10);

// Full pipeline: trajectory, curve fit, n_opt, median bound at n_opt, bias
// correction. With an already-built trajectory use the second overload
// (the trajectory must come from the same data/plan for the bounds at
// n_opt to be meaningful).
BoundReport learn2evaluate(const Dataset& data, const LearnerSpec& learner,
                           Metric metric, const EstimatorConfig& config);
BoundReport learn2evaluate(const Dataset& data, const LearnerSpec& learner,
                           Metric metric, const EstimatorConfig& config,
                           const LearningTrajectory& trajectory);

}  // namespace l2e
