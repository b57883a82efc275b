#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "l2e/core.hpp"
#include "l2e/estimator.hpp"
#include "l2e/rng.hpp"
#include "l2e/stats.hpp"

using namespace l2e;

namespace {

LearningCurve power_curve(double delta, double beta, double gamma,
                          Direction dir) {
  PowerLawFit f;
  f.delta = delta;
  f.beta = beta;
  f.gamma = gamma;
  f.direction = dir;
  return f;
}

EstimatorConfig small_config(const Dataset& d, int j_count, int repeats,
                             std::uint64_t seed) {
  EstimatorConfig cfg;
  cfg.plan = default_plan(d, 30, j_count, repeats, seed);
  return cfg;
}

}  // namespace

TEST_SUITE("estimator") {

TEST_CASE("metric clamps") {
  CHECK(clamp_metric(1.2, Metric::auc) == 1.0);
  CHECK(clamp_metric(-0.1, Metric::auc) == 0.0);
  CHECK(clamp_metric(0.57, Metric::auc) == 0.57);
  CHECK(clamp_metric(-1.0, Metric::pmse) == 0.0);
  CHECK(clamp_metric(5.0, Metric::pmse) == 5.0);
}

TEST_CASE("point estimate clamps the curve value") {
  const auto above = power_curve(1.05, 2.0, 0.7, Direction::increasing);
  CHECK(point_estimate(above, 1e6, Metric::auc) == 1.0);
  const auto inside = power_curve(0.9, 2.0, 0.7, Direction::increasing);
  CHECK(point_estimate(inside, 100.0, Metric::auc) ==
        doctest::Approx(0.9 - 2.0 * std::pow(100.0, -0.7)).epsilon(1e-12));
}

TEST_CASE("variance model dispatches by metric") {
  VarianceModel auc_vm{Metric::auc, 0.5};
  CHECK(auc_vm.at(0.8, 20) == doctest::Approx(bamber_variance(0.8, 10, 10))
                                  .epsilon(1e-15));
  CHECK(auc_vm.at(0.8, 20) == doctest::Approx(0.0104).epsilon(1e-12));
  // above-range curve values are clamped before the variance formula
  CHECK(auc_vm.at(1.3, 20) == 0.0);

  // tiny shares are clamped to one test member per class
  VarianceModel skew{Metric::auc, 0.01};
  CHECK(skew.at(0.8, 10) == doctest::Approx(bamber_variance(0.8, 1, 9))
                                .epsilon(1e-15));
  VarianceModel heavy{Metric::auc, 0.99};
  CHECK(heavy.at(0.8, 10) == doctest::Approx(bamber_variance(0.8, 9, 1))
                                 .epsilon(1e-15));

  VarianceModel pmse_vm{Metric::pmse, 0.5};
  CHECK(pmse_vm.at(2.0, 8) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(pmse_vm.at(2.0, 0), InvalidInput);
}

TEST_CASE("mse rule scans every integer and keeps the smaller tie") {
  const auto curve = power_curve(0.9, 2.0, 0.7, Direction::increasing);
  VarianceModel vm{Metric::auc, 0.4};
  const int total = 100, lo = 20, hi = 90;
  const int got = select_n_opt_mse(curve, total, vm, lo, hi, Metric::auc);

  const double f_full = point_estimate(curve, total, Metric::auc);
  int want = lo;
  double best = std::numeric_limits<double>::infinity();
  for (int n = lo; n <= hi; ++n) {
    const double f_n = point_estimate(curve, n, Metric::auc);
    const double obj = (f_full - f_n) * (f_full - f_n) + vm.at(f_n, total - n);
    if (obj < best) {
      best = obj;
      want = n;
    }
  }
  CHECK(got == want);
  CHECK(got > lo);
  CHECK(got < hi);

  // a flat curve ties everywhere, so the rule returns the low end
  const auto flat = power_curve(1.0, 0.0, 0.5, Direction::increasing);
  CHECK(select_n_opt_mse(flat, total, vm, lo, hi, Metric::auc) == lo);

  CHECK_THROWS_AS(select_n_opt_mse(curve, total, vm, 50, 20, Metric::auc),
                  InvalidInput);
  CHECK_THROWS_AS(select_n_opt_mse(curve, 90, vm, 20, 90, Metric::auc),
                  InvalidInput);
}

TEST_CASE("mse rule under an error metric") {
  const auto curve = power_curve(0.2, 8.0, 0.9, Direction::decreasing);
  VarianceModel vm{Metric::pmse, 0.5};
  const int total = 120, lo = 20, hi = 100;
  const int got = select_n_opt_mse(curve, total, vm, lo, hi, Metric::pmse);
  const double f_full = point_estimate(curve, total, Metric::pmse);
  int want = lo;
  double best = std::numeric_limits<double>::infinity();
  for (int n = lo; n <= hi; ++n) {
    const double f_n = point_estimate(curve, n, Metric::pmse);
    const double obj = (f_n - f_full) * (f_n - f_full) + vm.at(f_n, total - n);
    if (obj < best) {
      best = obj;
      want = n;
    }
  }
  CHECK(got == want);
}

TEST_CASE("bias margin rule finds the smallest admissible size") {
  const auto curve = power_curve(0.9, 2.0, 0.7, Direction::increasing);
  const int total = 100, lo = 20, hi = 90;
  bool violated = true;
  const int got = select_n_opt_bias_margin(curve, total, Metric::auc, 0.02,
                                           lo, hi, &violated);
  CHECK_FALSE(violated);

  const double f_full = point_estimate(curve, total, Metric::auc);
  const double margin = 0.02 * std::abs(f_full);
  int want = hi;
  for (int n = lo; n <= hi; ++n) {
    if (f_full - point_estimate(curve, n, Metric::auc) <= margin) {
      want = n;
      break;
    }
  }
  CHECK(got == want);
  CHECK(f_full - point_estimate(curve, got, Metric::auc) <= margin);
  if (got > lo)
    CHECK(f_full - point_estimate(curve, got - 1, Metric::auc) > margin);

  // an unreachable margin falls back to the high end and raises the flag
  const int fallback = select_n_opt_bias_margin(curve, total, Metric::auc,
                                                1e-9, lo, hi, &violated);
  CHECK(fallback == hi);
  CHECK(violated);

  CHECK_THROWS_AS(select_n_opt_bias_margin(curve, total, Metric::auc, 0.0,
                                           lo, hi, nullptr),
                  InvalidInput);
}

TEST_CASE("median bound conventions") {
  CHECK(median_bound({0.7, 0.6, 0.8}, Metric::auc) == 0.7);
  CHECK(median_bound({0.8, 0.6, 0.64, 0.7}, Metric::auc) == 0.64);
  CHECK(median_bound({0.8, 0.6, 0.64, 0.7}, Metric::pmse) == 0.7);
  // order invariance
  CHECK(median_bound({0.6, 0.64, 0.7, 0.8}, Metric::auc) == 0.64);
  // duplicating every bound leaves both medians unchanged
  CHECK(median_bound({0.6, 0.6, 0.64, 0.64, 0.7, 0.7, 0.8, 0.8},
                     Metric::auc) == 0.64);
  CHECK(median_bound({0.6, 0.6, 0.64, 0.64, 0.7, 0.7, 0.8, 0.8},
                     Metric::pmse) == 0.7);
  CHECK_THROWS_AS(median_bound({0.5}, Metric::auc), InvalidInput);
  CHECK_THROWS_AS(median_bound({}, Metric::pmse), InvalidInput);
}

TEST_CASE("median of dependent valid bounds stays valid") {
  // K correlated per-split lower bounds, each with exact 95% marginal
  // coverage of a zero truth; the lower-median aggregate should cover with
  // probability well above the nominal level even under strong dependence.
  Rng rng(2025);
  const int reps = 5000, k_splits = 50;
  const double z = 1.6448536269514722;
  int covered = 0;
  for (int r = 0; r < reps; ++r) {
    const double common = rng.normal();
    std::vector<double> bounds(k_splits);
    for (int k = 0; k < k_splits; ++k) {
      const double x = std::sqrt(0.5) * common + std::sqrt(0.5) * rng.normal();
      bounds[k] = x - z;
    }
    if (median_bound(bounds, Metric::auc) <= 0.0) ++covered;
  }
  CHECK(covered >= static_cast<int>(0.95 * reps));
}

TEST_CASE("default plan spans the data with the stock grid") {
  const Dataset d = toy_classification(100, 4, 3);
  const auto plan = default_plan(d);
  CHECK(plan.sizes == std::vector<int>{20, 28, 36, 43, 51, 59, 67, 74, 82, 90});
  CHECK(plan.repeats == 50);
  CHECK(plan.balanced);
  CHECK(plan.min_test == 10);
  const Dataset r = toy_regression(100, 4, 3);
  CHECK_FALSE(default_plan(r).balanced);
  const Dataset tiny = toy_regression(25, 2, 3);
  CHECK_THROWS_AS(default_plan(tiny), InvalidInput);
}

TEST_CASE("full pipeline report is internally consistent") {
  const Dataset d = toy_classification(100, 4, 59, 1.5);
  LearnerSpec ridge{LearnerFamily::ridge, Task::classification, 0.5};
  EstimatorConfig cfg = small_config(d, 5, 8, 21);

  const auto report = learn2evaluate(d, ridge, Metric::auc, cfg);
  CHECK(report.metric == Metric::auc);
  CHECK(report.alpha == 0.05);
  CHECK(report.selection_rule == SelectionRule::mse_min);
  CHECK(report.fitter_used == FitterKind::power_law);
  CHECK(report.trajectory.points.size() == 5);

  CHECK(report.n_opt >= cfg.plan.sizes.front());
  CHECK(report.n_opt <= cfg.plan.sizes.back());
  CHECK(report.point_estimate ==
        point_estimate(report.curve, 100.0, Metric::auc));
  CHECK(report.point_estimate >= 0.0);
  CHECK(report.point_estimate <= 1.0);

  // the bias correction is an exact identity, never clamped
  CHECK(report.bound_bc == report.bound + report.empirical_bias);
  CHECK(report.empirical_bias ==
        report.point_estimate -
            point_estimate(report.curve, report.n_opt, Metric::auc));
  CHECK(report.empirical_bias >= 0.0);  // monotone improving metric
  CHECK(report.bound_bc >= report.bound);

  // bound is the lower median of the per-split bounds at n_opt
  REQUIRE(report.bound_splits.size() == 8);
  std::vector<double> bounds;
  for (const auto& e : report.bound_splits) {
    CHECK(e.subsample_size == report.n_opt);
    bounds.push_back(e.bound);
  }
  CHECK(report.bound == median_bound(bounds, Metric::auc));

  // on-grid n_opt reuses the trajectory's split records
  const auto* at_opt = report.trajectory.splits_for(report.n_opt);
  if (at_opt != nullptr) {
    REQUIRE(at_opt->size() == report.bound_splits.size());
    for (std::size_t i = 0; i < at_opt->size(); ++i)
      CHECK((*at_opt)[i].estimate == report.bound_splits[i].estimate);
  }
}

TEST_CASE("off grid selections rerun the holdout at the chosen size") {
  const Dataset d = toy_classification(100, 4, 61, 1.5);
  LearnerSpec ridge{LearnerFamily::ridge, Task::classification, 0.5};
  EstimatorConfig cfg = small_config(d, 4, 6, 31);
  cfg.selection = SelectionRule::bias_margin;
  cfg.margin_fraction = 0.05;
  const auto report = learn2evaluate(d, ridge, Metric::auc, cfg);
  CHECK(report.selection_rule == SelectionRule::bias_margin);
  for (const auto& e : report.bound_splits)
    CHECK(e.subsample_size == report.n_opt);
  if (report.trajectory.splits_for(report.n_opt) == nullptr) {
    // genuinely off the grid: the records can only come from a fresh run
    CHECK(report.bound_splits.size() == static_cast<std::size_t>(cfg.plan.repeats));
  }
}

TEST_CASE("regression pipeline bounds from above") {
  const Dataset d = toy_regression(100, 4, 67);
  LearnerSpec ridge{LearnerFamily::ridge, Task::regression, 0.5};
  EstimatorConfig cfg = small_config(d, 5, 8, 41);
  const auto report = learn2evaluate(d, ridge, Metric::pmse, cfg);
  CHECK(report.point_estimate >= 0.0);
  // error curves decrease, so the signed gap is nonpositive and the
  // corrected bound sits at or below the raw one
  CHECK(report.empirical_bias <= 0.0);
  CHECK(report.bound_bc <= report.bound);
  CHECK(report.bound_bc == report.bound + report.empirical_bias);
  std::vector<double> bounds;
  for (const auto& e : report.bound_splits) bounds.push_back(e.bound);
  CHECK(report.bound == median_bound(bounds, Metric::pmse));
}

TEST_CASE("auto fitter falls back to the power law off the s-shape") {
  const Dataset d = toy_classification(100, 4, 71, 1.5);
  LearnerSpec ridge{LearnerFamily::ridge, Task::classification, 0.5};
  EstimatorConfig cfg = small_config(d, 6, 6, 51);
  cfg.fitter = FitterKind::auto_s_shape;
  const auto report = learn2evaluate(d, ridge, Metric::auc, cfg);
  // a plain concave trajectory has no usable inflection inside the grid
  CHECK(report.fitter_used == FitterKind::power_law);
  CHECK(std::holds_alternative<PowerLawFit>(report.curve));
}

TEST_CASE("alpha is validated") {
  const Dataset d = toy_classification(100, 4, 73);
  LearnerSpec ridge{LearnerFamily::ridge, Task::classification, 0.5};
  EstimatorConfig cfg = small_config(d, 5, 6, 61);
  cfg.alpha = 0.5;
  CHECK_THROWS_AS(learn2evaluate(d, ridge, Metric::auc, cfg), InvalidInput);
  cfg.alpha = 0.0;
  CHECK_THROWS_AS(learn2evaluate(d, ridge, Metric::auc, cfg), InvalidInput);
}

TEST_CASE("null labels keep the bound at chance level") {
  // Labels carry no signal, so the estimand is one half; the aggregated
  // lower bound should sit at or below it in nearly every pipeline.
  Rng rng(88);
  const int pipelines = 60;
  int bound_ok = 0, estimate_mid = 0;
  for (int rep = 0; rep < pipelines; ++rep) {
    Eigen::MatrixXd x(70, 3);
    Eigen::VectorXd y(70);
    for (int i = 0; i < 70; ++i) {
      for (int j = 0; j < 3; ++j) x(i, j) = rng.normal();
      y(i) = i % 2 == 0 ? 1.0 : 0.0;  // balanced, independent of x
    }
    Dataset d{x, y, Task::classification};
    LearnerSpec ridge{LearnerFamily::ridge, Task::classification, 1.0};
    EstimatorConfig cfg;
    cfg.plan.sizes = {25, 35, 45};
    cfg.plan.repeats = 9;
    cfg.plan.balanced = true;
    cfg.plan.seed = 9000 + rep;
    const auto report = learn2evaluate(d, ridge, Metric::auc, cfg);
    if (report.bound <= 0.5 + 1e-12) ++bound_ok;
    if (report.point_estimate >= 0.35 && report.point_estimate <= 0.65)
      ++estimate_mid;
  }
  CHECK(bound_ok >= static_cast<int>(0.9 * pipelines));
  CHECK(estimate_mid >= static_cast<int>(0.85 * pipelines));
}

}  // TEST_SUITE
