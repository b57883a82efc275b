#pragma once

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>
#include <string>
#include <vector>

#include "l2e/errors.hpp"

namespace l2e {

enum class Task { classification, regression };
enum class Metric { auc, pmse };
enum class Direction { increasing, decreasing };

// AUC improves upward toward 1, PMSE improves downward toward 0. The
// direction drives curve shape constraints and which bound side is reported.
constexpr Direction metric_direction(Metric m) {
  return m == Metric::auc ? Direction::increasing : Direction::decreasing;
}

constexpr Metric default_metric(Task t) {
  return t == Task::classification ? Metric::auc : Metric::pmse;
}

constexpr const char* to_string(Task t) {
  return t == Task::classification ? "classification" : "regression";
}
constexpr const char* to_string(Metric m) {
  return m == Metric::auc ? "auc" : "pmse";
}

// A supervised dataset. For classification the response holds exactly the
// values 0 and 1 with both classes present.
struct Dataset {
  Eigen::MatrixXd features;
  Eigen::VectorXd response;
  Task task = Task::classification;

  int n_rows() const { return static_cast<int>(features.rows()); }
  int n_features() const { return static_cast<int>(features.cols()); }
  int count_positive() const;

  // Throws InvalidInput on shape mismatch, non-finite cells, or (for
  // classification) labels outside {0, 1} or a missing class.
  void validate() const;

  Dataset subset(const std::vector<int>& rows) const;
};

// One train/test split evaluated at subsample size n.
struct SplitEstimate {
  int subsample_size = 0;
  int repeat_index = 0;
  double estimate = 0.0;  // metric on the held-out part
  double bound = 0.0;     // one-sided (1 - alpha) bound on the same split
  int test_pos = 0;       // test-set class counts; zero for regression
  int test_neg = 0;
};

struct TrajectoryPoint {
  int size = 0;
  double estimate = 0.0;  // mean of the K split estimates at this size
};

// Learning trajectory: the per-size summary points plus every underlying
// split record, kept so bounds can be formed without re-splitting.
struct LearningTrajectory {
  std::vector<TrajectoryPoint> points;
  std::vector<std::vector<SplitEstimate>> splits;  // parallel to points
  std::vector<double> penalties;  // per-size resolved penalty (NaN if none)
  double alpha = 0.05;
  Metric metric = Metric::auc;
  int repeats = 0;

  // Structural checks: sizes strictly ascending within [1, max_size],
  // each point's estimate equal to the mean of its splits (1e-12), split
  // counts equal to `repeats`.
  void validate(int max_size, int min_test) const;

  const std::vector<SplitEstimate>* splits_for(int size) const;
};

// Area under the ROC curve of `scores` against binary `labels`, computed
// with midranks. Tied score pairs count 1/2, so the value matches exhaustive
// comparison of all positive/negative pairs exactly.
double auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

// Mean squared prediction error.
double pmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truths);

// One-sided lower (1 - alpha) confidence bound for the AUC from the normal
// approximation with the structural-components variance estimate. Falls
// back to the closed-form variance bound when either class has fewer than
// two members. Result is clamped to [0, estimate].
double delong_lower_bound(const Eigen::VectorXd& scores,
                          const Eigen::VectorXd& labels, double alpha);

// One-sided upper (1 - alpha) confidence bound for the PMSE from the normal
// approximation with variance 2 * pmse^2 / n.
double pmse_upper_bound(const Eigen::VectorXd& predictions,
                        const Eigen::VectorXd& truths, double alpha);

// Distribution-free AUC variance at the independence midpoint:
//   (Q1 + Q2 + Q3) / (n_pos * n_neg)
// with Q1 = A(1-A), Q2 = (n_pos-1)(A/(2-A) - A^2),
// Q3 = (n_neg-1)(2A^2/(1+A) - A^2).
double bamber_variance(double auc_estimate, int n_pos, int n_neg);

// Normal-approximation PMSE variance 2 * pmse^2 / n.
double faber_variance(double pmse_estimate, int n);

// Number of distinct class-balanced subsamples: C(N_pos, n_pos) * C(N_neg,
// n_neg), exact.
boost::multiprecision::cpp_int count_subsets(int total_pos, int total_neg,
                                             int take_pos, int take_neg);

}  // namespace l2e
