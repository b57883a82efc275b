#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "l2e/baselines.hpp"
#include "l2e/core.hpp"
#include "l2e/estimator.hpp"
#include "l2e/learners.hpp"

namespace l2e {

enum class CovarianceKind { identity, ar1, block };

struct CovarianceSpec {
  CovarianceKind kind = CovarianceKind::identity;
  double rho = 0.0;    // ar1 / within-block correlation
  int block_size = 0;  // block kind only
};

enum class CoefKind { exponential, fixed_sparse };

struct CoefSpec {
  CoefKind kind = CoefKind::exponential;
  double rate = 1000.0;      // exponential: beta_j ~ Expo(rate)
  int sparse_count = 5;      // fixed_sparse: leading nonzero coefficients
  double sparse_value = 0.6;
};

// Synthetic-data scenario: X ~ N(0, Sigma) via the Cholesky factor of
// Sigma, coefficients per CoefSpec, responses through the logistic model
// (classification, zero intercept) or a linear model with Gaussian noise.
struct SimScenario {
  int n_rows = 100;
  int n_features = 100;
  CovarianceSpec covariance;
  CoefSpec coef;
  Task task = Task::classification;
  double noise_sd = 0.447213595499957939;  // regression only, sd of epsilon
  int replicates = 1;
  int oracle_size = 10000;
  std::uint64_t seed = 0;

  void validate() const;
};

Eigen::MatrixXd covariance_matrix(const CovarianceSpec& spec, int p);

// Lower-triangular Cholesky factor of the scenario covariance.
Eigen::MatrixXd cholesky_factor(const CovarianceSpec& spec, int p);

// Dataset and true coefficient vector for one replicate. Deterministic in
// (scenario.seed, replicate); different replicates are independent.
// Classification responses are redrawn (same X) up to 10 times if a class
// is missing, then DegenerateScenario.
std::pair<Dataset, Eigen::VectorXd> generate_dataset(
    const SimScenario& scenario, int replicate);

// True performance of a fitted model: the metric evaluated on
// scenario.oracle_size fresh samples drawn from the replicate's oracle
// stream (disjoint from the dataset stream).
double oracle_performance(const FittedModel& model,
                          const SimScenario& scenario,
                          const Eigen::VectorXd& beta, Metric metric,
                          int replicate);

enum class MethodKind { curve_power, curve_spline, cv, loob };

struct StudyMethod {
  std::string label;
  MethodKind kind = MethodKind::curve_power;
  LearnerSpec learner;
};

struct StudyConfig {
  double alpha = 0.05;
  SelectionRule selection = SelectionRule::mse_min;
  double margin_fraction = 0.02;
  int repeats = 50;     // K splits per size
  int grid_count = 10;  // trajectory sizes
  int n_min = 20;
  int min_test = 10;
  int cv_folds = 10;
  BootstrapConfig bootstrap;
  int workers = 1;
};

struct ReplicateRecord {
  int replicate = 0;
  bool ok = false;
  std::string error;
  double truth = 0.0;
  double estimate = 0.0;
  double bound = 0.0;     // NaN for methods without one
  double bound_bc = 0.0;  // NaN for baselines
  int n_opt = -1;         // -1 for baselines
};

struct MethodSummary {
  double rmse = 0.0;
  double bias = 0.0;
  double coverage = 0.0;       // bound on the conservative side of truth
  double coverage_bc = 0.0;
  double mean_bound_gap = 0.0;  // mean conservative distance truth vs bound
  double mean_bound_gap_bc = 0.0;
  double mean_n_opt = 0.0;
  int failed = 0;
};

struct CoverageStudy {
  std::vector<StudyMethod> methods;
  std::vector<std::vector<ReplicateRecord>> records;  // [method][replicate]
  std::vector<MethodSummary> summaries;
};

// Runs every method on every replicate against a shared per-replicate
// truth (the full-data model scored on the oracle draw). Replicates that
// fail are recorded with their error and excluded from summaries.
CoverageStudy run_coverage_study(const SimScenario& scenario,
                                 const std::vector<StudyMethod>& methods,
                                 const StudyConfig& config);

}  // namespace l2e
