#pragma once

#include <cstdint>
#include <vector>

#include "l2e/core.hpp"
#include "l2e/learners.hpp"

namespace l2e {

// K-fold cross-validation point estimate: mean of the per-fold metric,
// folds stratified by class for classification. The penalty (if unresolved)
// is tuned once on the full dataset and reused in every fold.
double cv_point_estimate(const Dataset& data, const LearnerSpec& learner,
                         Metric metric, int folds, std::uint64_t seed,
                         int workers = 1);

struct BootstrapConfig {
  int n_boot = 500;
  double alpha = 0.05;
  int max_redraws = 3;  // retries when an out-of-bag set loses a class
};

struct LoobResult {
  double point_estimate = 0.0;  // mean of the kept out-of-bag estimates
  double bound = 0.0;           // alpha (AUC) or 1-alpha (PMSE) quantile
  int used = 0;                 // bootstrap replicates that produced a value
  int skipped = 0;              // replicates dropped after max_redraws
  std::vector<double> estimates;
};

// Leave-one-out bootstrap: stratified resamples with replacement, each
// scored on its out-of-bag rows. Replicates whose out-of-bag set lacks a
// class after max_redraws redraws are skipped. n_boot below 100 trips a
// stderr warning since the quantile bound becomes unstable.
LoobResult loob(const Dataset& data, const LearnerSpec& learner, Metric metric,
                const BootstrapConfig& config, std::uint64_t seed,
                int workers = 1);

}  // namespace l2e
