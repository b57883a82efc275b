#pragma once

#include <cstdint>
#include <vector>

#include "l2e/core.hpp"
#include "l2e/learners.hpp"
#include "l2e/rng.hpp"

namespace l2e {

// Subsampling design for a learning trajectory.
struct SubsamplePlan {
  std::vector<int> sizes;   // ascending subsample sizes
  int repeats = 50;         // K splits per size
  bool balanced = true;     // class-proportional subsamples
  std::uint64_t seed = 0;
  int min_test = 10;        // smallest admissible held-out set

  // Checks sizes are ascending, leave at least min_test rows held out, and
  // repeats >= 2. Balanced must be true exactly for classification.
  void validate(const Dataset& data) const;
};

// `count` integer sizes spread evenly over [n_min, n_max], deduplicated,
// endpoints included.
std::vector<int> homogeneous_grid(int n_min, int n_max, int count);

// Partition of the row indices into `folds` parts of near-equal size;
// stratified by class for classification.
std::vector<std::vector<int>> stratified_folds(const Dataset& data, int folds,
                                               Rng& rng);

struct Split {
  std::vector<int> train;
  std::vector<int> test;
};

// One random train/test split with |train| = n. Balanced mode keeps the
// train class ratio within one unit of the full-data ratio while leaving at
// least one member of each class in the test set. Throws InfeasibleSplit
// when no such split exists.
Split draw_split(const Dataset& data, int n, bool balanced, Rng& rng);

// K independent splits at size n; fits the learner on each train part and
// scores the held-out part. The penalty (if unresolved) is tuned once on a
// dedicated tuning split and reused across all K repeats. Splits whose fit
// fails to converge are redrawn up to 3 times, then SplitFailure.
// Deterministic given (seed, n, k); independent of worker count.
std::vector<SplitEstimate> repeated_holdout(const Dataset& data,
                                            const LearnerSpec& learner,
                                            Metric metric, int n, int repeats,
                                            double alpha, std::uint64_t seed,
                                            int workers = 1);

// Full learning trajectory over plan.sizes.
LearningTrajectory build_trajectory(const Dataset& data,
                                    const LearnerSpec& learner, Metric metric,
                                    const SubsamplePlan& plan, double alpha,
                                    int workers = 1);

}  // namespace l2e
