#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "l2e/core.hpp"
#include "l2e/resampling.hpp"
#include "l2e/rng.hpp"

using namespace l2e;

namespace {

LearnerSpec constant_forest(Task task) {
  // min_leaf larger than any training set makes every tree a root leaf,
  // so predictions are constant and split estimates are degenerate.
  LearnerSpec spec{LearnerFamily::random_forest, task};
  spec.forest = {5, 0, 100000};
  return spec;
}

bool is_partition(const Split& s, int n) {
  std::vector<char> seen(n, 0);
  for (int r : s.train) {
    if (r < 0 || r >= n || seen[r]) return false;
    seen[r] = 1;
  }
  for (int r : s.test) {
    if (r < 0 || r >= n || seen[r]) return false;
    seen[r] = 1;
  }
  return std::all_of(seen.begin(), seen.end(), [](char c) { return c == 1; });
}

}  // namespace

TEST_SUITE("resampling") {

TEST_CASE("homogeneous grid") {
  CHECK(homogeneous_grid(20, 90, 10) ==
        std::vector<int>{20, 28, 36, 43, 51, 59, 67, 74, 82, 90});
  CHECK(homogeneous_grid(5, 5, 3) == std::vector<int>{5});
  CHECK(homogeneous_grid(10, 12, 10) == std::vector<int>{10, 11, 12});
  const auto g = homogeneous_grid(7, 1000, 4);
  CHECK(g.front() == 7);
  CHECK(g.back() == 1000);
  CHECK(g.size() == 4);
}

TEST_CASE("plan validation") {
  const Dataset d = toy_classification(60, 4, 1);
  SubsamplePlan plan{{20, 30, 40}, 5, true, 0, 10};
  plan.validate(d);

  SubsamplePlan unsorted{{30, 20}, 5, true, 0, 10};
  CHECK_THROWS_AS(unsorted.validate(d), InvalidInput);
  SubsamplePlan too_big{{20, 55}, 5, true, 0, 10};
  CHECK_THROWS_AS(too_big.validate(d), InvalidInput);
  SubsamplePlan one_repeat{{20, 30}, 1, true, 0, 10};
  CHECK_THROWS_AS(one_repeat.validate(d), InvalidInput);
  SubsamplePlan unbalanced{{20, 30}, 5, false, 0, 10};
  CHECK_THROWS_AS(unbalanced.validate(d), InvalidInput);

  const Dataset r = toy_regression(60, 4, 1);
  SubsamplePlan free_split{{20, 30}, 5, false, 0, 10};
  free_split.validate(r);
}

TEST_CASE("draw_split partitions the rows at the requested size") {
  const Dataset d = toy_classification(40, 3, 7);
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 15 + rep % 10;
    const auto s = draw_split(d, n, true, rng);
    CHECK(static_cast<int>(s.train.size()) == n);
    CHECK(static_cast<int>(s.test.size()) == 40 - n);
    CHECK(is_partition(s, 40));
  }
}

TEST_CASE("balanced splits track the class ratio") {
  // 4 rows, 2 of each class: a balanced train of 2 must hold one of each.
  Eigen::MatrixXd x(4, 2);
  x << 0, 1, 2, 3, 4, 5, 6, 7;
  Eigen::VectorXd y(4);
  y << 0, 0, 1, 1;
  Dataset d{x, y, Task::classification};
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const auto s = draw_split(d, 2, true, rng);
    double pos = 0;
    for (int r : s.train) pos += d.response(r);
    CHECK(pos == 1.0);
  }

  const Dataset big = toy_classification(100, 3, 11);
  const double ratio = big.response.mean();
  Rng rng2(6);
  for (int rep = 0; rep < 30; ++rep) {
    const auto s = draw_split(big, 37, true, rng2);
    double pos = 0;
    for (int r : s.train) pos += big.response(r);
    // class count within one unit of the proportional share
    CHECK(std::abs(pos - ratio * 37) <= 1.0 + 1e-9);
    // held-out part keeps at least one member of each class
    double tpos = 0;
    for (int r : s.test) tpos += big.response(r);
    CHECK(tpos >= 1.0);
    CHECK(tpos <= static_cast<double>(s.test.size()) - 1.0);
  }
}

TEST_CASE("infeasible splits throw") {
  // 3 positives in 30 rows: a balanced train of 29 would empty the test
  // side of one class only if all positives land in train; size 29 leaves
  // one test row, so a two-class test set is impossible.
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(30, 2);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(30);
  y(0) = y(1) = y(2) = 1.0;
  Dataset d{x, y, Task::classification};
  Rng rng(9);
  CHECK_THROWS_AS(draw_split(d, 29, true, rng), InfeasibleSplit);
}

TEST_CASE("row inclusion is uniform across draws") {
  const Dataset d = toy_regression(40, 2, 13);
  Rng rng(17);
  std::vector<int> hits(40, 0);
  const int reps = 10000;
  for (int rep = 0; rep < reps; ++rep) {
    const auto s = draw_split(d, 20, false, rng);
    for (int r : s.train) ++hits[r];
  }
  for (int i = 0; i < 40; ++i) {
    CHECK(hits[i] > static_cast<int>(reps * 0.46));
    CHECK(hits[i] < static_cast<int>(reps * 0.54));
  }
}

TEST_CASE("stratified folds partition and balance class counts") {
  const Dataset d = toy_classification(53, 3, 19);
  Rng rng(21);
  const auto folds = stratified_folds(d, 5, rng);
  REQUIRE(folds.size() == 5);
  std::vector<char> seen(53, 0);
  std::vector<int> pos_counts, sizes;
  for (const auto& f : folds) {
    int pos = 0;
    for (int r : f) {
      CHECK(!seen[r]);
      seen[r] = 1;
      pos += static_cast<int>(d.response(r));
    }
    pos_counts.push_back(pos);
    sizes.push_back(static_cast<int>(f.size()));
  }
  CHECK(std::count(seen.begin(), seen.end(), 1) == 53);
  const auto [pmin, pmax] = std::minmax_element(pos_counts.begin(), pos_counts.end());
  CHECK(*pmax - *pmin <= 1);
  const auto [smin, smax] = std::minmax_element(sizes.begin(), sizes.end());
  CHECK(*smax - *smin <= 1);
}

TEST_CASE("constant learner gives chance-level split estimates") {
  const Dataset d = toy_classification(80, 3, 23);
  const auto ests =
      repeated_holdout(d, constant_forest(Task::classification), Metric::auc,
                       40, 6, 0.05, 77);
  REQUIRE(ests.size() == 6);
  for (const auto& e : ests) {
    CHECK(e.subsample_size == 40);
    CHECK(e.estimate == 0.5);  // all scores tie
    CHECK(e.bound <= 0.5);
    CHECK(e.test_pos >= 1);
    CHECK(e.test_neg >= 1);
    CHECK(e.test_pos + e.test_neg == 40);
  }
  for (int k = 0; k < 6; ++k) CHECK(ests[k].repeat_index == k + 1);
}

TEST_CASE("split records are deterministic and independent of workers") {
  const Dataset d = toy_classification(70, 4, 29);
  LearnerSpec ridge{LearnerFamily::ridge, Task::classification, 0.5};
  const auto a = repeated_holdout(d, ridge, Metric::auc, 35, 8, 0.05, 123, 1);
  const auto b = repeated_holdout(d, ridge, Metric::auc, 35, 8, 0.05, 123, 8);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].estimate == b[i].estimate);
    CHECK(a[i].bound == b[i].bound);
    CHECK(a[i].test_pos == b[i].test_pos);
  }
  const auto c = repeated_holdout(d, ridge, Metric::auc, 35, 8, 0.05, 124, 1);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i)
    any_diff = any_diff || a[i].estimate != c[i].estimate;
  CHECK(any_diff);
}

TEST_CASE("estimates at a size are stable in the seed") {
  const Dataset d = toy_classification(90, 4, 31, 1.5);
  LearnerSpec ridge{LearnerFamily::ridge, Task::classification, 0.5};
  auto mean_est = [&](std::uint64_t seed) {
    const auto ests = repeated_holdout(d, ridge, Metric::auc, 45, 40, 0.05, seed);
    double acc = 0;
    for (const auto& e : ests) acc += e.estimate;
    return acc / ests.size();
  };
  CHECK(std::abs(mean_est(1) - mean_est(2)) < 0.05);
}

TEST_CASE("trajectory summarises split means and resolved penalties") {
  const Dataset d = toy_classification(80, 4, 37);
  SubsamplePlan plan{homogeneous_grid(30, 60, 3), 5, true, 11, 10};
  plan.validate(d);

  LearnerSpec ridge{LearnerFamily::ridge, Task::classification, 0.5};
  const auto traj = build_trajectory(d, ridge, Metric::auc, plan, 0.05);
  traj.validate(d.n_rows(), plan.min_test);
  REQUIRE(traj.points.size() == 3);
  REQUIRE(traj.splits.size() == 3);
  REQUIRE(traj.penalties.size() == 3);
  CHECK(traj.repeats == 5);
  CHECK(traj.metric == Metric::auc);
  CHECK(traj.alpha == 0.05);
  for (std::size_t j = 0; j < traj.points.size(); ++j) {
    CHECK(traj.points[j].size == plan.sizes[j]);
    double acc = 0;
    for (const auto& e : traj.splits[j]) acc += e.estimate;
    CHECK(traj.points[j].estimate ==
          doctest::Approx(acc / traj.splits[j].size()).epsilon(1e-12));
    CHECK(traj.penalties[j] == 0.5);  // explicit penalty passes through
  }
  CHECK(traj.splits_for(30) == &traj.splits[0]);
  CHECK(traj.splits_for(31) == nullptr);

  // one size, same seed: the trajectory restricted to that size agrees
  // with repeated_holdout called directly
  SubsamplePlan single{{45}, 5, true, 11, 10};
  const auto t1 = build_trajectory(d, ridge, Metric::auc, single, 0.05);
  const auto direct = repeated_holdout(d, ridge, Metric::auc, 45, 5, 0.05, 11);
  REQUIRE(t1.splits[0].size() == direct.size());
  for (std::size_t k = 0; k < direct.size(); ++k)
    CHECK(t1.splits[0][k].estimate == direct[k].estimate);
}

TEST_CASE("forest trajectories carry no penalty") {
  const Dataset d = toy_regression(60, 3, 41);
  SubsamplePlan plan{{25, 40}, 4, false, 3, 10};
  LearnerSpec forest{LearnerFamily::random_forest, Task::regression};
  forest.forest = {10, 0, 5};
  const auto traj = build_trajectory(d, forest, Metric::pmse, plan, 0.05);
  for (double p : traj.penalties) CHECK(std::isnan(p));
  for (const auto& sz : traj.splits)
    for (const auto& e : sz) {
      CHECK(e.test_pos == 0);
      CHECK(e.test_neg == 0);
      CHECK(e.bound >= e.estimate);  // upper bound for an error metric
    }
}

TEST_CASE("tuned penalty is shared across repeats at a size") {
  const Dataset d = toy_regression(70, 6, 43);
  LearnerSpec lasso{LearnerFamily::lasso, Task::regression, std::nullopt};
  lasso.tuning = {5, 1, 15};
  SubsamplePlan plan{{30, 50}, 4, false, 19, 10};
  const auto traj = build_trajectory(d, lasso, Metric::pmse, plan, 0.05);
  for (double p : traj.penalties) {
    CHECK(std::isfinite(p));
    CHECK(p > 0.0);
  }
  // sizes are tuned separately, so penalties usually differ
  CHECK(traj.penalties[0] != traj.penalties[1]);
}

}  // TEST_SUITE
