#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "l2e/baselines.hpp"
#include "l2e/core.hpp"
#include "l2e/rng.hpp"
#include "l2e/stats.hpp"

using namespace l2e;

namespace {

LearnerSpec constant_forest(Task task) {
  LearnerSpec spec{LearnerFamily::random_forest, task};
  spec.forest = {5, 0, 100000};
  return spec;
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("cross-validation of a constant scorer is exactly chance") {
  const Dataset d = toy_classification(60, 3, 7);
  const double est = cv_point_estimate(d, constant_forest(Task::classification),
                                       Metric::auc, 5, 11);
  CHECK(est == 0.5);
}

TEST_CASE("cross-validation of a noiseless linear response is near zero error") {
  const Dataset d = toy_regression(80, 4, 13, 0.0);
  LearnerSpec ridge{LearnerFamily::ridge, Task::regression, 0.0};
  const double est = cv_point_estimate(d, ridge, Metric::pmse, 5, 17);
  CHECK(est >= 0.0);
  CHECK(est < 1e-6);
}

TEST_CASE("cross-validation separates a strong signal") {
  const Dataset d = toy_classification(100, 4, 19, 2.5);
  LearnerSpec ridge{LearnerFamily::ridge, Task::classification, 0.1};
  CHECK(cv_point_estimate(d, ridge, Metric::auc, 5, 23) > 0.85);
}

TEST_CASE("cross-validation input validation") {
  const Dataset cls = toy_classification(60, 3, 29);
  const Dataset reg = toy_regression(60, 3, 29);
  LearnerSpec ridge_c{LearnerFamily::ridge, Task::classification, 0.5};
  LearnerSpec ridge_r{LearnerFamily::ridge, Task::regression, 0.5};
  // metric/task pairing
  CHECK_THROWS_AS(cv_point_estimate(reg, ridge_r, Metric::auc, 5, 1),
                  InvalidInput);
  CHECK_THROWS_AS(cv_point_estimate(cls, ridge_c, Metric::pmse, 5, 1),
                  InvalidInput);
  // learner task must match the data
  CHECK_THROWS_AS(cv_point_estimate(cls, ridge_r, Metric::auc, 5, 1),
                  InvalidInput);
}

TEST_CASE("a fold without both classes is rejected") {
  // two positives cannot reach all five folds, so some held-out fold
  // cannot be scored with a ranking metric
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(20, 3);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(20);
  y(3) = y(11) = 1.0;
  Dataset d{x, y, Task::classification};
  LearnerSpec ridge{LearnerFamily::ridge, Task::classification, 0.5};
  CHECK_THROWS_AS(cv_point_estimate(d, ridge, Metric::auc, 5, 31),
                  InvalidInput);
}

TEST_CASE("cross-validation is deterministic in the seed") {
  const Dataset d = toy_classification(80, 4, 37, 1.2);
  LearnerSpec ridge{LearnerFamily::ridge, Task::classification, 0.5};
  const double a = cv_point_estimate(d, ridge, Metric::auc, 5, 41);
  const double b = cv_point_estimate(d, ridge, Metric::auc, 5, 41);
  const double c = cv_point_estimate(d, ridge, Metric::auc, 5, 42);
  CHECK(a == b);
  CHECK(a != c);
  // worker count never changes the result
  CHECK(a == cv_point_estimate(d, ridge, Metric::auc, 5, 41, 4));
}

TEST_CASE("out-of-bag bootstrap of a constant scorer") {
  const Dataset d = toy_classification(60, 3, 43);
  BootstrapConfig cfg{120, 0.05, 3};
  const auto res = loob(d, constant_forest(Task::classification), Metric::auc,
                        cfg, 47);
  CHECK(res.used + res.skipped == 120);
  CHECK(res.estimates.size() == static_cast<std::size_t>(res.used));
  for (double e : res.estimates) CHECK(e == 0.5);
  CHECK(res.point_estimate == 0.5);
  CHECK(res.bound == 0.5);
}

TEST_CASE("bootstrap bound is the stated quantile of the replicates") {
  const Dataset d = toy_classification(80, 4, 53, 1.2);
  LearnerSpec ridge{LearnerFamily::ridge, Task::classification, 0.5};
  BootstrapConfig cfg{150, 0.1, 3};
  const auto res = loob(d, ridge, Metric::auc, cfg, 59);
  REQUIRE(res.used >= 2);
  CHECK(res.point_estimate ==
        doctest::Approx(stats::mean(res.estimates)).epsilon(1e-12));
  CHECK(res.bound ==
        doctest::Approx(stats::quantile_type7(res.estimates, 0.1))
            .epsilon(1e-12));
  CHECK(res.bound <= res.point_estimate);

  const Dataset r = toy_regression(80, 4, 53);
  LearnerSpec rr{LearnerFamily::ridge, Task::regression, 0.5};
  const auto res2 = loob(r, rr, Metric::pmse, cfg, 61);
  CHECK(res2.bound ==
        doctest::Approx(stats::quantile_type7(res2.estimates, 0.9))
            .epsilon(1e-12));
  CHECK(res2.bound >= res2.point_estimate);
  CHECK(res2.used == 150);  // regression has no class constraint to violate
}

TEST_CASE("bootstrap replicates are deterministic and worker independent") {
  const Dataset d = toy_classification(70, 4, 67, 1.2);
  LearnerSpec ridge{LearnerFamily::ridge, Task::classification, 0.5};
  BootstrapConfig cfg{80, 0.05, 3};
  const auto a = loob(d, ridge, Metric::auc, cfg, 71, 1);
  const auto b = loob(d, ridge, Metric::auc, cfg, 71, 4);
  REQUIRE(a.estimates.size() == b.estimates.size());
  for (std::size_t i = 0; i < a.estimates.size(); ++i)
    CHECK(a.estimates[i] == b.estimates[i]);
  CHECK(a.bound == b.bound);
  const auto c = loob(d, ridge, Metric::auc, cfg, 72, 1);
  CHECK(a.bound != c.bound);
}

TEST_CASE("a lone positive starves every out-of-bag set") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(30, 3);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(30);
  y(5) = 1.0;
  Dataset d{x, y, Task::classification};
  LearnerSpec ridge{LearnerFamily::ridge, Task::classification, 0.5};
  BootstrapConfig cfg{50, 0.05, 3};
  CHECK_THROWS_AS(loob(d, ridge, Metric::auc, cfg, 73), DegenerateScenario);
}

TEST_CASE("bootstrap configuration is validated") {
  const Dataset d = toy_classification(60, 3, 79);
  LearnerSpec ridge{LearnerFamily::ridge, Task::classification, 0.5};
  CHECK_THROWS_AS(loob(d, ridge, Metric::auc, {1, 0.05, 3}, 1), InvalidInput);
  CHECK_THROWS_AS(loob(d, ridge, Metric::auc, {200, 0.0, 3}, 1), InvalidInput);
  CHECK_THROWS_AS(loob(d, ridge, Metric::auc, {200, 0.5, 3}, 1), InvalidInput);
  LearnerSpec wrong{LearnerFamily::ridge, Task::regression, 0.5};
  CHECK_THROWS_AS(loob(d, wrong, Metric::auc, {200, 0.05, 3}, 1),
                  InvalidInput);
}

TEST_CASE("bootstrap estimates sit below the holdout curve on strong signal") {
  // the out-of-bag training sets are effectively smaller than the full
  // sample, so on a steep learning curve the bootstrap point estimate is
  // pessimistic relative to a fit on all rows
  const Dataset d = toy_classification(80, 4, 83, 2.0);
  LearnerSpec ridge{LearnerFamily::ridge, Task::classification, 0.5};
  const auto res = loob(d, ridge, Metric::auc, {100, 0.05, 3}, 89);
  CHECK(res.point_estimate > 0.6);
  CHECK(res.point_estimate < 1.0);
  CHECK(res.bound < res.point_estimate);
}

}  // TEST_SUITE
