#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "l2e/core.hpp"
#include "l2e/simharness.hpp"
#include "l2e/stats.hpp"

using namespace l2e;

namespace {

SimScenario small_scenario() {
  SimScenario sc;
  sc.n_rows = 80;
  sc.n_features = 5;
  sc.covariance = {CovarianceKind::identity, 0.0, 0};
  sc.coef = {CoefKind::fixed_sparse, 1000.0, 2, 1.0};
  sc.task = Task::classification;
  sc.replicates = 2;
  sc.oracle_size = 2000;
  sc.seed = 77;
  return sc;
}

StudyConfig light_config() {
  StudyConfig cfg;
  cfg.repeats = 4;
  cfg.grid_count = 4;
  cfg.n_min = 30;
  cfg.cv_folds = 4;
  cfg.bootstrap.n_boot = 120;
  return cfg;
}

double column_corr(const Eigen::MatrixXd& x, int a, int b) {
  Eigen::VectorXd ca = x.col(a).array() - x.col(a).mean();
  Eigen::VectorXd cb = x.col(b).array() - x.col(b).mean();
  return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

}  // namespace

TEST_SUITE("simharness") {

TEST_CASE("covariance matrices have the documented entries") {
  const auto id = covariance_matrix({CovarianceKind::identity, 0.0, 0}, 4);
  CHECK(id == Eigen::MatrixXd::Identity(4, 4));

  const auto ar = covariance_matrix({CovarianceKind::ar1, 0.5, 0}, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(ar(i, j) == doctest::Approx(std::pow(0.5, std::abs(i - j)))
                            .epsilon(1e-15));

  const auto bl = covariance_matrix({CovarianceKind::block, 0.3, 2}, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const double want = i == j ? 1.0 : (i / 2 == j / 2 ? 0.3 : 0.0);
      CHECK(bl(i, j) == want);
    }
}

TEST_CASE("cholesky factor reproduces the covariance") {
  for (CovarianceSpec spec : {CovarianceSpec{CovarianceKind::ar1, 0.6, 0},
                              CovarianceSpec{CovarianceKind::block, 0.4, 3}}) {
    const auto sigma = covariance_matrix(spec, 7);
    const auto l = cholesky_factor(spec, 7);
    CHECK((l * l.transpose() - sigma).cwiseAbs().maxCoeff() < 1e-10);
    for (int i = 0; i < 7; ++i)
      for (int j = i + 1; j < 7; ++j) CHECK(l(i, j) == 0.0);
  }
}

TEST_CASE("scenario validation") {
  SimScenario sc = small_scenario();
  sc.n_rows = 3;
  CHECK_THROWS_AS(sc.validate(), InvalidInput);
  sc = small_scenario();
  sc.oracle_size = 5;
  CHECK_THROWS_AS(sc.validate(), InvalidInput);
  sc = small_scenario();
  sc.covariance = {CovarianceKind::ar1, 1.0, 0};
  CHECK_THROWS_AS(sc.validate(), InvalidInput);
  sc = small_scenario();
  sc.covariance = {CovarianceKind::block, 0.3, 0};
  CHECK_THROWS_AS(sc.validate(), InvalidInput);
  sc = small_scenario();
  sc.coef = {CoefKind::exponential, 0.0, 5, 0.6};
  CHECK_THROWS_AS(sc.validate(), InvalidInput);
  sc = small_scenario();
  sc.coef = {CoefKind::fixed_sparse, 1.0, 6, 0.6};  // more than p
  CHECK_THROWS_AS(sc.validate(), InvalidInput);
  sc = small_scenario();
  sc.task = Task::regression;
  sc.noise_sd = -0.1;
  CHECK_THROWS_AS(sc.validate(), InvalidInput);
  // a non positive definite covariance is caught at factorization
  CHECK_THROWS_AS(cholesky_factor({CovarianceKind::block, -0.5, 3}, 6),
                  InvalidInput);
}

TEST_CASE("datasets are deterministic per replicate") {
  const SimScenario sc = small_scenario();
  const auto [d1, b1] = generate_dataset(sc, 0);
  const auto [d2, b2] = generate_dataset(sc, 0);
  CHECK((d1.features - d2.features).cwiseAbs().maxCoeff() == 0.0);
  CHECK((d1.response - d2.response).cwiseAbs().maxCoeff() == 0.0);
  CHECK((b1 - b2).cwiseAbs().maxCoeff() == 0.0);
  const auto [d3, b3] = generate_dataset(sc, 1);
  CHECK((d1.features - d3.features).cwiseAbs().maxCoeff() > 0.0);
  d1.validate();
  CHECK(d1.n_rows() == 80);
  CHECK(d1.n_features() == 5);
}

TEST_CASE("sparse coefficients have the stated pattern") {
  SimScenario sc = small_scenario();
  sc.coef = {CoefKind::fixed_sparse, 1.0, 3, 0.6};
  const auto [d, beta] = generate_dataset(sc, 0);
  REQUIRE(beta.size() == 5);
  for (int j = 0; j < 3; ++j) CHECK(beta(j) == 0.6);
  for (int j = 3; j < 5; ++j) CHECK(beta(j) == 0.0);

  SimScenario se = small_scenario();
  se.coef = {CoefKind::exponential, 20.0, 0, 0.0};
  const auto [de, be] = generate_dataset(se, 0);
  for (int j = 0; j < 5; ++j) CHECK(be(j) > 0.0);
}

TEST_CASE("noiseless regression responses are exactly linear") {
  SimScenario sc = small_scenario();
  sc.task = Task::regression;
  sc.noise_sd = 0.0;
  const auto [d, beta] = generate_dataset(sc, 0);
  CHECK(d.task == Task::regression);
  CHECK((d.response - d.features * beta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("feature correlations follow the covariance") {
  SimScenario sc = small_scenario();
  sc.n_rows = 4000;
  sc.n_features = 3;
  sc.covariance = {CovarianceKind::ar1, 0.6, 0};
  const auto [d, beta] = generate_dataset(sc, 0);
  CHECK(column_corr(d.features, 0, 1) == doctest::Approx(0.6).epsilon(0.08));
  CHECK(column_corr(d.features, 1, 2) == doctest::Approx(0.6).epsilon(0.08));
  CHECK(column_corr(d.features, 0, 2) == doctest::Approx(0.36).epsilon(0.15));

  SimScenario id = sc;
  id.covariance = {CovarianceKind::identity, 0.0, 0};
  const auto [di, bi] = generate_dataset(id, 0);
  CHECK(std::abs(column_corr(di.features, 0, 1)) < 0.05);
  CHECK(std::abs(column_corr(di.features, 0, 2)) < 0.05);
}

TEST_CASE("near-null signal keeps prevalence near one half") {
  SimScenario sc = small_scenario();
  sc.n_rows = 2000;
  sc.coef = {CoefKind::exponential, 1000.0, 0, 0.0};  // tiny coefficients
  const auto [d, beta] = generate_dataset(sc, 0);
  CHECK(d.response.mean() > 0.44);
  CHECK(d.response.mean() < 0.56);
}

TEST_CASE("oracle scores a constant model at chance") {
  const SimScenario sc = small_scenario();
  const auto [d, beta] = generate_dataset(sc, 0);
  LearnerSpec constant{LearnerFamily::random_forest, Task::classification};
  constant.forest = {3, 0, 100000};
  const auto model = fit(constant, d, 1);
  CHECK(oracle_performance(model, sc, beta, Metric::auc, 0) == 0.5);
  // deterministic oracle stream
  CHECK(oracle_performance(model, sc, beta, Metric::auc, 0) ==
        oracle_performance(model, sc, beta, Metric::auc, 0));
  Eigen::VectorXd wrong = Eigen::VectorXd::Zero(4);
  CHECK_THROWS_AS(oracle_performance(model, sc, wrong, Metric::auc, 0),
                  InvalidInput);
}

TEST_CASE("oracle rewards the true signal") {
  SimScenario sc = small_scenario();
  sc.n_rows = 300;
  sc.coef = {CoefKind::fixed_sparse, 1.0, 2, 2.0};
  const auto [d, beta] = generate_dataset(sc, 0);
  LearnerSpec ridge{LearnerFamily::ridge, Task::classification, 0.1};
  const auto model = fit(ridge, d, 1);
  const double truth = oracle_performance(model, sc, beta, Metric::auc, 0);
  CHECK(truth > 0.8);
  // replicate oracles are independent draws of the same size, so two
  // replicates of the same fitted model agree to Monte Carlo error
  const double other = oracle_performance(model, sc, beta, Metric::auc, 1);
  CHECK(std::abs(truth - other) < 0.03);

  SimScenario reg = sc;
  reg.task = Task::regression;
  reg.noise_sd = 0.0;
  const auto [dr, br] = generate_dataset(reg, 0);
  LearnerSpec rr{LearnerFamily::ridge, Task::regression, 0.0};
  const auto mr = fit(rr, dr, 1);
  CHECK(oracle_performance(mr, reg, br, Metric::pmse, 0) < 0.01);
}

TEST_CASE("coverage study records every method and replicate") {
  const SimScenario sc = small_scenario();
  LearnerSpec ridge{LearnerFamily::ridge, Task::classification, 0.5};
  const std::vector<StudyMethod> methods = {
      {"power:ridge", MethodKind::curve_power, ridge},
      {"cv:ridge", MethodKind::cv, ridge},
      {"loob:ridge", MethodKind::loob, ridge},
  };
  const auto study = run_coverage_study(sc, methods, light_config());

  REQUIRE(study.methods.size() == 3);
  CHECK(study.methods[0].label == "power:ridge");
  REQUIRE(study.records.size() == 3);
  REQUIRE(study.summaries.size() == 3);
  for (const auto& per_method : study.records)
    REQUIRE(per_method.size() == 2);

  for (int r = 0; r < 2; ++r) {
    // all methods share the learner, hence the same full-data truth
    const double truth = study.records[0][r].truth;
    CHECK(truth > 0.5);
    CHECK(truth <= 1.0);
    for (int m = 1; m < 3; ++m) CHECK(study.records[m][r].truth == truth);

    const auto& power = study.records[0][r];
    REQUIRE(power.ok);
    CHECK(power.replicate == r);
    CHECK(std::isfinite(power.bound));
    CHECK(std::isfinite(power.bound_bc));
    CHECK(power.n_opt >= 30);
    CHECK(power.n_opt <= 70);

    const auto& cv = study.records[1][r];
    REQUIRE(cv.ok);
    CHECK(std::isnan(cv.bound));
    CHECK(std::isnan(cv.bound_bc));
    CHECK(cv.n_opt == -1);

    const auto& lo = study.records[2][r];
    REQUIRE(lo.ok);
    CHECK(std::isfinite(lo.bound));
    CHECK(std::isnan(lo.bound_bc));
    CHECK(lo.n_opt == -1);
  }
}

TEST_CASE("summaries aggregate the per-replicate records") {
  const SimScenario sc = small_scenario();
  LearnerSpec ridge{LearnerFamily::ridge, Task::classification, 0.5};
  const std::vector<StudyMethod> methods = {
      {"power:ridge", MethodKind::curve_power, ridge},
      {"loob:ridge", MethodKind::loob, ridge},
  };
  const auto study = run_coverage_study(sc, methods, light_config());

  for (std::size_t m = 0; m < methods.size(); ++m) {
    const auto& s = study.summaries[m];
    CHECK(s.failed == 0);
    std::vector<double> errs, gaps;
    int covered = 0;
    for (const auto& rec : study.records[m]) {
      errs.push_back(rec.estimate - rec.truth);
      covered += rec.bound <= rec.truth;
      gaps.push_back(rec.truth - rec.bound);
    }
    double sq = 0.0;
    for (double e : errs) sq += e * e;
    CHECK(s.rmse == doctest::Approx(std::sqrt(sq / errs.size())).epsilon(1e-12));
    CHECK(s.bias == doctest::Approx(stats::mean(errs)).epsilon(1e-12));
    CHECK(s.coverage ==
          doctest::Approx(double(covered) / errs.size()).epsilon(1e-12));
    CHECK(s.mean_bound_gap ==
          doctest::Approx(stats::mean(gaps)).epsilon(1e-12));
  }
  // n_opt is only tracked for the curve method
  CHECK(std::isfinite(study.summaries[0].mean_n_opt));
  CHECK(std::isnan(study.summaries[1].mean_n_opt));
  // bias correction only exists for the curve method
  CHECK(std::isfinite(study.summaries[0].coverage_bc));
  CHECK(std::isnan(study.summaries[1].coverage_bc));
}

TEST_CASE("study runs are deterministic") {
  const SimScenario sc = small_scenario();
  LearnerSpec ridge{LearnerFamily::ridge, Task::classification, 0.5};
  const std::vector<StudyMethod> methods = {
      {"power:ridge", MethodKind::curve_power, ridge}};
  const auto a = run_coverage_study(sc, methods, light_config());
  const auto b = run_coverage_study(sc, methods, light_config());
  for (int r = 0; r < 2; ++r) {
    CHECK(a.records[0][r].truth == b.records[0][r].truth);
    CHECK(a.records[0][r].estimate == b.records[0][r].estimate);
    CHECK(a.records[0][r].bound == b.records[0][r].bound);
    CHECK(a.records[0][r].n_opt == b.records[0][r].n_opt);
  }
}

TEST_CASE("failures are recorded per replicate and excluded from summaries") {
  const SimScenario sc = small_scenario();
  LearnerSpec ridge{LearnerFamily::ridge, Task::classification, 0.5};
  StudyConfig cfg = light_config();
  cfg.grid_count = 3;  // a quadratic spline needs at least 4 points
  const std::vector<StudyMethod> methods = {
      {"spline:ridge", MethodKind::curve_spline, ridge}};
  const auto study = run_coverage_study(sc, methods, cfg);
  for (const auto& rec : study.records[0]) {
    CHECK_FALSE(rec.ok);
    CHECK_FALSE(rec.error.empty());
  }
  CHECK(study.summaries[0].failed == 2);
  CHECK(std::isnan(study.summaries[0].coverage));
}

TEST_CASE("method task mismatches are rejected up front") {
  const SimScenario sc = small_scenario();
  LearnerSpec wrong{LearnerFamily::ridge, Task::regression, 0.5};
  const std::vector<StudyMethod> methods = {
      {"power:ridge", MethodKind::curve_power, wrong}};
  CHECK_THROWS_AS(run_coverage_study(sc, methods, light_config()),
                  InvalidInput);
  CHECK_THROWS_AS(run_coverage_study(sc, {}, light_config()), InvalidInput);
}

}  // TEST_SUITE
