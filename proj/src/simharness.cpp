#include "l2e/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "l2e/rng.hpp"
#include "l2e/stats.hpp"

namespace l2e {

namespace {

constexpr std::uint64_t kTagData = 1;
constexpr std::uint64_t kTagOracle = 2;
constexpr std::uint64_t kTagTune = 3;
constexpr std::uint64_t kTagFit = 4;
constexpr std::uint64_t kTagTrajectory = 5;
constexpr std::uint64_t kTagCv = 6;
constexpr std::uint64_t kTagLoob = 7;

constexpr int kOracleBlock = 2048;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::VectorXd draw_coefficients(const SimScenario& sc, Rng& rng) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(sc.n_features);
  if (sc.coef.kind == CoefKind::exponential) {
    for (int j = 0; j < sc.n_features; ++j)
      beta[j] = rng.exponential(sc.coef.rate);
  } else {
    for (int j = 0; j < sc.coef.sparse_count; ++j)
      beta[j] = sc.coef.sparse_value;
  }
  return beta;
}

// Rows of X ~ N(0, Sigma): row = L z with z standard normal, drawn row by
// row so the stream layout is independent of any blocking.
void fill_gaussian_rows(Eigen::MatrixXd& x, const Eigen::MatrixXd& chol,
                        Rng& rng) {
  const auto p = x.cols();
  Eigen::VectorXd z(p);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < p; ++j) z[j] = rng.normal();
    x.row(i) = (chol * z).transpose();
  }
}

}  // namespace

void SimScenario::validate() const {
  if (n_rows < 4) throw InvalidInput("scenario: n_rows must be at least 4");
  if (n_features < 1) throw InvalidInput("scenario: n_features < 1");
  if (replicates < 1) throw InvalidInput("scenario: replicates < 1");
  if (oracle_size < 10) throw InvalidInput("scenario: oracle_size < 10");
  if (!(covariance.rho > -1.0 && covariance.rho < 1.0))
    throw InvalidInput("scenario: rho outside (-1, 1)");
  if (covariance.kind == CovarianceKind::block && covariance.block_size < 1)
    throw InvalidInput("scenario: block covariance needs block_size >= 1");
  if (coef.kind == CoefKind::exponential && !(coef.rate > 0.0))
    throw InvalidInput("scenario: exponential rate must be positive");
  if (coef.kind == CoefKind::fixed_sparse &&
      (coef.sparse_count < 0 || coef.sparse_count > n_features))
    throw InvalidInput("scenario: sparse_count outside [0, p]");
  if (task == Task::regression && !(noise_sd >= 0.0))
    throw InvalidInput("scenario: noise_sd must be nonnegative");
}

Eigen::MatrixXd covariance_matrix(const CovarianceSpec& spec, int p) {
  if (p < 1) throw InvalidInput("covariance: p < 1");
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(p, p);
  switch (spec.kind) {
    case CovarianceKind::identity:
      break;
    case CovarianceKind::ar1:
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
          sigma(i, j) = std::pow(spec.rho, std::abs(i - j));
      break;
    case CovarianceKind::block:
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
          if (i != j && i / spec.block_size == j / spec.block_size)
            sigma(i, j) = spec.rho;
      break;
  }
  return sigma;
}

Eigen::MatrixXd cholesky_factor(const CovarianceSpec& spec, int p) {
  if (spec.kind == CovarianceKind::identity)
    return Eigen::MatrixXd::Identity(p, p);
  Eigen::LLT<Eigen::MatrixXd> llt(covariance_matrix(spec, p));
  if (llt.info() != Eigen::Success)
    throw InvalidInput("covariance: matrix is not positive definite");
  return llt.matrixL();
}

std::pair<Dataset, Eigen::VectorXd> generate_dataset(
    const SimScenario& scenario, int replicate) {
  scenario.validate();
  if (replicate < 0) throw InvalidInput("generate_dataset: replicate < 0");

  Rng rng(mix_seed(scenario.seed,
                   {static_cast<std::uint64_t>(replicate), kTagData}));
  Eigen::VectorXd beta = draw_coefficients(scenario, rng);
  const Eigen::MatrixXd chol =
      cholesky_factor(scenario.covariance, scenario.n_features);

  Dataset data;
  data.task = scenario.task;
  data.features.resize(scenario.n_rows, scenario.n_features);
  fill_gaussian_rows(data.features, chol, rng);
  data.response.resize(scenario.n_rows);

  const Eigen::VectorXd eta = data.features * beta;
  if (scenario.task == Task::classification) {
    for (int attempt = 0; attempt < 10; ++attempt) {
      int pos = 0;
      for (int i = 0; i < scenario.n_rows; ++i) {
        const double pr = 1.0 / (1.0 + std::exp(-eta[i]));
        data.response[i] = rng.uniform() < pr ? 1.0 : 0.0;
        pos += data.response[i] == 1.0;
      }
      if (pos > 0 && pos < scenario.n_rows) return {std::move(data), beta};
    }
    throw DegenerateScenario(
        "generate_dataset: responses keep collapsing to one class");
  }
  for (int i = 0; i < scenario.n_rows; ++i)
    data.response[i] = eta[i] + scenario.noise_sd * rng.normal();
  return {std::move(data), beta};
}

double oracle_performance(const FittedModel& model,
                          const SimScenario& scenario,
                          const Eigen::VectorXd& beta, Metric metric,
                          int replicate) {
  scenario.validate();
  if (beta.size() != scenario.n_features)
    throw InvalidInput("oracle: coefficient length differs from scenario");

  Rng rng(mix_seed(scenario.seed,
                   {static_cast<std::uint64_t>(replicate), kTagOracle}));
  const Eigen::MatrixXd chol =
      cholesky_factor(scenario.covariance, scenario.n_features);

  Eigen::VectorXd scores(scenario.oracle_size);
  Eigen::VectorXd truths(scenario.oracle_size);
  int done = 0;
  while (done < scenario.oracle_size) {
    const int b = std::min(kOracleBlock, scenario.oracle_size - done);
    Eigen::MatrixXd x(b, scenario.n_features);
    fill_gaussian_rows(x, chol, rng);
    const Eigen::VectorXd eta = x * beta;
    if (scenario.task == Task::classification) {
      for (int i = 0; i < b; ++i) {
        const double pr = 1.0 / (1.0 + std::exp(-eta[i]));
        truths[done + i] = rng.uniform() < pr ? 1.0 : 0.0;
      }
    } else {
      for (int i = 0; i < b; ++i)
        truths[done + i] = eta[i] + scenario.noise_sd * rng.normal();
    }
    scores.segment(done, b) = model.predict(x);
    done += b;
  }

  if (metric == Metric::auc) return auc(scores, truths);
  return pmse(scores, truths);
}

CoverageStudy run_coverage_study(const SimScenario& scenario,
                                 const std::vector<StudyMethod>& methods,
                                 const StudyConfig& config) {
  scenario.validate();
  if (methods.empty()) throw InvalidInput("study: no methods");
  const Metric metric = default_metric(scenario.task);
  for (const auto& m : methods) {
    m.learner.validate();
    if (m.learner.task != scenario.task)
      throw InvalidInput("study: method task differs from scenario");
  }

  // Methods sharing a learner spec share the fitted model, the truth, and
  // (for curve methods) the trajectory within each replicate.
  auto learner_key = [](const LearnerSpec& s) {
    std::string k = std::string(to_string(s.family)) + "|";
    k += s.penalty ? std::to_string(*s.penalty) : "auto";
    k += "|" + std::to_string(s.tuning.cv_folds) + "," +
         std::to_string(s.tuning.cv_repeats) + "," +
         std::to_string(s.tuning.grid_size);
    k += "|" + std::to_string(s.forest.trees) + "," +
         std::to_string(s.forest.mtry) + "," +
         std::to_string(s.forest.min_leaf);
    return k;
  };
  std::vector<LearnerSpec> unique_learners;
  std::vector<std::string> keys;
  std::vector<int> method_learner(methods.size());
  std::vector<char> learner_needs_curve;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const std::string key = learner_key(methods[m].learner);
    auto it = std::find(keys.begin(), keys.end(), key);
    int idx;
    if (it == keys.end()) {
      idx = static_cast<int>(keys.size());
      keys.push_back(key);
      unique_learners.push_back(methods[m].learner);
      learner_needs_curve.push_back(0);
    } else {
      idx = static_cast<int>(it - keys.begin());
    }
    method_learner[m] = idx;
    if (methods[m].kind == MethodKind::curve_power ||
        methods[m].kind == MethodKind::curve_spline)
      learner_needs_curve[idx] = 1;
  }

  CoverageStudy study;
  study.methods = methods;
  study.records.assign(methods.size(),
                       std::vector<ReplicateRecord>(scenario.replicates));

  for (int r = 0; r < scenario.replicates; ++r) {
    for (std::size_t m = 0; m < methods.size(); ++m) {
      study.records[m][r].replicate = r;
      study.records[m][r].bound = kNaN;
      study.records[m][r].bound_bc = kNaN;
    }

    Dataset data;
    Eigen::VectorXd beta;
    try {
      auto generated = generate_dataset(scenario, r);
      data = std::move(generated.first);
      beta = std::move(generated.second);
      data.validate();
    } catch (const Error& e) {
      for (std::size_t m = 0; m < methods.size(); ++m)
        study.records[m][r].error = e.what();
      continue;
    }

    const int lcount = static_cast<int>(unique_learners.size());
    std::vector<double> truths(lcount, kNaN);
    std::vector<LearningTrajectory> trajectories(lcount);
    std::vector<std::string> learner_errors(lcount);
    for (int u = 0; u < lcount; ++u) {
      const auto ut = static_cast<std::uint64_t>(u);
      const auto rt = static_cast<std::uint64_t>(r);
      try {
        LearnerSpec resolved = with_resolved_penalty(
            unique_learners[u], data,
            mix_seed(scenario.seed, {rt, kTagTune, ut}));
        FittedModel model =
            fit(resolved, data, mix_seed(scenario.seed, {rt, kTagFit, ut}),
                config.workers);
        truths[u] = oracle_performance(model, scenario, beta, metric, r);
        if (learner_needs_curve[u]) {
          SubsamplePlan plan = default_plan(
              data, config.n_min, config.grid_count, config.repeats,
              mix_seed(scenario.seed, {rt, kTagTrajectory, ut}),
              config.min_test);
          trajectories[u] =
              build_trajectory(data, unique_learners[u], metric, plan,
                               config.alpha, config.workers);
        }
      } catch (const Error& e) {
        learner_errors[u] = e.what();
      }
    }

    for (std::size_t m = 0; m < methods.size(); ++m) {
      ReplicateRecord& rec = study.records[m][r];
      const int u = method_learner[m];
      if (!learner_errors[u].empty()) {
        rec.error = learner_errors[u];
        continue;
      }
      rec.truth = truths[u];
      const auto ut = static_cast<std::uint64_t>(u);
      const auto rt = static_cast<std::uint64_t>(r);
      try {
        switch (methods[m].kind) {
          case MethodKind::curve_power:
          case MethodKind::curve_spline: {
            EstimatorConfig ec;
            ec.fitter = methods[m].kind == MethodKind::curve_power
                            ? FitterKind::power_law
                            : FitterKind::spline;
            ec.selection = config.selection;
            ec.margin_fraction = config.margin_fraction;
            ec.alpha = config.alpha;
            ec.plan = default_plan(
                data, config.n_min, config.grid_count, config.repeats,
                mix_seed(scenario.seed, {rt, kTagTrajectory, ut}),
                config.min_test);
            ec.workers = config.workers;
            BoundReport br = learn2evaluate(data, methods[m].learner, metric,
                                            ec, trajectories[u]);
            rec.estimate = br.point_estimate;
            rec.bound = br.bound;
            rec.bound_bc = br.bound_bc;
            rec.n_opt = br.n_opt;
            break;
          }
          case MethodKind::cv: {
            rec.estimate = cv_point_estimate(
                data, methods[m].learner, metric, config.cv_folds,
                mix_seed(scenario.seed, {rt, kTagCv, ut}), config.workers);
            break;
          }
          case MethodKind::loob: {
            BootstrapConfig bc = config.bootstrap;
            bc.alpha = config.alpha;
            LoobResult lr =
                loob(data, methods[m].learner, metric, bc,
                     mix_seed(scenario.seed, {rt, kTagLoob, ut}),
                     config.workers);
            rec.estimate = lr.point_estimate;
            rec.bound = lr.bound;
            break;
          }
        }
        rec.ok = true;
      } catch (const Error& e) {
        rec.error = e.what();
      }
    }
  }

  // Per-method summaries over the successful replicates.
  for (std::size_t m = 0; m < methods.size(); ++m) {
    MethodSummary s;
    std::vector<double> errs, bounds_gap, bounds_gap_bc, nopts;
    int covered = 0, covered_bc = 0, with_bound = 0, with_bc = 0;
    for (const auto& rec : study.records[m]) {
      if (!rec.ok) {
        ++s.failed;
        continue;
      }
      errs.push_back(rec.estimate - rec.truth);
      if (!std::isnan(rec.bound)) {
        ++with_bound;
        const bool cov = metric == Metric::auc ? rec.bound <= rec.truth
                                               : rec.bound >= rec.truth;
        covered += cov;
        bounds_gap.push_back(metric == Metric::auc ? rec.truth - rec.bound
                                                   : rec.bound - rec.truth);
      }
      if (!std::isnan(rec.bound_bc)) {
        ++with_bc;
        const bool cov = metric == Metric::auc ? rec.bound_bc <= rec.truth
                                               : rec.bound_bc >= rec.truth;
        covered_bc += cov;
        bounds_gap_bc.push_back(metric == Metric::auc
                                    ? rec.truth - rec.bound_bc
                                    : rec.bound_bc - rec.truth);
      }
      if (rec.n_opt >= 0) nopts.push_back(static_cast<double>(rec.n_opt));
    }
    if (!errs.empty()) {
      double sq = 0.0;
      for (double e : errs) sq += e * e;
      s.rmse = std::sqrt(sq / static_cast<double>(errs.size()));
      s.bias = stats::mean(errs);
    }
    s.coverage = with_bound > 0 ? static_cast<double>(covered) / with_bound
                                : kNaN;
    s.coverage_bc =
        with_bc > 0 ? static_cast<double>(covered_bc) / with_bc : kNaN;
    s.mean_bound_gap = bounds_gap.empty() ? kNaN : stats::mean(bounds_gap);
    s.mean_bound_gap_bc =
        bounds_gap_bc.empty() ? kNaN : stats::mean(bounds_gap_bc);
    s.mean_n_opt = nopts.empty() ? kNaN : stats::mean(nopts);
    study.summaries.push_back(s);
  }
  return study;
}

}  // namespace l2e
