#include "l2e/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "l2e/parallel.hpp"
#include "l2e/resampling.hpp"
#include "l2e/rng.hpp"
#include "l2e/stats.hpp"

namespace l2e {

namespace {

void check_metric_task(Metric metric, Task task) {
  if (metric == Metric::auc && task != Task::classification)
    throw InvalidInput("auc requires a classification task");
  if (metric == Metric::pmse && task != Task::regression)
    throw InvalidInput("pmse requires a regression task");
}

double score_holdout(const FittedModel& model, const Dataset& data,
                     const std::vector<int>& rows, Metric metric) {
  Eigen::MatrixXd x(rows.size(), data.n_features());
  Eigen::VectorXd y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x.row(i) = data.features.row(rows[i]);
    y[i] = data.response[rows[i]];
  }
  Eigen::VectorXd scores = model.predict(x);
  return metric == Metric::auc ? auc(scores, y) : pmse(scores, y);
}

}  // namespace

double cv_point_estimate(const Dataset& data, const LearnerSpec& learner,
                         Metric metric, int folds, std::uint64_t seed,
                         int workers) {
  data.validate();
  learner.validate();
  check_metric_task(metric, data.task);
  if (learner.task != data.task)
    throw InvalidInput("cv: learner task differs from data");

  const LearnerSpec resolved =
      with_resolved_penalty(learner, data, mix_seed(seed, {0xC1ULL}));
  Rng rng(mix_seed(seed, {0xC2ULL}));
  auto fold_rows = stratified_folds(data, folds, rng);

  // Every fold must be scorable: AUC needs both classes held out.
  if (metric == Metric::auc) {
    for (const auto& rows : fold_rows) {
      int pos = 0;
      for (int r : rows)
        if (data.response[r] == 1.0) ++pos;
      if (pos == 0 || pos == static_cast<int>(rows.size()))
        throw InvalidInput("cv: a fold holds only one class");
    }
  }

  std::vector<double> fold_scores(folds);
  parallel_for(folds, workers, [&](int f) {
    std::vector<char> held(data.n_rows(), 0);
    for (int r : fold_rows[f]) held[r] = 1;
    std::vector<int> tr_rows;
    tr_rows.reserve(data.n_rows() - fold_rows[f].size());
    for (int r = 0; r < data.n_rows(); ++r)
      if (!held[r]) tr_rows.push_back(r);
    Dataset train = data.subset(tr_rows);
    FittedModel model =
        fit(resolved, train,
            mix_seed(seed, {0xC3ULL, static_cast<std::uint64_t>(f)}), 1);
    fold_scores[f] = score_holdout(model, data, fold_rows[f], metric);
  });
  return stats::mean(fold_scores);
}

LoobResult loob(const Dataset& data, const LearnerSpec& learner, Metric metric,
                const BootstrapConfig& config, std::uint64_t seed,
                int workers) {
  data.validate();
  learner.validate();
  check_metric_task(metric, data.task);
  if (learner.task != data.task)
    throw InvalidInput("loob: learner task differs from data");
  if (config.n_boot < 2) throw InvalidInput("loob: n_boot must be at least 2");
  if (!(config.alpha > 0.0 && config.alpha < 0.5))
    throw InvalidInput("loob: alpha outside (0, 0.5)");
  if (config.n_boot < 100)
    std::cerr << "loob: n_boot below 100 makes the quantile bound unstable\n";

  const LearnerSpec resolved =
      with_resolved_penalty(learner, data, mix_seed(seed, {0xB1ULL}));

  const int n = data.n_rows();
  std::vector<int> pos, neg;
  if (data.task == Task::classification) {
    for (int i = 0; i < n; ++i)
      (data.response[i] == 1.0 ? pos : neg).push_back(i);
  }

  std::vector<double> values(config.n_boot,
                             std::numeric_limits<double>::quiet_NaN());
  parallel_for(config.n_boot, workers, [&](int b) {
    Rng rng(mix_seed(seed, {0xB2ULL, static_cast<std::uint64_t>(b)}));
    for (int attempt = 0; attempt <= config.max_redraws; ++attempt) {
      // Stratified resample with replacement, preserving class counts.
      std::vector<int> sample;
      sample.reserve(n);
      std::vector<char> in_bag(n, 0);
      auto draw_from = [&](const std::vector<int>& group) {
        for (std::size_t i = 0; i < group.size(); ++i) {
          const int r = group[rng.uniform_below(group.size())];
          sample.push_back(r);
          in_bag[r] = 1;
        }
      };
      if (data.task == Task::classification) {
        draw_from(pos);
        draw_from(neg);
      } else {
        std::vector<int> all(n);
        for (int i = 0; i < n; ++i) all[i] = i;
        draw_from(all);
      }

      std::vector<int> oob;
      for (int i = 0; i < n; ++i)
        if (!in_bag[i]) oob.push_back(i);
      if (oob.empty()) continue;
      if (metric == Metric::auc) {
        int oob_pos = 0;
        for (int r : oob)
          if (data.response[r] == 1.0) ++oob_pos;
        if (oob_pos == 0 || oob_pos == static_cast<int>(oob.size()))
          continue;  // redraw: the out-of-bag set lost a class
      }

      Dataset train = data.subset(sample);
      FittedModel model =
          fit(resolved, train,
              mix_seed(seed, {0xB3ULL, static_cast<std::uint64_t>(b),
                              static_cast<std::uint64_t>(attempt)}),
              1);
      values[b] = score_holdout(model, data, oob, metric);
      return;
    }
  });

  LoobResult result;
  for (double v : values) {
    if (std::isnan(v)) {
      ++result.skipped;
    } else {
      result.estimates.push_back(v);
      ++result.used;
    }
  }
  if (result.used < 2)
    throw DegenerateScenario("loob: fewer than 2 usable bootstrap replicates");
  result.point_estimate = stats::mean(result.estimates);
  result.bound = stats::quantile_type7(
      result.estimates,
      metric == Metric::auc ? config.alpha : 1.0 - config.alpha);
  return result;
}

}  // namespace l2e
