#include "l2e/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "l2e/parallel.hpp"

namespace l2e {

namespace {

// Stream tags so tuning, split drawing, and model fitting never share draws.
constexpr std::uint64_t kTagTuning = 0xA1;
constexpr std::uint64_t kTagSplit = 0xA2;
constexpr std::uint64_t kTagFit = 0xA3;

void check_metric_task(Metric metric, Task task) {
  if (metric == Metric::auc && task != Task::classification)
    throw InvalidInput("auc requires a classification task");
  if (metric == Metric::pmse && task != Task::regression)
    throw InvalidInput("pmse requires a regression task");
}

SplitEstimate evaluate_split(const Dataset& data, const LearnerSpec& learner,
                             Metric metric, const Split& split, double alpha,
                             std::uint64_t fit_seed, int n, int k) {
  Dataset train = data.subset(split.train);
  FittedModel model = fit(learner, train, fit_seed, 1);

  Eigen::MatrixXd test_x(split.test.size(), data.n_features());
  Eigen::VectorXd test_y(split.test.size());
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    test_x.row(i) = data.features.row(split.test[i]);
    test_y[i] = data.response[split.test[i]];
  }
  Eigen::VectorXd scores = model.predict(test_x);

  SplitEstimate e;
  e.subsample_size = n;
  e.repeat_index = k;
  if (metric == Metric::auc) {
    e.estimate = auc(scores, test_y);
    e.bound = delong_lower_bound(scores, test_y, alpha);
    for (Eigen::Index i = 0; i < test_y.size(); ++i)
      (test_y[i] == 1.0 ? e.test_pos : e.test_neg) += 1;
  } else {
    e.estimate = pmse(scores, test_y);
    e.bound = pmse_upper_bound(scores, test_y, alpha);
  }
  return e;
}

std::vector<SplitEstimate> repeated_holdout_resolved(
    const Dataset& data, const LearnerSpec& resolved, Metric metric, int n,
    int repeats, double alpha, std::uint64_t seed, int workers) {
  std::vector<SplitEstimate> out(repeats);
  parallel_for(repeats, workers, [&](int idx) {
    const int k = idx + 1;
    Rng rng(mix_seed(seed, {static_cast<std::uint64_t>(n),
                            static_cast<std::uint64_t>(k), kTagSplit}));
    // A split whose fit does not converge is redrawn from the same stream.
    for (int attempt = 0;; ++attempt) {
      Split split = draw_split(data, n, resolved.task == Task::classification,
                               rng);
      try {
        out[idx] = evaluate_split(
            data, resolved, metric, split, alpha,
            mix_seed(seed, {static_cast<std::uint64_t>(n),
                            static_cast<std::uint64_t>(k), kTagFit,
                            static_cast<std::uint64_t>(attempt)}),
            n, k);
        return;
      } catch (const LearnerNonConvergence& err) {
        if (attempt >= 3)
          throw SplitFailure("split (n=" + std::to_string(n) +
                             ", k=" + std::to_string(k) +
                             ") kept failing: " + err.what());
      }
    }
  });
  return out;
}

LearnerSpec resolve_for_size(const Dataset& data, const LearnerSpec& learner,
                             int n, std::uint64_t seed) {
  if (learner.family == LearnerFamily::random_forest || learner.penalty)
    return learner;
  // Tune once per subsample size on a dedicated split, then reuse the
  // penalty for every repeat at this size.
  Rng rng(mix_seed(seed, {static_cast<std::uint64_t>(n), 0ULL, kTagSplit}));
  Split tuning_split =
      draw_split(data, n, learner.task == Task::classification, rng);
  Dataset tuning_train = data.subset(tuning_split.train);
  return with_resolved_penalty(
      learner, tuning_train,
      mix_seed(seed, {static_cast<std::uint64_t>(n), 0ULL, kTagTuning}));
}

}  // namespace

void SubsamplePlan::validate(const Dataset& data) const {
  data.validate();
  if (sizes.empty()) throw InvalidInput("plan: no subsample sizes");
  if (repeats < 2) throw InvalidInput("plan: repeats must be at least 2");
  if (min_test < 1) throw InvalidInput("plan: min_test must be positive");
  const bool want_balanced = data.task == Task::classification;
  if (balanced != want_balanced)
    throw InvalidInput("plan: balanced must match the task");
  int prev = 1;
  for (int n : sizes) {
    if (n < 2) throw InvalidInput("plan: sizes must be at least 2");
    if (n <= prev) throw InvalidInput("plan: sizes must be strictly ascending");
    if (n > data.n_rows() - min_test)
      throw InvalidInput("plan: size leaves fewer than min_test test rows");
    prev = n;
  }
}

std::vector<int> homogeneous_grid(int n_min, int n_max, int count) {
  if (count < 1) throw InvalidInput("grid: count must be positive");
  if (n_min < 2 || n_max < n_min)
    throw InvalidInput("grid: need 2 <= n_min <= n_max");
  std::vector<int> sizes;
  if (count == 1 || n_min == n_max) {
    sizes.push_back(n_min);
    if (n_max != n_min) sizes.push_back(n_max);
    return sizes;
  }
  for (int i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(count - 1);
    const int v = static_cast<int>(std::lround(n_min + t * (n_max - n_min)));
    if (sizes.empty() || v != sizes.back()) sizes.push_back(v);
  }
  return sizes;
}

std::vector<std::vector<int>> stratified_folds(const Dataset& data, int folds,
                                               Rng& rng) {
  if (folds < 2) throw InvalidInput("folds: need at least 2");
  if (folds > data.n_rows())
    throw InvalidInput("folds: more folds than rows");
  std::vector<std::vector<int>> out(folds);

  auto deal = [&](std::vector<int>& rows) {
    rng.shuffle(rows);
    for (std::size_t i = 0; i < rows.size(); ++i)
      out[i % folds].push_back(rows[i]);
  };

  if (data.task == Task::classification) {
    std::vector<int> pos, neg;
    for (int i = 0; i < data.n_rows(); ++i)
      (data.response[i] == 1.0 ? pos : neg).push_back(i);
    deal(pos);
    deal(neg);
  } else {
    std::vector<int> rows(data.n_rows());
    for (int i = 0; i < data.n_rows(); ++i) rows[i] = i;
    deal(rows);
  }
  return out;
}

Split draw_split(const Dataset& data, int n, bool balanced, Rng& rng) {
  const int total = data.n_rows();
  if (n < 2 || n > total - 1)
    throw InfeasibleSplit("split: train size must lie in [2, N-1]");

  Split s;
  if (balanced) {
    if (data.task != Task::classification)
      throw InvalidInput("split: balanced draws need a classification task");
    std::vector<int> pos, neg;
    for (int i = 0; i < total; ++i)
      (data.response[i] == 1.0 ? pos : neg).push_back(i);
    const int np = static_cast<int>(pos.size());
    const int nn = static_cast<int>(neg.size());

    // Class-proportional count, clamped so both train and test keep at
    // least one member of each class.
    int take_pos = static_cast<int>(
        std::lround(static_cast<double>(n) * np / static_cast<double>(total)));
    const int lo = std::max(1, n - (nn - 1));
    const int hi = std::min({n - 1, np - 1, n});
    if (lo > hi)
      throw InfeasibleSplit("split: no class-balanced allocation exists");
    take_pos = std::clamp(take_pos, lo, hi);
    const int take_neg = n - take_pos;

    std::vector<int> pick_pos = rng.sample_without_replacement(np, take_pos);
    std::vector<int> pick_neg = rng.sample_without_replacement(nn, take_neg);
    std::vector<char> in_train(total, 0);
    for (int i : pick_pos) in_train[pos[i]] = 1;
    for (int i : pick_neg) in_train[neg[i]] = 1;
    for (int i = 0; i < total; ++i)
      (in_train[i] ? s.train : s.test).push_back(i);
  } else {
    std::vector<int> pick = rng.sample_without_replacement(total, n);
    std::vector<char> in_train(total, 0);
    for (int i : pick) in_train[i] = 1;
    for (int i = 0; i < total; ++i)
      (in_train[i] ? s.train : s.test).push_back(i);
  }
  return s;
}

std::vector<SplitEstimate> repeated_holdout(const Dataset& data,
                                            const LearnerSpec& learner,
                                            Metric metric, int n, int repeats,
                                            double alpha, std::uint64_t seed,
                                            int workers) {
  data.validate();
  learner.validate();
  check_metric_task(metric, data.task);
  if (learner.task != data.task)
    throw InvalidInput("repeated_holdout: learner task differs from data");
  if (repeats < 1) throw InvalidInput("repeated_holdout: repeats < 1");
  if (!(alpha > 0.0 && alpha < 0.5))
    throw InvalidInput("repeated_holdout: alpha outside (0, 0.5)");

  const LearnerSpec resolved = resolve_for_size(data, learner, n, seed);
  return repeated_holdout_resolved(data, resolved, metric, n, repeats, alpha,
                                   seed, workers);
}

LearningTrajectory build_trajectory(const Dataset& data,
                                    const LearnerSpec& learner, Metric metric,
                                    const SubsamplePlan& plan, double alpha,
                                    int workers) {
  plan.validate(data);
  learner.validate();
  check_metric_task(metric, data.task);
  if (learner.task != data.task)
    throw InvalidInput("build_trajectory: learner task differs from data");
  if (!(alpha > 0.0 && alpha < 0.5))
    throw InvalidInput("build_trajectory: alpha outside (0, 0.5)");

  const int j_count = static_cast<int>(plan.sizes.size());

  // Phase 1: resolve the penalty per size (sequential; cheap relative to
  // the split fits and keeps tuning streams independent of workers).
  std::vector<LearnerSpec> per_size(j_count, learner);
  for (int j = 0; j < j_count; ++j)
    per_size[j] = resolve_for_size(data, learner, plan.sizes[j], plan.seed);

  // Phase 2: all (size, repeat) split evaluations, flattened so any worker
  // count yields the same records.
  LearningTrajectory traj;
  traj.alpha = alpha;
  traj.metric = metric;
  traj.repeats = plan.repeats;
  traj.points.resize(j_count);
  traj.splits.resize(j_count);
  traj.penalties.resize(j_count);
  for (int j = 0; j < j_count; ++j) {
    traj.splits[j].resize(plan.repeats);
    traj.penalties[j] = per_size[j].penalty
                            ? *per_size[j].penalty
                            : std::numeric_limits<double>::quiet_NaN();
  }

  parallel_for(j_count * plan.repeats, workers, [&](int flat) {
    const int j = flat / plan.repeats;
    const int idx = flat % plan.repeats;
    const int n = plan.sizes[j];
    const int k = idx + 1;
    Rng rng(mix_seed(plan.seed, {static_cast<std::uint64_t>(n),
                                 static_cast<std::uint64_t>(k), kTagSplit}));
    for (int attempt = 0;; ++attempt) {
      Split split =
          draw_split(data, n, data.task == Task::classification, rng);
      try {
        traj.splits[j][idx] = evaluate_split(
            data, per_size[j], metric, split, alpha,
            mix_seed(plan.seed, {static_cast<std::uint64_t>(n),
                                 static_cast<std::uint64_t>(k), kTagFit,
                                 static_cast<std::uint64_t>(attempt)}),
            n, k);
        return;
      } catch (const LearnerNonConvergence& err) {
        if (attempt >= 3)
          throw SplitFailure("split (n=" + std::to_string(n) +
                             ", k=" + std::to_string(k) +
                             ") kept failing: " + err.what());
      }
    }
  });

  for (int j = 0; j < j_count; ++j) {
    double s = 0.0;
    for (const auto& e : traj.splits[j]) s += e.estimate;
    traj.points[j] = TrajectoryPoint{plan.sizes[j],
                                     s / static_cast<double>(plan.repeats)};
  }
  return traj;
}

}  // namespace l2e
