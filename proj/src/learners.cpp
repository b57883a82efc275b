#include "l2e/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "l2e/parallel.hpp"
#include "l2e/resampling.hpp"
#include "l2e/rng.hpp"
#include "l2e/stats.hpp"

namespace l2e {

namespace {

constexpr double kObjTol = 1e-7;     // relative objective tolerance
constexpr int kMaxSweeps = 10000;    // per penalty value
constexpr double kWeightFloor = 1e-5;
constexpr double kDecades = 4.0;     // grid spans lambda_max * 10^-kDecades
constexpr double kRidgeShift = 1e3;  // ridge grid sits three decades higher

struct Standardized {
  Eigen::MatrixXd x;  // columns centered and scaled to unit variance
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  std::vector<char> dead;  // zero-variance columns, excluded from updates
};

Standardized standardize(const Eigen::MatrixXd& x) {
  const auto n = x.rows();
  const auto p = x.cols();
  Standardized s;
  s.mean = x.colwise().mean();
  s.x = x.rowwise() - s.mean.transpose();
  s.scale.resize(p);
  s.dead.assign(p, 0);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double var = s.x.col(j).squaredNorm() / static_cast<double>(n);
    if (var < 1e-24) {
      s.scale[j] = 1.0;
      s.dead[j] = 1;
      s.x.col(j).setZero();
    } else {
      s.scale[j] = std::sqrt(var);
      s.x.col(j) /= s.scale[j];
    }
  }
  return s;
}

inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

double penalty_value(const Eigen::VectorXd& beta, double lambda,
                     bool is_lasso) {
  return is_lasso ? lambda * beta.lpNorm<1>()
                  : 0.5 * lambda * beta.squaredNorm();
}

// Coordinate descent for (1/2n)||yc - X b||^2 + penalty on a standardized
// design (unit column variance makes the quadratic coefficient 1). Lasso
// alternates full sweeps with sweeps over the active set; convergence is
// only declared on a full sweep.
void gaussian_cd(const Standardized& s, const Eigen::VectorXd& yc,
                 double lambda, bool is_lasso, Eigen::VectorXd& beta,
                 double* objective, int* sweeps) {
  const auto n = s.x.rows();
  const auto p = s.x.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::VectorXd r = yc - s.x * beta;

  auto sweep = [&](bool active_only) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (s.dead[j]) continue;
      if (active_only && beta[j] == 0.0) continue;
      const double g = s.x.col(j).dot(r) * inv_n + beta[j];
      const double nb = is_lasso ? soft_threshold(g, lambda) : g / (1.0 + lambda);
      const double d = nb - beta[j];
      if (d != 0.0) {
        r.noalias() -= d * s.x.col(j);
        beta[j] = nb;
      }
    }
    ++*sweeps;
  };
  auto obj = [&]() {
    return 0.5 * inv_n * r.squaredNorm() + penalty_value(beta, lambda, is_lasso);
  };

  double prev = std::numeric_limits<double>::infinity();
  bool active_only = false;
  for (;;) {
    if (*sweeps >= kMaxSweeps)
      throw LearnerNonConvergence("coordinate descent exceeded sweep budget");
    sweep(active_only);
    const double o = obj();
    if (std::abs(prev - o) <= kObjTol * (1.0 + std::abs(o))) {
      if (!active_only) break;
      active_only = false;  // confirm on a full sweep
    } else {
      active_only = is_lasso;
    }
    prev = o;
  }
  *objective = obj();
}

double logistic_nll(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double nll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // log(1 + e^eta) - y*eta, computed stably for either sign of eta
    const double e = eta[i];
    nll += (e > 0.0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e))) -
           y[i] * e;
  }
  return nll / static_cast<double>(eta.size());
}

// Penalized logistic regression: iteratively reweighted least squares with
// a weighted coordinate-descent inner loop. Outer convergence is on the
// true penalized negative log-likelihood.
void logistic_cd(const Standardized& s, const Eigen::VectorXd& y,
                 double lambda, bool is_lasso, double& intercept,
                 Eigen::VectorXd& beta, double* objective, int* sweeps) {
  const auto n = s.x.rows();
  const auto p = s.x.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::VectorXd eta = (s.x * beta).array() + intercept;
  double prev_outer = logistic_nll(eta, y) + penalty_value(beta, lambda, is_lasso);

  Eigen::VectorXd w(n), z(n), r(n), denom(p);
  for (int outer = 0; outer < 100; ++outer) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pr = 1.0 / (1.0 + std::exp(-eta[i]));
      w[i] = std::max(pr * (1.0 - pr), kWeightFloor);
      z[i] = eta[i] + (y[i] - pr) / w[i];
    }
    for (Eigen::Index j = 0; j < p; ++j)
      denom[j] = s.dead[j] ? 0.0 : s.x.col(j).cwiseAbs2().dot(w) * inv_n;
    const double w_sum = w.sum();

    r = z - eta;  // z - intercept - X beta
    auto sweep = [&](bool active_only) {
      const double d0 = w.dot(r) / w_sum;
      if (d0 != 0.0) {
        intercept += d0;
        r.array() -= d0;
      }
      for (Eigen::Index j = 0; j < p; ++j) {
        if (s.dead[j] || denom[j] <= 1e-12) continue;
        if (active_only && beta[j] == 0.0) continue;
        const double g =
            (s.x.col(j).array() * w.array() * r.array()).sum() * inv_n +
            denom[j] * beta[j];
        const double nb = is_lasso ? soft_threshold(g, lambda) / denom[j]
                                   : g / (denom[j] + lambda);
        const double d = nb - beta[j];
        if (d != 0.0) {
          r.noalias() -= d * s.x.col(j);
          beta[j] = nb;
        }
      }
      ++*sweeps;
    };
    auto quad_obj = [&]() {
      return 0.5 * inv_n * (w.array() * r.array().square()).sum() +
             penalty_value(beta, lambda, is_lasso);
    };

    double prev = std::numeric_limits<double>::infinity();
    bool active_only = false;
    for (;;) {
      if (*sweeps >= kMaxSweeps)
        throw LearnerNonConvergence("logistic IRLS exceeded sweep budget");
      sweep(active_only);
      const double o = quad_obj();
      if (std::abs(prev - o) <= 1e-9 * (1.0 + std::abs(o))) {
        if (!active_only) break;
        active_only = false;
      } else {
        active_only = is_lasso;
      }
      prev = o;
    }

    eta = z - r;
    const double outer_obj =
        logistic_nll(eta, y) + penalty_value(beta, lambda, is_lasso);
    if (std::abs(prev_outer - outer_obj) <=
        kObjTol * (1.0 + std::abs(outer_obj))) {
      *objective = outer_obj;
      return;
    }
    prev_outer = outer_obj;
  }
  throw LearnerNonConvergence("logistic IRLS exceeded iteration budget");
}

// Solves one penalty value, warm-starting from the caller's coefficients.
void cd_solve(const Standardized& s, const Eigen::VectorXd& y, Task task,
              double lambda, bool is_lasso, double& intercept,
              Eigen::VectorXd& beta, double* objective, int* sweeps) {
  if (task == Task::classification) {
    logistic_cd(s, y, lambda, is_lasso, intercept, beta, objective, sweeps);
  } else {
    const double y_mean = y.mean();
    Eigen::VectorXd yc = y.array() - y_mean;
    gaussian_cd(s, yc, lambda, is_lasso, beta, objective, sweeps);
    intercept = y_mean;
  }
}

// Back-transform standardized coefficients to the original feature scale.
LinearModel to_original_scale(const Standardized& s, double intercept,
                              const Eigen::VectorXd& beta, double lambda,
                              double objective, int sweeps) {
  LinearModel m;
  m.coef = (beta.array() / s.scale.array()).matrix();
  m.intercept = intercept - m.coef.dot(s.mean);
  m.penalty = lambda;
  m.objective = objective;
  m.sweeps = sweeps;
  return m;
}

std::vector<double> geometric_path(double from, double to, int steps) {
  std::vector<double> path;
  if (to >= from) {
    path.push_back(to);
    return path;
  }
  const double ratio = std::pow(to / from, 1.0 / static_cast<double>(steps - 1));
  double v = from;
  for (int i = 0; i < steps - 1; ++i) {
    path.push_back(v);
    v *= ratio;
  }
  path.push_back(to);
  return path;
}

// ---- random forest ----

struct TreeBuilder {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXd& y;
  int mtry;
  int min_leaf;
  Rng& rng;
  std::vector<TreeNode> nodes;
  std::vector<int> rows;                       // bootstrap indices, partitioned in place
  std::vector<std::pair<double, double>> scratch;  // (feature value, response)

  int build(int lo, int hi) {
    const int m = hi - lo;
    double sum = 0.0, sumsq = 0.0;
    for (int i = lo; i < hi; ++i) {
      const double v = y[rows[i]];
      sum += v;
      sumsq += v * v;
    }
    const int node_id = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{});
    nodes[node_id].value = sum / static_cast<double>(m);

    if (m < 2 * min_leaf) return node_id;
    if (sumsq - sum * sum / static_cast<double>(m) <= 1e-12 * m) return node_id;

    const int p = static_cast<int>(x.cols());
    std::vector<int> feats = rng.sample_without_replacement(p, mtry);

    // Best split maximizes sum_l^2/m_l + sum_r^2/m_r (equivalently the
    // variance reduction); ties keep the earlier candidate.
    double best_score = sum * sum / static_cast<double>(m) + 1e-12;
    int best_feat = -1;
    double best_thr = 0.0;
    for (int f : feats) {
      scratch.clear();
      for (int i = lo; i < hi; ++i)
        scratch.emplace_back(x(rows[i], f), y[rows[i]]);
      std::sort(scratch.begin(), scratch.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      double left_sum = 0.0;
      for (int i = 1; i < m; ++i) {
        left_sum += scratch[i - 1].second;
        if (scratch[i].first == scratch[i - 1].first) continue;
        if (i < min_leaf || m - i < min_leaf) continue;
        const double right_sum = sum - left_sum;
        const double score = left_sum * left_sum / static_cast<double>(i) +
                             right_sum * right_sum / static_cast<double>(m - i);
        if (score > best_score) {
          best_score = score;
          best_feat = f;
          best_thr = 0.5 * (scratch[i - 1].first + scratch[i].first);
        }
      }
    }
    if (best_feat < 0) return node_id;

    auto mid_it = std::partition(
        rows.begin() + lo, rows.begin() + hi,
        [&](int r) { return x(r, best_feat) <= best_thr; });
    const int mid = static_cast<int>(mid_it - rows.begin());
    if (mid == lo || mid == hi) return node_id;  // numeric edge, keep as leaf

    nodes[node_id].feature = best_feat;
    nodes[node_id].threshold = best_thr;
    const int left_id = build(lo, mid);
    nodes[node_id].left = left_id;
    const int right_id = build(mid, hi);
    nodes[node_id].right = right_id;
    return node_id;
  }
};

Tree build_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int mtry,
                int min_leaf, std::uint64_t seed) {
  Rng rng(seed);
  const int n = static_cast<int>(x.rows());
  TreeBuilder b{x, y, mtry, min_leaf, rng, {}, {}, {}};
  b.rows.resize(n);
  for (int i = 0; i < n; ++i)
    b.rows[i] = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n)));
  b.build(0, n);
  Tree t;
  t.nodes = std::move(b.nodes);
  return t;
}

}  // namespace

void LearnerSpec::validate() const {
  if (family != LearnerFamily::random_forest) {
    if (penalty && !(*penalty >= 0.0))
      throw InvalidInput("learner: penalty must be nonnegative");
    if (tuning.cv_folds < 2) throw InvalidInput("learner: cv_folds < 2");
    if (tuning.cv_repeats < 1) throw InvalidInput("learner: cv_repeats < 1");
    if (tuning.grid_size < 2) throw InvalidInput("learner: grid_size < 2");
  } else {
    if (forest.trees < 1) throw InvalidInput("learner: trees < 1");
    if (forest.mtry < 0) throw InvalidInput("learner: mtry < 0");
    if (forest.min_leaf < 1) throw InvalidInput("learner: min_leaf < 1");
  }
}

double Tree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  int i = 0;
  while (nodes[i].feature >= 0)
    i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left
                                                  : nodes[i].right;
  return nodes[i].value;
}

Eigen::VectorXd FittedModel::predict(const Eigen::MatrixXd& features) const {
  if (static_cast<int>(features.cols()) != n_features_)
    throw InvalidInput("predict: feature width differs from training data");
  if (const auto* lm = std::get_if<LinearModel>(&model_)) {
    Eigen::VectorXd eta = (features * lm->coef).array() + lm->intercept;
    if (task_ == Task::classification)
      return (1.0 / (1.0 + (-eta.array()).exp())).matrix();
    return eta;
  }
  if (const auto* fm = std::get_if<ForestModel>(&model_)) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(features.rows());
    for (const Tree& t : fm->trees)
      for (Eigen::Index i = 0; i < features.rows(); ++i)
        out[i] += t.predict_row(features.row(i));
    return out / static_cast<double>(fm->trees.size());
  }
  throw InvalidInput("predict: model is empty");
}

FittedModel FittedModel::from_linear(LinearModel m, Task task, int n_features,
                                     int train_size) {
  FittedModel f;
  f.model_ = std::move(m);
  f.task_ = task;
  f.n_features_ = n_features;
  f.train_size_ = train_size;
  return f;
}

FittedModel FittedModel::from_forest(ForestModel m, Task task, int n_features,
                                     int train_size) {
  FittedModel f;
  f.model_ = std::move(m);
  f.task_ = task;
  f.n_features_ = n_features;
  f.train_size_ = train_size;
  return f;
}

double lambda_max(const Dataset& train) {
  train.validate();
  Standardized s = standardize(train.features);
  Eigen::VectorXd yc = train.response.array() - train.response.mean();
  const double lm =
      (s.x.transpose() * yc).cwiseAbs().maxCoeff() /
      static_cast<double>(train.n_rows());
  return std::max(lm, 1e-3);  // guard against a constant response
}

std::vector<double> penalty_grid(const Dataset& train, LearnerFamily family,
                                 int grid_size) {
  if (family == LearnerFamily::random_forest)
    throw InvalidInput("penalty_grid: forests have no penalty");
  if (grid_size < 2) throw InvalidInput("penalty_grid: grid_size < 2");
  double top = lambda_max(train);
  if (family == LearnerFamily::ridge) top *= kRidgeShift;
  std::vector<double> grid(grid_size);
  const double log_top = std::log(top);
  const double step = kDecades * std::log(10.0) / (grid_size - 1);
  for (int i = 0; i < grid_size; ++i) grid[i] = std::exp(log_top - i * step);
  return grid;
}

double tune_penalty(const LearnerSpec& spec, const Dataset& train,
                    std::uint64_t seed) {
  spec.validate();
  train.validate();
  if (spec.family == LearnerFamily::random_forest)
    throw InvalidInput("tune_penalty: forests have no penalty");
  if (train.n_rows() < spec.tuning.cv_folds)
    throw InvalidInput("tune_penalty: fewer rows than folds");

  const bool is_lasso = spec.family == LearnerFamily::lasso;
  const std::vector<double> grid =
      penalty_grid(train, spec.family, spec.tuning.grid_size);
  const int g = static_cast<int>(grid.size());

  std::vector<double> winners;
  winners.reserve(spec.tuning.cv_repeats);
  for (int rep = 0; rep < spec.tuning.cv_repeats; ++rep) {
    Rng rng(mix_seed(seed, {0x7D0ULL, static_cast<std::uint64_t>(rep)}));
    auto folds = stratified_folds(train, spec.tuning.cv_folds, rng);
    std::vector<double> cv_err(g, 0.0);
    std::vector<char> usable(g, 1);
    // Classification scores by pooled hold-out ranking quality instead of
    // deviance: a constant (fully penalized) model then never outranks a
    // weak but real signal, which matters at small n.
    std::vector<std::vector<double>> pooled_eta;
    std::vector<double> pooled_y;
    if (train.task == Task::classification) {
      pooled_eta.assign(g, {});
      for (auto& v : pooled_eta) v.reserve(train.n_rows());
      pooled_y.reserve(train.n_rows());
    }

    for (const auto& hold : folds) {
      std::vector<char> in_hold(train.n_rows(), 0);
      for (int r : hold) in_hold[r] = 1;
      std::vector<int> tr_rows;
      tr_rows.reserve(train.n_rows() - hold.size());
      for (int r = 0; r < train.n_rows(); ++r)
        if (!in_hold[r]) tr_rows.push_back(r);

      Dataset tr = train.subset(tr_rows);
      if (tr.task == Task::classification &&
          (tr.count_positive() == 0 || tr.count_positive() == tr.n_rows()))
        throw InvalidInput("tune_penalty: a CV training fold lost a class");

      Standardized s = standardize(tr.features);
      Eigen::VectorXd beta = Eigen::VectorXd::Zero(tr.n_features());
      double intercept = 0.0;

      Eigen::MatrixXd hold_x(hold.size(), train.n_features());
      Eigen::VectorXd hold_y(hold.size());
      for (std::size_t i = 0; i < hold.size(); ++i) {
        hold_x.row(i) = train.features.row(hold[i]);
        hold_y[i] = train.response[hold[i]];
      }
      if (train.task == Task::classification)
        for (Eigen::Index i = 0; i < hold_y.size(); ++i)
          pooled_y.push_back(hold_y[i]);

      for (int gi = 0; gi < g; ++gi) {
        if (!usable[gi]) continue;
        double objective = 0.0;
        int sweeps = 0;
        try {
          cd_solve(s, tr.response, tr.task, grid[gi], is_lasso, intercept,
                   beta, &objective, &sweeps);
        } catch (const LearnerNonConvergence&) {
          // Rule the rest of the path out for this repeat and move on.
          for (int gj = gi; gj < g; ++gj) usable[gj] = 0;
          break;
        }
        LinearModel m = to_original_scale(s, intercept, beta, grid[gi],
                                          objective, sweeps);
        Eigen::VectorXd eta = (hold_x * m.coef).array() + m.intercept;
        if (train.task == Task::classification) {
          for (Eigen::Index i = 0; i < eta.size(); ++i)
            pooled_eta[gi].push_back(eta[i]);
        } else {
          cv_err[gi] += (eta - hold_y).squaredNorm();
        }
      }
    }

    if (train.task == Task::classification) {
      const Eigen::Map<const Eigen::VectorXd> y(pooled_y.data(),
                                                pooled_y.size());
      for (int gi = 0; gi < g; ++gi) {
        if (!usable[gi]) continue;
        const Eigen::Map<const Eigen::VectorXd> e(pooled_eta[gi].data(),
                                                  pooled_eta[gi].size());
        cv_err[gi] = 1.0 - auc(e, y);
      }
    }

    int best = -1;
    for (int gi = 0; gi < g; ++gi) {
      if (!usable[gi]) continue;
      if (best < 0 || cv_err[gi] < cv_err[best]) best = gi;  // ties: larger penalty
    }
    if (best < 0)
      throw LearnerNonConvergence("tune_penalty: no usable penalty value");
    winners.push_back(grid[best]);
  }
  return stats::lower_median(std::move(winners));
}

LearnerSpec with_resolved_penalty(const LearnerSpec& spec, const Dataset& train,
                                  std::uint64_t seed) {
  if (spec.family == LearnerFamily::random_forest || spec.penalty) return spec;
  LearnerSpec out = spec;
  out.penalty = tune_penalty(spec, train, seed);
  return out;
}

FittedModel fit(const LearnerSpec& spec, const Dataset& train,
                std::uint64_t seed, int workers) {
  spec.validate();
  train.validate();

  if (spec.family == LearnerFamily::random_forest) {
    const int p = train.n_features();
    const int mtry = spec.forest.mtry > 0
                         ? std::min(spec.forest.mtry, p)
                         : static_cast<int>(std::ceil(std::sqrt(p)));
    ForestModel fm;
    fm.trees.resize(spec.forest.trees);
    parallel_for(spec.forest.trees, workers, [&](int t) {
      fm.trees[t] = build_tree(train.features, train.response, mtry,
                               spec.forest.min_leaf,
                               mix_seed(seed, {0xF02E57ULL,
                                               static_cast<std::uint64_t>(t)}));
    });
    return FittedModel::from_forest(std::move(fm), train.task, p,
                                    train.n_rows());
  }

  const LearnerSpec resolved = with_resolved_penalty(spec, train, seed);
  const double target = *resolved.penalty;
  const bool is_lasso = spec.family == LearnerFamily::lasso;

  Standardized s = standardize(train.features);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(train.n_features());
  double intercept = 0.0;
  double objective = 0.0;
  int total_sweeps = 0;

  // Short warm-start path from the top of the penalty scale down to the
  // target; keeps small-penalty fits fast and stable.
  double top = lambda_max(train);
  if (spec.family == LearnerFamily::ridge) top *= kRidgeShift;
  for (double lam : geometric_path(top, target, 8)) {
    double obj = 0.0;
    int sweeps = 0;
    cd_solve(s, train.response, train.task, lam, is_lasso, intercept, beta,
             &obj, &sweeps);
    objective = obj;
    total_sweeps += sweeps;
  }

  LinearModel m =
      to_original_scale(s, intercept, beta, target, objective, total_sweeps);
  return FittedModel::from_linear(std::move(m), train.task,
                                  train.n_features(), train.n_rows());
}

}  // namespace l2e
