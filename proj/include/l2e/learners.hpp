#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "l2e/core.hpp"

namespace l2e {

enum class LearnerFamily { ridge, lasso, random_forest };

constexpr const char* to_string(LearnerFamily f) {
  switch (f) {
    case LearnerFamily::ridge: return "ridge";
    case LearnerFamily::lasso: return "lasso";
    default: return "random_forest";
  }
}

struct TuningConfig {
  int cv_folds = 10;
  int cv_repeats = 5;
  int grid_size = 50;
};

struct ForestConfig {
  int trees = 250;
  int mtry = 0;  // 0 means ceil(sqrt(p))
  int min_leaf = 5;
};

struct LearnerSpec {
  LearnerFamily family = LearnerFamily::ridge;
  Task task = Task::classification;
  std::optional<double> penalty;  // empty means tune by cross-validation
  TuningConfig tuning;
  ForestConfig forest;

  void validate() const;
};

// Penalized linear (or logistic) model on the original feature scale.
// `objective` is the final penalized objective on the standardized training
// problem, which is invariant under row duplication.
struct LinearModel {
  Eigen::VectorXd coef;
  double intercept = 0.0;
  double penalty = 0.0;
  double objective = 0.0;
  int sweeps = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;
  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

struct ForestModel {
  std::vector<Tree> trees;
};

// A fitted learner of any family. Classification models predict
// probabilities of class 1; regression models predict the response.
class FittedModel {
 public:
  FittedModel() = default;

  Eigen::VectorXd predict(const Eigen::MatrixXd& features) const;

  Task task() const { return task_; }
  int n_features() const { return n_features_; }
  int train_size() const { return train_size_; }

  const LinearModel* linear() const { return std::get_if<LinearModel>(&model_); }
  const ForestModel* forest() const { return std::get_if<ForestModel>(&model_); }

  static FittedModel from_linear(LinearModel m, Task task, int n_features,
                                 int train_size);
  static FittedModel from_forest(ForestModel m, Task task, int n_features,
                                 int train_size);

 private:
  std::variant<std::monostate, LinearModel, ForestModel> model_;
  Task task_ = Task::classification;
  int n_features_ = 0;
  int train_size_ = 0;
};

// Smallest penalty that zeroes every lasso coefficient on the standardized
// design: max_j |x_j' (y - mean(y))| / n.
double lambda_max(const Dataset& train);

// Descending log-spaced penalty grid over four decades below lambda_max
// (shifted up three decades for ridge).
std::vector<double> penalty_grid(const Dataset& train, LearnerFamily family,
                                 int grid_size);

// Cross-validated penalty: for each repeat, the grid value minimizing the
// CV deviance (classification) or CV squared error (regression); the
// reported penalty is the median over repeats. Deterministic given seed.
double tune_penalty(const LearnerSpec& spec, const Dataset& train,
                    std::uint64_t seed);

// Returns spec with `penalty` filled in (tuning it if absent). Forest specs
// pass through unchanged.
LearnerSpec with_resolved_penalty(const LearnerSpec& spec, const Dataset& train,
                                  std::uint64_t seed);

// Fits the learner. Penalized fits run coordinate descent to a relative
// objective tolerance of 1e-7 and throw LearnerNonConvergence if a single
// penalty value needs more than 10^4 sweeps. The seed drives bootstrap and
// feature sampling for forests and penalty tuning when it is needed.
FittedModel fit(const LearnerSpec& spec, const Dataset& train,
                std::uint64_t seed = 0, int workers = 1);

}  // namespace l2e
