#include "l2e/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "l2e/stats.hpp"

namespace l2e {

namespace {

void check_scores_labels(const Eigen::VectorXd& scores,
                         const Eigen::VectorXd& labels, int* n_pos,
                         int* n_neg) {
  if (scores.size() != labels.size() || scores.size() == 0)
    throw InvalidInput("auc: scores and labels must have equal positive length");
  int pos = 0, neg = 0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (!std::isfinite(scores[i])) throw InvalidInput("auc: non-finite score");
    if (labels[i] == 1.0)
      ++pos;
    else if (labels[i] == 0.0)
      ++neg;
    else
      throw InvalidInput("auc: labels must be exactly 0 or 1");
  }
  if (pos == 0 || neg == 0)
    throw InvalidInput("auc: both classes must be present");
  *n_pos = pos;
  *n_neg = neg;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5))
    throw InvalidInput("alpha must lie in (0, 0.5)");
}

}  // namespace

int Dataset::count_positive() const {
  int pos = 0;
  for (Eigen::Index i = 0; i < response.size(); ++i)
    if (response[i] == 1.0) ++pos;
  return pos;
}

void Dataset::validate() const {
  if (features.rows() != response.size())
    throw InvalidInput("dataset: feature rows and response length differ");
  if (features.rows() < 2) throw InvalidInput("dataset: need at least 2 rows");
  if (features.cols() < 1)
    throw InvalidInput("dataset: need at least 1 feature");
  if (!features.allFinite())
    throw InvalidInput("dataset: non-finite feature value");
  if (!response.allFinite())
    throw InvalidInput("dataset: non-finite response value");
  if (task == Task::classification) {
    int pos = 0, neg = 0;
    for (Eigen::Index i = 0; i < response.size(); ++i) {
      if (response[i] == 1.0)
        ++pos;
      else if (response[i] == 0.0)
        ++neg;
      else
        throw InvalidInput("dataset: classification labels must be 0 or 1");
    }
    if (pos == 0 || neg == 0)
      throw InvalidInput("dataset: both classes must be present");
  }
}

Dataset Dataset::subset(const std::vector<int>& rows) const {
  Dataset out;
  out.task = task;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.response.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    int r = rows[i];
    if (r < 0 || r >= n_rows()) throw InvalidInput("subset: row out of range");
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(r);
    out.response[static_cast<Eigen::Index>(i)] = response[r];
  }
  return out;
}

void LearningTrajectory::validate(int max_size, int min_test) const {
  if (points.size() != splits.size())
    throw InvalidInput("trajectory: points and splits out of sync");
  if (points.empty()) throw InvalidInput("trajectory: empty");
  int prev = 0;
  for (std::size_t j = 0; j < points.size(); ++j) {
    const int n = points[j].size;
    if (n <= prev) throw InvalidInput("trajectory: sizes must be ascending");
    if (n > max_size - min_test)
      throw InvalidInput("trajectory: size exceeds N - min_test");
    prev = n;
    if (static_cast<int>(splits[j].size()) != repeats)
      throw InvalidInput("trajectory: split count differs from repeats");
    double s = 0.0;
    for (const auto& e : splits[j]) {
      if (e.subsample_size != n)
        throw InvalidInput("trajectory: split size mismatch");
      s += e.estimate;
    }
    if (std::abs(s / repeats - points[j].estimate) > 1e-12)
      throw InvalidInput("trajectory: point estimate is not the split mean");
  }
}

const std::vector<SplitEstimate>* LearningTrajectory::splits_for(
    int size) const {
  for (std::size_t j = 0; j < points.size(); ++j)
    if (points[j].size == size) return &splits[j];
  return nullptr;
}

double auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
  int n_pos = 0, n_neg = 0;
  check_scores_labels(scores, labels, &n_pos, &n_neg);
  const int n = static_cast<int>(scores.size());

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return scores[a] < scores[b]; });

  // Midranks: tied blocks share the average rank, which makes the rank-sum
  // formula agree exactly with counting tied pairs as 1/2.
  double rank_sum_pos = 0.0;
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>((i + 1) + (j + 1));
    for (int k = i; k <= j; ++k)
      if (labels[order[k]] == 1.0) rank_sum_pos += midrank;
    i = j + 1;
  }

  const double np = static_cast<double>(n_pos);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) /
         (np * static_cast<double>(n_neg));
}

double pmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truths) {
  if (predictions.size() != truths.size() || predictions.size() == 0)
    throw InvalidInput("pmse: length mismatch or empty input");
  if (!predictions.allFinite() || !truths.allFinite())
    throw InvalidInput("pmse: non-finite input");
  return (predictions - truths).squaredNorm() /
         static_cast<double>(predictions.size());
}

double delong_lower_bound(const Eigen::VectorXd& scores,
                          const Eigen::VectorXd& labels, double alpha) {
  check_alpha(alpha);
  int n_pos = 0, n_neg = 0;
  check_scores_labels(scores, labels, &n_pos, &n_neg);

  const double estimate = auc(scores, labels);

  double var;
  if (n_pos < 2 || n_neg < 2) {
    // Structural components need at least two members per class to form a
    // variance; fall back to the distribution-free closed form.
    var = bamber_variance(estimate, n_pos, n_neg);
  } else {
    // Placement values: v10[i] = average score comparison of positive i
    // against all negatives, v01[j] symmetrically.
    std::vector<double> v10(n_pos, 0.0), v01(n_neg, 0.0);
    std::vector<int> pos_idx, neg_idx;
    pos_idx.reserve(n_pos);
    neg_idx.reserve(n_neg);
    for (Eigen::Index i = 0; i < labels.size(); ++i)
      (labels[i] == 1.0 ? pos_idx : neg_idx).push_back(static_cast<int>(i));
    for (int a = 0; a < n_pos; ++a) {
      for (int b = 0; b < n_neg; ++b) {
        const double sp = scores[pos_idx[a]];
        const double sn = scores[neg_idx[b]];
        const double psi = sp > sn ? 1.0 : (sp == sn ? 0.5 : 0.0);
        v10[a] += psi;
        v01[b] += psi;
      }
    }
    for (double& v : v10) v /= static_cast<double>(n_neg);
    for (double& v : v01) v /= static_cast<double>(n_pos);
    var = stats::variance(v10, 1) / static_cast<double>(n_pos) +
          stats::variance(v01, 1) / static_cast<double>(n_neg);
  }

  const double z = stats::normal_quantile(1.0 - alpha);
  double bound = estimate - z * std::sqrt(std::max(var, 0.0));
  bound = std::clamp(bound, 0.0, 1.0);
  return std::min(bound, estimate);
}

double pmse_upper_bound(const Eigen::VectorXd& predictions,
                        const Eigen::VectorXd& truths, double alpha) {
  check_alpha(alpha);
  if (predictions.size() < 2)
    throw InvalidInput("pmse_upper_bound: need at least 2 observations");
  const double estimate = pmse(predictions, truths);
  const int n = static_cast<int>(predictions.size());
  const double z = stats::normal_quantile(1.0 - alpha);
  return estimate + z * std::sqrt(faber_variance(estimate, n));
}

double bamber_variance(double auc_estimate, int n_pos, int n_neg) {
  if (!(auc_estimate >= 0.0 && auc_estimate <= 1.0))
    throw InvalidInput("bamber_variance: estimate outside [0, 1]");
  if (n_pos < 1 || n_neg < 1)
    throw InvalidInput("bamber_variance: class counts must be positive");
  const double a = auc_estimate;
  const double q1 = a * (1.0 - a);
  const double q2 =
      static_cast<double>(n_pos - 1) * (a / (2.0 - a) - a * a);
  const double q3 =
      static_cast<double>(n_neg - 1) * (2.0 * a * a / (1.0 + a) - a * a);
  return (q1 + q2 + q3) /
         (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double faber_variance(double pmse_estimate, int n) {
  if (pmse_estimate < 0.0)
    throw InvalidInput("faber_variance: estimate must be nonnegative");
  if (n < 1) throw InvalidInput("faber_variance: n must be positive");
  return 2.0 * pmse_estimate * pmse_estimate / static_cast<double>(n);
}

namespace {

boost::multiprecision::cpp_int binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  boost::multiprecision::cpp_int c = 1;
  for (int i = 1; i <= k; ++i) {
    c *= n - k + i;  // product stays integral when divided in order
    c /= i;
  }
  return c;
}

}  // namespace

boost::multiprecision::cpp_int count_subsets(int total_pos, int total_neg,
                                             int take_pos, int take_neg) {
  if (total_pos < 0 || total_neg < 0)
    throw InvalidInput("count_subsets: negative population");
  if (take_pos < 0 || take_pos > total_pos || take_neg < 0 ||
      take_neg > total_neg)
    throw InvalidInput("count_subsets: take counts out of range");
  return binomial(total_pos, take_pos) * binomial(total_neg, take_neg);
}

}  // namespace l2e
