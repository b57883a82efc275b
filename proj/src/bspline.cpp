#include "l2e/bspline.hpp"

#include <algorithm>
#include <cmath>

#include "l2e/errors.hpp"
#include "l2e/stats.hpp"

namespace l2e {

BSplineBasis::BSplineBasis(double lo, double hi,
                           std::vector<double> interior_knots, int degree) {
  if (degree < 1) throw InvalidInput("bspline: degree must be at least 1");
  if (!(lo < hi)) throw InvalidInput("bspline: empty knot range");
  double prev = lo;
  for (double k : interior_knots) {
    if (!(k > prev && k < hi))
      throw InvalidInput("bspline: interior knots must be ascending in (lo, hi)");
    prev = k;
  }
  degree_ = degree;
  interior_ = interior_knots;
  knots_.assign(degree + 1, lo);
  knots_.insert(knots_.end(), interior_knots.begin(), interior_knots.end());
  knots_.insert(knots_.end(), degree + 1, hi);
  n_basis_ = static_cast<int>(knots_.size()) - degree - 1;
}

BSplineBasis BSplineBasis::from_quantile_knots(
    const std::vector<double>& abscissas, int degree, int interior_knots) {
  if (abscissas.size() < 2)
    throw InvalidInput("bspline: need at least 2 abscissas");
  if (interior_knots < 0)
    throw InvalidInput("bspline: negative interior knot count");
  std::vector<double> xs = abscissas;
  std::sort(xs.begin(), xs.end());
  const double lo = xs.front();
  const double hi = xs.back();
  if (!(lo < hi)) throw InvalidInput("bspline: abscissas are all equal");

  std::vector<double> interior;
  double prev = lo;
  for (int i = 1; i <= interior_knots; ++i) {
    double k = stats::quantile_type7(
        xs, static_cast<double>(i) / static_cast<double>(interior_knots + 1));
    if (k > prev && k < hi) {
      interior.push_back(k);
      prev = k;
    }
  }
  return BSplineBasis(lo, hi, std::move(interior), degree);
}

Eigen::VectorXd BSplineBasis::evaluate(double x) const {
  if (!std::isfinite(x)) throw InvalidInput("bspline: non-finite abscissa");

  // Knot span containing x, pinned to the boundary spans outside the range
  // so the recursion extrapolates the boundary polynomial.
  const int last_span = n_basis_ - 1;
  int span = degree_;
  while (span < last_span && x >= knots_[span + 1]) ++span;

  // Triangular recursion for the degree+1 nonzero values on the span.
  std::vector<double> vals(degree_ + 1, 0.0), left(degree_ + 1),
      right(degree_ + 1);
  vals[0] = 1.0;
  for (int j = 1; j <= degree_; ++j) {
    left[j] = x - knots_[span + 1 - j];
    right[j] = knots_[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = vals[r] / (right[r + 1] + left[j - r]);
      vals[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    vals[j] = saved;
  }

  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_basis_);
  for (int r = 0; r <= degree_; ++r) out[span - degree_ + r] = vals[r];
  return out;
}

}  // namespace l2e
