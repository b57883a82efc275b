#pragma once

#include <Eigen/Dense>
#include <vector>

namespace l2e {

// Clamped B-spline basis of a given degree. Outside the knot range the
// basis extends the boundary polynomial pieces, so fitted splines
// extrapolate polynomially rather than being clamped to the edge value.
class BSplineBasis {
 public:
  // Full clamped knot vector: degree+1 copies of lo, the interior knots,
  // degree+1 copies of hi. Interior knots must be strictly inside (lo, hi)
  // and ascending.
  BSplineBasis(double lo, double hi, std::vector<double> interior_knots,
               int degree);

  // Boundary knots at the extreme abscissas, interior knots at evenly
  // spaced type-7 quantiles of the abscissas. Interior knots that collide
  // with a neighbour or a boundary are dropped.
  static BSplineBasis from_quantile_knots(const std::vector<double>& abscissas,
                                          int degree, int interior_knots);

  int size() const { return n_basis_; }
  int degree() const { return degree_; }
  const std::vector<double>& interior_knots() const { return interior_; }
  double lo() const { return knots_.front(); }
  double hi() const { return knots_.back(); }

  // All basis function values at x (length size()).
  Eigen::VectorXd evaluate(double x) const;

 private:
  std::vector<double> knots_;
  std::vector<double> interior_;
  int degree_ = 0;
  int n_basis_ = 0;
};

}  // namespace l2e
