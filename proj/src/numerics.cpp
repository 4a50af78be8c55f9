#include "steady_deform/numerics.hpp"

#include <cmath>

namespace sdeform {

Tridiagonal::Tridiagonal(Eigen::ArrayXd lower, Eigen::ArrayXd diag, Eigen::ArrayXd upper)
    : lower_(std::move(lower)), diag_(std::move(diag)), upper_(std::move(upper)) {
  const int n = size();
  if (n == 0 || lower_.size() != n || upper_.size() != n)
    throw std::invalid_argument("Tridiagonal: inconsistent band lengths");
  piv_.resize(n);
  mult_.resize(n);
  mult_[0] = 0.0;
  piv_[0] = diag_[0];
  for (int i = 1; i < n; ++i) {
    mult_[i] = lower_[i] / piv_[i - 1];
    piv_[i] = diag_[i] - mult_[i] * upper_[i - 1];
  }
  rel_min_pivot_ = INFINITY;
  for (int i = 0; i < n; ++i) {
    double scale = std::abs(diag_[i]);
    if (i > 0) scale += std::abs(lower_[i]);
    if (i + 1 < n) scale += std::abs(upper_[i]);
    const double r = scale > 0.0 ? std::abs(piv_[i]) / scale : 0.0;
    rel_min_pivot_ = std::min(rel_min_pivot_, r);
  }
}

Eigen::VectorXd Tridiagonal::apply(const Eigen::VectorXd& x) const {
  const int n = size();
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    double s = diag_[i] * x[i];
    if (i > 0) s += lower_[i] * x[i - 1];
    if (i + 1 < n) s += upper_[i] * x[i + 1];
    y[i] = s;
  }
  return y;
}

Eigen::ArrayXd not_a_knot_slopes(const Eigen::ArrayXd& t, const Eigen::ArrayXd& f) {
  const int n = static_cast<int>(t.size());
  if (n < 2) throw std::invalid_argument("not_a_knot_slopes: need at least two knots");
  Eigen::ArrayXd dx = t.tail(n - 1) - t.head(n - 1);
  Eigen::ArrayXd slope = (f.tail(n - 1) - f.head(n - 1)) / dx;
  if (n == 2) return Eigen::ArrayXd::Constant(2, slope[0]);
  if (n == 3) {
    // the not-a-knot spline on three knots is the interpolating parabola
    const double c2 = (slope[1] - slope[0]) / (t[2] - t[0]);
    Eigen::ArrayXd d(3);
    d[0] = slope[0] - c2 * dx[0];
    d[1] = slope[0] + c2 * dx[0];
    d[2] = slope[1] + c2 * dx[1];
    return d;
  }
  Eigen::ArrayXd lo(n), di(n), up(n);
  Eigen::VectorXd b(n);
  lo[0] = 0.0;
  di[0] = dx[1];
  up[0] = t[2] - t[0];
  b[0] = ((dx[0] + 2.0 * (t[2] - t[0])) * dx[1] * slope[0] + dx[0] * dx[0] * slope[1]) / (t[2] - t[0]);
  for (int i = 1; i < n - 1; ++i) {
    lo[i] = dx[i];
    di[i] = 2.0 * (dx[i - 1] + dx[i]);
    up[i] = dx[i - 1];
    b[i] = 3.0 * (dx[i] * slope[i - 1] + dx[i - 1] * slope[i]);
  }
  const double dend = t[n - 1] - t[n - 3];
  lo[n - 1] = dend;
  di[n - 1] = dx[n - 3];
  up[n - 1] = 0.0;
  b[n - 1] = (dx[n - 2] * dx[n - 2] * slope[n - 3] + (2.0 * dend + dx[n - 2]) * dx[n - 3] * slope[n - 2]) / dend;
  Tridiagonal tri(lo, di, up);
  tri.solve_in_place(b);
  return b.array();
}

Eigen::ArrayXd hermite_cumulative_integral(const Eigen::ArrayXd& t, const Eigen::ArrayXd& f,
                                           const Eigen::ArrayXd& d) {
  const Eigen::Index n = t.size();
  Eigen::ArrayXd out(n);
  out[0] = 0.0;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double h = t[i + 1] - t[i];
    out[i + 1] = out[i] + 0.5 * h * (f[i] + f[i + 1]) + h * h * (d[i] - d[i + 1]) / 12.0;
  }
  return out;
}

}  // namespace sdeform
