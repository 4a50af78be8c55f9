#ifndef STEADY_DEFORM_NUMERICS_HPP
#define STEADY_DEFORM_NUMERICS_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace sdeform {

/**
 * LU factorisation of a real tridiagonal matrix without pivoting.
 * Row i reads lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1].
 */
class Tridiagonal {
 public:
  Tridiagonal() = default;
  Tridiagonal(Eigen::ArrayXd lower, Eigen::ArrayXd diag, Eigen::ArrayXd upper);

  int size() const { return static_cast<int>(diag_.size()); }

  /// Smallest |pivot| divided by the largest row scale.
  double relative_min_pivot() const { return rel_min_pivot_; }

  template <class Vec>
  void solve_in_place(Vec& rhs) const {
    const int n = size();
    for (int i = 1; i < n; ++i) rhs[i] -= mult_[i] * rhs[i - 1];
    rhs[n - 1] /= piv_[n - 1];
    for (int i = n - 2; i >= 0; --i) rhs[i] = (rhs[i] - upper_[i] * rhs[i + 1]) / piv_[i];
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

  const Eigen::ArrayXd& lower() const { return lower_; }
  const Eigen::ArrayXd& diag() const { return diag_; }
  const Eigen::ArrayXd& upper() const { return upper_; }

 private:
  Eigen::ArrayXd lower_, diag_, upper_;
  Eigen::ArrayXd piv_, mult_;
  double rel_min_pivot_ = 0.0;
};

/// Second derivatives of the natural cubic spline through uniformly spaced samples.
template <class Scalar>
std::vector<Scalar> natural_spline_curvature(const std::vector<Scalar>& f, double h) {
  const int n = static_cast<int>(f.size());
  std::vector<Scalar> m(n, Scalar(0));
  if (n < 3) return m;
  const int ni = n - 2;
  std::vector<Scalar> rhs(ni);
  for (int i = 0; i < ni; ++i) rhs[i] = (f[i + 2] - 2.0 * f[i + 1] + f[i]) * (6.0 / (h * h));
  // 1-4-1 system, constant coefficients
  std::vector<double> c(ni);
  double piv = 4.0;
  c[0] = 1.0 / piv;
  rhs[0] = rhs[0] / piv;
  for (int i = 1; i < ni; ++i) {
    piv = 4.0 - c[i - 1];
    c[i] = 1.0 / piv;
    rhs[i] = (rhs[i] - rhs[i - 1]) / piv;
  }
  for (int i = ni - 2; i >= 0; --i) rhs[i] -= c[i] * rhs[i + 1];
  for (int i = 0; i < ni; ++i) m[i + 1] = rhs[i];
  return m;
}

/// Knot slopes of the not-a-knot cubic spline through (t, f); t strictly increasing.
Eigen::ArrayXd not_a_knot_slopes(const Eigen::ArrayXd& t, const Eigen::ArrayXd& f);

/// Running integral from t[0] of the cubic Hermite interpolant with knot slopes d.
Eigen::ArrayXd hermite_cumulative_integral(const Eigen::ArrayXd& t, const Eigen::ArrayXd& f,
                                           const Eigen::ArrayXd& d);

}  // namespace sdeform

#endif
