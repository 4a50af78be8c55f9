#ifndef STEADY_DEFORM_PROFILE_HPP
#define STEADY_DEFORM_PROFILE_HPP

#include "steady_deform/grid.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace sdeform {

/**
 * A function of the streamline value c, sampled on strictly monotone
 * knots. Interpolation is the cubic Hermite spline whose knot slopes come
 * from the not-a-knot spline, limited where the samples are locally
 * monotone so that monotone data is never overshot.
 */
class Profile {
 public:
  Profile() = default;
  Profile(const Eigen::ArrayXd& knots, const Eigen::ArrayXd& values, double margin = 0.01);

  template <class Fn>
  static Profile from_function(const Eigen::ArrayXd& knots, Fn&& fn, double margin = 0.01) {
    Eigen::ArrayXd v(knots.size());
    for (Eigen::Index k = 0; k < knots.size(); ++k) v[k] = fn(knots[k]);
    return Profile(knots, v, margin);
  }

  /// deriv in 0..2; throws when c lies beyond the extrapolation margin.
  double eval(double c, int deriv = 0) const;

  /// Knots and samples in the order supplied at construction.
  const Eigen::ArrayXd& knots() const { return knots_; }
  const Eigen::ArrayXd& values() const { return values_; }
  double c_min() const { return t_[0]; }
  double c_max() const { return t_[t_.size() - 1]; }
  double margin() const { return margin_; }
  bool empty() const { return knots_.size() == 0; }
  Eigen::Index size() const { return knots_.size(); }

  /// Same knots, new samples.
  Profile with_values(const Eigen::ArrayXd& values) const { return Profile(knots_, values, margin_); }
  /// Samples of p' on the same knots.
  Profile derivative() const;
  /// Running integral from c_min, exact for the Hermite interpolant.
  Profile antiderivative() const;

 private:
  double hermite(int seg, double c, int deriv) const;

  Eigen::ArrayXd knots_, values_;
  Eigen::ArrayXd t_, f_, d_;
  double margin_ = 0.01;
};

double eval(const Profile& p, double c, int deriv = 0);

/// Pointwise p^(deriv)(f); errors name the offending node.
ScalarField compose(const Profile& p, const ScalarField& f, int deriv = 0);

/// One term w(y) * theta(psi) of a separable function G(y, psi).
struct SeparableTerm {
  std::function<double(double)> weight;
  Profile theta;
};

struct SeparableG {
  std::vector<SeparableTerm> terms;

  bool empty() const { return terms.empty(); }
  double eval(double y, double psi, int d_psi = 0) const;
  /// Weight of term m sampled on the wall-normal nodes.
  Eigen::ArrayXd weight_samples(std::size_t m, const GridSpec& grid) const;
};

ScalarField eval_G(const SeparableG& G, const ScalarField& psi, int d_psi = 0);

void write_csv(const Profile& p, std::ostream& os);
void write_csv(const Profile& p, const std::string& path);
Profile read_profile_csv(const std::string& path);

}  // namespace sdeform

#endif
