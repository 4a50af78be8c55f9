#ifndef STEADY_DEFORM_STREAMLINE_HPP
#define STEADY_DEFORM_STREAMLINE_HPP

#include "steady_deform/grid.hpp"
#include "steady_deform/profile.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <utility>
#include <vector>

namespace sdeform {

/// Streamline data of a shear (or radial) base psi0(y).
struct StreamGeometry {
  GridSpec grid;
  Eigen::ArrayXd psi0;
  Eigen::ArrayXd dpsi0;
  Profile mu;

  /// Builds the travel-time profile; throws if psi0' vanishes anywhere.
  static StreamGeometry make(const GridSpec& grid, const Eigen::ArrayXd& psi0, const Eigen::ArrayXd& dpsi0);

  double lx() const { return grid.lx; }
  /// Wall-normal coordinate of the streamline psi0 = c.
  double y_of(double c) const;
};

double travel_time(const StreamGeometry& geo, double c);

/// grad_perp(psi0) . grad f = -psi0'(y) d_x f.
ScalarField partial_s(const StreamGeometry& geo, const ScalarField& f);
/// (1 / psi0'(y)) d_y f.
ScalarField partial_psi0(const StreamGeometry& geo, const ScalarField& f);

/// Streamline average as a profile on the knots psi0(y_j).
Profile project(const StreamGeometry& geo, const ScalarField& f);
/// f minus its streamline average.
ScalarField deviation(const StreamGeometry& geo, const ScalarField& f);

/// Inverse of partial_s on fields whose streamline averages vanish.
ScalarField recover_phi(const StreamGeometry& geo, const ScalarField& Phi, double tol_avg = 1e-9);

std::vector<double> angle(const StreamGeometry& geo, const std::vector<std::pair<double, double>>& pts);

/// Pointwise curvature data from a gradient and a symmetric Hessian.
struct CurvaturePoint {
  double kappa;
  double defect;
};
CurvaturePoint curvature_at(double px, double py, double hxx, double hxy, double hyy);

struct CurvatureResult {
  ScalarField kappa;
  ScalarField defect;
  /// Nodes with |grad psi| below the stagnation threshold, as (i, j).
  std::vector<std::pair<int, int>> flagged;
};
CurvatureResult curvature_identities(const ScalarField& psi, double stagnation_tol = 1e-8);

/**
 * Values needed along a level set: psi derivatives up to second order and
 * f with its gradient at a point.
 */
struct LevelSetSample {
  double px, py, hxx, hxy, hyy;
  double f, fx, fy;
};
using LevelSetEvaluator = std::function<LevelSetSample(double x, double y)>;

/// Closed or periodic polyline sampled on a level set.
struct Contour {
  std::vector<double> x, y;
  /// Periodic graph y(x) over [0, lx) when true; closed loop otherwise.
  bool periodic_graph = true;
  double lx = 0.0;
  /// Star center of a closed loop (points are parametrised by polar angle about it).
  double center_x = 0.0, center_y = 0.0;
};

/// Contour of psi = c on a channel field, one point per x-sample.
Contour trace_channel_contour(const FieldInterpolant& psi, double c, int samples = 512);
/// Contour of psi = c that is star-shaped about (cx, cy), searched for radii in [r_lo, r_hi].
Contour trace_star_contour(const std::function<double(double, double)>& psi, double c, double cx, double cy,
                           double r_lo, double r_hi, int samples = 512);

/// Integral of f dl / |grad psi| along the contour.
double streamline_integral(const Contour& contour, const LevelSetEvaluator& eval);
/// Derivative in c of that integral through the curvature formula, evaluated on the contour.
double streamline_integral_derivative(const Contour& contour, const LevelSetEvaluator& eval);

/// Channel version: d/dc of the integral of f ds over {psi = c}.
double streamline_integral_derivative(const ScalarField& psi, const ScalarField& f, double c, int samples = 512);
double streamline_integral(const ScalarField& psi, const ScalarField& f, double c, int samples = 512);

}  // namespace sdeform

#endif
