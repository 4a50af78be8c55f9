#ifndef STEADY_DEFORM_DEFORM_HPP
#define STEADY_DEFORM_DEFORM_HPP

#include "steady_deform/elliptic.hpp"
#include "steady_deform/grid.hpp"
#include "steady_deform/models.hpp"
#include "steady_deform/profile.hpp"
#include "steady_deform/streamline.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdeform {

/**
 * Wall perturbations of a channel or pipe. Each wall moves by
 * b(x) = offset + sum_k (a_k cos(k w x) + s_k sin(k w x)) with w = 2 pi / lx,
 * k starting at 1. Level functions are positive inside the target domain:
 * B_bot = y - (y_lo + b_bot(x)), B_top = (y_hi + b_top(x)) - y.
 */
struct BoundaryShape {
  struct Wall {
    double offset = 0.0;
    std::vector<double> cos_amp, sin_amp;
    double eval(double x, double lx, int deriv = 0) const;
    bool flat() const;
  };
  Wall bot, top;

  bool flat() const { return bot.flat() && top.flat(); }
  /// Area of the target domain between the perturbed walls.
  double volume(const GridSpec& grid) const;
  /// Target walls scaled by s in the wall-normal direction about the bottom wall y_lo.
  BoundaryShape scaled(double s, const GridSpec& grid) const;
  /// Largest excursion of either wall.
  double amplitude(const GridSpec& grid) const;
};

/// gamma = id + grad(eta) + grad_perp(phi); the wall normal derivatives of eta are the Neumann data.
struct DiffeoPotentials {
  ScalarField eta, phi;
  double eta_y_bot = 0.0, eta_y_top = 0.0;

  static DiffeoPotentials zero(const GridSpec& grid);
  const GridSpec& grid() const { return eta.grid(); }
};

/// Displacement V = gamma - id, its gradient P(a, b) = d_b V_a and the derivatives of P.
struct MapFields {
  ScalarField v1, v2;
  /// Order: P11, P12, P21, P22.
  std::array<ScalarField, 4> p;
  std::array<ScalarField, 4> px, py;
};
MapFields map_fields(const DiffeoPotentials& pot, bool third_derivatives = true);

/// eta_y with the Neumann data on the walls.
ScalarField eta_y(const DiffeoPotentials& pot);

/// Optional perturbations of the operator coefficients, evaluated at target points.
struct CoefficientPerturbation {
  /// Returns (da11, da12, da22, db1, db2) at (x, y).
  std::function<std::array<double, 5>(double, double)> delta;
  bool empty() const { return !delta; }
};

class DegenerateMapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct JacobianResult {
  ScalarField direct;
  ScalarField identity;
  double max_disagreement = 0.0;
};
/// det(grad gamma) as a 2x2 determinant and as 1 + Laplacian(eta) - N(eta).
JacobianResult jacobian_det(const DiffeoPotentials& pot);
/// N(eta) = -det(P), so that Laplacian(eta) = rho - 1 + N(eta).
ScalarField nonlinear_jacobian_term(const MapFields& mf);

VectorField composed_gradient(const DiffeoPotentials& pot, const StreamGeometry& geo);
struct ComposedHessian {
  ScalarField xx, xy, yx, yy;
};
ComposedHessian composed_hessian(const DiffeoPotentials& pot, const StreamGeometry& geo);
/// (L psi) o gamma with psi o gamma = psi0, coefficients of the base model plus the perturbation at gamma(y).
ScalarField composed_operator(const DiffeoPotentials& pot, const BaseState& state,
                              const CoefficientPerturbation& coeffs = {}, double min_det = 0.5);

struct BoundaryDefect {
  Eigen::ArrayXd b1_bot, b1_top;
  double mean_bot = 0.0, mean_top = 0.0;
};
/// B1 = B0 o gamma - B0 - alpha d1 B0 - beta d2 B0 + (delta B) o gamma on each wall.
BoundaryDefect boundary_defect(const DiffeoPotentials& pot, const BoundaryShape& boundary);

/// B o gamma at the wall nodes (zero where the walls are aligned).
struct WallLevels {
  Eigen::ArrayXd bot, top;
  double mean_bot = 0.0, mean_top = 0.0;
  double spread_bot = 0.0, spread_top = 0.0;
};
WallLevels wall_levels(const DiffeoPotentials& pot, const BoundaryShape& boundary);

struct DeformConfig {
  ScalarField rho;
  BoundaryShape boundary;
  CoefficientPerturbation coeffs;
  /// Target G; when empty the base G0 is used.
  std::optional<SeparableG> G;
  double tol_iter = 1e-10;
  int max_iters = 60;
  /// Cross-validate the profile update with a dense K-matrix solve.
  bool dense_k = false;
  /// Stop early when the difference norm exceeds this value.
  double divergence_bound = 1e3;

  /// Configuration with rho = 1, flat walls and no perturbations.
  static DeformConfig identity(const GridSpec& grid);
  void validate() const;
};

struct IterRecord {
  int n = 0;
  double dnorm = 0.0, ratio = 0.0, res = 0.0, bdry = 0.0, jac = 0.0;
  std::string log_line() const;
};

struct DeformDiagnostics {
  double jacobian_defect = 0.0;
  double composed_residual = 0.0;
  WallLevels walls;
  double f_deviation = 0.0;
  double max_ratio = 0.0;
  /// Largest |streamline average| of the last streamline derivative field.
  double phi_average = 0.0;
};

struct IterState {
  DiffeoPotentials pot;
  Profile F;
  /// Streamline derivative of phi produced by the last step.
  ScalarField Phi;
};

struct DeformResult {
  DiffeoPotentials pot;
  Profile F;
  std::vector<IterRecord> history;
  bool converged = false;
  int iterations = 0;
  DeformDiagnostics diag;
};

/// Shared per-run data: factorised operator and resolved target G.
class DeformContext {
 public:
  DeformContext(const BaseState& state, const DeformConfig& cfg);
  const BaseState& state() const { return state_; }
  const DeformConfig& cfg() const { return cfg_; }
  const SeparableG& G() const { return cfg_.G ? *cfg_.G : state_.G0; }
  const DirichletSolver& solver() const { return solver_; }

 private:
  const BaseState& state_;
  const DeformConfig& cfg_;
  DirichletSolver solver_;
};

/// Res = (L psi) o gamma - F(psi0) - G(gamma, psi0), zero on the walls.
ScalarField composed_residual(const BaseState& state, const DiffeoPotentials& pot, const Profile& F,
                              const SeparableG& G, const CoefficientPerturbation& coeffs = {});

IterState iterate_once(const DeformContext& ctx, const IterState& current);
IterState initial_iterate(const BaseState& state);

/// Runs the iteration; log lines are passed to the optional sink as they are produced.
DeformResult deform(const BaseState& state, const DeformConfig& cfg,
                    const std::function<void(const std::string&)>& log = {});

/// Preimages gamma^{-1}(x) by Newton; points outside gamma(D0) are marked.
struct Preimages {
  std::vector<std::pair<double, double>> y;
  std::vector<bool> inside;
  std::vector<int> iterations;
};
Preimages invert_map(const DiffeoPotentials& pot, const std::vector<std::pair<double, double>>& pts);

/// psi0 extended linearly beyond the walls.
double psi0_at(const StreamGeometry& geo, double y);

struct PushForward {
  ScalarField psi;
  /// 1 where the node lies in gamma(D0).
  Eigen::ArrayXXi inside;
};
PushForward push_forward(const BaseState& state, const DeformResult& result, const GridSpec& target);

/// Rectangle covering the target domain with the same resolution as the base grid.
GridSpec target_grid_for(const GridSpec& base, const BoundaryShape& boundary);

/// Constraint functional X(y, potentials) returning the Jacobian prescription.
using ConstraintFn = std::function<ScalarField(const DiffeoPotentials&, const StreamGeometry&)>;

struct ConstrainedResult {
  DeformResult inner;
  ScalarField rho;
  double sigma = 1.0;
  int outer_iterations = 0;
  std::vector<double> outer_history;
  double fixed_point_residual = 0.0;
  BoundaryShape target;
};
ConstrainedResult deform_constrained(const BaseState& state, const DeformConfig& cfg_template, const ConstraintFn& X,
                                     double outer_tol = 1e-11, int outer_max = 40);

/// Finite-difference check of the composed operator's derivative at gamma = id.
struct LinearizationCheck {
  ScalarField fd, linear;
  double rel_error = 0.0;
};
LinearizationCheck linearization_certificate(const BaseState& state, const DiffeoPotentials& direction,
                                             double step = 1e-5);

}  // namespace sdeform

#endif
