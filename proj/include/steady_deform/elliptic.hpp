#ifndef STEADY_DEFORM_ELLIPTIC_HPP
#define STEADY_DEFORM_ELLIPTIC_HPP

#include "steady_deform/grid.hpp"
#include "steady_deform/numerics.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace sdeform {

/**
 * Base operator a22 d_yy + a11 d_xx + b2 d_y with zeroth-order potential
 * lambda; every coefficient depends on y only.
 */
struct SeparableOperator {
  GridSpec grid;
  Eigen::ArrayXd a22;
  Eigen::ArrayXd a11;
  Eigen::ArrayXd b2;
  Eigen::ArrayXd lambda;

  static SeparableOperator laplacian(const GridSpec& grid);
  static SeparableOperator laplacian(const GridSpec& grid, const Eigen::ArrayXd& lambda);
  void validate() const;

  /// (L0 - lambda) u with the discrete operators used by the solvers.
  ScalarField apply(const ScalarField& u) const;
  /// One-dimensional (zero mode) version of apply.
  Eigen::ArrayXd apply_1d(const Eigen::ArrayXd& u) const;
};

/// Thrown when a Fourier mode of the Dirichlet problem is singular.
class SingularModeError : public std::runtime_error {
 public:
  SingularModeError(int wavenumber, const std::string& what) : std::runtime_error(what), wavenumber_(wavenumber) {}
  int wavenumber() const { return wavenumber_; }

 private:
  int wavenumber_;
};

/**
 * Per-mode factorisation of (L0 - lambda) with Dirichlet walls. A mode is
 * rejected when a pivot falls below 1e-12 of its row scale, or when its
 * eigenvalue nearest zero is smaller than the truncation error of the
 * discrete spectrum (the continuous problem is then singular).
 */
class DirichletSolver {
 public:
  explicit DirichletSolver(const SeparableOperator& op);

  ScalarField solve(const ScalarField& rhs, const Eigen::ArrayXd& g_bot, const Eigen::ArrayXd& g_top) const;
  Eigen::ArrayXd solve_mode0(const Eigen::ArrayXd& rhs, double u_lo, double u_hi) const;

  const SeparableOperator& op() const { return op_; }

 private:
  SeparableOperator op_;
  std::vector<Tridiagonal> modes_;
};

ScalarField solve_dirichlet(const SeparableOperator& op, const ScalarField& rhs, const Eigen::ArrayXd& g_bot,
                            const Eigen::ArrayXd& g_top);

/**
 * Neumann problem for the Laplacian. Fluxes are outward: the bottom normal
 * is -e_y, the top normal +e_y. Wall rows use a ghost node, so the discrete
 * compatibility condition is exactly the trapezoid one.
 */
ScalarField solve_neumann(const ScalarField& rhs, double flux_bot, double flux_top);

/// Compatibility defect integrate(rhs) - lx (flux_bot + flux_top).
double neumann_compatibility_defect(const ScalarField& rhs, double flux_bot, double flux_top);

/// Outward wall fluxes of u implied by the ghost-node wall rows for the equation Laplacian u = rhs.
std::pair<Eigen::ArrayXd, Eigen::ArrayXd> neumann_wall_flux(const ScalarField& u, const ScalarField& rhs);

/// Laplacian with ghost-node wall rows for the given outward fluxes.
ScalarField neumann_laplacian(const ScalarField& u, double flux_bot, double flux_top);

Eigen::ArrayXd solve_profile_bvp(const SeparableOperator& op, const Eigen::ArrayXd& rhs, double u_lo, double u_hi);

/// Smallest eigenvalue of the symmetrised -(L0 - lambda) with Dirichlet walls, minimised over modes.
double rayleigh_min(const SeparableOperator& op, int max_iters = 20000);

/// Symmetrised interior tridiagonal of -(L0 - lambda) for mode k (diag, off-diagonal).
std::pair<Eigen::ArrayXd, Eigen::ArrayXd> symmetrized_mode(const SeparableOperator& op, int k);

/// Trapezoid quadratic form integrate(u (L0 - lambda) u).
double quadratic_form(const SeparableOperator& op, const ScalarField& u);

}  // namespace sdeform

#endif
