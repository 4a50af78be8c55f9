#ifndef STEADY_DEFORM_MODELS_HPP
#define STEADY_DEFORM_MODELS_HPP

#include "steady_deform/elliptic.hpp"
#include "steady_deform/grid.hpp"
#include "steady_deform/profile.hpp"
#include "steady_deform/streamline.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace sdeform {

enum class Model { euler, boussinesq, gs };

std::string to_string(Model m);
Model model_from_string(const std::string& name);

/**
 * Shear (or radial) base solution of L0 psi0 = F0(psi0) + G0(y, psi0).
 * F0 is sampled on the knots psi0(y_j) from the discrete operator, so the
 * discrete base residual vanishes up to round-off.
 */
struct BaseState {
  Model model = Model::euler;
  StreamGeometry geo;
  SeparableOperator op;
  Profile F0;
  SeparableG G0;
  /// Boussinesq: background temperature profile.
  Profile Theta0;
  /// Grad-Shafranov: pressure derivative Pi0' and swirl C0.
  Profile Pi0_prime;
  Profile C0;
  double c_bot = 0.0, c_top = 0.0;
  /// Wall-normal drift b2 as a function of y, for evaluation off the grid; empty means zero.
  std::function<double(double)> drift;

  double drift_at(double y) const { return drift ? drift(y) : 0.0; }
  const GridSpec& grid() const { return geo.grid; }
  ScalarField psi0_field() const { return ScalarField::from_y(geo.grid, geo.psi0); }
};

/// L0 psi0 - F0(psi0) - G0(y, psi0) on the wall-normal nodes.
Eigen::ArrayXd base_residual(const BaseState& state);

/// Euler channel base with horizontal velocity v0(y); psi0 = -int_0^y v0.
BaseState build_euler_base(const GridSpec& grid, const Eigen::ArrayXd& v0);
/// Euler base from a stream function sampled on the wall-normal nodes.
BaseState build_euler_base_from_psi(const GridSpec& grid, const Eigen::ArrayXd& psi0);

/// Boussinesq base: Laplacian psi0 = G0'(psi0) + y Theta0'(psi0) with G0' derived from psi0.
BaseState build_boussinesq_base(const GridSpec& grid, const Eigen::ArrayXd& psi0, const Profile& Theta0);

/**
 * Grad-Shafranov base on r in [y_lo, y_hi] (r = y, z = x):
 * psi'' - psi'/r = C0 C0'(psi) - r^2 Pi0'(psi). Pi0' is derived from psi0.
 */
BaseState build_gs_base(const GridSpec& grid, const Eigen::ArrayXd& psi0, const Profile& C0);

/// Solves the radial equation by Newton for given Pi0' and C0, then derives the base.
BaseState build_gs_base_from_profiles(const GridSpec& grid, const Profile& Pi0_prime, const Profile& C0,
                                      double psi_lo = 0.0, double psi_hi = 1.0);

/// Newton solve of the radial equation alone; residual below 1e-10 or throws after 50 steps.
Eigen::ArrayXd solve_gs_radial(const GridSpec& grid, const Profile& Pi0_prime, const Profile& C0, double psi_lo,
                               double psi_hi);

/// Swirl C with C C' = W and C(c_ref) = C0(c_ref), c_ref the lower end of the knots.
Profile reconstruct_swirl(const Profile& W, const Profile& C0);

struct BoussinesqFields {
  ScalarField theta;
  ScalarField pressure;
};
/// theta = Theta(psi), P = -y Theta(psi) - G(psi) with G the antiderivative of G'.
BoussinesqFields reconstruct_boussinesq_fields(const ScalarField& psi, const Profile& Theta, const Profile& G_prime);

/// sup |omega u_perp - grad P - theta e2| with discrete derivatives.
double momentum_residual(const ScalarField& psi, const ScalarField& theta, const ScalarField& pressure);

/// Both forms of the Grad-Shafranov sign condition, sampled on the wall-normal nodes.
struct GSSignReport {
  /// (C0 C0')'(psi0) - r^2 Pi0''(psi0); the condition asks for < 0.
  Eigen::ArrayXd form_lambda;
  /// Pi0'(psi0) - (C0 C0')'(psi0) / r^2; the condition asks for > 0.
  Eigen::ArrayXd form_pressure;
  bool lambda_negative = false;
  bool pressure_dominates = false;
  /// Rigidity condition Pi0'(psi0) >= 0.
  bool pi_nonnegative = false;
};
GSSignReport gs_sign_report(const BaseState& state);

/// F0'(psi0) on the wall-normal nodes, and membership in the Arnol'd window.
struct ArnoldReport {
  double lambda1 = 0.0;
  double fprime_min = 0.0, fprime_max = 0.0;
  bool inside = false;
};
ArnoldReport arnold_window(const BaseState& state);

}  // namespace sdeform

#endif
