#ifndef STEADY_DEFORM_VERIFY_HPP
#define STEADY_DEFORM_VERIFY_HPP

#include "steady_deform/deform.hpp"
#include "steady_deform/grid.hpp"
#include "steady_deform/models.hpp"

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace sdeform {

struct Check {
  double value = 0.0;
  double tol = 0.0;
  bool pass = false;
  /// Where the tolerance comes from ("fixed", "analytic", "tol_iter", "measured", ...).
  std::string provenance;
  /// Non-gating checks are reported but do not enter all_pass().
  bool gating = true;
};

/// Named checks in insertion order; each name appears once.
class VerificationReport {
 public:
  /// Adds a check; throws std::logic_error on a duplicate name.
  void add(const std::string& name, const Check& check);
  /// Convenience for the common "value <= tol" check.
  void add_upper(const std::string& name, double value, double tol, const std::string& provenance);

  bool has(const std::string& name) const;
  const Check& at(const std::string& name) const;
  /// True when every gating check passes.
  bool all_pass() const;
  const std::vector<std::pair<std::string, Check>>& checks() const { return checks_; }

  /// {"name": {"value": .., "tol": .., "pass": .., "provenance": ..}, ...}; indent <= 0 is compact
  std::string to_json(int indent = 2) const;
  static VerificationReport from_json(const std::string& text);
  /// Appends all checks of another report.
  void merge(const VerificationReport& other);

 private:
  std::vector<std::pair<std::string, Check>> checks_;
};

struct ComposedResidual {
  ScalarField field;
  double sup = 0.0;
};
/// Res = (L psi) o gamma - F(psi0) - G(gamma, psi0) with the configuration's G and coefficients.
ComposedResidual residual_composed(const BaseState& state, const DeformResult& result, const DeformConfig& cfg);

/// Direct residual on a target grid: sup over full rows lying two or more cells inside gamma(D0).
struct TargetResidual {
  double sup = 0.0;
  int rows_used = 0;
};
TargetResidual residual_target(const BaseState& state, const DeformResult& result, const DeformConfig& cfg,
                               const GridSpec& target);

/// sup_j max_i |psi(x_i, y_j) - mean_i psi(., y_j)|.
double shear_deviation(const ScalarField& psi);
/// Same, restricted to rows whose nodes are all marked inside.
double shear_deviation(const ScalarField& psi, const Eigen::ArrayXXi& inside);

/**
 * Single-valuedness score of q as a function of psi. Nodes are sorted by psi
 * into quantile bins; in each bin q is fitted by a cubic in psi and the spread
 * (max - min) of the fit residual is taken. Returns the largest spread.
 */
double eos_check(const ScalarField& psi, const ScalarField& q, int bins = 64);
double eos_check(const Eigen::ArrayXd& psi, const Eigen::ArrayXd& q, int bins = 64);

struct RangeCheck {
  bool pass = false;
  /// Largest excursion of interior values beyond [min c, max c] (<= 0 when strictly inside).
  double excursion = 0.0;
  bool distinct_walls = false;
};
/// Interior nodes (wall rows excluded, optional mask) strictly between the wall constants.
RangeCheck range_check(const ScalarField& psi, double c_bot, double c_top, double tol = 1e-10);
RangeCheck range_check(const ScalarField& psi, const Eigen::ArrayXXi& inside, double c_bot, double c_top,
                       double tol = 1e-10);

/// Rayleigh quotient bound, non-stagnation, Arnol'd window and model sign conditions.
VerificationReport hypothesis_report(const BaseState& state);

/// Both sides of the quadratic-form identity int u (Laplacian - lambda) u = -int v0^2 |grad(u / v0)|^2.
struct KerlemForms {
  double lhs = 0.0, rhs = 0.0;
  double rel_error = 0.0;
};
/// op carries lambda = v0'' / v0; u must vanish on the walls.
KerlemForms kerlem_forms(const SeparableOperator& op, const Eigen::ArrayXd& v0, const ScalarField& u);

/**
 * Boussinesq momentum residual evaluated on D0: with Y = y + V2,
 * omega o gamma (-grad psi o gamma) - (grad P) o gamma - Theta(psi0) e2, where
 * P o gamma = -Y Theta(psi0) - Gint(psi0) and (grad P) o gamma = Q^T grad(P o gamma).
 * F plays the role of Gint'.
 */
double composed_momentum_residual(const BaseState& state, const DeformResult& result, const DeformConfig& cfg,
                                  const Profile& Theta);

}  // namespace sdeform

#endif
