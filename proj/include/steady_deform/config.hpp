#ifndef STEADY_DEFORM_CONFIG_HPP
#define STEADY_DEFORM_CONFIG_HPP

#include "steady_deform/deform.hpp"
#include "steady_deform/grid.hpp"
#include "steady_deform/models.hpp"

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace sdeform {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * Restricted expression: a sum of terms, each a coefficient times a product
 * of factors drawn from
 *   powers x^n, y^n, c^n (r is an alias of y),
 *   cos(k*x), sin(k*x) with k a number,
 *   cos(a*pi*y), sin(a*pi*y) with a a number.
 * Numbers may carry a "/number" divisor and "pi" is a numeric constant.
 */
class Expression {
 public:
  struct Factor {
    enum Kind { power, cosine, sine } kind = power;
    char var = 'y';
    int exponent = 1;
    double freq = 1.0;
  };
  struct Term {
    double coef = 1.0;
    std::vector<Factor> factors;
  };

  Expression() = default;
  /// Parses text; only variables listed in allowed ("xy", "c", ...) may appear.
  static Expression parse(const std::string& text, const std::string& allowed);
  static Expression constant(double v);

  double operator()(double x, double y, double c = 0.0) const;
  bool uses(char var) const;
  const std::string& text() const { return text_; }
  const std::vector<Term>& terms() const { return terms_; }

 private:
  std::vector<Term> terms_;
  std::string text_;
};

/// Scalar config value: number, boolean, string or array of numbers.
using ConfigValue = std::variant<double, bool, std::string, std::vector<double>>;

struct ConfigEntry {
  ConfigValue value;
  int line = 0;
};

/// Flat table keyed by dotted names ("grid.nx").
using ConfigTable = std::map<std::string, ConfigEntry>;

/// TOML-style subset: [section] headers, key = value, # comments, "strings", [a, b] arrays, true/false.
ConfigTable parse_config_table(const std::string& text);

struct RunConfig {
  Model model = Model::euler;
  GridSpec grid;

  // Base profiles; expressions in y (or r) for stream functions and velocities, in c for profiles of psi.
  std::optional<Expression> v0;
  std::optional<Expression> psi0;
  std::optional<Expression> theta0, theta;
  std::optional<Expression> c0, pi0_prime, pi_prime;
  /// Constant replacement of the zeroth-order potential of the base operator.
  std::optional<double> lambda_override;

  BoundaryShape boundary;
  Expression rho = Expression::constant(1.0);
  /// Coefficient perturbations da11, da12, da22, db1, db2 as expressions in (x, y).
  std::array<std::optional<Expression>, 5> coeffs;

  double tol_iter = 1e-10;
  int max_iters = 60;
  bool dense_k = false;
  std::string out_dir = "out";

  std::string sweep_parameter;
  std::vector<double> sweep_values;

  ConfigTable table;
};

/// Builds the run configuration; unknown keys and invalid values raise ConfigError naming key and line.
RunConfig config_from_table(const ConfigTable& table);
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::string& path);

/// Replaces a numeric leaf ("boundary.top_cos[0]", "deform.tol") and rebuilds the configuration.
RunConfig with_parameter(const RunConfig& cfg, const std::string& parameter, double value);

BaseState make_base(const RunConfig& cfg);

struct PreparedDeform {
  DeformConfig cfg;
  /// Factor applied to rho so that its integral equals the target volume.
  double rho_factor = 1.0;
  /// Perturbed temperature profile (Boussinesq) used by the momentum check.
  std::optional<Profile> theta;
};
PreparedDeform make_deform_config(const RunConfig& cfg, const BaseState& base,
                                  const std::function<void(const std::string&)>& log = {});

}  // namespace sdeform

#endif
