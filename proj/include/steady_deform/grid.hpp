#ifndef STEADY_DEFORM_GRID_HPP
#define STEADY_DEFORM_GRID_HPP

#include <Eigen/Dense>

#include <complex>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace sdeform {

constexpr double kPi = 3.14159265358979323846;

/**
 * Tensor-product grid on [0, lx) x [y_lo, y_hi]. The periodic direction
 * has no duplicated endpoint; both walls are nodes.
 */
struct GridSpec {
  int nx = 64;
  int ny = 65;
  double lx = 2.0 * kPi;
  double y_lo = 0.0;
  double y_hi = 1.0;

  void validate() const;

  double hx() const { return lx / nx; }
  double hy() const { return (y_hi - y_lo) / (ny - 1); }
  double x(int i) const { return i * lx / nx; }
  double y(int j) const { return y_lo + j * (y_hi - y_lo) / (ny - 1); }
  double volume() const { return lx * (y_hi - y_lo); }
  int kmax() const { return nx / 2; }
  double wavenumber(int k) const { return 2.0 * kPi * k / lx; }

  Eigen::ArrayXd xs() const;
  Eigen::ArrayXd ys() const;

  bool operator==(const GridSpec&) const = default;
};

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const GridSpec& grid);
  ScalarField(const GridSpec& grid, Eigen::ArrayXXd values);

  template <class Fn>
  static ScalarField sample(const GridSpec& grid, Fn&& fn) {
    ScalarField out(grid);
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) out.values_(i, j) = fn(grid.x(i), grid.y(j));
    return out;
  }

  /// Field constant along x with the given wall-normal profile.
  static ScalarField from_y(const GridSpec& grid, const Eigen::ArrayXd& g);

  const GridSpec& grid() const { return grid_; }
  Eigen::ArrayXXd& values() { return values_; }
  const Eigen::ArrayXXd& values() const { return values_; }
  double& operator()(int i, int j) { return values_(i, j); }
  double operator()(int i, int j) const { return values_(i, j); }

  double max_abs() const { return values_.abs().maxCoeff(); }
  bool all_finite() const { return values_.allFinite(); }

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double s);

 private:
  GridSpec grid_;
  Eigen::ArrayXXd values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);
/// Pointwise product.
ScalarField operator*(const ScalarField& a, const ScalarField& b);

struct VectorField {
  ScalarField x;
  ScalarField y;
};

void require_same_grid(const ScalarField& a, const ScalarField& b, const char* where);

/// Half-spectrum along x, per column: (nx/2 + 1) x ny, unnormalised forward DFT.
Eigen::ArrayXXcd spectrum_x(const Eigen::ArrayXXd& values);
/// Inverse of spectrum_x for a grid with nx points along x.
Eigen::ArrayXXd from_spectrum_x(const Eigen::ArrayXXcd& spec, int nx);

/// Spectral derivative in x (order ox) followed by finite differences in y (order oy).
ScalarField derive(const ScalarField& f, int order_x, int order_y);

/// Wall-normal finite differences on a single column.
Eigen::ArrayXd dy1(const Eigen::ArrayXd& g, double h);
Eigen::ArrayXd dy2(const Eigen::ArrayXd& g, double h);

/// Trapezoid weights over the wall-normal nodes.
Eigen::ArrayXd trapezoid_weights(const GridSpec& grid);

double integrate(const ScalarField& f);

Eigen::ArrayXd x_average(const ScalarField& f);

/**
 * Fourier x natural-cubic-spline evaluator. The spectrum is splined
 * mode by mode, which equals splining each column and then taking the
 * trigonometric interpolant.
 */
class FieldInterpolant {
 public:
  explicit FieldInterpolant(const ScalarField& f);

  double operator()(double x, double y) const { return eval(x, y, 0, 0); }
  /// Derivative orders dx in 0..3, dy in 0..2. Throws if y lies outside the grid.
  double eval(double x, double y, int dx, int dy) const;
  /// As eval, but continues the end spline pieces beyond the walls.
  double eval_extended(double x, double y, int dx, int dy) const;

  const GridSpec& grid() const { return grid_; }

 private:
  double evaluate(double x, double y, int dx, int dy) const;

  GridSpec grid_;
  Eigen::ArrayXXcd coef_;
  Eigen::ArrayXXcd curv_;
};

std::vector<double> interpolate(const ScalarField& f,
                                const std::vector<std::pair<double, double>>& pts);

void write_csv(const ScalarField& f, std::ostream& os);
void write_csv(const ScalarField& f, const std::string& path);
/// Reads a field written by write_csv; the grid is reconstructed from the coordinates.
ScalarField read_field_csv(const std::string& path);

}  // namespace sdeform

#endif
