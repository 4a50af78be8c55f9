#include "steady_deform/grid.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace sdeform;

namespace {

GridSpec grid(int nx, int ny) {
  GridSpec g;
  g.nx = nx;
  g.ny = ny;
  return g;
}

}  // namespace

TEST_CASE("grid coordinates and validation") {
  const GridSpec g = grid(16, 9);
  CHECK(g.hx() == doctest::Approx(2 * kPi / 16));
  CHECK(g.hy() == doctest::Approx(0.125));
  CHECK(g.x(16) == doctest::Approx(2 * kPi));
  CHECK(g.y(8) == 1.0);
  CHECK(g.volume() == doctest::Approx(2 * kPi));
  CHECK_NOTHROW(g.validate());
  CHECK_THROWS_AS(grid(7, 9).validate(), std::invalid_argument);
  CHECK_THROWS_AS(grid(16, 5).validate(), std::invalid_argument);
  GridSpec bad = g;
  bad.y_hi = bad.y_lo;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("spectral x derivatives are exact for trigonometric polynomials") {
  const GridSpec g = grid(32, 9);
  const ScalarField f = ScalarField::sample(g, [](double x, double y) { return std::sin(3 * x) + y * std::cos(x); });
  const ScalarField fx = derive(f, 1, 0), fxx = derive(f, 2, 0);
  const ScalarField ex = ScalarField::sample(g, [](double x, double y) { return 3 * std::cos(3 * x) - y * std::sin(x); });
  const ScalarField exx = ScalarField::sample(g, [](double x, double y) { return -9 * std::sin(3 * x) - y * std::cos(x); });
  CHECK((fx - ex).max_abs() < 1e-12);
  CHECK((fxx - exx).max_abs() < 1e-11);
}

TEST_CASE("wall-normal differences are exact for low-degree polynomials") {
  const GridSpec g = grid(8, 17);
  const Eigen::ArrayXd y = g.ys();
  const double h = g.hy();
  // the one-sided wall closures are second order, so quadratics are reproduced exactly
  const Eigen::ArrayXd q = 2 * y.square() - y + 3;
  CHECK((dy1(q, h) - (4 * y - 1)).abs().maxCoeff() < 1e-11);
  // four-point wall stencil for the second derivative: exact for cubics
  const Eigen::ArrayXd c = y.cube() - 2 * y.square();
  CHECK((dy2(c, h) - (6 * y - 4)).abs().maxCoeff() < 1e-9);
}

TEST_CASE("wall-normal differences converge at second order") {
  double e_prev = 0.0;
  for (int ny : {33, 65, 129}) {
    const GridSpec g = grid(8, ny);
    const Eigen::ArrayXd y = g.ys();
    const double e1 = (dy1(y.exp(), g.hy()) - y.exp()).abs().maxCoeff();
    const double e2 = (dy2(y.exp(), g.hy()) - y.exp()).abs().maxCoeff();
    const double e = std::max(e1, e2);
    if (e_prev > 0.0) CHECK(std::log2(e_prev / e) == doctest::Approx(2.0).epsilon(0.1));
    e_prev = e;
  }
}

TEST_CASE("spectrum round trip") {
  const GridSpec g = grid(16, 9);
  const ScalarField f = ScalarField::sample(g, [](double x, double y) { return std::exp(std::sin(x)) * (1 + y); });
  const Eigen::ArrayXXd back = from_spectrum_x(spectrum_x(f.values()), g.nx);
  CHECK((back - f.values()).abs().maxCoeff() < 1e-14);
}

TEST_CASE("trapezoid integration") {
  const GridSpec g = grid(16, 9);
  // exact for band-limited x dependence and linear y dependence
  const ScalarField f = ScalarField::sample(g, [](double x, double y) { return (2 + std::cos(x)) * (1 + 3 * y); });
  CHECK(integrate(f) == doctest::Approx(2 * 2 * kPi * 2.5).epsilon(1e-14));
  CHECK(trapezoid_weights(g).sum() == doctest::Approx(1.0));
  const Eigen::ArrayXd avg = x_average(f);
  CHECK(avg[4] == doctest::Approx(2 * 2.5));
}

TEST_CASE("pointwise algebra and grid agreement") {
  const GridSpec g = grid(8, 9);
  const ScalarField a = ScalarField::sample(g, [](double x, double y) { return x + y; });
  const ScalarField b = ScalarField::sample(g, [](double x, double) { return x; });
  CHECK(((a * b)(3, 4)) == doctest::Approx((g.x(3) + g.y(4)) * g.x(3)));
  CHECK(((2.0 * a - a - a).max_abs()) == 0.0);
  CHECK_THROWS(require_same_grid(a, ScalarField(grid(8, 17)), "test"));
}

TEST_CASE("field interpolant matches a natural-spline oracle") {
  const GridSpec g = grid(16, 9);
  const ScalarField f = ScalarField::sample(g, [](double x, double y) { return std::cos(x) * std::exp(y); });
  const FieldInterpolant I(f);
  // cos(x) times the natural cubic spline through exp(y_j), evaluated independently
  CHECK(I(0.7, 0.33) == doctest::Approx(1.0638986472032599).epsilon(1e-12));
  CHECK(I.eval(0.7, 0.33, 1, 1) == doctest::Approx(-0.8955700153348948).epsilon(1e-12));
  CHECK(I.eval(0.7, 0.33, 0, 2) == doctest::Approx(1.0555986910347317).epsilon(1e-12));
  CHECK(I(0.7, 0.9) == doctest::Approx(1.8818285452651657).epsilon(1e-12));
  CHECK(I.eval(0.7, 0.9, 0, 2) == doctest::Approx(1.9110400961128702).epsilon(1e-12));
  // nodes are reproduced and x is periodic
  CHECK(I(g.x(5), g.y(3)) == doctest::Approx(f(5, 3)).epsilon(1e-13));
  CHECK(I(g.x(5) + g.lx, g.y(3)) == doctest::Approx(f(5, 3)).epsilon(1e-13));
  CHECK_THROWS(I(0.1, 1.2));
  CHECK(std::isfinite(I.eval_extended(0.1, 1.02, 0, 0)));
  const auto vals = interpolate(f, {{0.7, 0.33}, {0.7, 0.9}});
  CHECK(vals[1] == doctest::Approx(1.8818285452651657).epsilon(1e-12));
}

TEST_CASE("field CSV round trip is exact") {
  GridSpec g = grid(8, 9);
  g.y_lo = 0.5;
  g.lx = 3.0;
  const ScalarField f = ScalarField::sample(g, [](double x, double y) { return std::sin(x) / 3 + std::exp(y); });
  const auto path = std::filesystem::temp_directory_path() / "sdeform_grid_roundtrip.csv";
  write_csv(f, path.string());
  const ScalarField back = read_field_csv(path.string());
  CHECK(back.grid().nx == g.nx);
  CHECK(back.grid().ny == g.ny);
  CHECK(back.grid().lx == doctest::Approx(g.lx));
  CHECK((back.values() - f.values()).abs().maxCoeff() == 0.0);
  std::filesystem::remove(path);
}
