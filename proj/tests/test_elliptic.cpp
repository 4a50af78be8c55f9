#include "steady_deform/elliptic.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace sdeform;

namespace {

GridSpec grid(int nx, int ny) {
  GridSpec g;
  g.nx = nx;
  g.ny = ny;
  return g;
}

}  // namespace

TEST_CASE("Dirichlet solve inverts the discrete operator") {
  const GridSpec g = grid(16, 33);
  SeparableOperator op = SeparableOperator::laplacian(g);
  // variable coefficients exercise every term of the operator
  for (int j = 0; j < g.ny; ++j) {
    const double y = g.y(j);
    op.a22[j] = 1.0 + 0.3 * y;
    op.a11[j] = 1.5 - 0.2 * y * y;
    op.b2[j] = 0.4 * std::sin(y);
    op.lambda[j] = 0.5 + y;
  }
  const ScalarField rhs = ScalarField::sample(g, [](double x, double y) { return std::cos(2 * x) * y + std::sin(x) + 1; });
  Eigen::ArrayXd gb(g.nx), gt(g.nx);
  for (int i = 0; i < g.nx; ++i) {
    gb[i] = std::cos(g.x(i));
    gt[i] = 2 + std::sin(3 * g.x(i));
  }
  const ScalarField u = solve_dirichlet(op, rhs, gb, gt);
  const ScalarField back = op.apply(u);
  CHECK((back - rhs).values().middleCols(1, g.ny - 2).abs().maxCoeff() < 1e-10);
  CHECK((u.values().col(0) - gb).abs().maxCoeff() < 1e-13);
  CHECK((u.values().col(g.ny - 1) - gt).abs().maxCoeff() < 1e-13);
  const Eigen::ArrayXd prof = solve_profile_bvp(op, Eigen::ArrayXd::Constant(g.ny, 1.0), 0.0, 1.0);
  const Eigen::ArrayXd r1 = op.apply_1d(prof);
  CHECK((r1.segment(1, g.ny - 2) - 1.0).abs().maxCoeff() < 1e-10);
}

TEST_CASE("Dirichlet manufactured solution converges at second order") {
  std::vector<double> err;
  for (int ny : {33, 65, 129}) {
    const GridSpec g = grid(16, ny);
    const SeparableOperator op = SeparableOperator::laplacian(g);
    const ScalarField exact = ScalarField::sample(g, [](double x, double y) { return std::sin(x) * std::sinh(y) + std::exp(y); });
    const ScalarField rhs = ScalarField::sample(g, [](double, double y) { return std::exp(y); });
    const ScalarField u = solve_dirichlet(op, rhs, exact.values().col(0), exact.values().col(ny - 1));
    err.push_back((u - exact).max_abs());
  }
  CHECK(std::log2(err[0] / err[1]) == doctest::Approx(2.0).epsilon(0.05));
  CHECK(std::log2(err[1] / err[2]) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("singular Fourier mode is rejected") {
  const GridSpec g = grid(16, 65);
  // lambda = -pi^2 puts sin(pi y) in the kernel of the zero mode
  const SeparableOperator op = SeparableOperator::laplacian(g, Eigen::ArrayXd::Constant(g.ny, -kPi * kPi));
  try {
    DirichletSolver s(op);
    FAIL("expected SingularModeError");
  } catch (const SingularModeError& e) {
    CHECK(e.wavenumber() == 0);
  }
  // lambda = -(1 + pi^2) is singular for wavenumber 1
  const SeparableOperator op1 = SeparableOperator::laplacian(g, Eigen::ArrayXd::Constant(g.ny, -(1 + kPi * kPi)));
  try {
    DirichletSolver s(op1);
    FAIL("expected SingularModeError");
  } catch (const SingularModeError& e) {
    CHECK(e.wavenumber() == 1);
  }
  // halfway between two eigenvalues nothing is singular
  CHECK_NOTHROW(DirichletSolver(SeparableOperator::laplacian(g, Eigen::ArrayXd::Constant(g.ny, -2.5 * kPi * kPi))));
}

TEST_CASE("Neumann solve with ghost-node walls") {
  const GridSpec g = grid(16, 33);
  const ScalarField rhs = ScalarField::sample(g, [](double x, double y) { return std::cos(x) * (1 + y * y) + 2 * y - 1; });
  // integral of 2y - 1 vanishes under the trapezoid rule, the cos(x) part has no mean
  const double fb = 0.3, ft = -0.3;
  CHECK(std::abs(neumann_compatibility_defect(rhs, fb, ft)) < 1e-12);
  const ScalarField u = solve_neumann(rhs, fb, ft);
  CHECK((neumann_laplacian(u, fb, ft) - rhs).max_abs() < 1e-10);
  const auto [flux_b, flux_t] = neumann_wall_flux(u, rhs);
  CHECK((flux_b - fb).abs().maxCoeff() < 1e-10);
  CHECK((flux_t - ft).abs().maxCoeff() < 1e-10);
  CHECK_THROWS(solve_neumann(rhs, fb, ft + 0.1));
}

TEST_CASE("Neumann manufactured solution converges at second order") {
  std::vector<double> err;
  for (int ny : {33, 65, 129}) {
    const GridSpec g = grid(16, ny);
    auto v = [](double x, double y) { return std::sin(2 * x) * std::cos(kPi * y) + y * y * y / 3 - y * y / 2; };
    const ScalarField rhs = ScalarField::sample(g, [](double x, double y) { return -(4 + kPi * kPi) * std::sin(2 * x) * std::cos(kPi * y) + 2 * y - 1; });
    const ScalarField u = solve_neumann(rhs, 0.0, 0.0);
    ScalarField d = u - ScalarField::sample(g, v);
    d.values() -= integrate(d) / g.volume();
    err.push_back(d.max_abs());
  }
  CHECK(std::log2(err[0] / err[1]) == doctest::Approx(2.0).epsilon(0.05));
  CHECK(std::log2(err[1] / err[2]) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("smallest Dirichlet eigenvalue") {
  const GridSpec g = grid(16, 129);
  const double h = g.hy();
  // closed form for the three-point Laplacian
  const double discrete = 4.0 / (h * h) * std::pow(std::sin(kPi * h / 2), 2);
  const double lam = rayleigh_min(SeparableOperator::laplacian(g));
  CHECK(lam == doctest::Approx(discrete).epsilon(1e-9));
  CHECK(std::abs(lam - kPi * kPi) / (kPi * kPi) < 1e-3);
  // a constant potential shifts the spectrum
  const double shifted = rayleigh_min(SeparableOperator::laplacian(g, Eigen::ArrayXd::Constant(g.ny, 2.0)));
  CHECK(shifted == doctest::Approx(discrete + 2.0).epsilon(1e-9));
  const auto [diag, off] = symmetrized_mode(SeparableOperator::laplacian(g), 1);
  CHECK(diag.size() == g.ny - 2);
  CHECK(diag[0] == doctest::Approx(2 / (h * h) + 1.0));
  CHECK(off[0] == doctest::Approx(-1 / (h * h)));
}

TEST_CASE("quadratic form of a single mode") {
  const GridSpec g = grid(16, 129);
  const ScalarField u = ScalarField::sample(g, [](double x, double y) { return std::sin(kPi * y) * std::cos(x); });
  const double exact = -(1 + kPi * kPi) * kPi / 2;
  CHECK(quadratic_form(SeparableOperator::laplacian(g), u) == doctest::Approx(exact).epsilon(1e-3));
}
