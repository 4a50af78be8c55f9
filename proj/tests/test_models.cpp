#include "steady_deform/models.hpp"

#include <doctest.h>

#include <cmath>

using namespace sdeform;

namespace {

GridSpec grid(int nx, int ny, double lo = 0.0, double hi = 1.0) {
  GridSpec g;
  g.nx = nx;
  g.ny = ny;
  g.y_lo = lo;
  g.y_hi = hi;
  return g;
}

Eigen::ArrayXd sine_velocity(const GridSpec& g) {
  Eigen::ArrayXd v0(g.ny);
  for (int j = 0; j < g.ny; ++j) v0[j] = 1.0 + 0.25 * std::sin(kPi * g.y(j));
  return v0;
}

BaseState gs_base(const GridSpec& g) {
  const Eigen::ArrayXd r = g.ys();
  const Eigen::ArrayXd psi0 = (r.square() - 0.25) / 0.75;
  return build_gs_base(g, psi0, Profile::from_function(psi0, [](double c) { return c; }));
}

}  // namespace

TEST_CASE("model names") {
  for (Model m : {Model::euler, Model::boussinesq, Model::gs}) CHECK(model_from_string(to_string(m)) == m);
  CHECK_THROWS(model_from_string("navier"));
}

TEST_CASE("Couette base") {
  const GridSpec g = grid(16, 33);
  const BaseState st = build_euler_base(g, Eigen::ArrayXd::Constant(g.ny, 1.0));
  CHECK((st.geo.psi0 + g.ys()).abs().maxCoeff() < 1e-14);
  CHECK(st.F0.values().abs().maxCoeff() < 1e-12);
  CHECK(base_residual(st).abs().maxCoeff() < 1e-12);
  CHECK(st.c_bot == 0.0);
  CHECK(st.c_top == doctest::Approx(-1.0));
}

TEST_CASE("sheared Euler base") {
  const GridSpec g = grid(16, 65);
  const BaseState st = build_euler_base(g, sine_velocity(g));
  for (int j = 0; j < g.ny; ++j) {
    const double y = g.y(j);
    CHECK(st.geo.psi0[j] == doctest::Approx(-(y + 0.25 * (1 - std::cos(kPi * y)) / kPi)).epsilon(1e-6));
    // F0(psi0) = psi0'' = -v0'
    CHECK(st.F0.values()[j] == doctest::Approx(-0.25 * kPi * std::cos(kPi * y)).epsilon(2e-3));
  }
  CHECK(base_residual(st).abs().maxCoeff() < 1e-10);
  const ArnoldReport a = arnold_window(st);
  CHECK(a.inside);
  CHECK(a.lambda1 == doctest::Approx(kPi * kPi).epsilon(1e-3));
  // F0' = v0'' / v0 is smallest at mid-channel
  CHECK(a.fprime_min == doctest::Approx(-0.25 * kPi * kPi / 1.25).epsilon(1e-3));
  CHECK(a.fprime_max <= 1e-8);
  const BaseState st2 = build_euler_base_from_psi(g, st.geo.psi0);
  CHECK((st2.F0.values() - st.F0.values()).abs().maxCoeff() < 1e-3);
}

TEST_CASE("Boussinesq base and momentum balance") {
  const GridSpec g = grid(16, 65);
  const Eigen::ArrayXd psi0 = -g.ys();
  const Profile Th0 = Profile::from_function(psi0, [](double c) { return -c; });
  const BaseState st = build_boussinesq_base(g, psi0, Th0);
  CHECK(base_residual(st).abs().maxCoeff() < 1e-10);
  const ScalarField psi = st.psi0_field();
  const BoussinesqFields bf = reconstruct_boussinesq_fields(psi, Th0, st.F0);
  CHECK(momentum_residual(psi, bf.theta, bf.pressure) < 1e-6);
  CHECK(bf.theta(3, 20) == doctest::Approx(g.y(20)));
  // a stratification with a different profile breaks the balance
  const Profile wrong = Profile::from_function(psi0, [](double c) { return -2 * c; });
  const BoussinesqFields bw = reconstruct_boussinesq_fields(psi, wrong, st.F0);
  CHECK(momentum_residual(psi, bw.theta, st.psi0_field()) > 1e-2);
}

TEST_CASE("Grad-Shafranov radial base") {
  const GridSpec g = grid(16, 65, 0.5, 1.0);
  const BaseState st = gs_base(g);
  CHECK(base_residual(st).abs().maxCoeff() < 1e-9);
  for (int j = 0; j < g.ny; ++j) {
    const double c = st.geo.psi0[j];
    CHECK(st.Pi0_prime.eval(c) == doctest::Approx(c / (0.75 * c + 0.25)).epsilon(1e-10));
  }
  const GSSignReport rep = gs_sign_report(st);
  for (int j = 0; j < g.ny; ++j) {
    const double r = g.y(j), c = st.geo.psi0[j];
    CHECK(rep.form_pressure[j] == doctest::Approx((c - 1) / (r * r)).epsilon(1e-8));
    // spline second derivative of Pi0'; the end knots are least accurate
    CHECK(std::abs(rep.form_lambda[j] - (1 - 0.25 / (r * r))) < 5e-4);
  }
  CHECK(rep.pi_nonnegative);
  CHECK_FALSE(rep.lambda_negative);
  CHECK_FALSE(rep.pressure_dominates);
}

TEST_CASE("Grad-Shafranov base from profiles recovers the radial solution") {
  const GridSpec g = grid(16, 65, 0.5, 1.0);
  const Eigen::ArrayXd knots = Eigen::ArrayXd::LinSpaced(65, 0.0, 1.0);
  const Profile pi = Profile::from_function(knots, [](double c) { return c / (0.75 * c + 0.25); });
  const Profile C0 = Profile::from_function(knots, [](double c) { return c; });
  const BaseState st = build_gs_base_from_profiles(g, pi, C0, 0.0, 1.0);
  const Eigen::ArrayXd r = g.ys();
  CHECK((st.geo.psi0 - (r.square() - 0.25) / 0.75).abs().maxCoeff() < 1e-6);
}

TEST_CASE("swirl reconstruction") {
  const Eigen::ArrayXd knots = Eigen::ArrayXd::LinSpaced(33, 0.0, 1.0);
  // C0 = 1 + c gives W = C0 C0' = 1 + c and C = sqrt(1 + 2 int W) = 1 + c
  const Profile C0 = Profile::from_function(knots, [](double c) { return 1 + c; });
  const Profile W = Profile::from_function(knots, [](double c) { return 1 + c; });
  const Profile C = reconstruct_swirl(W, C0);
  for (double c : {0.0, 0.2, 0.55, 1.0}) CHECK(C.eval(c) == doctest::Approx(1 + c).epsilon(1e-10));
  // C0(0) = 0 with W < 0 leaves C^2 negative right above the reference level
  const Profile C0z = Profile::from_function(knots, [](double c) { return c; });
  const Profile Wneg = Profile::from_function(knots, [](double c) { return c - 0.01; });
  CHECK_THROWS_WITH_AS(reconstruct_swirl(Wneg, C0z), doctest::Contains("loses reality"), std::runtime_error);
}
