#include "steady_deform/verify.hpp"

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

Eigen::ArrayXd sine_velocity(const GridSpec& g) {
  Eigen::ArrayXd v0(g.ny);
  for (int j = 0; j < g.ny; ++j) v0[j] = 1.0 + 0.25 * std::sin(kPi * g.y(j));
  return v0;
}

}  // namespace

TEST_CASE("report bookkeeping and JSON round trip") {
  VerificationReport rep;
  rep.add_upper("residual", 3e-11, 1e-10, "tol_iter");
  rep.add("informational", Check{0.5, INFINITY, true, "informational"});
  rep.add("broken", Check{NAN, 1e-6, false, "fixed"});
  CHECK_THROWS_AS(rep.add_upper("residual", 0.0, 1.0, "x"), std::logic_error);
  CHECK(rep.has("broken"));
  CHECK_FALSE(rep.all_pass());
  CHECK(rep.at("residual").pass);
  const VerificationReport back = VerificationReport::from_json(rep.to_json());
  REQUIRE(back.checks().size() == 3);
  CHECK(back.checks()[0].first == "residual");
  CHECK(back.at("residual").value == 3e-11);
  CHECK(std::isinf(back.at("informational").tol));
  CHECK(std::isnan(back.at("broken").value));
  CHECK_FALSE(back.at("broken").pass);
  CHECK(back.at("residual").provenance == "tol_iter");
  VerificationReport other;
  other.add_upper("extra", 1.0, 2.0, "fixed");
  rep.merge(other);
  CHECK(rep.checks().size() == 4);
  CHECK(rep.to_json(0).find('\n') == std::string::npos);

  // non-gating entries keep their status but do not fail the report
  VerificationReport soft;
  soft.add_upper("hard", 0.0, 1.0, "fixed");
  soft.add("sign", Check{0.5, 0.0, false, "sign", false});
  CHECK(soft.all_pass());
  const VerificationReport sb = VerificationReport::from_json(soft.to_json());
  CHECK_FALSE(sb.at("sign").gating);
  CHECK_FALSE(sb.at("sign").pass);
  CHECK(sb.all_pass());
}

TEST_CASE("shear deviation") {
  const GridSpec g = grid(16, 9);
  const ScalarField shear = ScalarField::sample(g, [](double, double y) { return y * y; });
  CHECK(shear_deviation(shear) == 0.0);
  const ScalarField wavy = ScalarField::sample(g, [](double x, double y) { return y + 0.01 * std::cos(x) * y; });
  CHECK(shear_deviation(wavy) == doctest::Approx(0.01));
  // rows with an outside node are skipped
  Eigen::ArrayXXi inside = Eigen::ArrayXXi::Ones(g.nx, g.ny);
  inside.col(8).setZero();
  CHECK(shear_deviation(wavy, inside) == doctest::Approx(0.01 * g.y(7)));
}

TEST_CASE("equation-of-state check") {
  const GridSpec g = grid(32, 65);
  const ScalarField psi = ScalarField::sample(g, [](double x, double y) { return -y - 0.05 * std::sin(kPi * y) * std::cos(x); });
  ScalarField q(g), r(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      q(i, j) = std::sin(3 * psi(i, j)) + psi(i, j) * psi(i, j);
      r(i, j) = q(i, j) + 1e-3 * std::cos(g.x(i));
    }
  // bin-width resolution for a curved q: 64 bins over this range leave a few 1e-9
  CHECK(eos_check(psi, q) < 1e-8);
  CHECK(eos_check(psi, r) > 1e-3);
  // a cubic of psi is fitted exactly
  Eigen::ArrayXd p = Eigen::ArrayXd::LinSpaced(400, -1.0, 1.0), c = p.cube() - p;
  CHECK(eos_check(p, c) < 1e-13);
}

TEST_CASE("range check") {
  const GridSpec g = grid(8, 9);
  const ScalarField psi = ScalarField::sample(g, [](double, double y) { return -y; });
  const RangeCheck ok = range_check(psi, 0.0, -1.0);
  CHECK(ok.pass);
  CHECK(ok.distinct_walls);
  CHECK(ok.excursion == doctest::Approx(-0.125));
  ScalarField bad = psi;
  bad(2, 4) = 0.05;
  const RangeCheck no = range_check(bad, 0.0, -1.0);
  CHECK_FALSE(no.pass);
  CHECK(no.excursion == doctest::Approx(0.05));
  CHECK_FALSE(range_check(psi, 0.3, 0.3).distinct_walls);
}

TEST_CASE("quadratic-form identity for random wall-vanishing fields") {
  const GridSpec g = grid(32, 129);
  const Eigen::ArrayXd v0 = sine_velocity(g);
  const BaseState st = build_euler_base(g, v0);
  std::mt19937 rng(7);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    const double a = nd(rng), b = nd(rng), c = nd(rng);
    const ScalarField u = ScalarField::sample(g, [&](double x, double y) {
      return std::sin(kPi * y) * (a + b * std::cos(x)) + c * std::sin(2 * kPi * y) * std::sin(2 * x);
    });
    const KerlemForms k = kerlem_forms(st.op, v0, u);
    CHECK(k.rhs < 0.0);
    CHECK(k.rel_error < 1e-3);
  }
  // the zero-mode kernel element v0 itself: u = v0 sin(pi y) has u / v0 = sin(pi y)
  const ScalarField u = ScalarField::sample(g, [](double, double y) { return (1 + 0.25 * std::sin(kPi * y)) * std::sin(kPi * y); });
  const KerlemForms k = kerlem_forms(st.op, v0, u);
  // rhs = -int v0^2 pi^2 cos^2(pi y) dx dy, by direct quadrature below
  double ref = 0.0;
  const int n = 20000;
  for (int m = 0; m < n; ++m) {
    const double y = (m + 0.5) / n, v = 1 + 0.25 * std::sin(kPi * y);
    ref += v * v * kPi * kPi * std::pow(std::cos(kPi * y), 2) / n;
  }
  CHECK(k.rhs == doctest::Approx(-2 * kPi * ref).epsilon(1e-4));
  CHECK(k.lhs == doctest::Approx(-2 * kPi * ref).epsilon(1e-3));
}

TEST_CASE("hypothesis report of a stable base") {
  const GridSpec g = grid(16, 65);
  const VerificationReport rep = hypothesis_report(build_euler_base(g, sine_velocity(g)));
  CHECK(rep.all_pass());
  CHECK(rep.at("rayleigh_min").value > 0.0);
  CHECK(rep.at("min_abs_dpsi0").value == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(rep.at("max_travel_time").value == doctest::Approx(2 * kPi).epsilon(1e-3));
  CHECK(rep.at("arnold_window").pass);
  // Couette sits on the edge of the window; positivity still holds and gates
  const VerificationReport couette = hypothesis_report(build_euler_base(g, Eigen::ArrayXd::Constant(g.ny, 1.0)));
  CHECK_FALSE(couette.at("arnold_window").pass);
  CHECK(couette.at("rayleigh_min").value == doctest::Approx(kPi * kPi).epsilon(1e-3));
  CHECK(couette.all_pass());
}

TEST_CASE("residual diagnostics on a converged wavy channel") {
  const GridSpec g = grid(32, 33);
  const BaseState st = build_euler_base(g, sine_velocity(g));
  DeformConfig cfg = DeformConfig::identity(g);
  cfg.boundary.top.cos_amp = {0.02};
  const DeformResult r = deform(st, cfg);
  REQUIRE(r.converged);
  const ComposedResidual cr = residual_composed(st, r, cfg);
  CHECK(cr.sup == doctest::Approx(r.diag.composed_residual).epsilon(1e-6));
  const TargetResidual tr = residual_target(st, r, cfg, target_grid_for(g, cfg.boundary));
  CHECK(tr.rows_used > 10);
  // finite differences on the pushed-forward field, so only truncation-small
  CHECK(tr.sup < 1e-2);
  // the composed vorticity is a function of psi0 along every interior row
  const ScalarField omega = composed_operator(r.pot, st);
  const int m = g.ny - 2;
  const Eigen::ArrayXXd p = st.psi0_field().values().middleCols(1, m), w = omega.values().middleCols(1, m);
  CHECK(eos_check(Eigen::ArrayXd(p.reshaped()), Eigen::ArrayXd(w.reshaped())) <= 10 * r.diag.composed_residual + 1e-12);
}
