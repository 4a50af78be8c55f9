#include "steady_deform/deform.hpp"
#include "steady_deform/verify.hpp"

#include <doctest.h>

#include <cmath>

using namespace sdeform;

namespace {

GridSpec grid(int nx, int ny) {
  GridSpec g;
  g.nx = nx;
  g.ny = ny;
  return g;
}

BaseState sine_base(const GridSpec& g) {
  Eigen::ArrayXd v0(g.ny);
  for (int j = 0; j < g.ny; ++j) v0[j] = 1.0 + 0.25 * std::sin(kPi * g.y(j));
  return build_euler_base(g, v0);
}

DiffeoPotentials smooth_potentials(const GridSpec& g, double eps) {
  DiffeoPotentials d = DiffeoPotentials::zero(g);
  d.phi = ScalarField::sample(g, [&](double x, double y) { return eps * (std::sin(kPi * y) * std::cos(x) + y * y * std::sin(2 * x)); });
  d.eta = ScalarField::sample(g, [&](double x, double y) { return eps * (std::cos(kPi * y) * std::sin(x) + 0.5 * y * y); });
  d.eta_y_bot = 0.0;
  d.eta_y_top = eps;
  return d;
}

DeformConfig wavy(const GridSpec& g, double amp) {
  DeformConfig cfg = DeformConfig::identity(g);
  cfg.boundary.top.cos_amp = {amp};
  return cfg;
}

}  // namespace

TEST_CASE("boundary shapes") {
  const GridSpec g = grid(16, 17);
  BoundaryShape b;
  b.top.offset = 0.1;
  b.top.cos_amp = {0.02, 0.01};
  b.bot.sin_amp = {0.03};
  CHECK(b.volume(g) == doctest::Approx(g.lx * 1.1).epsilon(1e-12));
  CHECK(b.top.eval(0.0, g.lx) == doctest::Approx(0.13));
  CHECK(b.top.eval(0.0, g.lx, 2) == doctest::Approx(-0.02 - 0.04));
  CHECK(b.amplitude(g) == doctest::Approx(0.13).epsilon(1e-6));
  CHECK_FALSE(b.flat());
  const BoundaryShape s = b.scaled(2.0, g);
  CHECK(s.volume(g) == doctest::Approx(2 * b.volume(g)).epsilon(1e-12));
  const GridSpec t = target_grid_for(g, b);
  CHECK(t.y_lo <= -0.03);
  CHECK(t.y_hi >= 1.13);
  CHECK(t.ny == g.ny);
}

TEST_CASE("map fields and the Jacobian identity") {
  const GridSpec g = grid(32, 33);
  const MapFields z = map_fields(DiffeoPotentials::zero(g));
  for (const auto& p : z.p) CHECK(p.max_abs() == 0.0);
  for (double eps : {1e-3, 0.05, 0.2}) {
    const JacobianResult jr = jacobian_det(smooth_potentials(g, eps));
    CHECK(jr.max_disagreement < 1e-10);
    if (eps < 0.1) CHECK(jr.direct.values().minCoeff() > 0.0);
  }
  const DiffeoPotentials d = smooth_potentials(g, 0.1);
  const ScalarField ey = eta_y(d);
  CHECK(ey.values().col(0).abs().maxCoeff() == 0.0);
  CHECK(ey.values().col(g.ny - 1).isApproxToConstant(0.1));
}

TEST_CASE("identity fixed point") {
  const GridSpec g = grid(32, 33);
  const BaseState st = sine_base(g);
  const DeformResult r = deform(st, DeformConfig::identity(g));
  CHECK(r.converged);
  CHECK(r.iterations <= 2);
  CHECK(r.pot.eta.max_abs() < 1e-12);
  CHECK(r.pot.phi.max_abs() < 1e-12);
  CHECK(r.diag.f_deviation < 1e-12);
  const ScalarField res = composed_residual(st, r.pot, r.F, st.G0);
  CHECK(res.max_abs() < 1e-10);
  const PushForward pf = push_forward(st, r, g);
  CHECK((pf.psi - st.psi0_field()).max_abs() < 1e-12);
  CHECK(pf.inside.minCoeff() == 1);
}

TEST_CASE("wavy channel converges by contraction") {
  const GridSpec g = grid(32, 33);
  const BaseState st = sine_base(g);
  std::vector<std::string> lines;
  const DeformResult r = deform(st, wavy(g, 0.02), [&](const std::string& s) { lines.push_back(s); });
  REQUIRE(r.converged);
  CHECK(lines.size() == r.history.size());
  CHECK(r.iterations <= 30);
  CHECK(r.diag.max_ratio < 0.6);
  CHECK(r.diag.composed_residual < 1e-8);
  CHECK(r.diag.jacobian_defect < 1e-8);
  CHECK(r.diag.walls.spread_top < 1e-9);
  CHECK(r.diag.phi_average < 1e-11);
  // F moves at first order in the amplitude
  CHECK(r.diag.f_deviation > 1e-4);
  CHECK(r.diag.f_deviation < 0.2);
  // the top wall lands on the perturbed boundary up to the wall constant
  const WallLevels wl = wall_levels(r.pot, wavy(g, 0.02).boundary);
  CHECK(wl.top.abs().maxCoeff() < 1e-6);
  // the cross-validated profile update agrees
  DeformConfig dense = wavy(g, 0.02);
  dense.dense_k = true;
  const DeformResult rd = deform(st, dense);
  CHECK((rd.pot.eta - r.pot.eta).max_abs() < 1e-9);
}

TEST_CASE("wall constant shrinks at second order in the wall-normal spacing") {
  std::vector<double> c;
  for (int ny : {33, 65}) {
    const GridSpec g = grid(64, ny);
    const DeformResult r = deform(sine_base(g), wavy(g, 0.02));
    REQUIRE(r.converged);
    c.push_back(std::abs(r.diag.walls.mean_top));
  }
  CHECK(std::log2(c[0] / c[1]) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("iteration counts grow with the amplitude") {
  const GridSpec g = grid(32, 33);
  const BaseState st = sine_base(g);
  int prev = 0;
  for (double a : {0.005, 0.01, 0.02, 0.04, 0.08}) {
    const DeformResult r = deform(st, wavy(g, a));
    CHECK(r.converged);
    CHECK(r.iterations >= prev);
    prev = r.iterations;
  }
  CHECK_THROWS_WITH(deform(st, wavy(g, 0.4)), doctest::Contains("degenerate"));
}

TEST_CASE("inverse map") {
  const GridSpec g = grid(32, 33);
  const BaseState st = sine_base(g);
  const DeformResult r = deform(st, wavy(g, 0.03));
  REQUIRE(r.converged);
  const MapFields mf = map_fields(r.pot, false);
  std::vector<std::pair<double, double>> images, sources;
  for (int j : {3, 10, 20, 29})
    for (int i : {0, 7, 19}) {
      sources.emplace_back(g.x(i), g.y(j));
      images.emplace_back(g.x(i) + mf.v1(i, j), g.y(j) + mf.v2(i, j));
    }
  const Preimages pre = invert_map(r.pot, images);
  for (std::size_t k = 0; k < sources.size(); ++k) {
    CHECK(pre.inside[k]);
    const double dx = std::remainder(pre.y[k].first - sources[k].first, g.lx);
    CHECK(std::abs(dx) < 1e-8);
    CHECK(pre.y[k].second == doctest::Approx(sources[k].second).epsilon(1e-8));
  }
  const Preimages out = invert_map(r.pot, {{1.0, 1.2}});
  CHECK_FALSE(out.inside[0]);
  CHECK(psi0_at(st.geo, -0.1) == doctest::Approx(st.geo.psi0[0] + 0.1 * 1.0).epsilon(1e-3));
}

TEST_CASE("straight channel with a nonuniform density stays sheared") {
  const GridSpec g = grid(32, 33);
  const BaseState st = sine_base(g);
  DeformConfig cfg = DeformConfig::identity(g);
  cfg.rho = ScalarField::sample(g, [](double x, double y) { return 1 + 0.03 * std::cos(x) * std::sin(kPi * y); });
  const DeformResult r = deform(st, cfg);
  REQUIRE(r.converged);
  CHECK(r.pot.eta.max_abs() > 1e-3);
  const PushForward pf = push_forward(st, r, g);
  // discretisation floor, measured at about 2.7e-6 on this grid
  CHECK(shear_deviation(pf.psi, pf.inside) < 1e-5);
}

TEST_CASE("configuration validation") {
  const GridSpec g = grid(16, 17);
  DeformConfig cfg = DeformConfig::identity(g);
  CHECK_NOTHROW(cfg.validate());
  cfg.rho *= 1.1;
  CHECK_THROWS_WITH(cfg.validate(), doctest::Contains("Vol(D)"));
  cfg = DeformConfig::identity(g);
  cfg.tol_iter = 0.0;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("constrained loop reproduces the volume scaling") {
  const GridSpec g = grid(32, 33);
  const BaseState st = sine_base(g);
  const DeformConfig cfg = wavy(g, 0.02);
  const ConstrainedResult cr = deform_constrained(st, cfg, [](const DiffeoPotentials& p, const StreamGeometry&) {
    ScalarField x = p.eta;
    x *= 0.01;
    x.values() += 1.0;
    return x;
  });
  CHECK(cr.inner.converged);
  CHECK(cr.fixed_point_residual < 1e-8);
  CHECK(cr.sigma == doctest::Approx(std::sqrt(cfg.boundary.volume(g) / integrate(cr.rho))).epsilon(1e-10));
}

TEST_CASE("linearization certificate converges with the wall-normal spacing") {
  std::vector<double> e;
  for (int ny : {257, 513}) {
    const GridSpec g = grid(8, ny);
    const DiffeoPotentials d = smooth_potentials(g, 1.0);
    e.push_back(linearization_certificate(sine_base(g), d, 1e-5).rel_error);
  }
  CHECK(e[1] < e[0]);
  CHECK(e[1] < 1e-3);
}

TEST_CASE("iteration log lines") {
  IterRecord r;
  r.n = 3;
  r.dnorm = 1.5e-3;
  r.ratio = 0.25;
  CHECK(r.log_line().rfind("iter=3 dnorm=1.500000e-03 ratio=2.500000e-01", 0) == 0);
}
