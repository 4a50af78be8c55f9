#include "steady_deform/deform.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

namespace sdeform {

double BoundaryShape::Wall::eval(double x, double lx, int deriv) const {
  const double w = 2.0 * kPi / lx;
  double s = deriv == 0 ? offset : 0.0;
  const std::size_t n = std::max(cos_amp.size(), sin_amp.size());
  for (std::size_t m = 0; m < n; ++m) {
    const double k = (m + 1) * w;
    const double a = m < cos_amp.size() ? cos_amp[m] : 0.0;
    const double b = m < sin_amp.size() ? sin_amp[m] : 0.0;
    const double c = std::cos(k * x), sn = std::sin(k * x);
    switch (deriv) {
      case 0:
        s += a * c + b * sn;
        break;
      case 1:
        s += k * (-a * sn + b * c);
        break;
      default:
        s += -k * k * (a * c + b * sn);
        break;
    }
  }
  return s;
}

bool BoundaryShape::Wall::flat() const {
  auto zero = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double a) { return a == 0.0; });
  };
  return offset == 0.0 && zero(cos_amp) && zero(sin_amp);
}

double BoundaryShape::volume(const GridSpec& grid) const {
  return grid.lx * ((grid.y_hi - grid.y_lo) + top.offset - bot.offset);
}

BoundaryShape BoundaryShape::scaled(double s, const GridSpec& grid) const {
  BoundaryShape out = *this;
  for (Wall* w : {&out.bot, &out.top}) {
    w->offset *= s;
    for (double& a : w->cos_amp) a *= s;
    for (double& a : w->sin_amp) a *= s;
  }
  out.top.offset += (s - 1.0) * (grid.y_hi - grid.y_lo);
  return out;
}

double BoundaryShape::amplitude(const GridSpec& grid) const {
  double m = 0.0;
  const int n = 8 * grid.nx;
  for (int i = 0; i < n; ++i) {
    const double x = i * grid.lx / n;
    m = std::max({m, std::abs(bot.eval(x, grid.lx)), std::abs(top.eval(x, grid.lx))});
  }
  return m;
}

DiffeoPotentials DiffeoPotentials::zero(const GridSpec& grid) {
  DiffeoPotentials p;
  p.eta = ScalarField(grid);
  p.phi = ScalarField(grid);
  return p;
}

ScalarField eta_y(const DiffeoPotentials& pot) {
  ScalarField ey = derive(pot.eta, 0, 1);
  const int n = pot.grid().ny;
  ey.values().col(0).setConstant(pot.eta_y_bot);
  ey.values().col(n - 1).setConstant(pot.eta_y_top);
  return ey;
}

namespace {

// eta_yy with ghost-node wall rows, so that eta_xx + eta_yy is the Neumann Laplacian.
ScalarField eta_yy(const DiffeoPotentials& pot) {
  const GridSpec& g = pot.grid();
  const int n = g.ny;
  const double h = g.hy();
  ScalarField out = derive(pot.eta, 0, 2);
  const auto& v = pot.eta.values();
  out.values().col(0) = (2.0 * v.col(1) - 2.0 * v.col(0) - 2.0 * h * pot.eta_y_bot) / (h * h);
  out.values().col(n - 1) = (2.0 * v.col(n - 2) - 2.0 * v.col(n - 1) + 2.0 * h * pot.eta_y_top) / (h * h);
  return out;
}

}  // namespace

MapFields map_fields(const DiffeoPotentials& pot, bool third_derivatives) {
  require_same_grid(pot.eta, pot.phi, "map_fields");
  const ScalarField ex = derive(pot.eta, 1, 0), ey = eta_y(pot);
  const ScalarField exx = derive(pot.eta, 2, 0), exy = derive(ey, 1, 0), eyy = eta_yy(pot);
  const ScalarField fx = derive(pot.phi, 1, 0), fy = derive(pot.phi, 0, 1);
  const ScalarField fxx = derive(pot.phi, 2, 0), fxy = derive(pot.phi, 1, 1), fyy = derive(pot.phi, 0, 2);
  MapFields mf;
  mf.v1 = ex - fy;
  mf.v2 = ey + fx;
  mf.p = {exx - fxy, exy - fyy, fxx + exy, fxy + eyy};
  if (third_derivatives) {
    for (int m = 0; m < 4; ++m) mf.px[m] = derive(mf.p[m], 1, 0);
    // second y derivatives come from the three-point stencil, matching the linear operator
    const ScalarField fxyy = derive(fyy, 1, 0), exyy = derive(eyy, 1, 0);
    mf.py = {derive(ey, 2, 0) - fxyy, exyy - derive(fyy, 0, 1), derive(fy, 2, 0) + exyy,
             fxyy + derive(eyy, 0, 1)};
  }
  return mf;
}

ScalarField nonlinear_jacobian_term(const MapFields& mf) {
  const auto& p = mf.p;
  return ScalarField(p[0].grid(), -(p[0].values() * p[3].values() - p[1].values() * p[2].values()));
}

JacobianResult jacobian_det(const DiffeoPotentials& pot) {
  const MapFields mf = map_fields(pot, false);
  const auto& p = mf.p;
  JacobianResult r;
  r.direct = ScalarField(pot.grid(), (1.0 + p[0].values()) * (1.0 + p[3].values()) - p[1].values() * p[2].values());
  const ScalarField lap = neumann_laplacian(pot.eta, -pot.eta_y_bot, pot.eta_y_top);
  r.identity = ScalarField(pot.grid(), 1.0 + lap.values() - nonlinear_jacobian_term(mf).values());
  r.max_disagreement = (r.direct.values() - r.identity.values()).abs().maxCoeff();
  return r;
}

namespace {

struct Composed {
  ScalarField g1, g2;
  ScalarField h11, h12, h21, h22;
};

Composed compose_derivatives(const MapFields& mf, const StreamGeometry& geo, double min_det) {
  const GridSpec& g = geo.grid;
  const Eigen::ArrayXd d2 = dy2(geo.psi0, g.hy());
  Composed c{ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g)};
  double worst = INFINITY;
  int wi = 0, wj = 0;
  for (int j = 0; j < g.ny; ++j) {
    const double d = geo.dpsi0[j], s = d2[j];
    for (int i = 0; i < g.nx; ++i) {
      Eigen::Matrix2d J;
      J << 1.0 + mf.p[0](i, j), mf.p[1](i, j), mf.p[2](i, j), 1.0 + mf.p[3](i, j);
      const double det = J.determinant();
      if (det < worst) {
        worst = det;
        wi = i;
        wj = j;
      }
      if (!(det >= min_det)) continue;
      const Eigen::Matrix2d Q = J.inverse();
      Eigen::Matrix2d dPx, dPy;
      dPx << mf.px[0](i, j), mf.px[1](i, j), mf.px[2](i, j), mf.px[3](i, j);
      dPy << mf.py[0](i, j), mf.py[1](i, j), mf.py[2](i, j), mf.py[3](i, j);
      const Eigen::Matrix2d Mx = Q * dPx * Q, My = Q * dPy * Q;
      // G(a, b) = d_b g_a with g_a = Q(1, a) d
      Eigen::Matrix2d G;
      for (int a = 0; a < 2; ++a) {
        G(a, 0) = -Mx(1, a) * d;
        G(a, 1) = -My(1, a) * d + Q(1, a) * s;
      }
      const Eigen::Matrix2d H = G * Q;
      c.g1(i, j) = Q(1, 0) * d;
      c.g2(i, j) = Q(1, 1) * d;
      c.h11(i, j) = H(0, 0);
      c.h12(i, j) = H(0, 1);
      c.h21(i, j) = H(1, 0);
      c.h22(i, j) = H(1, 1);
    }
  }
  if (!(worst >= min_det)) {
    std::ostringstream msg;
    msg << std::setprecision(6) << "map degenerate: det(grad gamma) = " << worst << " at node (i=" << wi << ", j=" << wj
        << "), below " << min_det;
    throw DegenerateMapError(msg.str());
  }
  return c;
}

}  // namespace

VectorField composed_gradient(const DiffeoPotentials& pot, const StreamGeometry& geo) {
  Composed c = compose_derivatives(map_fields(pot), geo, 0.5);
  return {c.g1, c.g2};
}

ComposedHessian composed_hessian(const DiffeoPotentials& pot, const StreamGeometry& geo) {
  Composed c = compose_derivatives(map_fields(pot), geo, 0.5);
  return {c.h11, c.h12, c.h21, c.h22};
}

namespace {

ScalarField composed_operator_from(const MapFields& mf, const BaseState& state, const CoefficientPerturbation& coeffs,
                                   double min_det) {
  const GridSpec& g = state.grid();
  const Composed c = compose_derivatives(mf, state.geo, min_det);
  ScalarField out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double X = g.x(i) + mf.v1(i, j), Y = g.y(j) + mf.v2(i, j);
      std::array<double, 5> d{0.0, 0.0, 0.0, 0.0, 0.0};
      if (!coeffs.empty()) d = coeffs.delta(X, Y);
      const double a11 = 1.0 + d[0], a12 = d[1], a22 = 1.0 + d[2];
      const double b1 = d[3], b2 = state.drift_at(Y) + d[4];
      out(i, j) = a11 * c.h11(i, j) + a12 * (c.h12(i, j) + c.h21(i, j)) + a22 * c.h22(i, j) + b1 * c.g1(i, j) +
                  b2 * c.g2(i, j);
    }
  return out;
}

ScalarField residual_from(const MapFields& mf, const BaseState& state, const Profile& F, const SeparableG& G,
                          const CoefficientPerturbation& coeffs) {
  const GridSpec& g = state.grid();
  ScalarField res = composed_operator_from(mf, state, coeffs, 0.5);
  const Eigen::ArrayXd& fv = F.values();
  for (int j = 0; j < g.ny; ++j) {
    const double c = state.geo.psi0[j];
    for (int i = 0; i < g.nx; ++i) {
      const double Y = g.y(j) + mf.v2(i, j);
      res(i, j) -= fv[j] + (G.empty() ? 0.0 : G.eval(Y, c, 0));
    }
  }
  res.values().col(0).setZero();
  res.values().col(g.ny - 1).setZero();
  return res;
}

}  // namespace

ScalarField composed_operator(const DiffeoPotentials& pot, const BaseState& state,
                              const CoefficientPerturbation& coeffs, double min_det) {
  return composed_operator_from(map_fields(pot), state, coeffs, min_det);
}

ScalarField composed_residual(const BaseState& state, const DiffeoPotentials& pot, const Profile& F,
                              const SeparableG& G, const CoefficientPerturbation& coeffs) {
  return residual_from(map_fields(pot), state, F, G, coeffs);
}

namespace {

BoundaryDefect defect_from(const MapFields& mf, const BoundaryShape& boundary) {
  const GridSpec& g = mf.v1.grid();
  const int top = g.ny - 1;
  BoundaryDefect bd;
  bd.b1_bot.resize(g.nx);
  bd.b1_top.resize(g.nx);
  for (int i = 0; i < g.nx; ++i) {
    const double x = g.x(i);
    // bottom: B0 = y - y_lo, delta B = -b_bot(x)
    {
      const double al = mf.v1(i, 0), be = mf.v2(i, 0), y = g.y_lo;
      const double b0g = (y + be) - g.y_lo, b0 = y - g.y_lo;
      bd.b1_bot[i] = b0g - b0 - al * 0.0 - be * 1.0 - boundary.bot.eval(x + al, g.lx);
    }
    // top: B0 = y_hi - y, delta B = b_top(x)
    {
      const double al = mf.v1(i, top), be = mf.v2(i, top), y = g.y_hi;
      const double b0g = g.y_hi - (y + be), b0 = g.y_hi - y;
      bd.b1_top[i] = b0g - b0 - al * 0.0 - be * (-1.0) + boundary.top.eval(x + al, g.lx);
    }
  }
  bd.mean_bot = bd.b1_bot.mean();
  bd.mean_top = bd.b1_top.mean();
  return bd;
}

WallLevels levels_from(const MapFields& mf, const BoundaryShape& boundary) {
  const GridSpec& g = mf.v1.grid();
  const int top = g.ny - 1;
  WallLevels w;
  w.bot.resize(g.nx);
  w.top.resize(g.nx);
  for (int i = 0; i < g.nx; ++i) {
    const double x = g.x(i);
    w.bot[i] = mf.v2(i, 0) - boundary.bot.eval(x + mf.v1(i, 0), g.lx);
    w.top[i] = boundary.top.eval(x + mf.v1(i, top), g.lx) - mf.v2(i, top);
  }
  w.mean_bot = w.bot.mean();
  w.mean_top = w.top.mean();
  w.spread_bot = (w.bot - w.mean_bot).abs().maxCoeff();
  w.spread_top = (w.top - w.mean_top).abs().maxCoeff();
  return w;
}

}  // namespace

BoundaryDefect boundary_defect(const DiffeoPotentials& pot, const BoundaryShape& boundary) {
  return defect_from(map_fields(pot, false), boundary);
}

WallLevels wall_levels(const DiffeoPotentials& pot, const BoundaryShape& boundary) {
  return levels_from(map_fields(pot, false), boundary);
}

DeformConfig DeformConfig::identity(const GridSpec& grid) {
  DeformConfig cfg;
  cfg.rho = ScalarField(grid, Eigen::ArrayXXd::Ones(grid.nx, grid.ny));
  return cfg;
}

void DeformConfig::validate() const {
  const GridSpec& g = rho.grid();
  if (!rho.all_finite()) throw std::invalid_argument("DeformConfig: rho is not finite");
  const double vol = boundary.volume(g);
  const double mass = integrate(rho);
  if (std::abs(mass - vol) > 1e-10 * vol) {
    std::ostringstream msg;
    msg << std::setprecision(17) << "DeformConfig: integral of rho = " << mass << " differs from Vol(D) = " << vol;
    throw std::invalid_argument(msg.str());
  }
  if (tol_iter <= 0.0) throw std::invalid_argument("DeformConfig: tol_iter must be positive");
  if (max_iters < 1) throw std::invalid_argument("DeformConfig: max_iters must be at least 1");
}

std::string IterRecord::log_line() const {
  char buf[160];
  std::snprintf(buf, sizeof buf, "iter=%d dnorm=%.6e ratio=%.6e res=%.6e bdry=%.6e jac=%.6e", n, dnorm, ratio, res,
                bdry, jac);
  return buf;
}

DeformContext::DeformContext(const BaseState& state, const DeformConfig& cfg)
    : state_(state), cfg_(cfg), solver_(state.op) {
  if (!(cfg.rho.grid() == state.grid())) throw std::invalid_argument("DeformContext: rho lives on a different grid");
}

IterState initial_iterate(const BaseState& state) {
  return {DiffeoPotentials::zero(state.grid()), state.F0, ScalarField(state.grid())};
}

namespace {

// Profile correction dF with P[(L0 - lambda)^{-1}(dF)] = -A, by a dense K matrix.
Eigen::ArrayXd dense_k_update(const SeparableOperator& op, const Eigen::ArrayXd& A) {
  const int ny = op.grid.ny, m = ny - 2;
  Eigen::MatrixXd K(m, m);
  for (int c = 0; c < m; ++c) {
    Eigen::ArrayXd e = Eigen::ArrayXd::Zero(ny);
    e[c + 1] = 1.0;
    K.col(c) = solve_profile_bvp(op, e, 0.0, 0.0).segment(1, m).matrix();
  }
  Eigen::VectorXd rhs = -A.segment(1, m).matrix();
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(ny);
  out.segment(1, m) = K.partialPivLu().solve(rhs).array();
  return out;
}

void extrapolate_walls(Eigen::ArrayXd& v) {
  const Eigen::Index n = v.size();
  v[0] = 3.0 * v[1] - 3.0 * v[2] + v[3];
  v[n - 1] = 3.0 * v[n - 2] - 3.0 * v[n - 3] + v[n - 4];
}

}  // namespace

IterState iterate_once(const DeformContext& ctx, const IterState& cur) {
  const BaseState& state = ctx.state();
  const DeformConfig& cfg = ctx.cfg();
  const GridSpec& g = state.grid();
  const int top = g.ny - 1;

  // eta step
  const MapFields mf = map_fields(cur.pot, false);
  const BoundaryDefect bd = defect_from(mf, cfg.boundary);
  ScalarField rhs = cfg.rho + nonlinear_jacobian_term(mf);
  rhs.values() -= 1.0;
  const double delta = 0.5 * (bd.mean_bot + bd.mean_top - integrate(rhs) / g.lx);
  const double flux_bot = bd.mean_bot - delta, flux_top = bd.mean_top - delta;
  IterState next;
  next.pot.eta = solve_neumann(rhs, flux_bot, flux_top);
  next.pot.eta_y_bot = -flux_bot;
  next.pot.eta_y_top = flux_top;
  next.pot.phi = cur.pot.phi;

  // phi step with gamma+ = (eta^{n+1}, phi^n)
  const MapFields mfp = map_fields(next.pot, true);
  const ScalarField res = residual_from(mfp, state, cur.F, ctx.G(), cfg.coeffs);
  const ScalarField S = state.op.apply(partial_s(state.geo, cur.pot.phi)) - res;
  const BoundaryDefect bdp = defect_from(mfp, cfg.boundary);
  const Eigen::ArrayXd g_bot = state.geo.dpsi0[0] * (bdp.b1_bot - bdp.mean_bot);
  const Eigen::ArrayXd g_top = -state.geo.dpsi0[top] * (bdp.b1_top - bdp.mean_top);
  const ScalarField Phi_part = ctx.solver().solve(S, g_bot, g_top);
  const Eigen::ArrayXd A = x_average(Phi_part);

  Eigen::ArrayXd dF;
  ScalarField Phi;
  if (cfg.dense_k) {
    dF = dense_k_update(state.op, A);
    const Eigen::ArrayXd u = solve_profile_bvp(state.op, dF, 0.0, 0.0);
    Phi = Phi_part + ScalarField::from_y(g, u);
  } else {
    dF = -state.op.apply_1d(A);
    Phi = Phi_part - ScalarField::from_y(g, A);
  }
  extrapolate_walls(dF);
  next.F = cur.F.with_values(cur.F.values() + dF);
  next.Phi = Phi;
  next.pot.phi = recover_phi(state.geo, Phi);
  return next;
}

namespace {

double sup_diff(const ScalarField& a, const ScalarField& b) { return (a.values() - b.values()).abs().maxCoeff(); }

double difference_norm(const StreamGeometry& geo, const DiffeoPotentials& a, const DiffeoPotentials& b) {
  double d = std::max(sup_diff(a.eta, b.eta), sup_diff(a.phi, b.phi));
  d = std::max(d, sup_diff(partial_s(geo, a.eta), partial_s(geo, b.eta)));
  d = std::max(d, sup_diff(partial_s(geo, a.phi), partial_s(geo, b.phi)));
  return d;
}

double interior_sup(const ScalarField& f) {
  const int ny = f.grid().ny;
  return f.values().middleCols(1, ny - 2).abs().maxCoeff();
}

DeformDiagnostics diagnostics(const DeformContext& ctx, const IterState& st) {
  const BaseState& state = ctx.state();
  const MapFields mf = map_fields(st.pot, true);
  DeformDiagnostics d;
  const auto& p = mf.p;
  const Eigen::ArrayXXd det = (1.0 + p[0].values()) * (1.0 + p[3].values()) - p[1].values() * p[2].values();
  d.jacobian_defect = (det - ctx.cfg().rho.values()).abs().maxCoeff();
  d.composed_residual = interior_sup(residual_from(mf, state, st.F, ctx.G(), ctx.cfg().coeffs));
  d.walls = levels_from(mf, ctx.cfg().boundary);
  d.f_deviation = (st.F.values() - state.F0.values()).abs().maxCoeff();
  d.phi_average = x_average(st.Phi).abs().maxCoeff();
  return d;
}

}  // namespace

DeformResult deform(const BaseState& state, const DeformConfig& cfg,
                    const std::function<void(const std::string&)>& log) {
  cfg.validate();
  DeformContext ctx(state, cfg);
  IterState cur = initial_iterate(state);
  DeformResult out;
  double prev = 0.0, max_ratio = 0.0;
  for (int n = 1; n <= cfg.max_iters; ++n) {
    IterState next;
    try {
      next = iterate_once(ctx, cur);
    } catch (const std::exception& e) {
      throw std::runtime_error("deform: iteration " + std::to_string(n) + ": " + e.what());
    }
    IterRecord rec;
    rec.n = n;
    rec.dnorm = difference_norm(state.geo, next.pot, cur.pot);
    rec.ratio = n > 1 && prev > 0.0 ? rec.dnorm / prev : 0.0;
    DeformDiagnostics d;
    try {
      d = diagnostics(ctx, next);
    } catch (const DegenerateMapError& e) {
      throw std::runtime_error("deform: iteration " + std::to_string(n) + ": " + e.what());
    }
    rec.res = d.composed_residual;
    rec.bdry = std::max({std::abs(d.walls.mean_bot) + d.walls.spread_bot, std::abs(d.walls.mean_top) + d.walls.spread_top});
    rec.jac = d.jacobian_defect;
    out.history.push_back(rec);
    if (log) log(rec.log_line());
    if (n > 1) max_ratio = std::max(max_ratio, rec.ratio);
    prev = rec.dnorm;
    cur = std::move(next);
    out.iterations = n;
    out.diag = d;
    if (rec.dnorm < cfg.tol_iter) {
      out.converged = true;
      break;
    }
    if (!std::isfinite(rec.dnorm) || rec.dnorm > cfg.divergence_bound) break;
  }
  out.diag.max_ratio = max_ratio;
  out.pot = cur.pot;
  out.F = cur.F;
  return out;
}

Preimages invert_map(const DiffeoPotentials& pot, const std::vector<std::pair<double, double>>& pts) {
  const GridSpec& g = pot.grid();
  const MapFields mf = map_fields(pot, false);
  const FieldInterpolant V1(mf.v1), V2(mf.v2);
  Preimages out;
  out.y.resize(pts.size());
  out.inside.resize(pts.size());
  out.iterations.resize(pts.size());
  std::vector<std::size_t> failed;
  const double tol_in = 1e-12 * (g.y_hi - g.y_lo);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double X = pts[k].first, Y = pts[k].second;
    double y1 = X - V1.eval_extended(X, Y, 0, 0);
    double y2 = Y - V2.eval_extended(X, Y, 0, 0);
    bool ok = false;
    int it = 0;
    for (; it < 30; ++it) {
      const double r1 = y1 + V1.eval_extended(y1, y2, 0, 0) - X;
      const double r2 = y2 + V2.eval_extended(y1, y2, 0, 0) - Y;
      Eigen::Matrix2d J;
      J << 1.0 + V1.eval_extended(y1, y2, 1, 0), V1.eval_extended(y1, y2, 0, 1), V2.eval_extended(y1, y2, 1, 0),
          1.0 + V2.eval_extended(y1, y2, 0, 1);
      const Eigen::Vector2d step = J.partialPivLu().solve(Eigen::Vector2d(r1, r2));
      y1 -= step[0];
      y2 -= step[1];
      if (!std::isfinite(y1) || !std::isfinite(y2)) break;
      if (step.lpNorm<Eigen::Infinity>() < 1e-12 * (1.0 + std::abs(y2))) {
        ok = true;
        ++it;
        break;
      }
    }
    if (!ok) failed.push_back(k);
    out.y[k] = {y1, y2};
    out.inside[k] = ok && y2 >= g.y_lo - tol_in && y2 <= g.y_hi + tol_in;
    out.iterations[k] = it;
  }
  if (!failed.empty()) {
    std::ostringstream msg;
    msg << std::setprecision(6) << "invert_map: Newton failed at " << failed.size() << " point(s):";
    for (std::size_t m = 0; m < std::min<std::size_t>(failed.size(), 10); ++m)
      msg << " (" << pts[failed[m]].first << ", " << pts[failed[m]].second << ")";
    throw std::runtime_error(msg.str());
  }
  return out;
}

namespace {

class Psi0Eval {
 public:
  explicit Psi0Eval(const StreamGeometry& geo)
      : lo_(geo.grid.y_lo), hi_(geo.grid.y_hi), prof_(geo.grid.ys(), geo.psi0, 0.0) {
    v_lo_ = prof_.eval(lo_, 0);
    v_hi_ = prof_.eval(hi_, 0);
    d_lo_ = prof_.eval(lo_, 1);
    d_hi_ = prof_.eval(hi_, 1);
  }
  double operator()(double y) const {
    if (y < lo_) return v_lo_ + d_lo_ * (y - lo_);
    if (y > hi_) return v_hi_ + d_hi_ * (y - hi_);
    return prof_.eval(y, 0);
  }

 private:
  double lo_, hi_;
  Profile prof_;
  double v_lo_, v_hi_, d_lo_, d_hi_;
};

}  // namespace

double psi0_at(const StreamGeometry& geo, double y) { return Psi0Eval(geo)(y); }

PushForward push_forward(const BaseState& state, const DeformResult& result, const GridSpec& target) {
  target.validate();
  std::vector<std::pair<double, double>> pts;
  pts.reserve(static_cast<std::size_t>(target.nx) * target.ny);
  for (int j = 0; j < target.ny; ++j)
    for (int i = 0; i < target.nx; ++i) pts.emplace_back(target.x(i), target.y(j));
  const Preimages pre = invert_map(result.pot, pts);
  const Psi0Eval psi0(state.geo);
  PushForward out{ScalarField(target), Eigen::ArrayXXi::Zero(target.nx, target.ny)};
  std::size_t k = 0;
  for (int j = 0; j < target.ny; ++j)
    for (int i = 0; i < target.nx; ++i, ++k) {
      out.psi(i, j) = psi0(pre.y[k].second);
      out.inside(i, j) = pre.inside[k] ? 1 : 0;
    }
  return out;
}

GridSpec target_grid_for(const GridSpec& base, const BoundaryShape& boundary) {
  GridSpec t = base;
  double lo = INFINITY, hi = -INFINITY;
  const int n = 8 * base.nx;
  for (int i = 0; i < n; ++i) {
    const double x = i * base.lx / n;
    lo = std::min(lo, boundary.bot.eval(x, base.lx));
    hi = std::max(hi, boundary.top.eval(x, base.lx));
  }
  t.y_lo = base.y_lo + lo;
  t.y_hi = base.y_hi + hi;
  return t;
}

ConstrainedResult deform_constrained(const BaseState& state, const DeformConfig& cfg_template, const ConstraintFn& X,
                                     double outer_tol, int outer_max) {
  const GridSpec& g = state.grid();
  const double vol = cfg_template.boundary.volume(g);
  ConstrainedResult out;
  DiffeoPotentials pot = DiffeoPotentials::zero(g);
  ScalarField rho_prev;
  for (int N = 1; N <= outer_max; ++N) {
    ScalarField rho = X(pot, state.geo);
    const double mass = integrate(rho);
    if (!(mass > 0.0) || !rho.all_finite())
      throw std::runtime_error("deform_constrained: constraint produced a non-positive or non-finite density");
    DeformConfig cfg = cfg_template;
    cfg.rho = rho;
    cfg.boundary = cfg_template.boundary.scaled(mass / vol, g);
    DeformResult inner = deform(state, cfg);
    if (!inner.converged)
      throw std::runtime_error("deform_constrained: inner iteration did not converge at outer step " +
                               std::to_string(N));
    const double change = N > 1 ? sup_diff(rho, rho_prev) : INFINITY;
    out.outer_history.push_back(change);
    out.inner = inner;
    out.rho = rho;
    out.sigma = std::sqrt(vol / mass);
    out.outer_iterations = N;
    out.target = cfg.boundary;
    pot = inner.pot;
    rho_prev = rho;
    if (change < outer_tol) {
      out.fixed_point_residual = sup_diff(rho, X(pot, state.geo));
      return out;
    }
    if (N > 2 && !(change < 1e3)) break;
  }
  std::ostringstream msg;
  msg << std::setprecision(6) << "deform_constrained: outer iteration diverged after " << out.outer_iterations
      << " steps (last change " << (out.outer_history.empty() ? 0.0 : out.outer_history.back()) << ")";
  throw std::runtime_error(msg.str());
}

LinearizationCheck linearization_certificate(const BaseState& state, const DiffeoPotentials& direction, double step) {
  auto scaled = [&](double s) {
    DiffeoPotentials p = direction;
    p.eta *= s;
    p.phi *= s;
    p.eta_y_bot *= s;
    p.eta_y_top *= s;
    return p;
  };
  const GridSpec& g = state.grid();
  const ScalarField plus = composed_operator(scaled(step), state);
  const ScalarField minus = composed_operator(scaled(-step), state);
  LinearizationCheck out;
  out.fd = (1.0 / (2.0 * step)) * (plus - minus);

  ScalarField w = partial_s(state.geo, direction.phi);
  const ScalarField ey = eta_y(direction);
  for (int j = 0; j < g.ny; ++j) w.values().col(j) -= state.geo.dpsi0[j] * ey.values().col(j);
  out.linear = state.op.apply(w);
  if (!state.G0.empty()) {
    const MapFields mf = map_fields(direction, false);
    for (int j = 0; j < g.ny; ++j) {
      const double y = g.y(j), c = state.geo.psi0[j], hd = 1e-5 * (1.0 + std::abs(y));
      double gy = 0.0;
      for (const auto& t : state.G0.terms) gy += (t.weight(y + hd) - t.weight(y - hd)) / (2.0 * hd) * t.theta.eval(c);
      out.linear.values().col(j) += gy * mf.v2.values().col(j);
    }
  }
  const Eigen::ArrayXXd diff = (out.fd.values() - out.linear.values()).middleCols(1, g.ny - 2);
  const double scale = out.linear.values().middleCols(1, g.ny - 2).abs().maxCoeff();
  out.rel_error = diff.abs().maxCoeff() / scale;
  return out;
}

}  // namespace sdeform
