#include "steady_deform/models.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace sdeform {

std::string to_string(Model m) {
  switch (m) {
    case Model::euler:
      return "euler";
    case Model::boussinesq:
      return "boussinesq";
    default:
      return "gs";
  }
}

Model model_from_string(const std::string& name) {
  if (name == "euler") return Model::euler;
  if (name == "boussinesq") return Model::boussinesq;
  if (name == "gs" || name == "grad-shafranov") return Model::gs;
  throw std::invalid_argument("unknown model '" + name + "' (expected euler, boussinesq or gs)");
}

namespace {

void require_no_stagnation(const GridSpec& grid, const Eigen::ArrayXd& v, const char* what) {
  for (int j = 0; j < grid.ny; ++j) {
    const bool zero = v[j] == 0.0;
    const bool flip = j > 0 && ((v[j] > 0.0) != (v[j - 1] > 0.0));
    if (zero || flip) {
      std::ostringstream msg;
      msg << std::setprecision(6) << "stagnation: " << what << " vanishes near y = " << grid.y(j)
          << " (non-stagnation hypothesis fails)";
      throw std::invalid_argument(msg.str());
    }
  }
}

// L0,h psi0 on the nodes with the solver stencils.
Eigen::ArrayXd base_operator_1d(const GridSpec& grid, const Eigen::ArrayXd& b2, const Eigen::ArrayXd& psi0) {
  const double h = grid.hy();
  return dy2(psi0, h) + b2 * dy1(psi0, h);
}

BaseState finish_base(Model model, const GridSpec& grid, const Eigen::ArrayXd& psi0, const Eigen::ArrayXd& b2,
                      Profile F0, SeparableG G0) {
  BaseState s;
  s.model = model;
  const Eigen::ArrayXd dpsi0 = dy1(psi0, grid.hy());
  require_no_stagnation(grid, dpsi0, "psi0'");
  s.geo = StreamGeometry::make(grid, psi0, dpsi0);
  s.c_bot = psi0[0];
  s.c_top = psi0[grid.ny - 1];
  if (s.c_bot == s.c_top) throw std::invalid_argument("base state: wall values of psi0 coincide");
  s.F0 = std::move(F0);
  s.G0 = std::move(G0);
  Eigen::ArrayXd lambda(grid.ny);
  for (int j = 0; j < grid.ny; ++j) lambda[j] = s.F0.eval(psi0[j], 1) + s.G0.eval(grid.y(j), psi0[j], 1);
  s.op = SeparableOperator::laplacian(grid, lambda);
  s.op.b2 = b2;
  s.op.validate();
  return s;
}

}  // namespace

Eigen::ArrayXd base_residual(const BaseState& state) {
  const GridSpec& g = state.grid();
  Eigen::ArrayXd r = base_operator_1d(g, state.op.b2, state.geo.psi0);
  for (int j = 0; j < g.ny; ++j) {
    const double c = state.geo.psi0[j];
    r[j] -= state.F0.eval(c, 0) + state.G0.eval(g.y(j), c, 0);
  }
  return r;
}

BaseState build_euler_base(const GridSpec& grid, const Eigen::ArrayXd& v0) {
  grid.validate();
  if (v0.size() != grid.ny) throw std::invalid_argument("build_euler_base: v0 must have ny entries");
  require_no_stagnation(grid, v0, "v0");
  Profile vp(grid.ys(), v0);
  return build_euler_base_from_psi(grid, -vp.antiderivative().values());
}

BaseState build_euler_base_from_psi(const GridSpec& grid, const Eigen::ArrayXd& psi0) {
  grid.validate();
  const Eigen::ArrayXd b2 = Eigen::ArrayXd::Zero(grid.ny);
  const Eigen::ArrayXd d2 = base_operator_1d(grid, b2, psi0);
  require_no_stagnation(grid, dy1(psi0, grid.hy()), "psi0'");
  return finish_base(Model::euler, grid, psi0, b2, Profile(psi0, d2), SeparableG{});
}

BaseState build_boussinesq_base(const GridSpec& grid, const Eigen::ArrayXd& psi0, const Profile& Theta0) {
  grid.validate();
  const Eigen::ArrayXd b2 = Eigen::ArrayXd::Zero(grid.ny);
  require_no_stagnation(grid, dy1(psi0, grid.hy()), "psi0'");
  const Eigen::ArrayXd lap = base_operator_1d(grid, b2, psi0);
  Eigen::ArrayXd gp(grid.ny);
  for (int j = 0; j < grid.ny; ++j) gp[j] = lap[j] - grid.y(j) * Theta0.eval(psi0[j], 1);
  SeparableG G0;
  G0.terms.push_back({[](double y) { return y; }, Theta0.derivative()});
  BaseState s = finish_base(Model::boussinesq, grid, psi0, b2, Profile(psi0, gp), std::move(G0));
  s.Theta0 = Theta0;
  return s;
}

BaseState build_gs_base(const GridSpec& grid, const Eigen::ArrayXd& psi0, const Profile& C0) {
  grid.validate();
  if (grid.y_lo <= 0.0) throw std::invalid_argument("build_gs_base: radial domain must have r > 0");
  Eigen::ArrayXd b2(grid.ny);
  for (int j = 0; j < grid.ny; ++j) b2[j] = -1.0 / grid.y(j);
  require_no_stagnation(grid, dy1(psi0, grid.hy()), "psi0'");
  const Eigen::ArrayXd l0 = base_operator_1d(grid, b2, psi0);
  Eigen::ArrayXd cc(grid.ny), pip(grid.ny);
  for (int j = 0; j < grid.ny; ++j) {
    const double r = grid.y(j);
    cc[j] = C0.eval(psi0[j], 0) * C0.eval(psi0[j], 1);
    pip[j] = (cc[j] - l0[j]) / (r * r);
  }
  Profile Pi0_prime(psi0, pip);
  SeparableG G0;
  G0.terms.push_back({[](double r) { return -r * r; }, Pi0_prime});
  BaseState s = finish_base(Model::gs, grid, psi0, b2, Profile(psi0, cc), std::move(G0));
  s.Pi0_prime = Pi0_prime;
  s.C0 = C0;
  s.drift = [](double r) { return -1.0 / r; };
  return s;
}

Eigen::ArrayXd solve_gs_radial(const GridSpec& grid, const Profile& Pi0_prime, const Profile& C0, double psi_lo,
                               double psi_hi) {
  grid.validate();
  SeparableOperator op = SeparableOperator::laplacian(grid);
  for (int j = 0; j < grid.ny; ++j) op.b2[j] = -1.0 / grid.y(j);
  Eigen::ArrayXd psi(grid.ny);
  for (int j = 0; j < grid.ny; ++j) psi[j] = psi_lo + (psi_hi - psi_lo) * (grid.y(j) - grid.y_lo) / (grid.y_hi - grid.y_lo);

  double res_norm = INFINITY;
  for (int it = 0; it < 50; ++it) {
    Eigen::ArrayXd rhs(grid.ny), dn(grid.ny);
    for (int j = 0; j < grid.ny; ++j) {
      const double r = grid.y(j), c = psi[j];
      const double C = C0.eval(c, 0), C1 = C0.eval(c, 1), C2 = C0.eval(c, 2);
      rhs[j] = C * C1 - r * r * Pi0_prime.eval(c, 0);
      dn[j] = C1 * C1 + C * C2 - r * r * Pi0_prime.eval(c, 1);
    }
    op.lambda.setZero();
    Eigen::ArrayXd res = op.apply_1d(psi) - rhs;
    res_norm = res.segment(1, grid.ny - 2).abs().maxCoeff();
    if (res_norm < 1e-10) return psi;
    op.lambda = dn;
    psi += solve_profile_bvp(op, -res, 0.0, 0.0);
  }
  std::ostringstream msg;
  msg << std::setprecision(6) << "solve_gs_radial: Newton did not converge in 50 steps (residual " << res_norm << ")";
  throw std::runtime_error(msg.str());
}

BaseState build_gs_base_from_profiles(const GridSpec& grid, const Profile& Pi0_prime, const Profile& C0,
                                      double psi_lo, double psi_hi) {
  Eigen::ArrayXd psi = solve_gs_radial(grid, Pi0_prime, C0, psi_lo, psi_hi);
  return build_gs_base(grid, psi, C0);
}

Profile reconstruct_swirl(const Profile& W, const Profile& C0) {
  const Eigen::ArrayXd& knots = W.knots();
  const double c_ref = W.c_min();
  const double c0_ref = C0.eval(c_ref, 0);
  const Profile integral = W.antiderivative();
  Eigen::ArrayXd out(knots.size());
  const double scale = c0_ref * c0_ref + integral.values().abs().maxCoeff();
  auto lost = [&](double c, double sq) {
    std::ostringstream msg;
    msg << std::setprecision(6) << "swirl reconstruction loses reality at c = " << c << " (C^2 = " << sq << ")";
    throw std::runtime_error(msg.str());
  };
  // C^2 must stay non-negative between the knots as well
  const Eigen::Index nk = knots.size();
  for (Eigen::Index k = 0; k + 1 < nk; ++k)
    for (int s = 1; s < 8; ++s) {
      const double c = knots[k] + (knots[k + 1] - knots[k]) * s / 8.0;
      // W is cubic on the segment, so three Gauss points integrate it exactly
      const double a = knots[k], half = 0.5 * (c - a), mid = 0.5 * (c + a), q = std::sqrt(0.6);
      const double seg = half * (5.0 * W.eval(mid - half * q) + 8.0 * W.eval(mid) + 5.0 * W.eval(mid + half * q)) / 9.0;
      const double sq = c0_ref * c0_ref + 2.0 * (integral.values()[k] + seg);
      if (sq < -1e-13 * scale) lost(c, sq);
    }
  for (Eigen::Index k = 0; k < nk; ++k) {
    double sq = c0_ref * c0_ref + 2.0 * integral.values()[k];
    if (sq < 0.0 && sq > -1e-13 * scale) sq = 0.0;
    if (sq < 0.0) lost(knots[k], sq);
    const double c0 = C0.eval(knots[k], 0);
    const double sign = c0 < 0.0 ? -1.0 : 1.0;
    out[k] = sign * std::sqrt(sq);
  }
  return Profile(knots, out, W.margin());
}

BoussinesqFields reconstruct_boussinesq_fields(const ScalarField& psi, const Profile& Theta, const Profile& G_prime) {
  const GridSpec& g = psi.grid();
  const Profile G = G_prime.antiderivative();
  BoussinesqFields out{compose(Theta, psi), compose(G, psi, 0)};
  for (int j = 0; j < g.ny; ++j)
    out.pressure.values().col(j) = -g.y(j) * out.theta.values().col(j) - out.pressure.values().col(j);
  return out;
}

double momentum_residual(const ScalarField& psi, const ScalarField& theta, const ScalarField& pressure) {
  require_same_grid(psi, theta, "momentum_residual");
  require_same_grid(psi, pressure, "momentum_residual");
  const ScalarField omega = derive(psi, 2, 0) + derive(psi, 0, 2);
  const ScalarField px = derive(psi, 1, 0), py = derive(psi, 0, 1);
  const ScalarField Px = derive(pressure, 1, 0), Py = derive(pressure, 0, 1);
  // u = grad_perp psi = (-psi_y, psi_x), so u_perp = (-u2, u1) = -grad psi.
  const Eigen::ArrayXXd r1 = -omega.values() * px.values() - Px.values();
  const Eigen::ArrayXXd r2 = -omega.values() * py.values() - Py.values() - theta.values();
  return std::max(r1.abs().maxCoeff(), r2.abs().maxCoeff());
}

GSSignReport gs_sign_report(const BaseState& state) {
  if (state.model != Model::gs) throw std::invalid_argument("gs_sign_report: base is not a Grad-Shafranov state");
  const GridSpec& g = state.grid();
  GSSignReport rep;
  rep.form_lambda.resize(g.ny);
  rep.form_pressure.resize(g.ny);
  double pi_min = INFINITY;
  for (int j = 0; j < g.ny; ++j) {
    const double r = g.y(j), c = state.geo.psi0[j];
    const double C = state.C0.eval(c, 0), C1 = state.C0.eval(c, 1), C2 = state.C0.eval(c, 2);
    const double ccp = C1 * C1 + C * C2;
    rep.form_lambda[j] = ccp - r * r * state.Pi0_prime.eval(c, 1);
    rep.form_pressure[j] = state.Pi0_prime.eval(c, 0) - ccp / (r * r);
    pi_min = std::min(pi_min, state.Pi0_prime.eval(c, 0));
  }
  rep.lambda_negative = rep.form_lambda.maxCoeff() < 0.0;
  rep.pressure_dominates = rep.form_pressure.minCoeff() > 0.0;
  rep.pi_nonnegative = pi_min >= -1e-10 * std::max(1.0, state.Pi0_prime.values().abs().maxCoeff());
  return rep;
}

ArnoldReport arnold_window(const BaseState& state) {
  ArnoldReport rep;
  SeparableOperator lap = state.op;
  lap.lambda.setZero();
  rep.lambda1 = rayleigh_min(lap);
  const Eigen::ArrayXd& psi0 = state.geo.psi0;
  Eigen::ArrayXd fp(psi0.size());
  for (Eigen::Index j = 0; j < psi0.size(); ++j) fp[j] = state.F0.eval(psi0[j], 1);
  rep.fprime_min = fp.minCoeff();
  rep.fprime_max = fp.maxCoeff();
  rep.inside = (rep.fprime_min > -rep.lambda1 && rep.fprime_max < 0.0) || rep.fprime_min > 0.0;
  return rep;
}

}  // namespace sdeform
