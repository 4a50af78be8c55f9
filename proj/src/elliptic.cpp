#include "steady_deform/elliptic.hpp"

#include <cmath>
#include <complex>
#include <iomanip>
#include <sstream>

namespace sdeform {

SeparableOperator SeparableOperator::laplacian(const GridSpec& grid) {
  return laplacian(grid, Eigen::ArrayXd::Zero(grid.ny));
}

SeparableOperator SeparableOperator::laplacian(const GridSpec& grid, const Eigen::ArrayXd& lambda) {
  SeparableOperator op;
  op.grid = grid;
  op.a22 = Eigen::ArrayXd::Ones(grid.ny);
  op.a11 = Eigen::ArrayXd::Ones(grid.ny);
  op.b2 = Eigen::ArrayXd::Zero(grid.ny);
  op.lambda = lambda;
  op.validate();
  return op;
}

void SeparableOperator::validate() const {
  grid.validate();
  const Eigen::Index n = grid.ny;
  if (a22.size() != n || a11.size() != n || b2.size() != n || lambda.size() != n)
    throw std::invalid_argument("SeparableOperator: coefficient arrays must have ny entries");
  if (!a22.allFinite() || !a11.allFinite() || !b2.allFinite() || !lambda.allFinite())
    throw std::invalid_argument("SeparableOperator: non-finite coefficient");
  if (a22.minCoeff() <= 0.0 || a11.minCoeff() <= 0.0)
    throw std::invalid_argument("SeparableOperator: diffusion coefficients must be positive");
}

ScalarField SeparableOperator::apply(const ScalarField& u) const {
  ScalarField uyy = derive(u, 0, 2), uy = derive(u, 0, 1), uxx = derive(u, 2, 0);
  ScalarField out(u.grid());
  for (int j = 0; j < grid.ny; ++j)
    out.values().col(j) = a22[j] * uyy.values().col(j) + a11[j] * uxx.values().col(j) + b2[j] * uy.values().col(j) -
                          lambda[j] * u.values().col(j);
  return out;
}

Eigen::ArrayXd SeparableOperator::apply_1d(const Eigen::ArrayXd& u) const {
  const double h = grid.hy();
  return a22 * dy2(u, h) + b2 * dy1(u, h) - lambda * u;
}

namespace {

Tridiagonal mode_matrix(const SeparableOperator& op, int k) {
  const int m = op.grid.ny - 2;
  const double h = op.grid.hy();
  const double kk = op.grid.wavenumber(k) * op.grid.wavenumber(k);
  Eigen::ArrayXd lo(m), di(m), up(m);
  for (int r = 0; r < m; ++r) {
    const int j = r + 1;
    lo[r] = op.a22[j] / (h * h) - op.b2[j] / (2.0 * h);
    di[r] = -2.0 * op.a22[j] / (h * h) - op.a11[j] * kk - op.lambda[j];
    up[r] = op.a22[j] / (h * h) + op.b2[j] / (2.0 * h);
  }
  return Tridiagonal(lo, di, up);
}

std::string singular_message(int k, double value) {
  std::ostringstream msg;
  msg << std::setprecision(6) << "singular mode: the Dirichlet problem for wavenumber k = " << k
      << " is not uniquely solvable (eigenvalue estimate " << value << ")";
  return msg.str();
}

// Rejects a mode whose eigenvalue nearest zero is within the truncation error of
// the discrete spectrum.
void check_mode(const SeparableOperator& op, int k, const Tridiagonal& tri) {
  if (tri.relative_min_pivot() < 1e-12) throw SingularModeError(k, singular_message(k, 0.0));
  auto [d, e] = symmetrized_mode(op, k);
  const int m = static_cast<int>(d.size());
  Eigen::ArrayXd lo(m), up(m);
  lo[0] = 0.0;
  up[m - 1] = 0.0;
  for (int r = 0; r + 1 < m; ++r) {
    lo[r + 1] = e[r];
    up[r] = e[r];
  }
  Tridiagonal sym(lo, d, up);
  if (sym.relative_min_pivot() < 1e-12) throw SingularModeError(k, singular_message(k, 0.0));
  Eigen::VectorXd x(m);
  for (int r = 0; r < m; ++r) x[r] = std::sin(kPi * (r + 1) / (m + 1)) + 0.1 * std::cos(0.7 * r);
  x.normalize();
  for (int it = 0; it < 60; ++it) {
    Eigen::VectorXd y = x;
    sym.solve_in_place(y);
    x = y / y.norm();
  }
  const double mu = x.dot(sym.apply(x));
  const double h = op.grid.hy();
  double nu = 0.0;
  for (int r = -1; r < m; ++r) {
    const double a = r >= 0 ? x[r] : 0.0;
    const double b = r + 1 < m ? x[r + 1] : 0.0;
    nu += op.a22[r + 1] * (b - a) * (b - a) / (h * h);
  }
  if (std::abs(mu) <= nu * nu * h * h / 6.0) throw SingularModeError(k, singular_message(k, -mu));
}

}  // namespace

std::pair<Eigen::ArrayXd, Eigen::ArrayXd> symmetrized_mode(const SeparableOperator& op, int k) {
  Tridiagonal t = mode_matrix(op, k);
  const int m = t.size();
  Eigen::ArrayXd d = -t.diag();
  Eigen::ArrayXd e(std::max(m - 1, 0));
  for (int r = 0; r + 1 < m; ++r) {
    const double prod = t.upper()[r] * t.lower()[r + 1];
    if (!(prod > 0.0)) throw std::invalid_argument("symmetrized_mode: drift too strong for the grid spacing");
    e[r] = -std::sqrt(prod);
  }
  return {d, e};
}

DirichletSolver::DirichletSolver(const SeparableOperator& op) : op_(op) {
  op_.validate();
  for (int k = 0; k <= op_.grid.kmax(); ++k) {
    Tridiagonal tri = mode_matrix(op_, k);
    check_mode(op_, k, tri);
    modes_.push_back(std::move(tri));
  }
}

ScalarField DirichletSolver::solve(const ScalarField& rhs, const Eigen::ArrayXd& g_bot,
                                   const Eigen::ArrayXd& g_top) const {
  const GridSpec& g = op_.grid;
  if (!(rhs.grid() == g)) throw std::invalid_argument("solve_dirichlet: rhs grid differs from operator grid");
  if (g_bot.size() != g.nx || g_top.size() != g.nx)
    throw std::invalid_argument("solve_dirichlet: wall data must have nx entries");
  const int ny = g.ny, m = ny - 2;
  Eigen::ArrayXXd walls(g.nx, 2);
  walls.col(0) = g_bot;
  walls.col(1) = g_top;
  Eigen::ArrayXXcd wall_spec = spectrum_x(walls);
  Eigen::ArrayXXcd spec = spectrum_x(rhs.values());
  Eigen::ArrayXXcd out(spec.rows(), ny);
  std::vector<std::complex<double>> col(m);
  for (int k = 0; k <= g.kmax(); ++k) {
    const Tridiagonal& tri = modes_[k];
    for (int r = 0; r < m; ++r) col[r] = spec(k, r + 1);
    col[0] -= tri.lower()[0] * wall_spec(k, 0);
    col[m - 1] -= tri.upper()[m - 1] * wall_spec(k, 1);
    tri.solve_in_place(col);
    out(k, 0) = wall_spec(k, 0);
    out(k, ny - 1) = wall_spec(k, 1);
    for (int r = 0; r < m; ++r) out(k, r + 1) = col[r];
  }
  return ScalarField(g, from_spectrum_x(out, g.nx));
}

Eigen::ArrayXd DirichletSolver::solve_mode0(const Eigen::ArrayXd& rhs, double u_lo, double u_hi) const {
  const int ny = op_.grid.ny, m = ny - 2;
  const Tridiagonal& tri = modes_[0];
  Eigen::VectorXd col = rhs.segment(1, m).matrix();
  col[0] -= tri.lower()[0] * u_lo;
  col[m - 1] -= tri.upper()[m - 1] * u_hi;
  tri.solve_in_place(col);
  Eigen::ArrayXd u(ny);
  u[0] = u_lo;
  u[ny - 1] = u_hi;
  u.segment(1, m) = col.array();
  return u;
}

ScalarField solve_dirichlet(const SeparableOperator& op, const ScalarField& rhs, const Eigen::ArrayXd& g_bot,
                            const Eigen::ArrayXd& g_top) {
  return DirichletSolver(op).solve(rhs, g_bot, g_top);
}

double neumann_compatibility_defect(const ScalarField& rhs, double flux_bot, double flux_top) {
  return integrate(rhs) - rhs.grid().lx * (flux_bot + flux_top);
}

ScalarField solve_neumann(const ScalarField& rhs, double flux_bot, double flux_top) {
  const GridSpec& g = rhs.grid();
  const double defect = neumann_compatibility_defect(rhs, flux_bot, flux_top);
  const double scale = g.volume() * rhs.max_abs() + g.lx * (std::abs(flux_bot) + std::abs(flux_top));
  if (std::abs(defect) > 1e-10 * scale || !std::isfinite(defect)) {
    std::ostringstream msg;
    msg << std::setprecision(17) << "solve_neumann: compatibility violated, defect = " << defect;
    throw std::runtime_error(msg.str());
  }
  const int ny = g.ny;
  const double h = g.hy();
  const double q_bot = -flux_bot, q_top = flux_top;  // d/dy at each wall
  Eigen::ArrayXXcd spec = spectrum_x(rhs.values());
  Eigen::ArrayXXcd out(spec.rows(), ny);
  std::vector<std::complex<double>> col(ny);
  for (int k = 0; k <= g.kmax(); ++k) {
    const double kk = g.wavenumber(k) * g.wavenumber(k);
    for (int j = 0; j < ny; ++j) col[j] = spec(k, j);
    if (k == 0) {
      col[0] += 2.0 * q_bot / h * g.nx;
      col[ny - 1] -= 2.0 * q_top / h * g.nx;
      // pin u_0 = 0 and drop the bottom row; compatibility makes it redundant
      const int m = ny - 1;
      Eigen::ArrayXd lo = Eigen::ArrayXd::Constant(m, 1.0 / (h * h));
      Eigen::ArrayXd di = Eigen::ArrayXd::Constant(m, -2.0 / (h * h));
      Eigen::ArrayXd up = Eigen::ArrayXd::Constant(m, 1.0 / (h * h));
      lo[0] = 0.0;
      lo[m - 1] = 2.0 / (h * h);
      up[m - 1] = 0.0;
      Tridiagonal tri(lo, di, up);
      std::vector<std::complex<double>> sub(col.begin() + 1, col.end());
      tri.solve_in_place(sub);
      col[0] = 0.0;
      for (int j = 1; j < ny; ++j) col[j] = sub[j - 1];
      const Eigen::ArrayXd w = trapezoid_weights(g);
      std::complex<double> mean = 0.0;
      for (int j = 0; j < ny; ++j) mean += w[j] * col[j];
      mean /= (g.y_hi - g.y_lo);
      for (int j = 0; j < ny; ++j) col[j] -= mean;
    } else {
      Eigen::ArrayXd lo = Eigen::ArrayXd::Constant(ny, 1.0 / (h * h));
      Eigen::ArrayXd di = Eigen::ArrayXd::Constant(ny, -2.0 / (h * h) - kk);
      Eigen::ArrayXd up = Eigen::ArrayXd::Constant(ny, 1.0 / (h * h));
      lo[0] = 0.0;
      up[0] = 2.0 / (h * h);
      lo[ny - 1] = 2.0 / (h * h);
      up[ny - 1] = 0.0;
      Tridiagonal tri(lo, di, up);
      tri.solve_in_place(col);
    }
    for (int j = 0; j < ny; ++j) out(k, j) = col[j];
  }
  return ScalarField(g, from_spectrum_x(out, g.nx));
}

std::pair<Eigen::ArrayXd, Eigen::ArrayXd> neumann_wall_flux(const ScalarField& u, const ScalarField& rhs) {
  require_same_grid(u, rhs, "neumann_wall_flux");
  const GridSpec& g = u.grid();
  const int n = g.ny;
  const double h = g.hy();
  ScalarField uxx = derive(u, 2, 0);
  const auto& v = u.values();
  Eigen::ArrayXd q_bot = (v.col(1) - v.col(0)) / h - 0.5 * h * (rhs.values().col(0) - uxx.values().col(0));
  Eigen::ArrayXd q_top =
      (v.col(n - 1) - v.col(n - 2)) / h + 0.5 * h * (rhs.values().col(n - 1) - uxx.values().col(n - 1));
  return {-q_bot, q_top};
}

ScalarField neumann_laplacian(const ScalarField& u, double flux_bot, double flux_top) {
  const GridSpec& g = u.grid();
  const int n = g.ny;
  const double h = g.hy();
  ScalarField out = derive(u, 2, 0);
  const auto& v = u.values();
  auto& o = out.values();
  for (int j = 1; j + 1 < n; ++j) o.col(j) += (v.col(j + 1) - 2.0 * v.col(j) + v.col(j - 1)) / (h * h);
  o.col(0) += (2.0 * v.col(1) - 2.0 * v.col(0) + 2.0 * h * flux_bot) / (h * h);
  o.col(n - 1) += (2.0 * v.col(n - 2) - 2.0 * v.col(n - 1) + 2.0 * h * flux_top) / (h * h);
  return out;
}

Eigen::ArrayXd solve_profile_bvp(const SeparableOperator& op, const Eigen::ArrayXd& rhs, double u_lo, double u_hi) {
  op.validate();
  const int ny = op.grid.ny, m = ny - 2;
  if (rhs.size() != ny) throw std::invalid_argument("solve_profile_bvp: rhs must have ny entries");
  Tridiagonal tri = mode_matrix(op, 0);
  if (tri.relative_min_pivot() < 1e-12) throw SingularModeError(0, singular_message(0, 0.0));
  Eigen::VectorXd col = rhs.segment(1, m).matrix();
  col[0] -= tri.lower()[0] * u_lo;
  col[m - 1] -= tri.upper()[m - 1] * u_hi;
  tri.solve_in_place(col);
  Eigen::ArrayXd u(ny);
  u[0] = u_lo;
  u[ny - 1] = u_hi;
  u.segment(1, m) = col.array();
  return u;
}

double rayleigh_min(const SeparableOperator& op, int max_iters) {
  op.validate();
  double best = INFINITY;
  for (int k = 0; k <= op.grid.kmax(); ++k) {
    auto [d, e] = symmetrized_mode(op, k);
    const int m = static_cast<int>(d.size());
    double lower_bound = INFINITY;
    for (int r = 0; r < m; ++r) {
      double radius = 0.0;
      if (r > 0) radius += std::abs(e[r - 1]);
      if (r + 1 < m) radius += std::abs(e[r]);
      lower_bound = std::min(lower_bound, d[r] - radius);
    }
    const double shift = lower_bound - 1.0;
    Eigen::ArrayXd lo(m), up(m);
    lo[0] = 0.0;
    up[m - 1] = 0.0;
    for (int r = 0; r + 1 < m; ++r) {
      lo[r + 1] = e[r];
      up[r] = e[r];
    }
    Tridiagonal plain(lo, d, up);
    Tridiagonal shifted(lo, d - shift, up);
    Eigen::VectorXd x(m);
    for (int r = 0; r < m; ++r) x[r] = std::sin(kPi * (r + 1) / (m + 1));
    x.normalize();
    double rq = x.dot(plain.apply(x));
    bool converged = false;
    for (int it = 0; it < max_iters; ++it) {
      Eigen::VectorXd y = x;
      shifted.solve_in_place(y);
      x = y / y.norm();
      const double next = x.dot(plain.apply(x));
      const double change = std::abs(next - rq);
      rq = next;
      if (change <= 1e-14 * std::max(1.0, std::abs(rq))) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      std::ostringstream msg;
      msg << std::setprecision(17) << "rayleigh_min: inverse iteration did not converge for k = " << k
          << " (last Rayleigh quotient " << rq << ")";
      throw std::runtime_error(msg.str());
    }
    best = std::min(best, rq);
  }
  return best;
}

double quadratic_form(const SeparableOperator& op, const ScalarField& u) { return integrate(u * op.apply(u)); }

}  // namespace sdeform
