#include "steady_deform/streamline.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace sdeform {

StreamGeometry StreamGeometry::make(const GridSpec& grid, const Eigen::ArrayXd& psi0, const Eigen::ArrayXd& dpsi0) {
  grid.validate();
  if (psi0.size() != grid.ny || dpsi0.size() != grid.ny)
    throw std::invalid_argument("StreamGeometry: psi0 and dpsi0 must have ny entries");
  Eigen::Index jmin;
  const double smallest = dpsi0.abs().minCoeff(&jmin);
  const bool sign_change = dpsi0.maxCoeff() > 0.0 && dpsi0.minCoeff() < 0.0;
  if (!(smallest > 0.0) || sign_change) {
    std::ostringstream msg;
    msg << std::setprecision(6) << "stagnation: psi0' vanishes or changes sign near y = " << grid.y(static_cast<int>(jmin))
        << " (non-stagnation hypothesis fails)";
    throw std::invalid_argument(msg.str());
  }
  StreamGeometry geo;
  geo.grid = grid;
  geo.psi0 = psi0;
  geo.dpsi0 = dpsi0;
  geo.mu = Profile(psi0, grid.lx / dpsi0.abs());
  return geo;
}

double StreamGeometry::y_of(double c) const {
  Profile inv(psi0, grid.ys());
  return inv.eval(c, 0);
}

double travel_time(const StreamGeometry& geo, double c) {
  const double lo = std::min(geo.psi0[0], geo.psi0[geo.grid.ny - 1]);
  const double hi = std::max(geo.psi0[0], geo.psi0[geo.grid.ny - 1]);
  const double slack = 1e-12 * (hi - lo);
  if (c < lo - slack || c > hi + slack) {
    std::ostringstream msg;
    msg << std::setprecision(17) << "travel_time: c = " << c << " is not a streamline value of the base";
    throw std::out_of_range(msg.str());
  }
  return geo.mu.eval(c, 0);
}

ScalarField partial_s(const StreamGeometry& geo, const ScalarField& f) {
  ScalarField fx = derive(f, 1, 0);
  for (int j = 0; j < geo.grid.ny; ++j) fx.values().col(j) *= -geo.dpsi0[j];
  return fx;
}

ScalarField partial_psi0(const StreamGeometry& geo, const ScalarField& f) {
  ScalarField fy = derive(f, 0, 1);
  for (int j = 0; j < geo.grid.ny; ++j) fy.values().col(j) /= geo.dpsi0[j];
  return fy;
}

Profile project(const StreamGeometry& geo, const ScalarField& f) { return Profile(geo.psi0, x_average(f)); }

ScalarField deviation(const StreamGeometry& geo, const ScalarField& f) {
  return f - ScalarField::from_y(geo.grid, x_average(f));
}

ScalarField recover_phi(const StreamGeometry& geo, const ScalarField& Phi, double tol_avg) {
  const GridSpec& g = geo.grid;
  Eigen::ArrayXXcd spec = spectrum_x(Phi.values());
  // unit floor: a field of pure roundoff has no meaningful relative scale
  const double scale = std::max(Phi.max_abs(), 1.0);
  for (int j = 0; j < g.ny; ++j) {
    const double avg = std::abs(spec(0, j)) / g.nx;
    if (avg > tol_avg * scale) {
      std::ostringstream msg;
      msg << std::setprecision(6) << "recover_phi: streamline average " << avg << " at y = " << g.y(j)
          << " is not zero; the field is not a streamline derivative";
      throw std::runtime_error(msg.str());
    }
  }
  spec.row(0).setZero();
  spec.row(g.kmax()).setZero();
  for (int k = 1; k < g.kmax(); ++k)
    for (int j = 0; j < g.ny; ++j)
      spec(k, j) /= std::complex<double>(0.0, -geo.dpsi0[j] * g.wavenumber(k));
  return ScalarField(g, from_spectrum_x(spec, g.nx));
}

std::vector<double> angle(const StreamGeometry& geo, const std::vector<std::pair<double, double>>& pts) {
  std::vector<double> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(2.0 * kPi * p.first / geo.grid.lx);
  return out;
}

CurvaturePoint curvature_at(double px, double py, double hxx, double hxy, double hyy) {
  const double g2 = px * px + py * py;
  const double g = std::sqrt(g2);
  const double tht = (py * py * hxx - 2.0 * px * py * hxy + px * px * hyy) / g2;
  const double nhn = (px * px * hxx + 2.0 * px * py * hxy + py * py * hyy) / g2;
  const double kappa = tht / g;
  return {kappa, nhn - (hxx + hyy - g * kappa)};
}

CurvatureResult curvature_identities(const ScalarField& psi, double stagnation_tol) {
  const GridSpec& g = psi.grid();
  ScalarField px = derive(psi, 1, 0), py = derive(psi, 0, 1);
  ScalarField hxx = derive(psi, 2, 0), hxy = derive(psi, 1, 1), hyy = derive(psi, 0, 2);
  CurvatureResult res{ScalarField(g), ScalarField(g), {}};
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (std::hypot(px(i, j), py(i, j)) < stagnation_tol) {
        res.flagged.emplace_back(i, j);
        continue;
      }
      CurvaturePoint c = curvature_at(px(i, j), py(i, j), hxx(i, j), hxy(i, j), hyy(i, j));
      res.kappa(i, j) = c.kappa;
      res.defect(i, j) = c.defect;
    }
  return res;
}

namespace {

std::vector<double> periodic_derivative(const std::vector<double>& v, double period) {
  const int n = static_cast<int>(v.size());
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> spec(n);
  fft.fwd(spec.data(), v.data(), n);
  for (int k = 0; k <= n / 2; ++k) {
    const double kk = 2.0 * kPi * k / period;
    spec[k] *= (2 * k == n) ? std::complex<double>(0.0) : std::complex<double>(0.0, kk);
  }
  for (int k = n / 2 + 1; k < n; ++k) spec[k] = std::conj(spec[n - k]);
  std::vector<double> out(n);
  fft.inv(out.data(), spec.data(), n);
  return out;
}

// Root of fn on [a, b] given a sign change, by safeguarded secant steps.
double bracketed_root(const std::function<double(double)>& fn, double a, double b, double fa, double fb) {
  for (int it = 0; it < 200; ++it) {
    double m = b - fb * (b - a) / (fb - fa);
    if (!(m > std::min(a, b) && m < std::max(a, b))) m = 0.5 * (a + b);
    const double fm = fn(m);
    if (fm == 0.0 || std::abs(b - a) < 1e-15 * std::max(1.0, std::abs(m))) return m;
    if ((fm < 0.0) == (fa < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
      fb = fm;
    }
    // fall back to bisection when one end stalls
    if (it % 3 == 2) {
      const double mid = 0.5 * (a + b);
      const double fmid = fn(mid);
      if ((fmid < 0.0) == (fa < 0.0)) {
        a = mid;
        fa = fmid;
      } else {
        b = mid;
        fb = fmid;
      }
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

Contour trace_channel_contour(const FieldInterpolant& psi, double c, int samples) {
  const GridSpec& g = psi.grid();
  Contour out;
  out.periodic_graph = true;
  out.lx = g.lx;
  out.x.resize(samples);
  out.y.resize(samples);
  for (int s = 0; s < samples; ++s) {
    const double x = s * g.lx / samples;
    auto fn = [&](double y) { return psi(x, y) - c; };
    double ya = g.y(0), fa = fn(ya);
    bool found = fa == 0.0;
    double root = ya;
    for (int j = 1; j < g.ny && !found; ++j) {
      const double yb = g.y(j), fb = fn(yb);
      if (fb == 0.0) {
        root = yb;
        found = true;
      } else if ((fa < 0.0) != (fb < 0.0)) {
        root = bracketed_root(fn, ya, yb, fa, fb);
        found = true;
      }
      ya = yb;
      fa = fb;
    }
    if (!found) {
      std::ostringstream msg;
      msg << std::setprecision(6) << "level set psi = " << c << " not found above x = " << x;
      throw std::runtime_error(msg.str());
    }
    out.x[s] = x;
    out.y[s] = root;
  }
  return out;
}

Contour trace_star_contour(const std::function<double(double, double)>& psi, double c, double cx, double cy,
                           double r_lo, double r_hi, int samples) {
  Contour out;
  out.periodic_graph = false;
  out.x.resize(samples);
  out.y.resize(samples);
  for (int s = 0; s < samples; ++s) {
    const double th = 2.0 * kPi * s / samples;
    const double ex = std::cos(th), ey = std::sin(th);
    auto fn = [&](double r) { return psi(cx + r * ex, cy + r * ey) - c; };
    const double fa = fn(r_lo), fb = fn(r_hi);
    if ((fa < 0.0) == (fb < 0.0)) throw std::runtime_error("trace_star_contour: level set not bracketed on a ray");
    const double r = bracketed_root(fn, r_lo, r_hi, fa, fb);
    out.x[s] = cx + r * ex;
    out.y[s] = cy + r * ey;
  }
  // store the center in lx slot-free form: radii are recovered from the points
  out.lx = 0.0;
  out.center_x = cx;
  out.center_y = cy;
  return out;
}

namespace {

// Arc-length element per unit parameter at each contour point.
std::vector<double> arc_weights(const Contour& ct, double& dparam) {
  const int n = static_cast<int>(ct.x.size());
  std::vector<double> w(n);
  if (ct.periodic_graph) {
    dparam = ct.lx / n;
    std::vector<double> dy = periodic_derivative(ct.y, ct.lx);
    for (int s = 0; s < n; ++s) w[s] = std::sqrt(1.0 + dy[s] * dy[s]);
  } else {
    dparam = 2.0 * kPi / n;
    std::vector<double> r(n);
    for (int s = 0; s < n; ++s) r[s] = std::hypot(ct.x[s] - ct.center_x, ct.y[s] - ct.center_y);
    std::vector<double> dr = periodic_derivative(r, 2.0 * kPi);
    for (int s = 0; s < n; ++s) w[s] = std::sqrt(r[s] * r[s] + dr[s] * dr[s]);
  }
  return w;
}

}  // namespace

double streamline_integral(const Contour& contour, const LevelSetEvaluator& eval) {
  double dparam = 0.0;
  std::vector<double> w = arc_weights(contour, dparam);
  double sum = 0.0;
  for (std::size_t s = 0; s < w.size(); ++s) {
    LevelSetSample q = eval(contour.x[s], contour.y[s]);
    sum += q.f / std::hypot(q.px, q.py) * w[s];
  }
  return sum * dparam;
}

double streamline_integral_derivative(const Contour& contour, const LevelSetEvaluator& eval) {
  double dparam = 0.0;
  std::vector<double> w = arc_weights(contour, dparam);
  double sum = 0.0;
  for (std::size_t s = 0; s < w.size(); ++s) {
    LevelSetSample q = eval(contour.x[s], contour.y[s]);
    const double g2 = q.px * q.px + q.py * q.py;
    const double g = std::sqrt(g2);
    if (g < 1e-12) throw std::runtime_error("streamline_integral_derivative: stagnation on the level set");
    const CurvaturePoint cp = curvature_at(q.px, q.py, q.hxx, q.hxy, q.hyy);
    const double omega = q.hxx + q.hyy;
    const double integrand = (q.px * q.fx + q.py * q.fy - q.f * (omega - 2.0 * cp.kappa * g)) / g2;
    sum += integrand / g * w[s];
  }
  return sum * dparam;
}

namespace {

LevelSetEvaluator channel_evaluator(const FieldInterpolant& psi, const FieldInterpolant& f) {
  return [&psi, &f](double x, double y) {
    LevelSetSample q;
    q.px = psi.eval(x, y, 1, 0);
    q.py = psi.eval(x, y, 0, 1);
    q.hxx = psi.eval(x, y, 2, 0);
    q.hxy = psi.eval(x, y, 1, 1);
    q.hyy = psi.eval(x, y, 0, 2);
    q.f = f.eval(x, y, 0, 0);
    q.fx = f.eval(x, y, 1, 0);
    q.fy = f.eval(x, y, 0, 1);
    return q;
  };
}

}  // namespace

double streamline_integral_derivative(const ScalarField& psi, const ScalarField& f, double c, int samples) {
  require_same_grid(psi, f, "streamline_integral_derivative");
  FieldInterpolant ip(psi), iff(f);
  Contour ct = trace_channel_contour(ip, c, samples);
  return streamline_integral_derivative(ct, channel_evaluator(ip, iff));
}

double streamline_integral(const ScalarField& psi, const ScalarField& f, double c, int samples) {
  require_same_grid(psi, f, "streamline_integral");
  FieldInterpolant ip(psi), iff(f);
  Contour ct = trace_channel_contour(ip, c, samples);
  return streamline_integral(ct, channel_evaluator(ip, iff));
}

}  // namespace sdeform
