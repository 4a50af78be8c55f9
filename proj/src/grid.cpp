#include "steady_deform/grid.hpp"

#include "steady_deform/numerics.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace sdeform {

void GridSpec::validate() const {
  if (nx < 8 || nx % 2 != 0)
    throw std::invalid_argument("GridSpec: nx must be even and >= 8 (got " + std::to_string(nx) + ")");
  if (ny < 9) throw std::invalid_argument("GridSpec: ny must be >= 9 (got " + std::to_string(ny) + ")");
  if (!(y_lo < y_hi)) throw std::invalid_argument("GridSpec: y_lo must be below y_hi");
  if (!(lx > 0.0)) throw std::invalid_argument("GridSpec: lx must be positive");
}

Eigen::ArrayXd GridSpec::xs() const {
  Eigen::ArrayXd out(nx);
  for (int i = 0; i < nx; ++i) out[i] = x(i);
  return out;
}

Eigen::ArrayXd GridSpec::ys() const {
  Eigen::ArrayXd out(ny);
  for (int j = 0; j < ny; ++j) out[j] = y(j);
  return out;
}

ScalarField::ScalarField(const GridSpec& grid) : grid_(grid), values_(Eigen::ArrayXXd::Zero(grid.nx, grid.ny)) {
  grid_.validate();
}

ScalarField::ScalarField(const GridSpec& grid, Eigen::ArrayXXd values) : grid_(grid), values_(std::move(values)) {
  grid_.validate();
  if (values_.rows() != grid.nx || values_.cols() != grid.ny)
    throw std::invalid_argument("ScalarField: value array does not match grid");
}

ScalarField ScalarField::from_y(const GridSpec& grid, const Eigen::ArrayXd& g) {
  if (g.size() != grid.ny) throw std::invalid_argument("ScalarField::from_y: profile length mismatch");
  ScalarField out(grid);
  out.values_.rowwise() = g.transpose();
  return out;
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  require_same_grid(*this, o, "operator+=");
  values_ += o.values_;
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  require_same_grid(*this, o, "operator-=");
  values_ -= o.values_;
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  values_ *= s;
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

ScalarField operator*(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a, b, "operator*");
  return ScalarField(a.grid(), a.values() * b.values());
}

void require_same_grid(const ScalarField& a, const ScalarField& b, const char* where) {
  if (!(a.grid() == b.grid())) throw std::invalid_argument(std::string(where) + ": fields live on different grids");
}

Eigen::ArrayXXcd spectrum_x(const Eigen::ArrayXXd& values) {
  const int nx = static_cast<int>(values.rows());
  const int ny = static_cast<int>(values.cols());
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  Eigen::ArrayXXcd spec(nx / 2 + 1, ny);
  std::vector<std::complex<double>> buf(nx);
  for (int j = 0; j < ny; ++j) {
    fft.fwd(buf.data(), values.col(j).data(), nx);
    for (int k = 0; k <= nx / 2; ++k) spec(k, j) = buf[k];
  }
  return spec;
}

Eigen::ArrayXXd from_spectrum_x(const Eigen::ArrayXXcd& spec, int nx) {
  const int ny = static_cast<int>(spec.cols());
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  Eigen::ArrayXXd out(nx, ny);
  std::vector<std::complex<double>> buf(nx);
  std::vector<double> col(nx);
  for (int j = 0; j < ny; ++j) {
    for (int k = 0; k <= nx / 2; ++k) buf[k] = spec(k, j);
    // the real transform reads only the half spectrum; keep the rest consistent anyway
    for (int k = nx / 2 + 1; k < nx; ++k) buf[k] = std::conj(buf[nx - k]);
    fft.inv(col.data(), buf.data(), nx);
    for (int i = 0; i < nx; ++i) out(i, j) = col[i];
  }
  return out;
}

namespace {

Eigen::ArrayXXd spectral_dx(const Eigen::ArrayXXd& v, const GridSpec& grid, int order) {
  Eigen::ArrayXXcd spec = spectrum_x(v);
  const int kmax = grid.kmax();
  for (int k = 0; k <= kmax; ++k) {
    std::complex<double> factor = std::pow(std::complex<double>(0.0, grid.wavenumber(k)), order);
    if (k == kmax && order % 2 == 1) factor = 0.0;
    spec.row(k) *= factor;
  }
  return from_spectrum_x(spec, grid.nx);
}

Eigen::ArrayXXd columns_dy1(const Eigen::ArrayXXd& v, double h) {
  const Eigen::Index n = v.cols();
  Eigen::ArrayXXd out(v.rows(), n);
  const double s = 1.0 / (2.0 * h);
  out.col(0) = (-3.0 * v.col(0) + 4.0 * v.col(1) - v.col(2)) * s;
  for (Eigen::Index j = 1; j + 1 < n; ++j) out.col(j) = (v.col(j + 1) - v.col(j - 1)) * s;
  out.col(n - 1) = (3.0 * v.col(n - 1) - 4.0 * v.col(n - 2) + v.col(n - 3)) * s;
  return out;
}

Eigen::ArrayXXd columns_dy2(const Eigen::ArrayXXd& v, double h) {
  const Eigen::Index n = v.cols();
  Eigen::ArrayXXd out(v.rows(), n);
  const double s = 1.0 / (h * h);
  out.col(0) = (2.0 * v.col(0) - 5.0 * v.col(1) + 4.0 * v.col(2) - v.col(3)) * s;
  for (Eigen::Index j = 1; j + 1 < n; ++j) out.col(j) = (v.col(j + 1) - 2.0 * v.col(j) + v.col(j - 1)) * s;
  out.col(n - 1) = (2.0 * v.col(n - 1) - 5.0 * v.col(n - 2) + 4.0 * v.col(n - 3) - v.col(n - 4)) * s;
  return out;
}

}  // namespace

ScalarField derive(const ScalarField& f, int order_x, int order_y) {
  if (order_x < 0 || order_y < 0 || order_x + order_y > 3)
    throw std::invalid_argument("derive: total derivative order must be between 0 and 3");
  const GridSpec& g = f.grid();
  Eigen::ArrayXXd v = f.values();
  if (order_x > 0) v = spectral_dx(v, g, order_x);
  const double h = g.hy();
  switch (order_y) {
    case 1: v = columns_dy1(v, h); break;
    case 2: v = columns_dy2(v, h); break;
    case 3: v = columns_dy1(columns_dy2(v, h), h); break;
    default: break;
  }
  return ScalarField(g, std::move(v));
}

Eigen::ArrayXd dy1(const Eigen::ArrayXd& g, double h) {
  Eigen::ArrayXXd m = g.transpose();
  return columns_dy1(m, h).transpose();
}

Eigen::ArrayXd dy2(const Eigen::ArrayXd& g, double h) {
  Eigen::ArrayXXd m = g.transpose();
  return columns_dy2(m, h).transpose();
}

Eigen::ArrayXd trapezoid_weights(const GridSpec& grid) {
  Eigen::ArrayXd w = Eigen::ArrayXd::Constant(grid.ny, grid.hy());
  w[0] *= 0.5;
  w[grid.ny - 1] *= 0.5;
  return w;
}

double integrate(const ScalarField& f) {
  const GridSpec& g = f.grid();
  Eigen::ArrayXd col_sums = f.values().colwise().sum().transpose() * g.hx();
  return (col_sums * trapezoid_weights(g)).sum();
}

Eigen::ArrayXd x_average(const ScalarField& f) { return f.values().colwise().mean().transpose(); }

FieldInterpolant::FieldInterpolant(const ScalarField& f) : grid_(f.grid()) {
  coef_ = spectrum_x(f.values()) / static_cast<double>(grid_.nx);
  curv_.resize(coef_.rows(), coef_.cols());
  std::vector<std::complex<double>> col(grid_.ny);
  for (Eigen::Index k = 0; k < coef_.rows(); ++k) {
    for (int j = 0; j < grid_.ny; ++j) col[j] = coef_(k, j);
    auto m = natural_spline_curvature(col, grid_.hy());
    for (int j = 0; j < grid_.ny; ++j) curv_(k, j) = m[j];
  }
}

double FieldInterpolant::eval(double x, double y, int dx, int dy) const {
  const double slack = 1e-12 * (grid_.y_hi - grid_.y_lo);
  if (!(y >= grid_.y_lo - slack && y <= grid_.y_hi + slack)) {
    std::ostringstream msg;
    msg << std::setprecision(17) << "interpolate: point (" << x << ", " << y << ") lies outside [" << grid_.y_lo
        << ", " << grid_.y_hi << "]";
    throw std::out_of_range(msg.str());
  }
  return evaluate(x, std::clamp(y, grid_.y_lo, grid_.y_hi), dx, dy);
}

double FieldInterpolant::eval_extended(double x, double y, int dx, int dy) const {
  return evaluate(x, y, dx, dy);
}

double FieldInterpolant::evaluate(double x, double y, int dx, int dy) const {
  if (dx < 0 || dx > 3 || dy < 0 || dy > 2) throw std::invalid_argument("FieldInterpolant: unsupported derivative order");
  const double h = grid_.hy();
  int j = static_cast<int>(std::floor((y - grid_.y_lo) / h));
  j = std::clamp(j, 0, grid_.ny - 2);
  const double b = (y - grid_.y(j)) / h;
  const double a = 1.0 - b;
  double w0, w1, c0, c1;
  if (dy == 0) {
    w0 = a;
    w1 = b;
    c0 = (a * a * a - a) * h * h / 6.0;
    c1 = (b * b * b - b) * h * h / 6.0;
  } else if (dy == 1) {
    w0 = -1.0 / h;
    w1 = 1.0 / h;
    c0 = (1.0 - 3.0 * a * a) * h / 6.0;
    c1 = (3.0 * b * b - 1.0) * h / 6.0;
  } else {
    w0 = 0.0;
    w1 = 0.0;
    c0 = a;
    c1 = b;
  }
  const int kmax = grid_.kmax();
  const std::complex<double> step = std::polar(1.0, grid_.wavenumber(1) * x);
  std::complex<double> phase(1.0, 0.0);
  double sum = 0.0;
  for (int k = 0; k <= kmax; ++k) {
    const std::complex<double> ck = w0 * coef_(k, j) + w1 * coef_(k, j + 1) + c0 * curv_(k, j) + c1 * curv_(k, j + 1);
    const double weight = (k == 0 || k == kmax) ? 1.0 : 2.0;
    std::complex<double> factor = std::pow(std::complex<double>(0.0, grid_.wavenumber(k)), dx);
    if (k == kmax && dx % 2 == 1) factor = 0.0;
    if (k == kmax) {
      // Nyquist term is carried as a cosine so that node values are reproduced
      const double kx = grid_.wavenumber(k) * x;
      double trig;
      switch (dx) {
        case 0: trig = std::cos(kx); break;
        case 2: trig = -grid_.wavenumber(k) * grid_.wavenumber(k) * std::cos(kx); break;
        default: trig = 0.0; break;
      }
      sum += ck.real() * trig;
    } else {
      sum += weight * (factor * ck * phase).real();
    }
    phase *= step;
  }
  return sum;
}

std::vector<double> interpolate(const ScalarField& f, const std::vector<std::pair<double, double>>& pts) {
  FieldInterpolant interp(f);
  std::vector<double> out;
  out.reserve(pts.size());
  for (const auto& [x, y] : pts) out.push_back(interp(x, y));
  return out;
}

void write_csv(const ScalarField& f, std::ostream& os) {
  const GridSpec& g = f.grid();
  os << "x,y,value\n" << std::setprecision(17);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) os << g.x(i) << ',' << g.y(j) << ',' << f(i, j) << '\n';
}

void write_csv(const ScalarField& f, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_csv: cannot open " + path);
  write_csv(f, os);
}

ScalarField read_field_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_field_csv: cannot open " + path);
  std::string line;
  std::getline(is, line);
  if (line != "x,y,value") throw std::runtime_error("read_field_csv: unexpected header in " + path);
  std::vector<double> xs, ys, vs;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    double x, y, v;
    char c1, c2;
    if (!(row >> x >> c1 >> y >> c2 >> v)) throw std::runtime_error("read_field_csv: malformed row in " + path);
    xs.push_back(x);
    ys.push_back(y);
    vs.push_back(v);
  }
  if (vs.empty()) throw std::runtime_error("read_field_csv: no data in " + path);
  int nx = 1;
  while (nx < static_cast<int>(ys.size()) && ys[nx] == ys[0]) ++nx;
  if (vs.size() % nx != 0) throw std::runtime_error("read_field_csv: ragged rows in " + path);
  GridSpec g;
  g.nx = nx;
  g.ny = static_cast<int>(vs.size()) / nx;
  g.lx = xs[1] * nx;
  g.y_lo = ys.front();
  g.y_hi = ys.back();
  ScalarField out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < nx; ++i) out(i, j) = vs[static_cast<size_t>(j) * nx + i];
  return out;
}

}  // namespace sdeform
