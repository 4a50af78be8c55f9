#include "steady_deform/profile.hpp"

#include "steady_deform/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace sdeform {

namespace {

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

Profile::Profile(const Eigen::ArrayXd& knots, const Eigen::ArrayXd& values, double margin)
    : knots_(knots), values_(values), margin_(margin) {
  const Eigen::Index n = knots.size();
  if (n < 2) throw std::invalid_argument("Profile: need at least two knots");
  if (values.size() != n) throw std::invalid_argument("Profile: knots and values differ in length");
  if (!knots.allFinite() || !values.allFinite()) throw std::invalid_argument("Profile: non-finite data");
  const bool ascending = knots[1] > knots[0];
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const bool ok = ascending ? knots[k + 1] > knots[k] : knots[k + 1] < knots[k];
    if (!ok) throw std::invalid_argument("Profile: knots must be strictly monotone (violated at index " +
                                         std::to_string(k + 1) + ")");
  }
  t_ = ascending ? knots : Eigen::ArrayXd(knots.reverse());
  f_ = ascending ? values : Eigen::ArrayXd(values.reverse());
  d_ = not_a_knot_slopes(t_, f_);

  Eigen::ArrayXd sec = (f_.tail(n - 1) - f_.head(n - 1)) / (t_.tail(n - 1) - t_.head(n - 1));
  Eigen::ArrayXd lim = d_;
  for (Eigen::Index k = 0; k < n; ++k) {
    const bool has_left = k > 0, has_right = k + 1 < n;
    const double sl = has_left ? sec[k - 1] : sec[k];
    const double sr = has_right ? sec[k] : sec[k - 1];
    if (sl == 0.0 || sr == 0.0) {
      lim[k] = 0.0;
      continue;
    }
    if (sign_of(sl) != sign_of(sr)) continue;  // local extremum of the samples
    const double bound = 3.0 * std::min(std::abs(sl), std::abs(sr));
    if (sign_of(d_[k]) != sign_of(sl))
      lim[k] = 0.0;
    else if (std::abs(d_[k]) > bound)
      lim[k] = sign_of(sl) * bound;
  }
  d_ = lim;
}

double Profile::hermite(int seg, double c, int deriv) const {
  const double h = t_[seg + 1] - t_[seg];
  const double s = (c - t_[seg]) / h;
  const double f0 = f_[seg], f1 = f_[seg + 1];
  const double m0 = h * d_[seg], m1 = h * d_[seg + 1];
  switch (deriv) {
    case 0:
      return f0 * (2 * s * s * s - 3 * s * s + 1) + m0 * (s * s * s - 2 * s * s + s) + f1 * (-2 * s * s * s + 3 * s * s) +
             m1 * (s * s * s - s * s);
    case 1:
      return (f0 * (6 * s * s - 6 * s) + m0 * (3 * s * s - 4 * s + 1) + f1 * (-6 * s * s + 6 * s) +
              m1 * (3 * s * s - 2 * s)) /
             h;
    default:
      return (f0 * (12 * s - 6) + m0 * (6 * s - 4) + f1 * (-12 * s + 6) + m1 * (6 * s - 2)) / (h * h);
  }
}

double Profile::eval(double c, int deriv) const {
  if (empty()) throw std::logic_error("Profile::eval on an empty profile");
  if (deriv < 0 || deriv > 2) throw std::invalid_argument("Profile::eval: derivative order must be 0, 1 or 2");
  const Eigen::Index n = t_.size();
  const double slack = margin_ * (t_[n - 1] - t_[0]);
  if (!(c >= t_[0] - slack && c <= t_[n - 1] + slack)) {
    std::ostringstream msg;
    msg << std::setprecision(17) << "Profile: c = " << c << " is outside [" << t_[0] << ", " << t_[n - 1]
        << "] beyond the extrapolation margin";
    throw std::out_of_range(msg.str());
  }
  const double* pos = std::upper_bound(t_.data(), t_.data() + n, c);
  int seg = static_cast<int>(pos - t_.data()) - 1;
  seg = std::clamp(seg, 0, static_cast<int>(n) - 2);
  return hermite(seg, c, deriv);
}

Profile Profile::derivative() const {
  Eigen::ArrayXd v(knots_.size());
  for (Eigen::Index k = 0; k < knots_.size(); ++k) v[k] = eval(knots_[k], 1);
  return Profile(knots_, v, margin_);
}

Profile Profile::antiderivative() const {
  Eigen::ArrayXd integral = hermite_cumulative_integral(t_, f_, d_);
  const bool ascending = knots_[1] > knots_[0];
  if (!ascending) integral.reverseInPlace();
  return Profile(knots_, integral, margin_);
}

double eval(const Profile& p, double c, int deriv) { return p.eval(c, deriv); }

ScalarField compose(const Profile& p, const ScalarField& f, int deriv) {
  const GridSpec& g = f.grid();
  ScalarField out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      try {
        out(i, j) = p.eval(f(i, j), deriv);
      } catch (const std::out_of_range& e) {
        throw std::out_of_range("compose: node (i=" + std::to_string(i) + ", j=" + std::to_string(j) + "): " + e.what());
      }
    }
  return out;
}

double SeparableG::eval(double y, double psi, int d_psi) const {
  double s = 0.0;
  for (const auto& term : terms) s += term.weight(y) * term.theta.eval(psi, d_psi);
  return s;
}

Eigen::ArrayXd SeparableG::weight_samples(std::size_t m, const GridSpec& grid) const {
  Eigen::ArrayXd w(grid.ny);
  for (int j = 0; j < grid.ny; ++j) w[j] = terms.at(m).weight(grid.y(j));
  return w;
}

ScalarField eval_G(const SeparableG& G, const ScalarField& psi, int d_psi) {
  const GridSpec& g = psi.grid();
  ScalarField out(g);
  for (std::size_t m = 0; m < G.terms.size(); ++m) {
    Eigen::ArrayXd w = G.weight_samples(m, g);
    ScalarField th = compose(G.terms[m].theta, psi, d_psi);
    for (int j = 0; j < g.ny; ++j) out.values().col(j) += w[j] * th.values().col(j);
  }
  return out;
}

void write_csv(const Profile& p, std::ostream& os) {
  os << "c,value\n" << std::setprecision(17);
  for (Eigen::Index k = 0; k < p.size(); ++k) os << p.knots()[k] << ',' << p.values()[k] << '\n';
}

void write_csv(const Profile& p, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_csv: cannot open " + path);
  write_csv(p, os);
}

Profile read_profile_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_profile_csv: cannot open " + path);
  std::string line;
  std::getline(is, line);
  if (line != "c,value") throw std::runtime_error("read_profile_csv: unexpected header in " + path);
  std::vector<double> cs, vs;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    double c, v;
    char comma;
    if (!(row >> c >> comma >> v)) throw std::runtime_error("read_profile_csv: malformed row in " + path);
    cs.push_back(c);
    vs.push_back(v);
  }
  return Profile(Eigen::Map<Eigen::ArrayXd>(cs.data(), static_cast<Eigen::Index>(cs.size())),
                 Eigen::Map<Eigen::ArrayXd>(vs.data(), static_cast<Eigen::Index>(vs.size())));
}

}  // namespace sdeform
