#include "steady_deform/pipeline.hpp"

#include "steady_deform/elliptic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace sdeform {

namespace fs = std::filesystem;

Command command_from_string(const std::string& name) {
  if (name == "base") return Command::base;
  if (name == "deform") return Command::deform;
  if (name == "verify") return Command::verify;
  if (name == "sweep") return Command::sweep;
  throw std::invalid_argument("unknown command '" + name + "' (expected base, deform, verify or sweep)");
}

int worker_threads() {
  if (const char* env = std::getenv("STEADY_DEFORM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(std::min<long>(v, 256));
    return 1;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void write_base_csv(const BaseState& state, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  const GridSpec& g = state.grid();
  os << "y,psi0,dpsi0,F0,lambda\n" << std::setprecision(17);
  for (int j = 0; j < g.ny; ++j)
    os << g.y(j) << ',' << state.geo.psi0[j] << ',' << state.geo.dpsi0[j] << ',' << state.F0.values()[j] << ','
       << state.op.lambda[j] << '\n';
}

BaseTable read_base_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(is, line);
  if (line != "y,psi0,dpsi0,F0,lambda") throw std::runtime_error("unexpected header in " + path);
  std::vector<std::array<double, 5>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::array<double, 5> r{};
    std::istringstream ss(line);
    std::string cell;
    for (int k = 0; k < 5; ++k) {
      if (!std::getline(ss, cell, ',')) throw std::runtime_error("malformed row in " + path);
      r[k] = std::stod(cell);
    }
    rows.push_back(r);
  }
  BaseTable t;
  const auto n = static_cast<Eigen::Index>(rows.size());
  for (auto* a : {&t.y, &t.psi0, &t.dpsi0, &t.F0, &t.lambda}) a->resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    t.y[j] = rows[j][0];
    t.psi0[j] = rows[j][1];
    t.dpsi0[j] = rows[j][2];
    t.F0[j] = rows[j][3];
    t.lambda[j] = rows[j][4];
  }
  return t;
}

std::vector<IterRecord> read_iterations_log(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::vector<IterRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    IterRecord r;
    if (std::sscanf(line.c_str(), "iter=%d dnorm=%lf ratio=%lf res=%lf bdry=%lf jac=%lf", &r.n, &r.dnorm, &r.ratio,
                    &r.res, &r.bdry, &r.jac) != 6)
      throw std::runtime_error("malformed line in " + path + ": " + line);
    out.push_back(r);
  }
  return out;
}

namespace {

std::string py_list(const std::vector<double>& v) {
  std::ostringstream os;
  os << std::setprecision(17) << '[';
  for (std::size_t k = 0; k < v.size(); ++k) os << (k ? ", " : "") << v[k];
  os << ']';
  return os.str();
}

void write_plot_script(const RunConfig& cfg, const GridSpec& target, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  const BoundaryShape& b = cfg.boundary;
  os << std::setprecision(17);
  os << "# Stream-function contours and streamlines of the base and deformed domains.\n"
        "# Run from the output directory: python3 plot.py\n"
        "import csv\n"
        "import math\n"
        "import numpy as np\n"
        "import matplotlib\n"
        "matplotlib.use(\"Agg\")\n"
        "import matplotlib.pyplot as plt\n\n";
  os << "LX = " << cfg.grid.lx << "\nY_LO = " << cfg.grid.y_lo << "\nY_HI = " << cfg.grid.y_hi << "\n";
  os << "BOT = dict(offset=" << b.bot.offset << ", cos=" << py_list(b.bot.cos_amp) << ", sin=" << py_list(b.bot.sin_amp)
     << ")\n";
  os << "TOP = dict(offset=" << b.top.offset << ", cos=" << py_list(b.top.cos_amp) << ", sin=" << py_list(b.top.sin_amp)
     << ")\n";
  os << "TARGET_NX, TARGET_NY = " << target.nx << ", " << target.ny << "\n\n";
  os << "\n"
        "def wall(w, x):\n"
        "    k0 = 2.0 * math.pi / LX\n"
        "    v = w[\"offset\"] + 0.0 * x\n"
        "    for k, a in enumerate(w[\"cos\"]):\n"
        "        v = v + a * np.cos((k + 1) * k0 * x)\n"
        "    for k, a in enumerate(w[\"sin\"]):\n"
        "        v = v + a * np.sin((k + 1) * k0 * x)\n"
        "    return v\n\n\n"
        "def read_field(path):\n"
        "    with open(path) as f:\n"
        "        rows = list(csv.reader(f))[1:]\n"
        "    data = np.array([[float(c) for c in r] for r in rows])\n"
        "    xs = np.unique(data[:, 0])\n"
        "    ys = np.unique(data[:, 1])\n"
        "    return xs, ys, data[:, 2].reshape(len(ys), len(xs))\n\n\n"
        "with open(\"base.csv\") as f:\n"
        "    rows = list(csv.reader(f))[1:]\n"
        "yb = np.array([float(r[0]) for r in rows])\n"
        "psi0 = np.array([float(r[1]) for r in rows])\n"
        "xt, yt, psi = read_field(\"psi_target.csv\")\n"
        "xb = xt\n"
        "XB, YB = np.meshgrid(xb, yb)\n"
        "PSI0 = np.tile(psi0[:, None], (1, len(xb)))\n"
        "XT, YT = np.meshgrid(xt, yt)\n"
        "outside = (YT < Y_LO + wall(BOT, XT)) | (YT > Y_HI + wall(TOP, XT))\n"
        "psi_masked = np.ma.array(psi, mask=outside)\n"
        "levels = np.linspace(psi0.min(), psi0.max(), 21)\n"
        "fig, axes = plt.subplots(1, 2, figsize=(12, 4), sharey=True)\n"
        "axes[0].contour(XB, YB, PSI0, levels=levels, colors=\"k\", linestyles=\"solid\", linewidths=0.7)\n"
        "axes[0].set_title(\"base domain\")\n"
        "axes[1].contour(XT, YT, psi_masked, levels=levels, colors=\"k\", linestyles=\"solid\", linewidths=0.7)\n"
        "dy, dx = np.gradient(psi, yt, xt)\n"
        "u, v = -dy, dx\n"
        "axes[1].streamplot(xt, yt, np.ma.array(u, mask=outside).filled(np.nan),\n"
        "                   np.ma.array(v, mask=outside).filled(np.nan), density=0.6, color=\"tab:blue\", linewidth=0.5)\n"
        "xf = np.linspace(0.0, LX, 400)\n"
        "for ax, deformed in ((axes[0], False), (axes[1], True)):\n"
        "    lo = Y_LO + (wall(BOT, xf) if deformed else 0.0 * xf)\n"
        "    hi = Y_HI + (wall(TOP, xf) if deformed else 0.0 * xf)\n"
        "    ax.plot(xf, lo, \"r-\", xf, hi, \"r-\")\n"
        "    ax.set_xlabel(\"x\")\n"
        "axes[1].set_title(\"deformed domain\")\n"
        "axes[0].set_ylabel(\"y\")\n"
        "fig.tight_layout()\n"
        "fig.savefig(\"plot.png\", dpi=150)\n";
}

struct Logger {
  std::function<void(const std::string&)> sink;
  void operator()(const std::string& s) const {
    if (sink) sink(s);
  }
};

void add_base_checks(VerificationReport& rep, const BaseState& base) {
  rep.add_upper("base_residual", base_residual(base).abs().maxCoeff(), 1e-8, "fixed");
  rep.merge(hypothesis_report(base));
}

void add_deform_checks(VerificationReport& rep, const RunConfig& cfg, const BaseState& base, const DeformResult& r,
                       const PushForward& pf) {
  const double tol = cfg.tol_iter;
  const double defect_tol = std::max(100.0 * tol, 1e-8);
  rep.add("converged", Check{static_cast<double>(r.iterations), static_cast<double>(cfg.max_iters), r.converged,
                             "max_iters"});
  rep.add_upper("composed_residual", r.diag.composed_residual, defect_tol, "tol_iter");
  rep.add_upper("jacobian_defect", r.diag.jacobian_defect, defect_tol, "tol_iter");
  rep.add_upper("jacobian_identity", jacobian_det(r.pot).max_disagreement, 1e-10, "fixed");
  rep.add_upper("boundary_constant_bot", std::abs(r.diag.walls.mean_bot), 1e-7, "fixed");
  rep.add_upper("boundary_constant_top", std::abs(r.diag.walls.mean_top), 1e-7, "fixed");
  rep.add_upper("boundary_spread_bot", r.diag.walls.spread_bot, std::max(10.0 * tol, 1e-10), "tol_iter");
  rep.add_upper("boundary_spread_top", r.diag.walls.spread_top, std::max(10.0 * tol, 1e-10), "tol_iter");
  rep.add_upper("streamline_average", r.diag.phi_average, 1e-11, "fixed");
  rep.add_upper("max_cauchy_ratio", r.diag.max_ratio, 1.0, "contraction");
  rep.add("f_deviation", Check{r.diag.f_deviation, INFINITY, true, "informational"});
  const RangeCheck rc = range_check(pf.psi, pf.inside, base.c_bot, base.c_top);
  rep.add("range_check", Check{rc.excursion, 1e-10, rc.pass, "fixed"});
}

void add_verify_checks(VerificationReport& rep, const RunConfig& cfg, const BaseState& base, const PreparedDeform& pd,
                       const DeformResult& r, const PushForward& pf, const GridSpec& target, const Logger& log) {
  const double res = r.diag.composed_residual;
  const TargetResidual tr = residual_target(base, r, pd.cfg, target);
  rep.add("target_residual", Check{tr.sup, INFINITY, true, "informational"});
  rep.add("shear_deviation", Check{shear_deviation(pf.psi, pf.inside), INFINITY, true, "informational"});
  const ScalarField omega = composed_operator(r.pot, base, pd.cfg.coeffs);
  // the composed vorticity must be a function of psi0 up to the residual
  ScalarField inner_psi(base.grid()), inner_omega(base.grid());
  std::vector<double> pv, ov;
  for (int j = 1; j < base.grid().ny - 1; ++j)
    for (int i = 0; i < base.grid().nx; ++i) {
      pv.push_back(base.geo.psi0[j]);
      ov.push_back(omega(i, j));
    }
  const double eos = eos_check(Eigen::Map<Eigen::ArrayXd>(pv.data(), static_cast<Eigen::Index>(pv.size())),
                               Eigen::Map<Eigen::ArrayXd>(ov.data(), static_cast<Eigen::Index>(ov.size())));
  if (cfg.model == Model::euler && pd.cfg.coeffs.empty())
    rep.add_upper("eos_vorticity", eos, 10.0 * res + 1e-12, "composed residual");
  else
    rep.add("eos_vorticity", Check{eos, INFINITY, true, "informational"});
  if (cfg.model == Model::boussinesq && pd.theta) {
    rep.add_upper("momentum_composed", composed_momentum_residual(base, r, pd.cfg, *pd.theta),
                  std::max(10.0 * res, 1e-10), "composed residual");
    std::vector<double> ps, th;
    for (Eigen::Index k = 0; k < pf.psi.values().size(); ++k)
      if (pf.inside(k)) {
        ps.push_back(pf.psi.values()(k));
        th.push_back(pd.theta->eval(ps.back()));
      }
    rep.add_upper("eos_temperature",
                  eos_check(Eigen::Map<Eigen::ArrayXd>(ps.data(), static_cast<Eigen::Index>(ps.size())),
                            Eigen::Map<Eigen::ArrayXd>(th.data(), static_cast<Eigen::Index>(th.size()))),
                  1e-9, "fixed");
  }
  if (cfg.model == Model::gs) {
    try {
      const Profile C = reconstruct_swirl(r.F, base.C0);
      double e = 0.0;
      for (Eigen::Index k = 0; k < C.size(); ++k) {
        const double c = C.knots()[k];
        e = std::max(e, std::abs(C.eval(c) * C.eval(c, 1) - r.F.eval(c)));
      }
      rep.add_upper("swirl_reconstruction", e, 1e-6, "fixed");
    } catch (const std::exception& err) {
      log(std::string("swirl: ") + err.what());
      rep.add("swirl_reconstruction", Check{NAN, 1e-6, false, "fixed"});
    }
  }
}

}  // namespace

RunOutcome run(const RunConfig& cfg, Command command, const std::function<void(const std::string&)>& sink) {
  RunOutcome out;
  const Logger log{sink};
  try {
    if (command == Command::sweep) throw std::invalid_argument("run: use sweep() for the sweep command");
    fs::create_directories(cfg.out_dir);
    auto path = [&](const std::string& name) {
      out.files.push_back(name);
      return (fs::path(cfg.out_dir) / name).string();
    };
    const BaseState base = make_base(cfg);
    write_base_csv(base, path("base.csv"));
    // factorising the base operator surfaces singular modes for every command
    const DirichletSolver solver(base.op);
    (void)solver;
    add_base_checks(out.report, base);
    if (command == Command::base) {
      std::ofstream(path("report.json")) << out.report.to_json() << '\n';
      out.exit_code = out.report.all_pass() ? kExitOk : kExitNotCertified;
      out.message = out.report.all_pass() ? "base checks pass" : "base hypothesis checks failed";
      return out;
    }

    const PreparedDeform pd = make_deform_config(cfg, base, sink);
    if (pd.rho_factor != 1.0) out.report.add("rho_normalization_factor", Check{pd.rho_factor, INFINITY, true, "informational"});
    std::ofstream iters(path("iterations.log"));
    if (!iters) throw std::runtime_error("cannot write iterations.log");
    const DeformResult r = deform(base, pd.cfg, [&](const std::string& line) {
      iters << line << '\n';
      log(line);
    });
    iters.close();
    write_csv(r.pot.eta, path("eta.csv"));
    write_csv(r.pot.phi, path("phi.csv"));
    write_csv(r.F, path("F.csv"));
    const GridSpec target = target_grid_for(cfg.grid, cfg.boundary);
    PushForward pf;
    if (r.converged) {
      pf = push_forward(base, r, target);
    } else {
      pf.psi = ScalarField(target);
      pf.inside = Eigen::ArrayXXi::Zero(target.nx, target.ny);
    }
    write_csv(pf.psi, path("psi_target.csv"));
    write_plot_script(cfg, target, path("plot.py"));
    add_deform_checks(out.report, cfg, base, r, pf);
    if (command == Command::verify && r.converged) add_verify_checks(out.report, cfg, base, pd, r, pf, target, log);
    std::ofstream(path("report.json")) << out.report.to_json() << '\n';
    if (!r.converged) {
      out.exit_code = kExitNotCertified;
      out.message = "deformation did not converge after " + std::to_string(r.iterations) + " iterations";
    } else if (!out.report.all_pass()) {
      out.exit_code = kExitNotCertified;
      std::string failed;
      for (const auto& [name, c] : out.report.checks())
        if (!c.pass && c.gating) failed += (failed.empty() ? "" : ", ") + name;
      out.message = "converged; failed checks: " + failed;
    } else {
      out.exit_code = kExitOk;
      out.message = "converged in " + std::to_string(r.iterations) + " iterations; all checks pass";
    }
  } catch (const SingularModeError& e) {
    out.exit_code = kExitError;
    out.message = e.what();
  } catch (const std::exception& e) {
    out.exit_code = kExitError;
    out.message = e.what();
  }
  return out;
}

std::vector<SweepRow> sweep(const RunConfig& cfg, const std::string& parameter, const std::vector<double>& values,
                            int threads) {
  std::vector<SweepRow> rows(values.size());
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t k = next++; k < values.size(); k = next++) {
      SweepRow& row = rows[k];
      row.value = values[k];
      try {
        const RunConfig c = with_parameter(cfg, parameter, values[k]);
        const BaseState base = make_base(c);
        const PreparedDeform pd = make_deform_config(c, base);
        const DeformResult r = deform(base, pd.cfg);
        row.converged = r.converged;
        row.iterations = r.iterations;
        row.final_ratio = r.history.empty() ? 0.0 : r.history.back().ratio;
        row.max_ratio = r.diag.max_ratio;
        row.residual = r.diag.composed_residual;
        row.jacobian = r.diag.jacobian_defect;
        row.boundary_constant = std::max(std::abs(r.diag.walls.mean_bot), std::abs(r.diag.walls.mean_top));
        row.f_deviation = r.diag.f_deviation;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(values.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  return rows;
}

namespace {

std::string csv_escape(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + '"';
}

}  // namespace

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& parameter, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "# parameter " << parameter << '\n';
  os << "value,converged,iterations,final_ratio,max_ratio,residual,jacobian,boundary_constant,f_deviation,error\n";
  os << std::setprecision(17);
  for (const SweepRow& r : rows)
    os << r.value << ',' << (r.converged ? 1 : 0) << ',' << r.iterations << ',' << r.final_ratio << ','
       << r.max_ratio << ',' << r.residual << ',' << r.jacobian << ',' << r.boundary_constant << ','
       << r.f_deviation << ',' << csv_escape(r.error) << '\n';
}

std::vector<SweepRow> read_sweep_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(is, line);
  if (line.rfind("# parameter", 0) != 0) throw std::runtime_error("unexpected first line in " + path);
  std::getline(is, line);
  std::vector<SweepRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto q = line.find('"');
    if (q == std::string::npos) throw std::runtime_error("malformed row in " + path);
    std::string err = line.substr(q + 1, line.size() - q - 2);
    std::string unq;
    for (std::size_t k = 0; k < err.size(); ++k) {
      unq += err[k];
      if (err[k] == '"' && k + 1 < err.size() && err[k + 1] == '"') ++k;
    }
    std::istringstream ss(line.substr(0, q));
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != 9) throw std::runtime_error("malformed row in " + path);
    SweepRow r;
    r.value = v[0];
    r.converged = v[1] != 0.0;
    r.iterations = static_cast<int>(v[2]);
    r.final_ratio = v[3];
    r.max_ratio = v[4];
    r.residual = v[5];
    r.jacobian = v[6];
    r.boundary_constant = v[7];
    r.f_deviation = v[8];
    r.error = unq;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace sdeform
