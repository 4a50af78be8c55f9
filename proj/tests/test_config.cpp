#include "steady_deform/config.hpp"
#include "steady_deform/pipeline.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace sdeform;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sdeform_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

const char* kWavy = R"toml(
model = "euler"
[grid]
nx = 32
ny = 33
[base]
v0 = "1 + 0.25*sin(pi*y)"
[boundary]
top_cos = [0.02]
)toml";

}  // namespace

TEST_CASE("expressions") {
  const Expression e = Expression::parse("1 + 0.25*sin(pi*y)", "xy");
  CHECK(e(0.0, 0.5) == doctest::Approx(1.25));
  CHECK(e.uses('y'));
  CHECK_FALSE(e.uses('x'));
  CHECK(Expression::parse("4/3*y^2 - 1/3", "y")(0.0, 1.0) == doctest::Approx(1.0));
  CHECK(Expression::parse("2*pi", "")(0, 0) == doctest::Approx(2 * kPi));
  CHECK(Expression::parse("-pi*pi", "")(0, 0) == doctest::Approx(-kPi * kPi));
  CHECK(Expression::parse("cos(2*x)*y^2 + sin(x)", "xy")(0.3, 0.5) ==
        doctest::Approx(std::cos(0.6) * 0.25 + std::sin(0.3)));
  CHECK(Expression::parse("r^2", "y")(0.0, 0.7) == doctest::Approx(0.49));
  CHECK(Expression::parse("-c", "c")(0, 0, 0.4) == doctest::Approx(-0.4));
  CHECK(Expression::constant(3.5)(1, 2, 3) == 3.5);
  CHECK_THROWS_AS(Expression::parse("x*y", "y"), ConfigError);
  CHECK_THROWS_AS(Expression::parse("exp(y)", "y"), ConfigError);
  CHECK_THROWS_AS(Expression::parse("1 +", "y"), ConfigError);
  CHECK_THROWS_AS(Expression::parse("(y+1)*2", "y"), ConfigError);
}

TEST_CASE("config table syntax") {
  const ConfigTable t = parse_config_table(R"(
# comment
model = "gs"   # trailing comment
flag = true
[grid]
nx = 32
[boundary]
top_cos = [0.01, -2e-3]
)");
  CHECK(std::get<std::string>(t.at("model").value) == "gs");
  CHECK(std::get<bool>(t.at("flag").value));
  CHECK(std::get<double>(t.at("grid.nx").value) == 32.0);
  CHECK(t.at("grid.nx").line == 6);
  const auto& arr = std::get<std::vector<double>>(t.at("boundary.top_cos").value);
  REQUIRE(arr.size() == 2);
  CHECK(arr[1] == -2e-3);
  CHECK_THROWS_WITH_AS(parse_config_table("a = 1\na = 2\n"), doctest::Contains("line 2"), ConfigError);
  CHECK_THROWS_AS(parse_config_table("[grid\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_table("a = \"open\n"), ConfigError);
}

TEST_CASE("minimal Euler config fills defaults") {
  const RunConfig cfg = parse_config_text("model = \"euler\"\nv0 = \"1\"\nnx = 64\nny = 65\n");
  CHECK(cfg.model == Model::euler);
  CHECK(cfg.grid.nx == 64);
  CHECK(cfg.grid.ny == 65);
  CHECK(cfg.grid.lx == doctest::Approx(2 * kPi));
  CHECK(cfg.grid.y_lo == 0.0);
  CHECK(cfg.grid.y_hi == 1.0);
  CHECK(cfg.tol_iter == 1e-10);
  CHECK(cfg.boundary.flat());
  CHECK(cfg.v0.has_value());
}

TEST_CASE("config errors name the key and line") {
  CHECK_THROWS_WITH_AS(parse_config_text("model = \"euler\"\nspeling = 1\n"), doctest::Contains("speling"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("model = \"euler\"\nspeling = 1\n"), doctest::Contains("line 2"), ConfigError);
  // keys belonging to another model
  CHECK_THROWS_WITH_AS(parse_config_text("model = \"euler\"\n[base]\ntheta0 = \"-c\"\n"), doctest::Contains("theta0"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("model = \"euler\"\n[grid]\nnx = 7\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("model = \"euler\"\n[base]\nv0 = \"1\"\npsi0 = \"-y\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("model = \"euler\"\n[boundary]\nbot_offset = 0.6\ntop_offset = -0.6\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("model = \"stokes\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("/nonexistent/config.toml"), ConfigError);
}

TEST_CASE("rho is normalised to the target volume with a logged factor") {
  const RunConfig cfg = parse_config_text("model = \"euler\"\nnx = 16\nny = 17\n[deform]\nrho = \"2 + 0.1*cos(x)*y\"\n");
  const BaseState base = make_base(cfg);
  std::vector<std::string> log;
  const PreparedDeform pd = make_deform_config(cfg, base, [&](const std::string& s) { log.push_back(s); });
  CHECK(pd.rho_factor == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(integrate(pd.cfg.rho) == doctest::Approx(cfg.grid.volume()).epsilon(1e-12));
  REQUIRE_FALSE(log.empty());
  CHECK(log.front().find("rho normalized by factor") != std::string::npos);
  const RunConfig bad = parse_config_text("model = \"euler\"\nnx = 16\nny = 17\n[deform]\nrho = \"0.5 - y\"\n");
  CHECK_THROWS(make_deform_config(bad, make_base(bad)));
}

TEST_CASE("bases for every model") {
  const BaseState e = make_base(parse_config_text("model = \"euler\"\nnx = 16\nny = 33\n"));
  CHECK((e.geo.psi0 + e.grid().ys()).abs().maxCoeff() < 1e-12);
  const RunConfig bc = parse_config_text("model = \"boussinesq\"\nnx = 16\nny = 33\n[target]\ntheta = \"-0.99*c\"\n");
  const BaseState b = make_base(bc);
  CHECK(b.model == Model::boussinesq);
  CHECK(b.Theta0.eval(-0.5) == doctest::Approx(0.5));
  const PreparedDeform pb = make_deform_config(bc, b);
  REQUIRE(pb.theta.has_value());
  CHECK(pb.theta->eval(-0.5) == doctest::Approx(0.495));
  const BaseState g = make_base(parse_config_text("model = \"gs\"\nnx = 16\nny = 33\n"));
  CHECK(g.grid().y_lo == 0.5);
  CHECK(g.geo.psi0[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(g.geo.psi0[32] == doctest::Approx(1.0));
  const RunConfig lam = parse_config_text("model = \"euler\"\nnx = 16\nny = 33\n[base]\nlambda_override = \"-pi*pi\"\n");
  CHECK(make_base(lam).op.lambda[7] == doctest::Approx(-kPi * kPi));
}

TEST_CASE("parameter overrides") {
  const RunConfig cfg = parse_config_text(kWavy);
  const RunConfig c2 = with_parameter(cfg, "boundary.top_cos[0]", 0.05);
  REQUIRE(c2.boundary.top.cos_amp.size() == 1);
  CHECK(c2.boundary.top.cos_amp[0] == 0.05);
  CHECK(with_parameter(cfg, "boundary.bot_sin[1]", 0.01).boundary.bot.sin_amp.size() == 2);
  CHECK(with_parameter(cfg, "tol", 1e-8).tol_iter == 1e-8);
  CHECK(with_parameter(cfg, "grid.ny", 65).grid.ny == 65);
  CHECK_THROWS_AS(with_parameter(cfg, "model", 1.0), ConfigError);
  CHECK_THROWS_AS(with_parameter(cfg, "nope", 1.0), ConfigError);
  CHECK_THROWS_AS(with_parameter(cfg, "boundary.top_cos", 1.0), ConfigError);
}

TEST_CASE("run writes artifacts that round-trip through the readers") {
  RunConfig cfg = parse_config_text(kWavy);
  const fs::path dir = scratch_dir("run");
  cfg.out_dir = dir.string();
  const RunOutcome out = run(cfg, Command::verify);
  // the wall constant of this grid sits above the fixed 1e-7 bound, see the report
  CHECK(out.exit_code == kExitNotCertified);
  CHECK(out.message.find("boundary_constant") != std::string::npos);
  for (const char* f : {"base.csv", "eta.csv", "phi.csv", "psi_target.csv", "F.csv", "report.json", "iterations.log", "plot.py"})
    CHECK(fs::exists(dir / f));
  const BaseTable bt = read_base_csv((dir / "base.csv").string());
  const BaseState base = make_base(cfg);
  CHECK((bt.psi0 - base.geo.psi0).abs().maxCoeff() == 0.0);
  CHECK((bt.lambda - base.op.lambda).abs().maxCoeff() == 0.0);
  const ScalarField eta = read_field_csv((dir / "eta.csv").string());
  CHECK(eta.grid().ny == 33);
  const Profile F = read_profile_csv((dir / "F.csv").string());
  CHECK(F.size() == 33);
  const auto hist = read_iterations_log((dir / "iterations.log").string());
  const VerificationReport rep = VerificationReport::from_json(slurp(dir / "report.json"));
  CHECK(rep.at("converged").pass);
  CHECK(rep.at("converged").value == hist.size());
  CHECK(rep.at("composed_residual").pass);
  CHECK(hist.back().res == doctest::Approx(rep.at("composed_residual").value).epsilon(1e-5));
  CHECK(rep.has("eos_vorticity"));
  fs::remove_all(dir);
}

TEST_CASE("runs are deterministic") {
  RunConfig cfg = parse_config_text(kWavy);
  const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
  cfg.out_dir = a.string();
  run(cfg, Command::deform);
  cfg.out_dir = b.string();
  run(cfg, Command::deform);
  for (const char* f : {"base.csv", "eta.csv", "phi.csv", "psi_target.csv", "F.csv", "report.json", "iterations.log"})
    CHECK(slurp(a / f) == slurp(b / f));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("hard errors and non-convergence map to exit codes") {
  RunConfig cfg = parse_config_text("model = \"euler\"\nnx = 16\nny = 65\n[base]\nlambda_override = \"-pi*pi\"\n");
  cfg.out_dir = scratch_dir("singular").string();
  const RunOutcome s = run(cfg, Command::base);
  CHECK(s.exit_code == kExitError);
  CHECK(s.message.find("singular mode") != std::string::npos);

  RunConfig slow = parse_config_text(kWavy);
  slow = with_parameter(slow, "max_iters", 2);
  slow.out_dir = scratch_dir("slow").string();
  const RunOutcome n = run(slow, Command::deform);
  CHECK(n.exit_code == kExitNotCertified);
  CHECK(n.message.find("did not converge") != std::string::npos);

  RunConfig id = parse_config_text("model = \"euler\"\nnx = 16\nny = 17\n");
  id.out_dir = scratch_dir("identity").string();
  const RunOutcome ok = run(id, Command::verify);
  CHECK(ok.exit_code == kExitOk);
  CHECK(ok.report.all_pass());
}

TEST_CASE("sweeps") {
  const RunConfig cfg = parse_config_text(kWavy);
  CHECK(sweep(cfg, "boundary.top_cos[0]", {}).empty());
  const std::vector<double> amps = {0.005, 0.01, 0.02, 0.04, 0.08, 0.4};
  const auto one = sweep(cfg, "boundary.top_cos[0]", amps, 1);
  const auto two = sweep(cfg, "boundary.top_cos[0]", amps, 2);
  REQUIRE(one.size() == amps.size());
  for (std::size_t k = 0; k + 1 < amps.size(); ++k) {
    CHECK(one[k].converged);
    if (k > 0) CHECK(one[k].iterations >= one[k - 1].iterations);
    CHECK(one[k].residual == two[k].residual);
    CHECK(one[k].iterations == two[k].iterations);
  }
  // the largest amplitude folds the map; the error is recorded and the sweep goes on
  CHECK_FALSE(one.back().converged);
  CHECK(one.back().error.find("degenerate") != std::string::npos);

  const fs::path dir = scratch_dir("sweep");
  write_sweep_csv(one, "boundary.top_cos[0]", (dir / "sweep.csv").string());
  const auto back = read_sweep_csv((dir / "sweep.csv").string());
  REQUIRE(back.size() == one.size());
  for (std::size_t k = 0; k < one.size(); ++k) {
    CHECK(back[k].value == one[k].value);
    CHECK(back[k].residual == one[k].residual);
    CHECK(back[k].error == one[k].error);
  }
  fs::remove_all(dir);

  // the residual follows the tolerance
  const auto tols = sweep(cfg, "tol", {1e-6, 1e-8, 1e-10});
  for (std::size_t k = 0; k < tols.size(); ++k) {
    CHECK(tols[k].converged);
    CHECK(tols[k].residual <= 100 * std::pow(10.0, -6.0 - 2.0 * k));
    if (k > 0) CHECK(tols[k].residual < tols[k - 1].residual);
  }
}

TEST_CASE("worker count honours the environment") {
  setenv("STEADY_DEFORM_THREADS", "3", 1);
  CHECK(worker_threads() == 3);
  setenv("STEADY_DEFORM_THREADS", "zero", 1);
  CHECK(worker_threads() == 1);
  unsetenv("STEADY_DEFORM_THREADS");
  CHECK(worker_threads() >= 1);
  CHECK(command_from_string("sweep") == Command::sweep);
  CHECK_THROWS(command_from_string("plot"));
}
