#include "steady_deform/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

int main(int argc, char** argv) {
  using namespace sdeform;
  CLI::App app{"Steady flows on deformed channels and annuli"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir;
  double tol = 0.0;
  int max_iters = 0;
  for (const char* name : {"base", "deform", "verify", "sweep"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--tol", tol, "iteration tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--max-iters", max_iters, "iteration cap")->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitError;
  }
  const std::string command_name = app.get_subcommands().front()->get_name();
  auto log = [](const std::string& s) { std::cerr << s << '\n'; };

  RunConfig cfg;
  try {
    cfg = parse_config(config_path);
    if (tol > 0.0) cfg = with_parameter(cfg, "deform.tol", tol);
    if (max_iters > 0) cfg = with_parameter(cfg, "deform.max_iters", max_iters);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }

  const Command command = command_from_string(command_name);
  if (command == Command::sweep) {
    try {
      if (cfg.sweep_parameter.empty()) throw ConfigError("sweep requires sweep.parameter");
      const auto rows = sweep(cfg, cfg.sweep_parameter, cfg.sweep_values, worker_threads());
      std::filesystem::create_directories(cfg.out_dir);
      const std::string path = (std::filesystem::path(cfg.out_dir) / "sweep.csv").string();
      write_sweep_csv(rows, cfg.sweep_parameter, path);
      for (const SweepRow& r : rows)
        std::cerr << cfg.sweep_parameter << '=' << r.value << ' '
                  << (r.error.empty() ? (r.converged ? "converged" : "not converged") : "error: " + r.error)
                  << " iterations=" << r.iterations << '\n';
      std::cout << "wrote " << path << '\n';
      return kExitOk;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitError;
    }
  }

  const RunOutcome out = run(cfg, command, log);
  if (out.exit_code == kExitError)
    std::cerr << "error: " << out.message << '\n';
  else
    std::cout << out.message << '\n';
  return out.exit_code;
}
