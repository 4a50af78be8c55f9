#ifndef STEADY_DEFORM_PIPELINE_HPP
#define STEADY_DEFORM_PIPELINE_HPP

#include "steady_deform/config.hpp"
#include "steady_deform/deform.hpp"
#include "steady_deform/verify.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace sdeform {

enum class Command { base, deform, verify, sweep };
Command command_from_string(const std::string& name);

/// Exit codes of a run.
constexpr int kExitOk = 0;
constexpr int kExitError = 1;
/// Non-convergence, or a converged result that fails a report check.
constexpr int kExitNotCertified = 2;

struct RunOutcome {
  int exit_code = kExitOk;
  std::string message;
  VerificationReport report;
  std::vector<std::string> files;
};

/**
 * base:   base.csv and report.json with the hypothesis checks.
 * deform: adds eta.csv, phi.csv, F.csv, psi_target.csv, iterations.log, plot.py and deformation checks.
 * verify: deform plus rigidity and hypothesis checks.
 * Hard errors are returned as exit code 1 with the message; nothing is thrown.
 */
RunOutcome run(const RunConfig& cfg, Command command, const std::function<void(const std::string&)>& log = {});

struct SweepRow {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
  double final_ratio = 0.0, max_ratio = 0.0;
  double residual = 0.0, jacobian = 0.0, boundary_constant = 0.0, f_deviation = 0.0;
  std::string error;
};

/// Deforms once per value of the parameter; runs are independent and may use several threads.
std::vector<SweepRow> sweep(const RunConfig& cfg, const std::string& parameter, const std::vector<double>& values,
                            int threads = 1);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& parameter, const std::string& path);
std::vector<SweepRow> read_sweep_csv(const std::string& path);

/// Worker count: STEADY_DEFORM_THREADS when set (at least 1), otherwise the hardware concurrency.
int worker_threads();

struct BaseTable {
  Eigen::ArrayXd y, psi0, dpsi0, F0, lambda;
};
void write_base_csv(const BaseState& state, const std::string& path);
BaseTable read_base_csv(const std::string& path);

std::vector<IterRecord> read_iterations_log(const std::string& path);

}  // namespace sdeform

#endif
