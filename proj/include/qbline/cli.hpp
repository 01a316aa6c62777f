#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qbline::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Parameters of one invocation. Defaults reproduce the reference settings:
// omega/J = 1, uniform coupling, equal-weight W state.
struct RunConfig {
  std::string command;
  int n = 3;
  int n_min = 3;
  int n_max = 50;
  double omega = 1.0;  // omega / J
  std::string profile = "uniform";
  std::vector<double> couplings;  // custom profile, units of J
  std::string scenario = "single";
  double beta = 0.5;
  double phi = 0.0;
  std::vector<double> line_coeffs;   // real W-line coefficients; empty = W state
  std::string w_mode;    // empty: paper_literal for figures, exact otherwise
  std::string tau_rule;  // empty: first_local_max for wline, global_max otherwise
  double t_max = 20.0;
  double dt = 1e-2;
  std::optional<double> window;
  double coarse_step = 1e-2;
  bool check_window = true;
  double beta_min = 0.0;
  double beta_max = 1.5;
  double beta_step = 0.05;
  std::vector<double> betas;
  int figure = 0;
  std::string format = "csv";
  std::string output;      // file path; empty = stdout
  std::string output_dir;  // figure presets; default $QBLINE_OUTPUT_DIR or "."
};

// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "QBLINE_OUTPUT_DIR";

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace qbline::cli
