#pragma once

// Time sweeps and parameter scans built on the battery-state builders.

#include "qbline/battery.hpp"
#include "qbline/chain.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qbline {

enum class TauRule { GlobalMax, FirstLocalMax };

std::string to_string(TauRule rule);
TauRule parse_tau_rule(const std::string& text);

struct ProtocolOptions {
  double coarse_step = 1e-2;     // Jt step of the coarse scan (uniform chains)
  double refine_tol = 1e-8;      // absolute Jt tolerance of golden-section refinement
  double zero_threshold = 1e-12; // ergotropy below this (units of omega) counts as zero
  // Candidates for a local maximum must exceed this fraction of the largest
  // sampled value. At small Jt the battery amplitude is O(t^(n-1)) and its
  // round-off ripple would otherwise register as spurious maxima.
  double noise_floor = 1e-9;
  std::optional<double> window;  // Jt search window; default max(20, 4n)
  bool check_window = true;      // rerun with a doubled window and report stability
};

double default_window(int n);

// Coarse step actually used for a chain: parabolic and other strong-coupling
// profiles oscillate faster, so the step shrinks with the largest coupling.
double coarse_step_for(const ChainConfig& config, const ProtocolOptions& options);

struct Sample {
  double e = 0.0;    // energy / omega
  double erg = 0.0;  // ergotropy / omega
};

// A chain, a charger and a W-mode bound together for repeated evaluation.
class Scenario {
 public:
  Scenario(const ChainConfig& config, const ChargerSpec& charger, WMode w_mode);

  BatteryState state(double jt) const;
  Sample sample(double jt) const;
  double power(double jt) const;  // (energy / omega) / Jt

  const ChainConfig& config() const { return evolution_.config(); }
  const ChargerSpec& charger() const { return charger_; }
  WMode w_mode() const { return w_mode_; }

 private:
  ChainEvolution evolution_;
  ChargerSpec charger_;
  WMode w_mode_;
  Eigen::VectorXcd line_;  // padded W-line coefficients (length n)
};

struct TimeGrid {
  double t_max = 20.0;
  double dt = 1e-2;
};

struct TimeSeries {
  std::vector<double> jt;
  std::vector<double> e;    // energy / omega
  std::vector<double> erg;  // ergotropy / omega
  std::vector<double> p;    // power / (omega J)
};

TimeSeries time_series(const ChainConfig& config, const ChargerSpec& charger,
                       const TimeGrid& grid, WMode w_mode);

struct MaxPowerResult {
  double tau_bar = 0.0;
  double power = 0.0;
  Sample at_tau;
  double window = 0.0;
};

MaxPowerResult max_power_time(const Scenario& scenario, TauRule rule, double window,
                              const ProtocolOptions& options = {});
MaxPowerResult max_power_time(const ChainConfig& config, const ChargerSpec& charger,
                              TauRule rule, double window, WMode w_mode,
                              const ProtocolOptions& options = {});

// Earliest interior local maximum of the ergotropy, refined; none if the
// ergotropy never exceeds the zero threshold inside the window.
std::optional<double> first_ergotropy_peak(const Scenario& scenario, double window,
                                           const ProtocolOptions& options = {});

struct ScanSummary {
  int n = 0;
  double tau_bar = 0.0;
  std::optional<double> tau_erg;
  double e_at_tau = 0.0;
  double erg_at_tau = 0.0;
  double ratio = 0.0;
  double window = 0.0;
  bool window_stable = true;  // tau_bar unchanged when the window is doubled
};

ScanSummary summarize(const ChainConfig& config, const ChargerSpec& charger, TauRule rule,
                      WMode w_mode, const ProtocolOptions& options = {});

// One summary per n in [n_min, n_max]; `base` supplies omega, j and profile.
std::vector<ScanSummary> scan_n(const ChainConfig& base, const ChargerSpec& charger, int n_min,
                                int n_max, TauRule rule, WMode w_mode,
                                const ProtocolOptions& options = {});

struct CriticalN {
  std::optional<int> n_c;
  std::vector<ScanSummary> scan;  // n = n_min..n_max
};

CriticalN critical_n(const ChainConfig& base, const ChargerSpec& charger, TauRule rule, int n_max,
                     WMode w_mode, const ProtocolOptions& options = {}, int n_min = 3);

struct BetaRow {
  double beta = 0.0;
  double tau_bar = 0.0;
  double erg_at_tau = 0.0;
  double e_at_tau = 0.0;
  double ratio = 0.0;
};

std::vector<BetaRow> beta_sweep(const ChainConfig& config, const std::vector<double>& beta_grid,
                                double phi, TauRule rule, const ProtocolOptions& options = {});

}  // namespace qbline
