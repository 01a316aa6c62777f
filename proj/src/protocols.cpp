#include "qbline/protocols.hpp"

#include "qbline/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

namespace qbline {

namespace {

std::string at_time(const std::string& what, double jt) {
  std::ostringstream msg;
  msg.precision(17);
  msg << what << " (at Jt = " << jt << ")";
  return msg.str();
}

// Golden-section search for a maximum of f on [a, b]. Returns (x, f(x)).
template <class F>
std::pair<double, double> golden_max(F&& f, double a, double b, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc > fd ? std::pair{c, fc} : std::pair{d, fd};
}

struct Coarse {
  std::vector<double> t;
  std::vector<double> v;
};

template <class F>
Coarse sample_coarse(F&& f, double step, double window) {
  const auto count = static_cast<std::size_t>(std::floor(window / step + 1e-9));
  Coarse out;
  out.t.reserve(count);
  out.v.reserve(count);
  for (std::size_t k = 1; k <= count; ++k) {
    const double t = double(k) * step;
    out.t.push_back(t);
    out.v.push_back(f(t));
  }
  return out;
}

// Indices of interior local maxima above the relative noise floor and the
// absolute floor.
std::vector<std::size_t> local_maxima(const Coarse& c, double rel_floor, double abs_floor) {
  std::vector<std::size_t> out;
  if (c.v.size() < 3) return out;
  const double vmax = *std::max_element(c.v.begin(), c.v.end());
  const double floor = std::max(rel_floor * vmax, abs_floor);
  for (std::size_t i = 1; i + 1 < c.v.size(); ++i) {
    if (c.v[i] > floor && c.v[i] >= c.v[i - 1] && c.v[i] > c.v[i + 1]) out.push_back(i);
  }
  return out;
}

template <class F>
std::pair<double, double> refine(F&& f, const Coarse& c, std::size_t i, double tol) {
  auto [x, fx] = golden_max(f, c.t[i - 1], c.t[i + 1], tol);
  if (fx < c.v[i]) return {c.t[i], c.v[i]};
  return {x, fx};
}

// Evaluates f(0..count-1) on worker threads; results keep input order.
template <class T, class F>
std::vector<T> parallel_map(std::size_t count, F&& f) {
  std::vector<T> results(count);
  std::vector<std::exception_ptr> errors(count);
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), count));
  auto work = [&](std::size_t w) {
    for (std::size_t i = w; i < count; i += workers) {
      try {
        results[i] = f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

ChainConfig with_length(const ChainConfig& base, int n) {
  ChainConfig c = base;
  c.n = n;
  return c;
}

}  // namespace

std::string to_string(TauRule rule) {
  return rule == TauRule::GlobalMax ? "global_max" : "first_local_max";
}

TauRule parse_tau_rule(const std::string& text) {
  if (text == "global_max" || text == "global") return TauRule::GlobalMax;
  if (text == "first_local_max" || text == "first") return TauRule::FirstLocalMax;
  throw ConfigError("unknown tau rule '" + text + "' (expected global_max or first_local_max)");
}

double default_window(int n) { return std::max(20.0, 4.0 * n); }

double coarse_step_for(const ChainConfig& config, const ProtocolOptions& options) {
  if (std::holds_alternative<ParabolicCoupling>(config.profile))
    return options.coarse_step / std::max(1.0, config.n / 10.0);
  const auto jp = couplings(config);
  const double j_max = *std::max_element(jp.begin(), jp.end());
  return options.coarse_step / std::max(1.0, j_max / config.j);
}

Scenario::Scenario(const ChainConfig& config, const ChargerSpec& charger, WMode w_mode)
    : evolution_(config), charger_(charger), w_mode_(w_mode) {
  validate(charger, config.n);
  if (const auto* w = std::get_if<WLine>(&charger_)) {
    const auto d = line_coefficients(*w, config.n);
    line_ = Eigen::VectorXcd::Zero(config.n);
    for (int r = 1; r + 1 < config.n; ++r) line_(r) = d[r - 1];
  }
}

BatteryState Scenario::state(double jt) const {
  const int n = evolution_.size();
  const double omega = config().omega;
  try {
    switch (charger_.index()) {
      case 0:
        return battery_state_single_photon(evolution_.amplitude(n - 1, 0, jt), omega);
      case 1:
        return battery_state_superposition(evolution_.amplitude(n - 1, 0, jt),
                                           std::get<Superposition>(charger_), omega);
      default: {
        const Eigen::VectorXcd f = evolution_.evolve(Eigen::VectorXcd::Unit(n, 0), jt);
        const Eigen::VectorXcd g = evolution_.evolve(line_, jt);
        return battery_state_wstate(f, g, w_mode_, omega);
      }
    }
  } catch (const FormulaBreakdownError& e) {
    throw FormulaBreakdownError(at_time(e.what(), jt), e.vacuum_population());
  } catch (const ConsistencyError& e) {
    throw ConsistencyError(at_time(e.what(), jt));
  } catch (const IntegrationError& e) {
    throw IntegrationError(at_time(e.what(), jt), e.achieved_error());
  }
}

Sample Scenario::sample(double jt) const {
  const BatteryState s = state(jt);
  const double omega = config().omega;
  try {
    return {energy(s) / omega, ergotropy(s) / omega};
  } catch (const ConsistencyError& e) {
    throw ConsistencyError(at_time(e.what(), jt));
  }
}

double Scenario::power(double jt) const {
  const BatteryState s = state(jt);
  return energy(s) / config().omega / jt;
}

TimeSeries time_series(const ChainConfig& config, const ChargerSpec& charger,
                       const TimeGrid& grid, WMode w_mode) {
  if (!(grid.t_max > 0.0) || !(grid.dt > 0.0) || grid.dt > grid.t_max || !std::isfinite(grid.t_max))
    throw ConfigError("time grid needs 0 < dt <= t_max");
  const Scenario scenario(config, charger, w_mode);
  const auto count = static_cast<std::size_t>(std::floor(grid.t_max / grid.dt + 1e-9));
  TimeSeries out;
  out.jt.reserve(count);
  out.e.reserve(count);
  out.erg.reserve(count);
  out.p.reserve(count);
  for (std::size_t k = 1; k <= count; ++k) {
    const double t = double(k) * grid.dt;
    const Sample s = scenario.sample(t);
    out.jt.push_back(t);
    out.e.push_back(s.e);
    out.erg.push_back(s.erg);
    out.p.push_back(s.e / t);
  }
  return out;
}

MaxPowerResult max_power_time(const Scenario& scenario, TauRule rule, double window,
                              const ProtocolOptions& options) {
  if (!(window > 0.0) || !std::isfinite(window)) throw ConfigError("search window must be positive");
  const double step = coarse_step_for(scenario.config(), options);
  auto power = [&](double t) { return scenario.power(t); };
  const Coarse coarse = sample_coarse(power, step, window);
  const auto candidates = local_maxima(coarse, options.noise_floor, 0.0);
  if (candidates.empty()) {
    std::ostringstream msg;
    msg << "no interior power maximum within Jt <= " << window << "; enlarge the window";
    throw WindowTooSmallError(msg.str(), window);
  }

  double best_t = 0.0;
  double best_p = -1.0;
  if (rule == TauRule::FirstLocalMax) {
    std::tie(best_t, best_p) = refine(power, coarse, candidates.front(), options.refine_tol);
  } else {
    for (std::size_t i : candidates) {
      const auto [t, p] = refine(power, coarse, i, options.refine_tol);
      if (p > best_p * (1.0 + 1e-12)) {
        best_t = t;
        best_p = p;
      }
    }
  }
  return {best_t, best_p, scenario.sample(best_t), window};
}

MaxPowerResult max_power_time(const ChainConfig& config, const ChargerSpec& charger,
                              TauRule rule, double window, WMode w_mode,
                              const ProtocolOptions& options) {
  return max_power_time(Scenario(config, charger, w_mode), rule, window, options);
}

std::optional<double> first_ergotropy_peak(const Scenario& scenario, double window,
                                           const ProtocolOptions& options) {
  const double step = coarse_step_for(scenario.config(), options);
  auto erg = [&](double t) { return scenario.sample(t).erg; };
  const Coarse coarse = sample_coarse(erg, step, window);
  const auto candidates = local_maxima(coarse, options.noise_floor, options.zero_threshold);
  if (candidates.empty()) return std::nullopt;
  return refine(erg, coarse, candidates.front(), options.refine_tol).first;
}

ScanSummary summarize(const ChainConfig& config, const ChargerSpec& charger, TauRule rule,
                      WMode w_mode, const ProtocolOptions& options) {
  const Scenario scenario(config, charger, w_mode);
  const double window = options.window.value_or(default_window(config.n));
  const MaxPowerResult mp = max_power_time(scenario, rule, window, options);

  ScanSummary out;
  out.n = config.n;
  out.tau_bar = mp.tau_bar;
  out.tau_erg = first_ergotropy_peak(scenario, window, options);
  out.e_at_tau = mp.at_tau.e;
  out.erg_at_tau = mp.at_tau.erg;
  out.ratio = out.e_at_tau < 1e-14 ? 0.0 : out.erg_at_tau / out.e_at_tau;
  out.window = window;
  if (options.check_window) {
    const MaxPowerResult doubled = max_power_time(scenario, rule, 2.0 * window, options);
    out.window_stable = std::abs(doubled.tau_bar - mp.tau_bar) <= 1e-6;
  }
  return out;
}

std::vector<ScanSummary> scan_n(const ChainConfig& base, const ChargerSpec& charger, int n_min,
                                int n_max, TauRule rule, WMode w_mode,
                                const ProtocolOptions& options) {
  if (n_min < 2 || n_max > 200 || n_min > n_max)
    throw ConfigError("n range must satisfy 2 <= n_min <= n_max <= 200");
  const auto count = static_cast<std::size_t>(n_max - n_min + 1);
  return parallel_map<ScanSummary>(count, [&](std::size_t i) {
    return summarize(with_length(base, n_min + static_cast<int>(i)), charger, rule, w_mode,
                     options);
  });
}

CriticalN critical_n(const ChainConfig& base, const ChargerSpec& charger, TauRule rule, int n_max,
                     WMode w_mode, const ProtocolOptions& options, int n_min) {
  if (n_max < 3) throw ConfigError("critical_n needs n_max >= 3");
  CriticalN out;
  out.scan = scan_n(base, charger, n_min, n_max, rule, w_mode, options);
  std::optional<int> n_c;
  for (auto it = out.scan.rbegin(); it != out.scan.rend(); ++it) {
    if (it->erg_at_tau >= options.zero_threshold) break;
    n_c = it->n;
  }
  out.n_c = n_c;
  return out;
}

std::vector<BetaRow> beta_sweep(const ChainConfig& config, const std::vector<double>& beta_grid,
                                double phi, TauRule rule, const ProtocolOptions& options) {
  for (double b : beta_grid)
    if (!(b >= 0.0)) throw ConfigError("beta grid must be nonnegative");
  ProtocolOptions opts = options;
  opts.check_window = false;
  return parallel_map<BetaRow>(beta_grid.size(), [&](std::size_t i) {
    const Superposition spec{beta_grid[i], phi};
    const Scenario scenario(config, spec, WMode::Exact);
    const double window = opts.window.value_or(default_window(config.n));
    const MaxPowerResult mp = max_power_time(scenario, rule, window, opts);
    BetaRow row;
    row.beta = beta_grid[i];
    row.tau_bar = mp.tau_bar;
    row.erg_at_tau = mp.at_tau.erg;
    row.e_at_tau = mp.at_tau.e;
    row.ratio = row.e_at_tau < 1e-14 ? 0.0 : row.erg_at_tau / row.e_at_tau;
    return row;
  });
}

}  // namespace qbline
