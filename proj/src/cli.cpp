#include "qbline/cli.hpp"

#include "qbline/battery.hpp"
#include "qbline/chain.hpp"
#include "qbline/errors.hpp"
#include "qbline/protocols.hpp"
#include "qbline/table.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace qbline::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Resolved {
  ChainConfig chain;
  ChargerSpec charger;
  WMode w_mode = WMode::Exact;
  TauRule rule = TauRule::GlobalMax;
  ProtocolOptions options;
};

CouplingProfile make_profile(const RunConfig& rc) {
  if (rc.profile == "uniform") return UniformCoupling{};
  if (rc.profile == "parabolic") return ParabolicCoupling{};
  if (rc.profile == "custom") return CustomCoupling{rc.couplings};
  throw ConfigError("unknown profile '" + rc.profile + "' (expected uniform, parabolic or custom)");
}

ChargerSpec make_charger(const RunConfig& rc) {
  if (rc.scenario == "single") return SinglePhoton{};
  if (rc.scenario == "superposition") return Superposition{rc.beta, rc.phi};
  if (rc.scenario == "wline") {
    WLine w;
    for (double c : rc.line_coeffs) w.d.emplace_back(c, 0.0);
    return w;
  }
  throw ConfigError("unknown scenario '" + rc.scenario +
                    "' (expected single, superposition or wline)");
}

Resolved resolve(const RunConfig& rc, int n, bool figure_preset) {
  Resolved r;
  r.chain = ChainConfig{n, rc.omega, 1.0, make_profile(rc)};
  validate(r.chain);
  r.charger = make_charger(rc);
  r.w_mode = rc.w_mode.empty() ? (figure_preset ? WMode::PaperLiteral : WMode::Exact)
                               : parse_w_mode(rc.w_mode);
  const bool wline = std::holds_alternative<WLine>(r.charger);
  r.rule = rc.tau_rule.empty() ? (wline ? TauRule::FirstLocalMax : TauRule::GlobalMax)
                               : parse_tau_rule(rc.tau_rule);
  if (rc.coarse_step <= 0.0) throw ConfigError("coarse step must be positive");
  r.options.coarse_step = rc.coarse_step;
  r.options.window = rc.window;
  r.options.check_window = rc.check_window;
  return r;
}

json parameters_json(const RunConfig& rc) {
  json p;
  p["command"] = rc.command;
  p["n"] = rc.n;
  p["n_min"] = rc.n_min;
  p["n_max"] = rc.n_max;
  p["omega_over_j"] = rc.omega;
  p["profile"] = rc.profile;
  p["couplings"] = rc.couplings;
  p["scenario"] = rc.scenario;
  p["beta"] = rc.beta;
  p["phi"] = rc.phi;
  p["line_coeffs"] = rc.line_coeffs;
  p["t_max"] = rc.t_max;
  p["dt"] = rc.dt;
  p["window"] = rc.window ? json(*rc.window) : json(nullptr);
  p["coarse_step"] = rc.coarse_step;
  p["check_window"] = rc.check_window;
  p["beta_min"] = rc.beta_min;
  p["beta_max"] = rc.beta_max;
  p["beta_step"] = rc.beta_step;
  p["betas"] = rc.betas;
  p["figure"] = rc.figure;
  p["format"] = rc.format;
  return p;
}

json base_meta(const RunConfig& rc, const std::string& command_line) {
  const Tolerances tol;
  const ProtocolOptions opts;
  json m;
  m["artifact"] = "qbline";
  m["version"] = kVersion;
  m["command_line"] = command_line;
  m["parameters"] = parameters_json(rc);
  m["tolerances"] = {{"unitarity", tol.unitarity},
                     {"cross_validation", tol.cross_validation},
                     {"ode_target", tol.ode_target},
                     {"refine_tol", opts.refine_tol},
                     {"zero_threshold", opts.zero_threshold},
                     {"noise_floor", opts.noise_floor}};
  m["units"] = {{"energy", "omega"}, {"time", "Jt"}, {"power", "omega*J"}};
  return m;
}

void annotate(json& meta, const Resolved& r) {
  meta["profile"] = profile_name(r.chain.profile);
  meta["scenario"] = charger_name(r.charger);
  meta["w_mode"] = to_string(r.w_mode);
  meta["tau_rule"] = to_string(r.rule);
  meta["window_rule"] = r.options.window ? "fixed" : "max(20, 4n)";
  meta["coarse_step"] = coarse_step_for(r.chain, r.options);
}

fs::path output_path(const std::string& path) {
  fs::path p(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) return fs::path(dir) / p;
  }
  return p;
}

fs::path figure_dir(const RunConfig& rc) {
  if (!rc.output_dir.empty()) return rc.output_dir;
  if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) return dir;
  return ".";
}

void emit(const Table& table, const RunConfig& rc, std::ostream& out) {
  const Format format = parse_format(rc.format);
  if (rc.output.empty())
    write_table(table, format, out);
  else
    write_table(table, format, output_path(rc.output));
}

std::vector<double> beta_grid(const RunConfig& rc) {
  if (!rc.betas.empty()) return rc.betas;
  if (!(rc.beta_step > 0.0) || rc.beta_max < rc.beta_min)
    throw ConfigError("beta grid needs beta_step > 0 and beta_max >= beta_min");
  std::vector<double> grid;
  const auto count = static_cast<long>(std::floor((rc.beta_max - rc.beta_min) / rc.beta_step + 1e-9));
  for (long k = 0; k <= count; ++k) grid.push_back(rc.beta_min + double(k) * rc.beta_step);
  return grid;
}

Table prefix_column(const Table& t, const std::string& name, double value) {
  std::vector<std::string> cols{name};
  cols.insert(cols.end(), t.columns.begin(), t.columns.end());
  Table out(cols);
  out.data[0].assign(t.rows(), value);
  for (std::size_t c = 0; c < t.columns.size(); ++c) out.data[c + 1] = t.data[c];
  out.meta = t.meta;
  return out;
}

void append_rows(Table& dst, const Table& src) {
  if (dst.columns.empty()) {
    dst.columns = src.columns;
    dst.data.assign(src.columns.size(), {});
  }
  for (std::size_t c = 0; c < src.columns.size(); ++c)
    dst.data[c].insert(dst.data[c].end(), src.data[c].begin(), src.data[c].end());
}

Table select_columns(const Table& t, const std::vector<std::string>& names) {
  Table out(names);
  for (std::size_t c = 0; c < names.size(); ++c) out.data[c] = t.column(names[c]);
  out.meta = t.meta;
  return out;
}

// ---------------------------------------------------------------- commands

void cmd_spectrum(const RunConfig& rc, const json& meta, std::ostream& out) {
  const Resolved r = resolve(rc, rc.n, false);
  Eigen::VectorXd freqs;
  std::string method;
  if (is_uniform(r.chain)) {
    freqs = mode_basis(r.chain).omega_r;
    method = "analytic";
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(build_hamiltonian(r.chain),
                                                          Eigen::EigenvaluesOnly);
    freqs = solver.eigenvalues().reverse();
    method = "numeric";
  }
  Table t({"r", "omega_r_over_j", "omega_r_over_omega"});
  for (Eigen::Index i = 0; i < freqs.size(); ++i)
    t.add_row({double(i + 1), freqs(i) / r.chain.j, freqs(i) / r.chain.omega});
  t.meta = meta;
  t.meta["profile"] = profile_name(r.chain.profile);
  t.meta["spectrum_method"] = method;
  emit(t, rc, out);
}

void cmd_sweep(const RunConfig& rc, const json& meta, std::ostream& out) {
  const Resolved r = resolve(rc, rc.n, false);
  Table t = to_table(time_series(r.chain, r.charger, {rc.t_max, rc.dt}, r.w_mode));
  t.meta = meta;
  annotate(t.meta, r);
  emit(t, rc, out);
}

void cmd_scan(const RunConfig& rc, const json& meta, std::ostream& out) {
  const Resolved r = resolve(rc, std::max(rc.n_min, 3), false);
  Table t = to_table(scan_n(r.chain, r.charger, rc.n_min, rc.n_max, r.rule, r.w_mode, r.options));
  t.meta = meta;
  annotate(t.meta, r);
  emit(t, rc, out);
}

void cmd_critical_n(const RunConfig& rc, const json& meta, std::ostream& out) {
  const Resolved r = resolve(rc, 3, false);
  const CriticalN result = critical_n(r.chain, r.charger, r.rule, rc.n_max, r.w_mode, r.options,
                                      std::max(rc.n_min, 3));
  json line;
  line["n_c"] = result.n_c ? json(*result.n_c) : json(nullptr);
  line["rule"] = to_string(r.rule);
  line["t_max_rule"] = r.options.window ? "fixed" : "max(20, 4n)";
  line["scenario"] = charger_name(r.charger);
  line["profile"] = profile_name(r.chain.profile);
  line["n_min"] = std::max(rc.n_min, 3);
  line["n_max"] = rc.n_max;
  line["zero_threshold"] = r.options.zero_threshold;
  std::vector<int> unstable;
  for (const auto& s : result.scan)
    if (!s.window_stable) unstable.push_back(s.n);
  line["window_unstable_n"] = unstable;
  line["meta"] = meta;
  const std::string text = line.dump() + "\n";
  if (rc.output.empty()) {
    out << text;
  } else {
    std::ofstream f(output_path(rc.output), std::ios::binary | std::ios::trunc);
    if (!(f << text)) throw std::runtime_error("cannot write '" + rc.output + "'");
  }
}

void cmd_beta_sweep(const RunConfig& rc, const json& meta, std::ostream& out) {
  RunConfig sup = rc;
  sup.scenario = "superposition";
  const Resolved r = resolve(sup, rc.n, false);
  Table t = to_table(beta_sweep(r.chain, beta_grid(rc), rc.phi, r.rule, r.options));
  t.meta = meta;
  annotate(t.meta, r);
  emit(t, rc, out);
}

struct FigureOutput {
  std::string name;
  Table table;
};

Table series_panel(const RunConfig& rc, const std::vector<int>& ns, double t_max, double dt,
                   std::string* w_mode_out = nullptr) {
  Table all;
  for (int n : ns) {
    const Resolved r = resolve(rc, n, true);
    if (w_mode_out) *w_mode_out = to_string(r.w_mode);
    append_rows(all, prefix_column(to_table(time_series(r.chain, r.charger, {t_max, dt}, r.w_mode)),
                                   "n", double(n)));
  }
  return all;
}

std::vector<int> unstable_n(const std::vector<ScanSummary>& scan) {
  std::vector<int> out;
  for (const auto& s : scan)
    if (!s.window_stable) out.push_back(s.n);
  return out;
}

std::vector<FigureOutput> figure_tables(const RunConfig& base, const json& meta) {
  RunConfig rc = base;
  std::vector<FigureOutput> outputs;
  auto finish = [&](const std::string& name, Table t, const json& extra) {
    t.meta = meta;
    t.meta["figure"] = base.figure;
    t.meta["panel"] = name;
    for (const auto& [k, v] : extra.items()) t.meta[k] = v;
    outputs.push_back({name, std::move(t)});
  };

  switch (base.figure) {
    case 2: {
      rc.scenario = "single";
      rc.profile = "uniform";
      finish("fig2_series", series_panel(rc, {3, 15, 30}, 20.0, 0.01),
             {{"scenario", "single"}, {"profile", "uniform"}, {"t_max", 20.0}, {"dt", 0.01}});
      break;
    }
    case 3: {
      rc.scenario = "single";
      rc.profile = "uniform";
      const Resolved r = resolve(rc, 3, true);
      const auto scan = scan_n(r.chain, r.charger, 3, 50, TauRule::GlobalMax, r.w_mode, r.options);
      Table t = select_columns(to_table(scan), {"n", "tau_bar", "e_over_omega", "erg_over_omega"});
      json extra;
      annotate(extra, r);
      extra["window_unstable_n"] = unstable_n(scan);
      finish("fig3", std::move(t), extra);
      break;
    }
    case 4: {
      rc.scenario = "superposition";
      rc.profile = "uniform";
      auto beta_scan = [&](const std::vector<double>& betas, int n_max) {
        Table all;
        json extra;
        std::vector<json> unstable;
        for (double beta : betas) {
          rc.beta = beta;
          const Resolved r = resolve(rc, 3, true);
          const auto scan = scan_n(r.chain, r.charger, 3, n_max, TauRule::GlobalMax, r.w_mode,
                                   r.options);
          append_rows(all, prefix_column(select_columns(to_table(scan),
                                                        {"n", "tau_bar", "e_over_omega",
                                                         "erg_over_omega", "ratio"}),
                                         "beta", beta));
          annotate(extra, r);
          unstable.push_back({{"beta", beta}, {"n", unstable_n(scan)}});
        }
        extra.erase("scenario");
        extra["scenario"] = "superposition";
        extra["betas"] = betas;
        extra["window_unstable"] = unstable;
        return std::pair{all, extra};
      };
      {
        auto [t, extra] = beta_scan({0.0, 0.5, 1.0}, 50);
        finish("fig4_ab", std::move(t), extra);
      }
      {
        auto [t, extra] = beta_scan({0.01, 0.05, 0.1}, 60);
        finish("fig4_c", std::move(t), extra);
      }
      {
        Table all;
        std::vector<double> grid;
        for (int k = 0; k <= 150; ++k) grid.push_back(0.01 * k);
        json extra;
        for (int n : {20, 35, 50}) {
          const Resolved r = resolve(rc, n, true);
          append_rows(all, prefix_column(to_table(beta_sweep(r.chain, grid, rc.phi,
                                                             TauRule::GlobalMax, r.options)),
                                         "n", double(n)));
          annotate(extra, r);
        }
        extra["scenario"] = "superposition";
        finish("fig4_d", std::move(all), extra);
      }
      break;
    }
    case 5: {
      rc.scenario = "wline";
      rc.profile = "uniform";
      std::string w_mode;
      Table series = series_panel(rc, {6, 8, 10}, 20.0, 0.01, &w_mode);
      finish("fig5_series", std::move(series),
             {{"scenario", "wline"}, {"w_mode", w_mode}, {"t_max", 20.0}, {"dt", 0.01}});
      const Resolved r = resolve(rc, 3, true);
      const auto scan = scan_n(r.chain, r.charger, 3, 20, TauRule::FirstLocalMax, r.w_mode,
                               r.options);
      json extra;
      annotate(extra, r);
      extra["window_unstable_n"] = unstable_n(scan);
      finish("fig5_times",
             select_columns(to_table(scan),
                            {"n", "tau_bar", "tau_erg", "e_over_omega", "erg_over_omega"}),
             extra);
      break;
    }
    case 6: {
      rc.scenario = "single";
      rc.profile = "parabolic";
      finish("fig6_inset", series_panel(rc, {3, 15, 30}, 4.0, 1e-3),
             {{"scenario", "single"}, {"profile", "parabolic"}, {"t_max", 4.0}, {"dt", 1e-3}});
      const Resolved r = resolve(rc, 3, true);
      const auto scan = scan_n(r.chain, r.charger, 3, 50, TauRule::GlobalMax, r.w_mode, r.options);
      json extra;
      annotate(extra, r);
      extra["window_unstable_n"] = unstable_n(scan);
      finish("fig6_ratio",
             select_columns(to_table(scan),
                            {"n", "tau_bar", "e_over_omega", "erg_over_omega", "ratio"}),
             extra);
      break;
    }
    default:
      throw ConfigError("figure preset must be one of 2, 3, 4, 5, 6");
  }
  return outputs;
}

void cmd_figure(const RunConfig& rc, const json& meta, std::ostream& out) {
  const Format format = parse_format(rc.format);
  const auto outputs = figure_tables(rc, meta);
  const fs::path dir = figure_dir(rc);
  for (const auto& o : outputs) {
    const fs::path path = dir / (o.name + extension(format));
    write_table(o.table, format, path);
    out << path.string() << "\n";
  }
}

// ------------------------------------------------------------ config file

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  throw ConfigError("config values must be scalars or arrays of scalars");
}

// Keys mirror long flag names ('_' and '-' are interchangeable). Flags given
// on the command line take precedence.
void apply_config_file(CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed config file '" + path + "': " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : doc.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    if (name == "config") throw ConfigError("config files cannot nest");
    CLI::Option* opt = sub->get_option_no_throw("--" + name);
    if (!opt) throw ConfigError("unknown config key '" + key + "' for " + sub->get_name());
    if (opt->count() > 0) continue;
    if (value.is_array()) {
      for (const auto& item : value) opt->add_result(scalar_text(item));
    } else {
      opt->add_result(scalar_text(value));
    }
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw ConfigError("bad value for config key '" + key + "': " + e.what());
    }
  }
}

std::string join(const std::vector<std::string>& args) {
  std::string s = "qbline";
  for (const auto& a : args) {
    s += ' ';
    s += a;
  }
  return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  std::string config_path;
  CLI::App app{"Quantum battery charged through a chain of coupled cavities", "qbline"};
  app.require_subcommand(1, 1);

  auto chain_opts = [&](CLI::App* s) {
    s->add_option("--omega", rc.omega, "cavity frequency in units of J")->capture_default_str();
    s->add_option("--profile", rc.profile, "uniform | parabolic | custom")->capture_default_str();
    s->add_option("--couplings", rc.couplings, "custom couplings in units of J (n-1 values)")
        ->delimiter(',');
    s->add_option("--config", config_path, "JSON file whose keys mirror the flags");
  };
  auto scenario_opts = [&](CLI::App* s) {
    s->add_option("--scenario", rc.scenario, "single | superposition | wline")
        ->capture_default_str();
    s->add_option("--beta", rc.beta, "superposition weight of the vacuum")->capture_default_str();
    s->add_option("--phi", rc.phi, "superposition phase")->capture_default_str();
    s->add_option("--line-coeffs", rc.line_coeffs, "real W-line coefficients (n-2 values)")
        ->delimiter(',');
    s->add_option("--w-mode", rc.w_mode, "paper_literal | exact");
  };
  auto search_opts = [&](CLI::App* s) {
    s->add_option("--tau-rule", rc.tau_rule, "global_max | first_local_max");
    s->add_option("--window", rc.window, "Jt search window (default max(20, 4n))");
    s->add_option("--coarse-step", rc.coarse_step, "coarse Jt step")->capture_default_str();
    s->add_flag("!--no-window-check", rc.check_window, "skip the doubled-window rerun");
  };
  auto output_opts = [&](CLI::App* s) {
    s->add_option("--format", rc.format, "csv | json")->capture_default_str();
    s->add_option("--output,-o", rc.output, "output file (default stdout)");
  };

  auto* spectrum = app.add_subcommand("spectrum", "single-particle eigenfrequencies");
  spectrum->add_option("--n", rc.n, "chain length")->capture_default_str();
  chain_opts(spectrum);
  output_opts(spectrum);

  auto* sweep = app.add_subcommand("sweep", "energy, ergotropy and power versus Jt");
  sweep->add_option("--n", rc.n, "chain length")->capture_default_str();
  sweep->add_option("--t-max", rc.t_max, "last sample time Jt")->capture_default_str();
  sweep->add_option("--dt", rc.dt, "sample spacing")->capture_default_str();
  chain_opts(sweep);
  scenario_opts(sweep);
  output_opts(sweep);

  auto* scan = app.add_subcommand("scan", "quantities at maximum power versus n");
  scan->add_option("--n-min", rc.n_min)->capture_default_str();
  scan->add_option("--n-max", rc.n_max)->capture_default_str();
  chain_opts(scan);
  scenario_opts(scan);
  search_opts(scan);
  output_opts(scan);

  auto* crit = app.add_subcommand("critical-n", "smallest n beyond which ergotropy vanishes");
  crit->add_option("--n-min", rc.n_min)->capture_default_str();
  crit->add_option("--n-max", rc.n_max)->capture_default_str();
  chain_opts(crit);
  scenario_opts(crit);
  search_opts(crit);
  crit->add_option("--output,-o", rc.output, "output file (default stdout)");

  auto* beta = app.add_subcommand("beta-sweep", "superposition charger versus beta");
  beta->add_option("--n", rc.n, "chain length")->capture_default_str();
  beta->add_option("--phi", rc.phi)->capture_default_str();
  beta->add_option("--beta-min", rc.beta_min)->capture_default_str();
  beta->add_option("--beta-max", rc.beta_max)->capture_default_str();
  beta->add_option("--beta-step", rc.beta_step)->capture_default_str();
  beta->add_option("--betas", rc.betas, "explicit beta list")->delimiter(',');
  chain_opts(beta);
  search_opts(beta);
  output_opts(beta);

  auto* figure = app.add_subcommand("figure", "reproduce the data behind a figure preset");
  figure->add_option("id", rc.figure, "2 | 3 | 4 | 5 | 6")->required();
  figure->add_option("--format", rc.format, "csv | json")->capture_default_str();
  figure->add_option("--output-dir", rc.output_dir, "directory for the preset files");
  figure->add_option("--config", config_path, "JSON file whose keys mirror the flags");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      for (auto* s : app.get_subcommands()) out << s->help();
      return kExitOk;
    }
    err << "qbline: " << e.what() << "\n" << "run 'qbline --help' for usage\n";
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  rc.command = sub->get_name();
  try {
    if (!config_path.empty()) apply_config_file(sub, config_path);
    json meta = base_meta(rc, join(args));
    if (!config_path.empty()) meta["config_file"] = config_path;

    if (rc.command == "spectrum") cmd_spectrum(rc, meta, out);
    else if (rc.command == "sweep") cmd_sweep(rc, meta, out);
    else if (rc.command == "scan") cmd_scan(rc, meta, out);
    else if (rc.command == "critical-n") cmd_critical_n(rc, meta, out);
    else if (rc.command == "beta-sweep") cmd_beta_sweep(rc, meta, out);
    else if (rc.command == "figure") cmd_figure(rc, meta, out);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "qbline: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UnsupportedProfileError& e) {
    err << "qbline: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "qbline: " << e.what() << "\n";
    return kExitUsage;
  } catch (const PreconditionError& e) {
    err << "qbline: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "qbline: error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace qbline::cli
