#include "qbline/battery.hpp"

#include "qbline/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qbline {

namespace {

constexpr double kHermitianTol = 1e-12;
constexpr double kTraceTol = 1e-10;
constexpr double kPositivityTol = 1e-10;
constexpr double kErgotropyFloor = -1e-12;
constexpr double kBreakdownTol = -1e-8;
constexpr double kUnitIntervalSlack = 1e-12;

bool is_diagonal(const Eigen::MatrixXcd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k)
      if (i != k && m(i, k) != Complex{0.0, 0.0}) return false;
  return true;
}

double clamp_unit(double x, const char* what) {
  if (!(x >= -kUnitIntervalSlack && x <= 1.0 + kUnitIntervalSlack)) {
    std::ostringstream msg;
    msg << what << " = " << x << " outside [0, 1]";
    throw DomainError(msg.str());
  }
  return std::clamp(x, 0.0, 1.0);
}

}  // namespace

Complex Superposition::c0() const {
  return std::polar(beta, phi) / std::sqrt(1.0 + beta * beta);
}

double Superposition::c1() const { return 1.0 / std::sqrt(1.0 + beta * beta); }

std::string charger_name(const ChargerSpec& charger) {
  switch (charger.index()) {
    case 0: return "single";
    case 1: return "superposition";
    default: return "wline";
  }
}

void validate(const ChargerSpec& charger, int n) {
  if (const auto* s = std::get_if<Superposition>(&charger)) {
    if (!(s->beta >= 0.0) || !std::isfinite(s->beta))
      throw ConfigError("superposition beta must be nonnegative and finite");
    if (!std::isfinite(s->phi)) throw ConfigError("superposition phi must be finite");
  } else if (const auto* w = std::get_if<WLine>(&charger)) {
    if (n < 3) throw ConfigError("W-line scenario needs n >= 3 (at least one line cavity)");
    if (!w->d.empty()) {
      if (w->d.size() != static_cast<std::size_t>(n - 2)) {
        std::ostringstream msg;
        msg << "W-line coefficients need n-2 = " << n - 2 << " entries, got " << w->d.size();
        throw ConfigError(msg.str());
      }
      double norm = 0.0;
      for (const Complex& c : w->d) norm += std::norm(c);
      if (std::abs(norm - 1.0) > 1e-12) throw ConfigError("W-line coefficients must be normalized");
    }
  }
}

std::vector<Complex> line_coefficients(const WLine& line, int n) {
  validate(ChargerSpec{line}, n);
  if (!line.d.empty()) return line.d;
  return std::vector<Complex>(n - 2, Complex{1.0 / std::sqrt(double(n - 2)), 0.0});
}

std::string to_string(WMode mode) {
  return mode == WMode::PaperLiteral ? "paper_literal" : "exact";
}

WMode parse_w_mode(const std::string& text) {
  if (text == "paper_literal" || text == "literal") return WMode::PaperLiteral;
  if (text == "exact") return WMode::Exact;
  throw ConfigError("unknown W mode '" + text + "' (expected paper_literal or exact)");
}

void check_invariants(const BatteryState& state) {
  const auto& rho = state.rho;
  if (rho.rows() != rho.cols() || rho.rows() != state.levels.size() || rho.rows() < 2)
    throw ConsistencyError("battery state dimensions are inconsistent");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol)
    throw ConsistencyError("battery density matrix is not Hermitian");
  const Complex tr = rho.trace();
  if (std::abs(tr - 1.0) > kTraceTol) {
    std::ostringstream msg;
    msg << "battery density matrix has trace " << tr.real();
    throw ConsistencyError(msg.str());
  }
  const Eigen::VectorXd ev = eigenvalues(state);
  if (ev.minCoeff() < -kPositivityTol) {
    std::ostringstream msg;
    msg << "battery density matrix has negative eigenvalue " << ev.minCoeff();
    throw ConsistencyError(msg.str());
  }
}

BatteryState make_battery_state(Eigen::MatrixXcd rho, double omega) {
  BatteryState state;
  state.levels = Eigen::VectorXd::LinSpaced(rho.rows(), 0.0, double(rho.rows() - 1)) * omega;
  state.rho = std::move(rho);
  check_invariants(state);
  return state;
}

Eigen::VectorXd eigenvalues(const BatteryState& state) {
  const auto& rho = state.rho;
  const Eigen::Index d = rho.rows();
  Eigen::VectorXd ev(d);
  if (is_diagonal(rho)) {
    ev = rho.diagonal().real();
  } else if (d == 2) {
    const double a = rho(0, 0).real();
    const double b = rho(1, 1).real();
    const double tr = a + b;
    const double disc = std::sqrt((a - b) * (a - b) + 4.0 * std::norm(rho(0, 1)));
    ev << 0.5 * (tr - disc), 0.5 * (tr + disc);
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho, Eigen::EigenvaluesOnly);
    ev = solver.eigenvalues();
  }
  std::sort(ev.begin(), ev.end());
  return ev;
}

BatteryState battery_state_single_photon(Complex g_battery, double omega) {
  const double p1 = std::norm(g_battery);
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(2, 2);
  rho(0, 0) = 1.0 - p1;
  rho(1, 1) = p1;
  return make_battery_state(std::move(rho), omega);
}

BatteryState battery_state_single_photon(const PropagatorMatrix& u, double omega) {
  const Eigen::Index n = u.u.rows();
  if (n < 2) throw ConfigError("propagator must describe a chain with n >= 2");
  return battery_state_single_photon(u.u(n - 1, 0), omega);
}

BatteryState battery_state_superposition(Complex g_battery, const Superposition& spec,
                                         double omega) {
  validate(ChargerSpec{spec}, 2);
  const Complex c0 = spec.c0();
  const double c1 = spec.c1();
  const double g2 = std::norm(g_battery);
  Eigen::MatrixXcd rho(2, 2);
  rho(0, 0) = std::norm(c0) + c1 * c1 * (1.0 - g2);
  rho(0, 1) = c0 * c1 * std::conj(g_battery);
  rho(1, 0) = std::conj(c0) * c1 * g_battery;
  rho(1, 1) = c1 * c1 * g2;
  return make_battery_state(std::move(rho), omega);
}

BatteryState battery_state_superposition(const PropagatorMatrix& u, const Superposition& spec,
                                         double omega) {
  const Eigen::Index n = u.u.rows();
  if (n < 2) throw ConfigError("propagator must describe a chain with n >= 2");
  return battery_state_superposition(u.u(n - 1, 0), spec, omega);
}

BatteryState battery_state_wstate(const Eigen::VectorXcd& f, const Eigen::VectorXcd& g,
                                  WMode mode, double omega) {
  const Eigen::Index n = f.size();
  if (n < 3 || g.size() != n) throw ConfigError("W-line amplitudes need matching length n >= 3");
  const Complex fn = f(n - 1);
  const Complex gn = g(n - 1);
  double p1 = 0.0;
  double p2 = 0.0;
  if (mode == WMode::PaperLiteral) {
    // Populations exactly as printed: product amplitudes f_m g_N, no
    // symmetrization and no sqrt(2) on the doubly occupied battery.
    for (Eigen::Index m = 0; m + 1 < n; ++m) p1 += std::norm(f(m) * gn);
    p2 = std::norm(fn * gn);
  } else {
    for (Eigen::Index p = 0; p + 1 < n; ++p) p1 += std::norm(f(p) * gn + fn * g(p));
    p2 = 2.0 * std::norm(fn * gn);
  }
  const double p0 = 1.0 - p1 - p2;
  if (mode == WMode::PaperLiteral && p0 < kBreakdownTol) {
    std::ostringstream msg;
    msg << "printed W-line populations give negative vacuum weight " << p0;
    throw FormulaBreakdownError(msg.str(), p0);
  }
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(3, 3);
  rho(0, 0) = p0;
  rho(1, 1) = p1;
  rho(2, 2) = p2;
  return make_battery_state(std::move(rho), omega);
}

BatteryState battery_state_wstate(const PropagatorMatrix& u, const WLine& line, WMode mode,
                                  double omega) {
  const int n = static_cast<int>(u.u.rows());
  const auto d = line_coefficients(line, n);
  const Eigen::VectorXcd f = u.u.col(0);
  Eigen::VectorXcd g = Eigen::VectorXcd::Zero(n);
  for (int r = 1; r + 1 < n; ++r) g += d[r - 1] * u.u.col(r);
  return battery_state_wstate(f, g, mode, omega);
}

double energy(const BatteryState& state) {
  return state.levels.dot(state.rho.diagonal().real());
}

PassiveState passive_state(const BatteryState& state) {
  PassiveState out;
  Eigen::VectorXd ev = eigenvalues(state);
  out.populations = ev.reverse();
  out.levels = state.levels;
  std::sort(out.levels.begin(), out.levels.end());
  out.sigma = out.populations.asDiagonal();
  out.energy = out.levels.dot(out.populations);
  return out;
}

double ergotropy(const BatteryState& state) {
  const double value = energy(state) - passive_state(state).energy;
  if (value < kErgotropyFloor) {
    std::ostringstream msg;
    msg << "negative ergotropy " << value << " beyond round-off";
    throw ConsistencyError(msg.str());
  }
  return std::max(0.0, value);
}

double ergotropy_closed_form_single(double g2, double omega) {
  g2 = clamp_unit(g2, "|G_N|^2");
  const double a = g2 - 0.5;
  return a > 0.0 ? omega * (2.0 * g2 - 1.0) : 0.0;
}

double ergotropy_closed_form_superposition(Complex g, double c1, double omega) {
  c1 = clamp_unit(c1, "c1");
  const double g2 = clamp_unit(std::norm(g), "|G_N|^2");
  const double c1sq = c1 * c1;
  const double root = std::sqrt(std::max(0.0, 1.0 - 4.0 * c1sq * c1sq * g2 * (1.0 - g2)));
  return omega * c1sq * g2 + 0.5 * omega * (root - 1.0);
}

}  // namespace qbline
