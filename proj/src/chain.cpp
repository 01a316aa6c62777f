#include "qbline/chain.hpp"

#include "qbline/errors.hpp"

#include <algorithm>
#include <vector>
#include <cmath>
#include <numbers>
#include <sstream>

namespace qbline {

namespace {

constexpr Complex kI{0.0, 1.0};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double physical_time(const ChainConfig& config, double jt) { return jt / config.j; }

}  // namespace

void validate(const ChainConfig& config) {
  if (config.n < 2) throw ConfigError("chain length n must be >= 2");
  if (!(config.omega > 0.0) || !std::isfinite(config.omega))
    throw ConfigError("cavity frequency omega must be positive and finite");
  if (!(config.j > 0.0) || !std::isfinite(config.j))
    throw ConfigError("base coupling j must be positive and finite");
  if (const auto* custom = std::get_if<CustomCoupling>(&config.profile)) {
    if (custom->couplings.size() != static_cast<std::size_t>(config.n - 1)) {
      std::ostringstream msg;
      msg << "custom profile needs n-1 = " << config.n - 1 << " couplings, got "
          << custom->couplings.size();
      throw ConfigError(msg.str());
    }
    for (double c : custom->couplings) {
      if (!(c >= 0.0) || !std::isfinite(c))
        throw ConfigError("custom couplings must be nonnegative and finite");
    }
  }
}

std::vector<double> couplings(const ChainConfig& config) {
  validate(config);
  const int n = config.n;
  return std::visit(
      Overloaded{
          [&](const UniformCoupling&) { return std::vector<double>(n - 1, config.j); },
          [&](const ParabolicCoupling&) {
            std::vector<double> out(n - 1);
            for (int p = 1; p < n; ++p) out[p - 1] = config.j * std::sqrt(double(p) * (n - p));
            return out;
          },
          [&](const CustomCoupling& c) { return c.couplings; },
      },
      config.profile);
}

bool is_uniform(const ChainConfig& config) {
  const auto jp = couplings(config);
  return std::all_of(jp.begin(), jp.end(), [&](double c) { return c == jp.front(); }) &&
         jp.front() > 0.0;
}

std::string profile_name(const CouplingProfile& profile) {
  return std::visit(Overloaded{
                        [](const UniformCoupling&) { return std::string("uniform"); },
                        [](const ParabolicCoupling&) { return std::string("parabolic"); },
                        [](const CustomCoupling&) { return std::string("custom"); },
                    },
                    profile);
}

Eigen::MatrixXd build_hamiltonian(const ChainConfig& config) {
  const auto jp = couplings(config);
  const int n = config.n;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  h.diagonal().setConstant(config.omega);
  for (int p = 0; p + 1 < n; ++p) {
    h(p, p + 1) = jp[p];
    h(p + 1, p) = jp[p];
  }
  return h;
}

ModeBasis mode_basis(const ChainConfig& config) {
  if (!is_uniform(config))
    throw UnsupportedProfileError("analytic mode basis requires a uniform coupling profile, got " +
                                  profile_name(config.profile));
  const int n = config.n;
  const double coupling = couplings(config).front();
  const double k = std::numbers::pi / (n + 1);
  const double norm = std::sqrt(2.0 / (n + 1));

  ModeBasis basis;
  basis.s.resize(n, n);
  basis.omega_r.resize(n);
  for (int m = 1; m <= n; ++m) {
    for (int q = 1; q <= n; ++q) basis.s(m - 1, q - 1) = norm * std::sin(m * q * k);
    basis.omega_r(m - 1) = config.omega + 2.0 * coupling * std::cos(m * k);
  }
  return basis;
}

PropagatorMatrix analytic_propagator(const ChainConfig& config, double jt) {
  const ModeBasis basis = mode_basis(config);
  const double t = physical_time(config, jt);
  const Eigen::VectorXcd phase =
      (-kI * t * basis.omega_r.cast<Complex>()).array().exp().matrix();
  const Eigen::MatrixXcd s = basis.s.cast<Complex>();
  // u(p, l) = sum_r S(r, p) S(r, l) exp(-i Omega_r t)
  return {s.transpose() * phase.asDiagonal() * s, jt};
}

double unitarity_defect(const Eigen::MatrixXcd& u) {
  const Eigen::MatrixXcd d = u * u.adjoint() - Eigen::MatrixXcd::Identity(u.rows(), u.cols());
  return d.cwiseAbs().maxCoeff();
}

Eigen::MatrixXcd expm(const Eigen::MatrixXcd& a) {
  const Eigen::Index n = a.rows();
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.25) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
  const Eigen::MatrixXcd b = a / std::ldexp(1.0, squarings);

  Eigen::MatrixXcd result = Eigen::MatrixXcd::Identity(n, n);
  Eigen::MatrixXcd term = Eigen::MatrixXcd::Identity(n, n);
  // ||b|| <= 1/4, so 20 terms bound the remainder far below double precision.
  for (int k = 1; k <= 20; ++k) {
    term = term * b / double(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-20) break;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

PropagatorMatrix numeric_propagator(const ChainConfig& config, double jt, NumericMethod method,
                                    const Tolerances& tol) {
  validate(config);
  if (!std::isfinite(jt)) throw ConfigError("propagation time must be finite");
  const int n = config.n;
  const double t = physical_time(config, jt);
  Eigen::MatrixXcd u;

  if (method == NumericMethod::Expm) {
    const Eigen::MatrixXcd h = build_hamiltonian(config).cast<Complex>();
    u = expm(-kI * t * h);
  } else {
    const auto jp_vec = couplings(config);
    const Eigen::ArrayXd jp = Eigen::Map<const Eigen::ArrayXd>(jp_vec.data(), n - 1);
    const double j_max = jp.maxCoeff();
    u = Eigen::MatrixXcd::Identity(n, n);
    if (j_max > 0.0 && t != 0.0) {
      // Gershgorin bound on the coupling spectrum.
      Eigen::ArrayXd row_sum = Eigen::ArrayXd::Zero(n);
      row_sum.head(n - 1) += jp;
      row_sum.tail(n - 1) += jp;
      const double rho = row_sum.maxCoeff();
      // RK4 phase error for exp(-i rho h) accumulates as |t| rho^5 h^4 / 120.
      const double h_error = std::pow(120.0 * tol.ode_target / (std::abs(t) * std::pow(rho, 5)), 0.25);
      const double h_max = std::min(0.01 / j_max, h_error);
      const double steps_real = std::ceil(std::abs(t) / h_max);
      constexpr double kMaxSteps = 5e7;
      if (steps_real > kMaxSteps) {
        const double h_cap = std::abs(t) / kMaxSteps;
        throw IntegrationError("ODE step count exceeds limit; requested accuracy unreachable",
                               std::abs(t) * std::pow(rho, 5) * std::pow(h_cap, 4) / 120.0);
      }
      const long steps = std::max(1L, static_cast<long>(steps_real));
      const double h = t / double(steps);
      if (std::abs(h) < 1e-300) throw IntegrationError("ODE step size underflow", 0.0);

      // i dx/dt = K x for each column x of the propagator.
      std::vector<Complex> x(n), k1(n), k2(n), k3(n), k4(n), tmp(n);
      auto rhs = [&](const std::vector<Complex>& v, std::vector<Complex>& out) {
        for (int p = 0; p < n; ++p) {
          Complex acc = 0.0;
          if (p > 0) acc += jp(p - 1) * v[p - 1];
          if (p + 1 < n) acc += jp(p) * v[p + 1];
          out[p] = Complex(acc.imag(), -acc.real());
        }
      };
      for (int c = 0; c < n; ++c) {
        std::fill(x.begin(), x.end(), Complex(0.0));
        x[c] = 1.0;
        for (long s = 0; s < steps; ++s) {
          rhs(x, k1);
          for (int p = 0; p < n; ++p) tmp[p] = x[p] + (0.5 * h) * k1[p];
          rhs(tmp, k2);
          for (int p = 0; p < n; ++p) tmp[p] = x[p] + (0.5 * h) * k2[p];
          rhs(tmp, k3);
          for (int p = 0; p < n; ++p) tmp[p] = x[p] + h * k3[p];
          rhs(tmp, k4);
          for (int p = 0; p < n; ++p) x[p] += (h / 6.0) * (k1[p] + 2.0 * k2[p] + 2.0 * k3[p] + k4[p]);
        }
        for (int p = 0; p < n; ++p) u(p, c) = x[p];
      }
    }
    // The on-site term omega * I commutes with K and contributes a global phase.
    u *= std::exp(-kI * config.omega * t);
  }

  const double defect = unitarity_defect(u);
  if (!(defect <= tol.unitarity)) {
    std::ostringstream msg;
    msg << "numeric propagator lost unitarity at Jt = " << jt << ": defect " << defect
        << " exceeds " << tol.unitarity;
    throw IntegrationError(msg.str(), defect);
  }
  return {std::move(u), jt};
}

ChainEvolution::ChainEvolution(const ChainConfig& config) : config_(config) {
  validate(config);
  if (is_uniform(config)) {
    ModeBasis basis = mode_basis(config);
    modes_ = basis.s.transpose();
    freqs_ = std::move(basis.omega_r);
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(build_hamiltonian(config));
    if (solver.info() != Eigen::Success)
      throw IntegrationError("eigendecomposition of the chain Hamiltonian failed", 0.0);
    modes_ = solver.eigenvectors();
    freqs_ = solver.eigenvalues();
  }
}

PropagatorMatrix ChainEvolution::propagator(double jt) const {
  const double t = physical_time(config_, jt);
  const Eigen::VectorXcd phase = (-kI * t * freqs_.cast<Complex>()).array().exp().matrix();
  const Eigen::MatrixXcd v = modes_.cast<Complex>();
  return {v * phase.asDiagonal() * v.transpose(), jt};
}

Complex ChainEvolution::amplitude(int p, int l, double jt) const {
  const double t = physical_time(config_, jt);
  Complex sum{0.0, 0.0};
  for (Eigen::Index r = 0; r < freqs_.size(); ++r)
    sum += modes_(p, r) * modes_(l, r) * std::exp(-kI * (freqs_(r) * t));
  return sum;
}

Eigen::VectorXcd ChainEvolution::evolve(const Eigen::VectorXcd& v, double jt) const {
  const double t = physical_time(config_, jt);
  const Eigen::VectorXcd phase = (-kI * t * freqs_.cast<Complex>()).array().exp().matrix();
  const Eigen::VectorXcd in_modes = modes_.transpose().cast<Complex>() * v;
  return modes_.cast<Complex>() * phase.cwiseProduct(in_modes);
}

}  // namespace qbline
