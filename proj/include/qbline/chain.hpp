#pragma once

// Single-excitation dynamics of a chain of coupled single-mode cavities.
//
// Site indices are 0-based throughout: site 0 is the charger, site n-1 the
// battery. Times are dimensionless (Jt); energies carry the same unit as
// `omega` and `j`.

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <variant>
#include <vector>

namespace qbline {

using Complex = std::complex<double>;

struct UniformCoupling {};
// J_p = J sqrt(p (n - p)), p = 1..n-1
struct ParabolicCoupling {};
struct CustomCoupling {
  std::vector<double> couplings;  // n-1 absolute coupling strengths
};

using CouplingProfile = std::variant<UniformCoupling, ParabolicCoupling, CustomCoupling>;

struct ChainConfig {
  int n = 3;
  double omega = 1.0;
  double j = 1.0;
  CouplingProfile profile = UniformCoupling{};
};

// Throws ConfigError when the invariants on n, omega, j or the profile fail.
void validate(const ChainConfig& config);

// Nearest-neighbour couplings (n-1 entries) for a validated configuration.
std::vector<double> couplings(const ChainConfig& config);

// True when every nearest-neighbour coupling has the same value, which is the
// condition for the sine-transform eigenbasis to diagonalize the chain.
bool is_uniform(const ChainConfig& config);

std::string profile_name(const CouplingProfile& profile);

struct Tolerances {
  double unitarity = 1e-10;
  double cross_validation = 1e-8;
  // Per-entry global error budget used to pick the ODE step.
  double ode_target = 1e-9;
};

// Real symmetric tridiagonal single-particle Hamiltonian.
Eigen::MatrixXd build_hamiltonian(const ChainConfig& config);

// Sine-transform eigenbasis of the uniform chain. s(m, k) is the amplitude of
// collective mode m on site k; the matrix is symmetric and orthogonal.
struct ModeBasis {
  Eigen::MatrixXd s;
  Eigen::VectorXd omega_r;  // omega + 2 J cos(r pi / (n+1)), r = 1..n
};

ModeBasis mode_basis(const ChainConfig& config);

// u(p, l) is the coefficient of a_l(0) in a_p(t): the amplitude for an
// excitation starting at site l to be found at site p after time `time`.
struct PropagatorMatrix {
  Eigen::MatrixXcd u;
  double time = 0.0;  // Jt
};

PropagatorMatrix analytic_propagator(const ChainConfig& config, double jt);

enum class NumericMethod { Ode, Expm };

PropagatorMatrix numeric_propagator(const ChainConfig& config, double jt, NumericMethod method,
                                    const Tolerances& tol = {});

// Matrix exponential by scaling and squaring of a truncated Taylor series.
Eigen::MatrixXcd expm(const Eigen::MatrixXcd& a);

// max |(u u^dagger - I)_{ij}|
double unitarity_defect(const Eigen::MatrixXcd& u);

// Precomputed spectral decomposition of a chain for repeated evaluation at
// many times. Uniform chains reuse the analytic sine basis; other profiles are
// diagonalized numerically once.
class ChainEvolution {
 public:
  explicit ChainEvolution(const ChainConfig& config);

  int size() const { return static_cast<int>(freqs_.size()); }
  const ChainConfig& config() const { return config_; }

  PropagatorMatrix propagator(double jt) const;
  Complex amplitude(int p, int l, double jt) const;
  // u(t) * v
  Eigen::VectorXcd evolve(const Eigen::VectorXcd& v, double jt) const;

 private:
  ChainConfig config_;
  Eigen::MatrixXd modes_;  // columns are eigenvectors
  Eigen::VectorXd freqs_;
};

}  // namespace qbline
