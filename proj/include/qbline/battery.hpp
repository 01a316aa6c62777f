#pragma once

// Reduced state of the battery cavity, its passive state and ergotropy.

#include "qbline/chain.hpp"

#include <string>
#include <variant>
#include <vector>

namespace qbline {

// Charger holds one photon; the rest of the chain is empty.
struct SinglePhoton {};

// Charger in (|1> + beta e^{i phi} |0>) / sqrt(1 + beta^2).
struct Superposition {
  double beta = 0.0;
  double phi = 0.0;

  Complex c0() const;  // vacuum coefficient
  double c1() const;   // one-photon coefficient, real
};

// Charger holds one photon and the charging line (sites 1..n-2) holds one
// photon in sum_r d_r |1_r>. An empty `d` selects the equal-weight W state.
struct WLine {
  std::vector<Complex> d;
};

using ChargerSpec = std::variant<SinglePhoton, Superposition, WLine>;

std::string charger_name(const ChargerSpec& charger);

// Throws ConfigError for beta < 0, non-finite phi, wrong W length or norm.
void validate(const ChargerSpec& charger, int n);

// Line coefficients with the W-state default resolved for chain length n.
std::vector<Complex> line_coefficients(const WLine& line, int n);

enum class WMode { PaperLiteral, Exact };

std::string to_string(WMode mode);
WMode parse_w_mode(const std::string& text);

struct BatteryState {
  Eigen::MatrixXcd rho;   // Fock basis |0>, |1>, (|2>)
  Eigen::VectorXd levels; // 0, omega, (2 omega)

  int dim() const { return static_cast<int>(rho.rows()); }
};

// Builds a state on the Fock levels k * omega and checks the density-matrix
// invariants (Hermitian, unit trace, nonnegative spectrum).
BatteryState make_battery_state(Eigen::MatrixXcd rho, double omega);

// Throws ConsistencyError when a density-matrix invariant fails.
void check_invariants(const BatteryState& state);

// Eigenvalues of rho in ascending order. 2x2 and diagonal states use closed
// forms; anything else falls back to a Hermitian eigensolver.
Eigen::VectorXd eigenvalues(const BatteryState& state);

struct PassiveState {
  Eigen::MatrixXd sigma;       // diagonal in the energy basis
  Eigen::VectorXd populations; // eigenvalues of rho, descending
  Eigen::VectorXd levels;      // ascending
  double energy = 0.0;
};

BatteryState battery_state_single_photon(Complex g_battery, double omega);
BatteryState battery_state_single_photon(const PropagatorMatrix& u, double omega);

BatteryState battery_state_superposition(Complex g_battery, const Superposition& spec,
                                         double omega);
BatteryState battery_state_superposition(const PropagatorMatrix& u, const Superposition& spec,
                                         double omega);

// f = propagated charger photon, g = propagated line photon (both length n).
BatteryState battery_state_wstate(const Eigen::VectorXcd& f, const Eigen::VectorXcd& g,
                                  WMode mode, double omega);
BatteryState battery_state_wstate(const PropagatorMatrix& u, const WLine& line, WMode mode,
                                  double omega);

double energy(const BatteryState& state);
PassiveState passive_state(const BatteryState& state);
double ergotropy(const BatteryState& state);

// omega (2 g2 - 1) Theta(g2 - 1/2), with Theta(0) = 0.
double ergotropy_closed_form_single(double g2, double omega);

double ergotropy_closed_form_superposition(Complex g, double c1, double omega);

}  // namespace qbline
