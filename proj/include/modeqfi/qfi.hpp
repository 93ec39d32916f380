#pragma once

#include <optional>
#include <string>
#include <utility>

#include "modeqfi/fock.hpp"
#include "modeqfi/modes.hpp"

namespace modeqfi {

// Three-part breakdown of the estimation bound: classical Fisher information
// of parameter-dependent populations, the unitary part generated on the
// populated modes, and the loss into unpopulated (vacuum) modes.
struct QfiReport {
    double classical_term = 0.0;
    double unitary_term = 0.0;
    double vacuum_term = 0.0;
    double total = 0.0;
    std::optional<double> oracle_value;
    std::string breakdown_meta;

    static QfiReport make(double classical, double unitary, double vacuum, std::string meta);
};

// F_Q[rho, H] = 4 <H^2> - 8 sum_{n,m} p_n p_m / (p_n + p_m) |<psi_n|H|psi_m>|^2.
// Eigenvalues below 1e-12 are treated as exact zeros and excluded from both
// terms. Reduces to 4 Var(H) for pure states.
double unitary_qfi(const DensityOperator& state, const QuadraticHamiltonian& h);

// The decomposition over the populated mode set:
//   classical + F_Q[rho, H_populated] + 4 sum_{kl} V_kl <a_k^dag a_l>.
// The state's modes must correspond 1:1 to overlaps.populated. Population
// derivatives are read from the argument if given, else from the state.
QfiReport mode_parameter_qfi(const DensityOperator& state, const OverlapData& overlaps,
                             const std::optional<Eigen::VectorXd>& population_derivatives =
                                 std::nullopt);

// tr sqrt(sqrt(rho) sigma sqrt(rho)), computed from the rank-reduced Gram
// matrix of the two eigenbases.
double uhlmann_root_fidelity(const DensityOperator& rho, const DensityOperator& sigma);

// Finite-difference check of unitary_qfi: 8 (1 - sqrt(F_U)(rho, rho(dtheta)))
// / dtheta^2, converging with O(dtheta^2) error.
double fd_fidelity_oracle(const DensityOperator& state, const QuadraticHamiltonian& h,
                          double dtheta);

// Self-consistency of the decomposition: models the derivative modes' vacuum
// components explicitly (Gram-Schmidt extension, n_extra_vacuum_modes of
// them, each truncated at one excitation) and evaluates the unitary bound on
// the enlarged space. Returns {full-space value, decomposition value}; the
// two must agree for every family. Population derivatives are ignored on
// both sides (they cancel identically).
std::pair<double, double> extended_space_check(const ModeFamily& family,
                                               const DensityOperator& state,
                                               int n_extra_vacuum_modes);

} // namespace modeqfi
