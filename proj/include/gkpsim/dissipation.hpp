#pragma once

#include "gkpsim/quadratures.hpp"

#include <Eigen/Dense>

#include <string>

namespace gkpsim {

struct BathSpec {
    double Gamma_GHz = 1.5;  // rate scale, 1/ns
    double T_mK = 40.0;
    double omega_ref = 39.36;  // h·GHz; rate equals Γ·ω/ω_ref downhill at T = 0
    std::string coupling = "charge";

    void validate() const;
};

// Ohmic thermal rate γ(ω) = Γ (ω/ω_ref) / (1 - e^{-ω/k_BT}), ω in h·GHz, result in 1/ns.
double ule_rate(const BathSpec& bath, double omega);

struct JumpOperator {
    Eigen::MatrixXcd matrix;  // grid basis unless built in an eigenbasis
    std::string hamiltonian_id;
    bool eigenbasis = false;
};

// L_mn = √γ(E_n - E_m) X_mn with X the coupling operator in the eigenbasis.
Eigen::MatrixXcd ule_jump_eigenbasis(const Eigen::VectorXd& energies, const Eigen::MatrixXcd& coupling,
                                     const BathSpec& bath);

// Full-grid construction: diagonalize H, build L in its eigenbasis, rotate back.
JumpOperator ule_jump_operator(const HermitianOperator& H, const QuadratureGrid& grid, const BathSpec& bath);
JumpOperator ule_jump_operator(const EigenSystem& es, const HermitianOperator& coupling, const BathSpec& bath);

// Generator for U = exp(-i2π H_eff t): H_eff = H - (i/4π) L†L, so that d‖ψ‖²/dt = -⟨L†L⟩.
Eigen::MatrixXcd effective_hamiltonian(const Eigen::MatrixXcd& H, const Eigen::MatrixXcd& L);

}  // namespace gkpsim
