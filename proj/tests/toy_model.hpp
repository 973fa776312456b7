#pragma once

// Small dissipative model shared by the unit and acceptance tests: a 64-point grid, the lowest
// eigenstates of H_LCJ, and the charge-coupled thermal bath.

#include "gkpsim/dissipation.hpp"
#include "gkpsim/protocol.hpp"
#include "gkpsim/units.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <random>

namespace toy {

struct Model {
    gkpsim::DissipativeBlock block;
    Eigen::VectorXcd initial;
    double duration = 1.0;  // ns
};

inline Model make_model(Eigen::Index M = 12, double duration = 1.0) {
    using namespace gkpsim;
    QuadratureGrid g = build_grid(64, 2.0);
    const double L = 2.5, C = units::impedance_matched_capacitance(L);
    EigenSystem es = diagonalize(hamiltonian_lcj(g, L, C, 10.0));
    BathSpec bath;
    bath.omega_ref = 10.0;
    Model m;
    m.duration = duration;
    m.block.id = "toy";
    m.block.energies = es.values.head(M);
    m.block.vectors = es.vectors.leftCols(M);
    Eigen::MatrixXcd p = m.block.vectors.adjoint() * momentum_operator(g).matrix * m.block.vectors;
    m.block.jump = ule_jump_eigenbasis(m.block.energies, p, bath);
    m.block.generator = effective_hamiltonian(m.block.energies.cast<cplx>().asDiagonal(), m.block.jump);
    m.block.cache = PropagatorCache::from_generator(m.block.generator, duration, 1e-4);
    m.initial = Eigen::VectorXcd::Zero(M);
    m.initial[0] = 1.0;
    m.initial[4] = cplx(0.6, 0.8);
    m.initial.normalize();
    return m;
}

// Observables: ground population, mean energy, Re ρ₀₄.
inline Eigen::Vector3d observables(const Eigen::MatrixXcd& rho, const Eigen::VectorXd& E) {
    double energy = 0.0;
    for (Eigen::Index n = 0; n < E.size(); ++n) energy += rho(n, n).real() * E[n];
    return {rho(0, 0).real(), energy, rho(0, 4).real()};
}

// ρ(t) from the Lindblad equation dρ/dt = -i2π[H, ρ] + LρL† - ½{L†L, ρ}.
inline Eigen::MatrixXcd lindblad(const Model& m) {
    using gkpsim::cplx;
    const Eigen::Index M = m.block.energies.size();
    Eigen::MatrixXcd H = m.block.energies.cast<cplx>().asDiagonal();
    const Eigen::MatrixXcd& L = m.block.jump;
    Eigen::MatrixXcd LdL = L.adjoint() * L;
    Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(M, M);
    // vec(AρB) = (Bᵀ ⊗ A) vec(ρ)
    Eigen::MatrixXcd S = cplx(0.0, -2.0 * gkpsim::units::pi) * (Eigen::kroneckerProduct(I, H).eval() -
                                                                 Eigen::kroneckerProduct(H.transpose(), I).eval());
    S += Eigen::kroneckerProduct(L.conjugate(), L).eval();
    S -= 0.5 * (Eigen::kroneckerProduct(I, LdL).eval() + Eigen::kroneckerProduct(LdL.transpose(), I).eval());
    Eigen::MatrixXcd rho0 = m.initial * m.initial.adjoint();
    Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(rho0.data(), M * M);
    Eigen::MatrixXcd St = S * m.duration;
    Eigen::VectorXcd out = St.exp() * v;
    return Eigen::Map<const Eigen::MatrixXcd>(out.data(), M, M);
}

struct Estimate {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Vector3d stderr_of_mean = Eigen::Vector3d::Zero();
    double mean_jumps = 0.0;
};

inline Estimate trajectories(const Model& m, int n, std::uint64_t seed) {
    Estimate e;
    Eigen::Vector3d s2 = Eigen::Vector3d::Zero();
    std::size_t jumps = 0;
    for (int k = 0; k < n; ++k) {
        std::mt19937_64 rng(seed + static_cast<std::uint64_t>(k));
        Eigen::VectorXcd c = m.initial;
        jumps += gkpsim::evolve_dissipative(m.block, c, m.duration, rng);
        Eigen::Vector3d o = observables(c * c.adjoint(), m.block.energies);
        e.mean += o;
        s2 += o.cwiseProduct(o);
    }
    e.mean /= n;
    Eigen::Vector3d var = (s2 / n - e.mean.cwiseProduct(e.mean)) * (static_cast<double>(n) / (n - 1));
    e.stderr_of_mean = (var / n).cwiseSqrt();
    e.mean_jumps = static_cast<double>(jumps) / n;
    return e;
}

}  // namespace toy
