#include "gkpsim/dissipation.hpp"

#include "gkpsim/units.hpp"

#include <cmath>
#include <stdexcept>

namespace gkpsim {

void BathSpec::validate() const {
    if (Gamma_GHz < 0.0) throw std::invalid_argument("bath rate must be non-negative");
    if (T_mK < 0.0) throw std::invalid_argument("bath temperature must be non-negative");
    if (!(omega_ref > 0.0)) throw std::invalid_argument("bath reference energy must be positive");
    if (coupling != "charge") throw std::invalid_argument("only charge coupling is supported");
}

double ule_rate(const BathSpec& bath, double omega) {
    if (bath.Gamma_GHz == 0.0) return 0.0;
    const double kT = units::thermal_energy(bath.T_mK);
    if (kT == 0.0) return omega > 0.0 ? bath.Gamma_GHz * omega / bath.omega_ref : 0.0;
    const double r = omega / kT;
    if (r == 0.0) return bath.Gamma_GHz * kT / bath.omega_ref;
    // ω/(1 - e^{-ω/kT}) = -kT·r/expm1(-r)
    return bath.Gamma_GHz * (-kT * r / std::expm1(-r)) / bath.omega_ref;
}

Eigen::MatrixXcd ule_jump_eigenbasis(const Eigen::VectorXd& energies, const Eigen::MatrixXcd& coupling,
                                     const BathSpec& bath) {
    const Eigen::Index M = energies.size();
    Eigen::MatrixXcd L(M, M);
    for (Eigen::Index n = 0; n < M; ++n)
        for (Eigen::Index m = 0; m < M; ++m)
            L(m, n) = std::sqrt(ule_rate(bath, energies[n] - energies[m])) * coupling(m, n);
    return L;
}

JumpOperator ule_jump_operator(const EigenSystem& es, const HermitianOperator& coupling, const BathSpec& bath) {
    bath.validate();
    JumpOperator J;
    J.hamiltonian_id = es.id;
    Eigen::MatrixXcd X = es.vectors.adjoint() * coupling.matrix * es.vectors;
    J.matrix = es.vectors * ule_jump_eigenbasis(es.values, X, bath) * es.vectors.adjoint();
    return J;
}

JumpOperator ule_jump_operator(const HermitianOperator& H, const QuadratureGrid& grid, const BathSpec& bath) {
    return ule_jump_operator(diagonalize(H), momentum_operator(grid), bath);
}

Eigen::MatrixXcd effective_hamiltonian(const Eigen::MatrixXcd& H, const Eigen::MatrixXcd& L) {
    if (H.rows() != L.rows() || H.cols() != L.cols()) throw std::invalid_argument("dimension mismatch");
    return H - cplx(0.0, 1.0 / (4.0 * units::pi)) * (L.adjoint() * L);
}

}  // namespace gkpsim
