#include "gkpsim/logical.hpp"

#include "gkpsim/units.hpp"

#include <cmath>
#include <stdexcept>

namespace gkpsim {

double BlochVector::norm() const { return std::sqrt(x * x + y * y + z * z); }

double crenellation(double v) {
    double f = v - std::floor(v);
    if (f == 0.5) return 0.0;
    long long n = std::llround(v);
    return (n % 2 == 0) ? 1.0 : -1.0;
}

HermitianOperator crenellation_operator(const QuadratureGrid& grid, Quadrature q) {
    const auto D = static_cast<Eigen::Index>(grid.D);
    HermitianOperator op;
    if (q == Quadrature::Flux) {
        Eigen::VectorXcd d(D);
        for (Eigen::Index j = 0; j < D; ++j) d[j] = crenellation(grid.x[j]);
        op.matrix = d.asDiagonal();
        op.id = "sigma_z";
        return op;
    }
    op.matrix.resize(D, D);
    StateVector e = StateVector::Zero(D);
    for (Eigen::Index j = 0; j < D; ++j) {
        e.setZero();
        e[j] = 1.0;
        op.matrix.col(j) = apply_sigma_x(grid, e);
    }
    op.id = "sigma_x";
    return op;
}

Eigen::MatrixXcd sigma_y_matrix(const QuadratureGrid& grid) {
    Eigen::MatrixXcd z = crenellation_operator(grid, Quadrature::Flux).matrix;
    Eigen::MatrixXcd x = crenellation_operator(grid, Quadrature::Charge).matrix;
    return cplx(0.0, -1.0) * z * x;
}

StateVector apply_sigma_z(const QuadratureGrid& grid, const StateVector& psi) {
    StateVector out = psi;
    for (Eigen::Index j = 0; j < out.size(); ++j) out[j] *= crenellation(grid.x[j]);
    return out;
}

StateVector apply_sigma_x(const QuadratureGrid& grid, const StateVector& psi) {
    return apply_momentum_function(grid, psi, [](double p) { return cplx(crenellation(p), 0.0); });
}

double edge_probability(const QuadratureGrid& grid, const StateVector& psi, double band) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < psi.size(); ++j)
        if (std::abs(grid.x[j]) >= grid.X - band) s += std::norm(psi[j]);
    return s / psi.squaredNorm();
}

Readout measure_logicals(const StateVector& psi_in, const QuadratureGrid& grid, double edge_band) {
    StateVector psi = psi_in / psi_in.norm();
    Readout r;
    StateVector zpsi = apply_sigma_z(grid, psi);
    StateVector xpsi = apply_sigma_x(grid, psi);
    r.bloch.z = psi.dot(zpsi).real();
    r.bloch.x = psi.dot(xpsi).real();
    // σ_y = -iσ_zσ_x
    r.bloch.y = (cplx(0.0, -1.0) * zpsi.dot(xpsi)).real();
    double s1 = 0.0;
    for (Eigen::Index j = 0; j < psi.size(); ++j) s1 += std::norm(psi[j]) * std::cos(2.0 * units::pi * grid.x[j]);
    r.S1 = s1;
    r.S2 = momentum_expectation(grid, psi, [](double p) { return std::cos(2.0 * units::pi * p); });
    r.edge_probability = edge_probability(grid, psi, edge_band);
    return r;
}

double fidelity(const BlochVector& m, const BlochVector& t) {
    return 0.5 * (1.0 + m.x * t.x + m.y * t.y + m.z * t.z);
}

Eigen::Matrix3d rotation_z(double a) {
    Eigen::Matrix3d R;
    R << std::cos(a), -std::sin(a), 0.0, std::sin(a), std::cos(a), 0.0, 0.0, 0.0, 1.0;
    return R;
}

BlochVector target_state(const BlochVector& initial, int sign) {
    if (sign != 1 && sign != -1) throw std::invalid_argument("rotation sign must be +1 or -1");
    return BlochVector::from(rotation_z(sign * units::pi / 8.0) * initial.vec());
}

Eigen::Matrix3d frame_s_dagger(int power) { return rotation_z(-units::pi / 2.0 * power); }

Eigen::Matrix3d frame_hadamard() {
    Eigen::Matrix3d H;
    H << 0, 0, 1, 0, -1, 0, 1, 0, 0;
    return H;
}

double well_variance(double E_C, double eps_L, double J) {
    return std::sqrt(E_C / (eps_L + 2.0 * units::pi * units::pi * J)) / units::pi;
}

StateVector codeword(const QuadratureGrid& grid, Codeword which, double kappa, double peak_var) {
    const auto D = static_cast<Eigen::Index>(grid.D);
    StateVector psi = StateVector::Zero(D);
    const int nmax = static_cast<int>(std::floor(grid.X)) - 1;
    for (int N = -nmax; N <= nmax; ++N) {
        bool odd = (N % 2) != 0;
        cplx c = std::exp(-0.5 * N * N / (kappa * kappa));
        switch (which) {
            case Codeword::PlusZ: if (odd) continue; break;
            case Codeword::MinusZ: if (!odd) continue; break;
            case Codeword::MinusX: if (odd) c = -c; break;
            case Codeword::PlusY: if (odd) c *= cplx(0.0, 1.0); break;
            case Codeword::PlusX: break;
        }
        for (Eigen::Index j = 0; j < D; ++j) {
            double d = grid.x[j] - N;
            psi[j] += c * std::exp(-0.5 * d * d / peak_var);
        }
    }
    return psi / psi.norm();
}

}  // namespace gkpsim
