#include "gkpsim/quadratures.hpp"

#include "gkpsim/units.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <sstream>

namespace gkpsim {

namespace {

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

}  // namespace

std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

QuadratureGrid build_grid(std::size_t D, double X) {
    if (!is_power_of_two(D)) throw std::invalid_argument("grid dimension must be a power of two >= 2");
    if (!(X > 0.0)) throw std::invalid_argument("grid half-range must be positive");
    QuadratureGrid g;
    g.D = D;
    g.X = X;
    g.dx = 2.0 * X / static_cast<double>(D);
    g.dp = 2.0 / (static_cast<double>(D) * g.dx);
    g.x.resize(D);
    g.p.resize(D);
    const auto half = static_cast<std::ptrdiff_t>(D / 2);
    for (std::size_t j = 0; j < D; ++j) {
        g.x[j] = -X + static_cast<double>(j) * g.dx;
        auto m = static_cast<std::ptrdiff_t>(j);
        if (m >= half) m -= static_cast<std::ptrdiff_t>(D);
        g.p[j] = static_cast<double>(m) * g.dp;
    }
    return g;
}

bool HermitianOperator::is_real() const { return matrix.imag().cwiseAbs().maxCoeff() == 0.0; }

double hermiticity_defect(const Eigen::MatrixXcd& A) {
    double scale = A.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;
    return (A - A.adjoint()).cwiseAbs().maxCoeff() / scale;
}

// Circulant kernels from the DFT: (1/D) Σ_m f(p_m) e^{iπ p_m (x_j - x_l)}.
HermitianOperator momentum_operator(const QuadratureGrid& grid) {
    const auto D = static_cast<Eigen::Index>(grid.D);
    Eigen::VectorXcd row(D);
    for (Eigen::Index n = 0; n < D; ++n) {
        cplx s = 0.0;
        for (Eigen::Index m = 0; m < D; ++m) {
            if (m == D / 2) continue;  // Nyquist dropped so p stays Hermitian
            double k = units::pi * grid.p[m];
            s += grid.p[m] * std::exp(cplx(0.0, k * static_cast<double>(n) * grid.dx));
        }
        row[n] = s / static_cast<double>(D);
    }
    HermitianOperator op;
    op.matrix.resize(D, D);
    for (Eigen::Index j = 0; j < D; ++j)
        for (Eigen::Index l = 0; l < D; ++l) op.matrix(j, l) = row[(j - l + D) % D];
    // The kernel is purely imaginary; clear rounding in the real part.
    op.matrix = cplx(0.0, 1.0) * op.matrix.imag().cast<cplx>();
    op.id = "p";
    return op;
}

HermitianOperator position_operator(const QuadratureGrid& grid) {
    HermitianOperator op;
    op.matrix = grid.x.cast<cplx>().asDiagonal();
    op.id = "x";
    return op;
}

Eigen::MatrixXd kinetic_matrix(const QuadratureGrid& grid) {
    const auto D = static_cast<Eigen::Index>(grid.D);
    Eigen::VectorXd row(D);
    for (Eigen::Index n = 0; n < D; ++n) {
        double s = 0.0;
        for (Eigen::Index m = 0; m < D; ++m) {
            double k = units::pi * grid.p[m];
            s += grid.p[m] * grid.p[m] * std::cos(k * static_cast<double>(n) * grid.dx);
        }
        row[n] = s / static_cast<double>(D);
    }
    Eigen::MatrixXd T(D, D);
    for (Eigen::Index j = 0; j < D; ++j)
        for (Eigen::Index l = 0; l < D; ++l) T(j, l) = row[std::abs(j - l)];
    return T;
}

void check_resolution(const QuadratureGrid& grid, double C_fF, double J) {
    if (J <= 0.0) return;
    double lam = units::well_width(C_fF, J);
    if (grid.dx > 0.5 * lam) {
        std::ostringstream os;
        os << "grid spacing " << grid.dx << " does not resolve well width " << lam;
        throw ResolutionError(os.str());
    }
}

namespace {

HermitianOperator assemble(const QuadratureGrid& grid, double C_fF, const Eigen::VectorXd& potential,
                           std::string id) {
    HermitianOperator H;
    Eigen::MatrixXd M = units::charging_energy(C_fF) * kinetic_matrix(grid);
    M.diagonal() += potential;
    H.matrix = M.cast<cplx>();
    H.id = std::move(id);
    return H;
}

}  // namespace

HermitianOperator hamiltonian_lcj(const QuadratureGrid& grid, double L_uH, double C_fF, double J) {
    if (!(L_uH > 0.0) || !(C_fF > 0.0) || !(J > 0.0))
        throw std::invalid_argument("L, C and J must be positive");
    check_resolution(grid, C_fF, J);
    double eL = units::inductive_energy(L_uH);
    Eigen::VectorXd v = eL * grid.x.array().square() - J * (2.0 * units::pi * grid.x.array()).cos();
    return assemble(grid, C_fF, v, "lcj");
}

HermitianOperator hamiltonian_lc(const QuadratureGrid& grid, double L_uH, double C_fF) {
    if (!(L_uH > 0.0) || !(C_fF > 0.0)) throw std::invalid_argument("L and C must be positive");
    Eigen::VectorXd v = units::inductive_energy(L_uH) * grid.x.array().square();
    return assemble(grid, C_fF, v, "lc");
}

HermitianOperator hamiltonian_quartic(const QuadratureGrid& grid, double C_fF, double J, double eps4) {
    if (!(C_fF > 0.0) || J < 0.0) throw std::invalid_argument("C must be positive and J non-negative");
    check_resolution(grid, C_fF, J);
    Eigen::VectorXd v = eps4 * grid.x.array().pow(4) - J * (2.0 * units::pi * grid.x.array()).cos();
    return assemble(grid, C_fF, v, "quartic");
}

HermitianOperator hamiltonian_effective(const QuadratureGrid& grid, double L_uH, double C_fF, double J,
                                        const std::vector<double>& coefficients, bool* odd_flag) {
    HermitianOperator H = hamiltonian_lcj(grid, L_uH, C_fF, J);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.D));
    bool odd = false;
    for (std::size_t k = 0; k < coefficients.size(); ++k) {
        if (coefficients[k] == 0.0) continue;
        if (k % 2 == 1) odd = true;
        v += coefficients[k] * grid.x.array().pow(static_cast<double>(k)).matrix();
    }
    H.matrix.diagonal() += v.cast<cplx>();
    H.id = "effective";
    if (odd_flag) *odd_flag = odd;
    return H;
}

EigenSystem diagonalize(const HermitianOperator& H) {
    EigenSystem es;
    es.id = H.id;
    if (H.is_real()) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(H.matrix.real());
        if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
        es.values = solver.eigenvalues();
        es.vectors = solver.eigenvectors().cast<cplx>();
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(H.matrix);
        if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
        es.values = solver.eigenvalues();
        es.vectors = solver.eigenvectors();
    }
    return es;
}

Eigen::MatrixXcd propagator(const EigenSystem& es, double t_ns) {
    Eigen::VectorXcd phase(es.values.size());
    for (Eigen::Index i = 0; i < es.values.size(); ++i)
        phase[i] = std::exp(cplx(0.0, -2.0 * units::pi * es.values[i] * t_ns));
    return es.vectors * phase.asDiagonal() * es.vectors.adjoint();
}

Eigen::MatrixXcd propagator(const HermitianOperator& H, double t_ns) { return propagator(diagonalize(H), t_ns); }

SpectralTransform::SpectralTransform(std::size_t D) : D_(D) {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    auto n = static_cast<int>(D);
    auto* a = fftw_alloc_complex(D);
    auto* b = fftw_alloc_complex(D);
    fwd_ = fftw_plan_dft_1d(n, a, b, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_1d(n, a, b, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_free(a);
    fftw_free(b);
}

SpectralTransform::~SpectralTransform() {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
}

void SpectralTransform::forward(const StateVector& in, StateVector& out) const {
    StateVector tmp = in;
    out.resize(static_cast<Eigen::Index>(D_));
    fftw_execute_dft(static_cast<fftw_plan>(fwd_), reinterpret_cast<fftw_complex*>(tmp.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
}

void SpectralTransform::backward(const StateVector& in, StateVector& out) const {
    StateVector tmp = in;
    out.resize(static_cast<Eigen::Index>(D_));
    fftw_execute_dft(static_cast<fftw_plan>(bwd_), reinterpret_cast<fftw_complex*>(tmp.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    out /= static_cast<double>(D_);
}

const SpectralTransform& transform_for(std::size_t D) {
    static std::mutex m;
    static std::map<std::size_t, std::unique_ptr<SpectralTransform>> cache;
    std::lock_guard<std::mutex> lock(m);
    auto& slot = cache[D];
    if (!slot) slot = std::make_unique<SpectralTransform>(D);
    return *slot;
}

StateVector apply_momentum_diagonal(const QuadratureGrid& grid, const StateVector& psi,
                                    const Eigen::VectorXcd& diag) {
    const auto& ft = transform_for(grid.D);
    StateVector k;
    ft.forward(psi, k);
    k.array() *= diag.array();
    StateVector out;
    ft.backward(k, out);
    return out;
}

StateVector apply_momentum_function(const QuadratureGrid& grid, const StateVector& psi,
                                    const std::function<cplx(double)>& f) {
    Eigen::VectorXcd d(static_cast<Eigen::Index>(grid.D));
    for (Eigen::Index m = 0; m < d.size(); ++m) d[m] = f(grid.p[m]);
    return apply_momentum_diagonal(grid, psi, d);
}

double momentum_expectation(const QuadratureGrid& grid, const StateVector& psi,
                            const std::function<double(double)>& f) {
    const auto& ft = transform_for(grid.D);
    StateVector k;
    ft.forward(psi, k);
    double s = 0.0;
    for (Eigen::Index m = 0; m < k.size(); ++m) s += std::norm(k[m]) * f(grid.p[m]);
    return s / static_cast<double>(grid.D);
}

}  // namespace gkpsim
