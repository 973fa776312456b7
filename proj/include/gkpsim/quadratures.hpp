#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <functional>
#include <mutex>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace gkpsim {

using cplx = std::complex<double>;
using StateVector = Eigen::VectorXcd;

class ResolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct QuadratureGrid {
    std::size_t D = 0;
    double X = 0.0;
    double dx = 0.0;
    double dp = 0.0;
    Eigen::VectorXd x;  // x_j = -X + j dx
    Eigen::VectorXd p;  // FFT ordering
};

QuadratureGrid build_grid(std::size_t D, double X);

struct HermitianOperator {
    Eigen::MatrixXcd matrix;
    bool hermitian = true;
    std::string id;

    std::size_t dim() const { return static_cast<std::size_t>(matrix.rows()); }
    bool is_real() const;
};

struct EigenSystem {
    Eigen::VectorXd values;    // ascending, h·GHz
    Eigen::MatrixXcd vectors;  // columns
    std::string id;
};

HermitianOperator momentum_operator(const QuadratureGrid& grid);
HermitianOperator position_operator(const QuadratureGrid& grid);

// p² built spectrally (Nyquist mode kept).
Eigen::MatrixXd kinetic_matrix(const QuadratureGrid& grid);

// Throws ResolutionError when dx exceeds half of the well width λ₀.
void check_resolution(const QuadratureGrid& grid, double C_fF, double J);

HermitianOperator hamiltonian_lcj(const QuadratureGrid& grid, double L_uH, double C_fF, double J);
HermitianOperator hamiltonian_lc(const QuadratureGrid& grid, double L_uH, double C_fF);
HermitianOperator hamiltonian_quartic(const QuadratureGrid& grid, double C_fF, double J, double eps4);

// H_LCJ + Σ V_k x^k. Odd coefficients are accepted and reported through odd_flag.
HermitianOperator hamiltonian_effective(const QuadratureGrid& grid, double L_uH, double C_fF, double J,
                                        const std::vector<double>& coefficients, bool* odd_flag = nullptr);

EigenSystem diagonalize(const HermitianOperator& H);
Eigen::MatrixXcd propagator(const EigenSystem& es, double t_ns);
Eigen::MatrixXcd propagator(const HermitianOperator& H, double t_ns);

double hermiticity_defect(const Eigen::MatrixXcd& A);

// FFTW planning is not thread-safe; every plan creation or destruction holds this lock.
std::mutex& fftw_mutex();

// Spectral helpers on grid states.
class SpectralTransform {
public:
    explicit SpectralTransform(std::size_t D);
    ~SpectralTransform();
    SpectralTransform(const SpectralTransform&) = delete;
    SpectralTransform& operator=(const SpectralTransform&) = delete;

    void forward(const StateVector& in, StateVector& out) const;  // unnormalized
    void backward(const StateVector& in, StateVector& out) const; // includes 1/D

    std::size_t size() const { return D_; }

private:
    std::size_t D_;
    void* fwd_ = nullptr;
    void* bwd_ = nullptr;
};

const SpectralTransform& transform_for(std::size_t D);

// ψ → f(p)ψ, applied in the conjugate basis.
StateVector apply_momentum_function(const QuadratureGrid& grid, const StateVector& psi,
                                    const std::function<cplx(double)>& f);
StateVector apply_momentum_diagonal(const QuadratureGrid& grid, const StateVector& psi,
                                    const Eigen::VectorXcd& diag);

// ⟨ψ|f(p)|ψ⟩ for real f.
double momentum_expectation(const QuadratureGrid& grid, const StateVector& psi,
                            const std::function<double(double)>& f);

}  // namespace gkpsim
