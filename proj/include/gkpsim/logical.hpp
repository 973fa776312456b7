#pragma once

#include "gkpsim/quadratures.hpp"

#include <Eigen/Dense>

#include <array>

namespace gkpsim {

struct BlochVector {
    double x = 0.0, y = 0.0, z = 0.0;

    double norm() const;
    Eigen::Vector3d vec() const { return {x, y, z}; }
    static BlochVector from(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }
};

struct Readout {
    BlochVector bloch;
    double S1 = 0.0;
    double S2 = 0.0;
    double edge_probability = 0.0;
};

enum class Quadrature { Flux, Charge };

// sgn cos(πv): parity of the nearest integer, 0 at half-integers.
double crenellation(double v);

HermitianOperator crenellation_operator(const QuadratureGrid& grid, Quadrature q);
Eigen::MatrixXcd sigma_y_matrix(const QuadratureGrid& grid);

StateVector apply_sigma_z(const QuadratureGrid& grid, const StateVector& psi);
StateVector apply_sigma_x(const QuadratureGrid& grid, const StateVector& psi);

double edge_probability(const QuadratureGrid& grid, const StateVector& psi, double band = 0.5);

Readout measure_logicals(const StateVector& psi, const QuadratureGrid& grid, double edge_band = 0.5);

double fidelity(const BlochVector& measured, const BlochVector& target);
inline double fidelity(const Readout& r, const BlochVector& target) { return fidelity(r.bloch, target); }

// Rotation of the initial vector about z by ±π/8.
BlochVector target_state(const BlochVector& initial, int sign);

enum class Codeword { PlusX, MinusX, PlusZ, MinusZ, PlusY };

// Finite-energy grid state: Gaussian peaks of variance `peak_var` at integers under an
// envelope e^{-N²/2κ²}.
StateVector codeword(const QuadratureGrid& grid, Codeword which, double kappa, double peak_var);

// Peak variance of the per-well ground state of H_LCJ in the harmonic approximation.
double well_variance(double E_C, double eps_L, double J);

// Logical Clifford frames as Bloch-vector rotations.
Eigen::Matrix3d rotation_z(double angle);
Eigen::Matrix3d frame_s_dagger(int power);  // stabilizer segment of power·t_rev
Eigen::Matrix3d frame_hadamard();           // quarter-period free evolution

}  // namespace gkpsim
