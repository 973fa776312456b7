#pragma once

#include <array>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gkpsim {

struct CircuitParams {
    std::string name;
    double L_uH = 2.5;
    double C_fF = 0.0;  // 0: derive from the impedance condition
    double J = 150.0;   // h·GHz
    double Gamma_GHz = 1.5;
    double T_mK = 40.0;
    bool has_ancilla = false;
    std::array<double, 3> L_anc_uH{0.0, 0.0, 0.0};
    std::array<double, 3> J_anc{0.0, 0.0, 0.0};  // h·GHz, signed
    double C_junc_fF = 0.1;

    double capacitance() const;
    double total_inductance() const;  // ΣL_i with ancilla, else L
    void validate() const;
};

CircuitParams load_circuit(const std::string& path);
void save_circuit(const CircuitParams& params, const std::string& path);
std::string circuit_to_json(const CircuitParams& params);
CircuitParams circuit_from_json(const std::string& text);

// The five published parameter sets with J = 150 h·GHz, T = 40 mK, Γ = 1.5 GHz.
CircuitParams table_set(int index);
double table_gate_time_us(int index);

class MinimizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AncillaMinimum {
    double energy = 0.0;  // h·GHz
    double y1 = 0.0;
    double y2 = 0.0;
};

// Minimum of the full potential over the ancilla node fluxes at main flux x.
AncillaMinimum minimize_ancilla(const CircuitParams& params, double x, const double* guess = nullptr);

// V_eff(x) - V_eff(0), h·GHz. Includes φ²/2L from the series chain.
double minimize_potential(const CircuitParams& params, double x, bool vacuum_correction = false);

struct EffectivePotential {
    std::vector<double> V;  // V_k, k = 0..k_max, h·GHz (V_2 includes ε_L of the chain)
    double residual = 0.0;
    double x_max = 0.0;
    int samples = 0;
    double quadratic_residual = 0.0;  // V_2 - ε_L(L)

    double value(double x) const;
    double v(int k) const { return k < static_cast<int>(V.size()) ? V[static_cast<std::size_t>(k)] : 0.0; }
    // Coefficients added on top of H_LCJ: V_2 replaced by the residual.
    std::vector<double> hamiltonian_terms() const;
};

struct FitOptions {
    double x_max = 6.0;
    int samples = 241;
    int k_max = 8;
    double weight_width = 0.0;  // 0: κ from derived scales
    double residual_tolerance = 1e-6;
    bool vacuum_correction = false;
};

EffectivePotential fit_effective_potential(const CircuitParams& params, const FitOptions& opts = {});

struct NormalModes {
    std::array<double, 3> omega{};        // rad/ns, ascending
    std::array<double, 3> temperature{};  // K
};

NormalModes normal_mode_frequencies(const CircuitParams& params, int N_well = 0);

struct DerivedScales {
    double f_LC = 0.0;     // GHz
    double lambda0 = 0.0;
    double eps0 = 0.0;     // h·GHz
    double eps_L = 0.0;    // h·GHz
    double E_C = 0.0;      // h·GHz
    double kappa = 0.0;
    double c_T = 1.0;
    double kT = 0.0;       // h·GHz
    double t_rev = 0.0;    // ns
    double t_rev_prime = 0.0;
    double t4 = 0.0;
    double t2 = 0.0;
    double t_gate = 0.0;
    double V4 = 0.0;
    double V2 = 0.0;
};

// V2 is the residual quadratic coefficient beyond ε_L.
DerivedScales derived_scales(const CircuitParams& params, double V4, double V2 = 0.0);
// Scales without a gate time (no V₄ needed).
DerivedScales base_scales(const CircuitParams& params);

struct ConstraintReport {
    std::vector<int> k;
    std::vector<double> ratio;
    double threshold = 0.1;
    bool pass = true;
};

ConstraintReport constraint_eigenstate(const std::vector<double>& V, const DerivedScales& s, double alpha = 2.0,
                                       double zeta = 1.0, double threshold = 0.1);
ConstraintReport constraint_dephasing(const std::vector<double>& V, double kappa, double t4_ns,
                                      double threshold = 0.1);

struct EnvelopeSeries {
    std::vector<std::complex<double>> values;
    std::vector<double> truncation_error;  // magnitude of the smallest retained term
    std::vector<int> terms_used;
    bool diverged = false;  // some q needed optimal truncation above tolerance
};

// Fourier transform (1/√2π)∫ e^{-x²/2κ²} e^{-i a_k x^k} e^{-iπqx} dx, q in units of e, as the
// term-wise Taylor series in a_k. The series is asymptotic; summation stops at the smallest term.
EnvelopeSeries envelope_ft_series(double kappa, int k, double a_k, const std::vector<double>& q, int m_max,
                                  double tolerance = 1e-8);

}  // namespace gkpsim
