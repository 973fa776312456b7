#pragma once

#include <cmath>
#include <numbers>

// Energies in h·GHz, times in ns, flux x = φ/φ₀, charge p = q/e, [x, p] = i/π.
namespace gkpsim::units {

inline constexpr double planck = 6.62607015e-34;
inline constexpr double charge_e = 1.602176634e-19;
inline constexpr double boltzmann = 1.380649e-23;
inline constexpr double flux_quantum = planck / (2.0 * charge_e);
inline constexpr double pi = std::numbers::pi;

// Inductive energy per x²: φ₀²/2L in h·GHz.
inline double inductive_energy(double L_uH) {
    return flux_quantum * flux_quantum / (2.0 * L_uH * 1e-6) / planck / 1e9;
}

// Charging energy per p²: e²/2C in h·GHz.
inline double charging_energy(double C_fF) {
    return charge_e * charge_e / (2.0 * C_fF * 1e-15) / planck / 1e9;
}

// Capacitance giving √(L/C) = h/2e².
inline double impedance_matched_capacitance(double L_uH) {
    double z = planck / (2.0 * charge_e * charge_e);
    return L_uH * 1e-6 / (z * z) * 1e15;
}

inline double thermal_energy(double T_mK) { return boltzmann * T_mK * 1e-3 / planck / 1e9; }

// LC frequency in GHz.
inline double lc_frequency(double L_uH, double C_fF) {
    return 1.0 / (2.0 * pi * std::sqrt(L_uH * 1e-6 * C_fF * 1e-15)) / 1e9;
}

// ν = (4e²/h)√(L/C); equals 2 under the impedance condition.
inline double impedance_ratio(double L_uH, double C_fF) {
    return 4.0 * charge_e * charge_e / planck * std::sqrt(L_uH * 1e-6 / (C_fF * 1e-15));
}

// Per-well zero-point width λ₀ with λ₀² = (1/π)√(E_C/2π²J).
inline double well_width(double C_fF, double J) {
    return std::sqrt(std::sqrt(charging_energy(C_fF) / (2.0 * pi * pi * J)) / pi);
}

}  // namespace gkpsim::units
