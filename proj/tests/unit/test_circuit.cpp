#include "gkpsim/circuit.hpp"
#include "gkpsim/units.hpp"

#include <doctest.h>

#include <cmath>

using namespace gkpsim;

namespace {

CircuitParams inductor_only() {
    CircuitParams p = table_set(3);
    p.J_anc = {0.0, 0.0, 0.0};
    return p;
}

}  // namespace

TEST_CASE("scale identities") {
    CircuitParams p = table_set(3);
    DerivedScales s = base_scales(p);
    const double L = p.total_inductance() * 1e-6, C = p.capacitance() * 1e-15;
    CHECK(s.t_rev == doctest::Approx(std::sqrt(L * C) * 1e9).epsilon(1e-10));
    CHECK(s.eps_L * s.t_rev == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(units::impedance_ratio(p.total_inductance(), p.capacitance()) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(units::lc_frequency(2.5, units::impedance_matched_capacitance(2.5)) - 0.82) < 0.005);
    CHECK(units::inductive_energy(1.0) == doctest::Approx(3.2265).epsilon(1e-4));
}

TEST_CASE("pure inductor chain gives an exact quadratic potential") {
    CircuitParams p = inductor_only();
    EffectivePotential ep = fit_effective_potential(p);
    const double eL = units::inductive_energy(p.total_inductance());
    CHECK(std::abs(ep.v(2) - eL) < 1e-10);
    for (int k : {4, 6, 8}) CHECK(std::abs(ep.v(k)) < 1e-10);
    for (double x : {0.5, 2.0, 5.0}) CHECK(std::abs(minimize_potential(p, x) - eL * x * x) < 1e-10);
}

TEST_CASE("table sets reproduce published gate times") {
    for (int i = 1; i <= 5; ++i) {
        CircuitParams p = table_set(i);
        EffectivePotential ep = fit_effective_potential(p);
        DerivedScales s = derived_scales(p, ep.v(4), ep.quadratic_residual);
        CAPTURE(i);
        CHECK(std::abs(s.t_gate / 1e3 / table_gate_time_us(i) - 1.0) < 0.1);
    }
}

TEST_CASE("set 3 passes both constraints") {
    CircuitParams p = table_set(3);
    EffectivePotential ep = fit_effective_potential(p);
    DerivedScales s = derived_scales(p, ep.v(4), ep.quadratic_residual);
    CHECK(constraint_eigenstate(ep.V, s).pass);
    CHECK(constraint_dephasing(ep.V, s.kappa, s.t4).pass);
}

TEST_CASE("normal modes: single-mode limit and capacitance scaling") {
    CircuitParams p = inductor_only();
    p.C_junc_fF = 1e-6;
    NormalModes m = normal_mode_frequencies(p);
    // ω₁ → 1/√(L_J C), L_J = φ₀²/(4π²J)
    const double LJ = units::flux_quantum * units::flux_quantum / (4.0 * units::pi * units::pi * p.J * 1e9 * units::planck);
    const double w1 = 1.0 / std::sqrt(LJ * p.capacitance() * 1e-15) * 1e-9;
    CHECK(m.omega[0] == doctest::Approx(w1).epsilon(1e-3));

    CircuitParams q = table_set(3);
    double prev2 = INFINITY, prev3 = INFINITY;
    for (double cj : {0.01, 0.1, 1.0, 10.0}) {
        q.C_junc_fF = cj;
        NormalModes n = normal_mode_frequencies(q);
        CHECK(n.omega[0] <= n.omega[1]);
        CHECK(n.omega[1] <= n.omega[2]);
        CHECK(n.omega[1] < prev2);
        CHECK(n.omega[2] < prev3);
        prev2 = n.omega[1];
        prev3 = n.omega[2];
    }
}

TEST_CASE("envelope series") {
    const double kappa = 10.0 / units::pi;
    std::vector<double> q{-0.2, 0.0, 0.05, 0.3};
    EnvelopeSeries g = envelope_ft_series(kappa, 6, 0.0, q, 20);
    for (std::size_t i = 0; i < q.size(); ++i) {
        double u = units::pi * kappa * q[i];
        CHECK(g.values[i].real() == doctest::Approx(kappa * std::exp(-u * u / 2.0)).epsilon(1e-12));
        CHECK(g.values[i].imag() == doctest::Approx(0.0));
    }
    // weak sextic terms converge to the Gaussian
    EnvelopeSeries w = envelope_ft_series(kappa, 6, 1e-7 / std::pow(kappa, 6), q, 20);
    for (std::size_t i = 0; i < q.size(); ++i) CHECK(std::abs(w.values[i] - g.values[i]) < 1e-4 * kappa);
    CHECK_FALSE(w.diverged);
}

TEST_CASE("circuit JSON round trip") {
    CircuitParams p = table_set(2);
    CircuitParams q = circuit_from_json(circuit_to_json(p));
    CHECK(q.L_anc_uH == p.L_anc_uH);
    CHECK(q.J_anc == p.J_anc);
    CHECK(q.J == p.J);
    CHECK(q.capacitance() == doctest::Approx(p.capacitance()));
    CHECK_THROWS(circuit_from_json("{\"C_fF\": 3}"));
}
