#include "gkpsim/fluxnoise.hpp"
#include "gkpsim/quadratures.hpp"
#include "gkpsim/units.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <doctest.h>

#include <cmath>
#include <complex>

using namespace gkpsim;
using cd = std::complex<double>;

namespace {

// g(t) from the rotated-contour integral (1/s)∫₀^∞ e^{-v} (v/s + ω₀)^{-1/2} dv.
double g_oracle(double t, const NoiseSpectrum& sp) {
    const cd s(0.5 / sp.Lambda, t);
    boost::math::quadrature::exp_sinh<double> q;
    auto f = [&](double v) { return std::exp(-v) / std::sqrt(cd(v) / s + sp.omega0); };
    double re = q.integrate([&](double v) { return f(v).real(); }, 0.0, std::numeric_limits<double>::infinity(), 1e-14);
    double im = q.integrate([&](double v) { return f(v).imag(); }, 0.0, std::numeric_limits<double>::infinity(), 1e-14);
    return std::sqrt(2.0 / units::pi) * std::sqrt(sp.Omega) * (cd(re, im) / s).real();
}

}  // namespace

TEST_CASE("Faddeeva function against reference values") {
    CHECK(std::abs(faddeeva_upper({1.0, 1.0}) - cd(0.30474420525691259, 0.20821893820283163)) < 1e-13);
    CHECK(std::abs(faddeeva_upper({0.5, 3.0}) - cd(0.17510521262315801, 0.026636168446230883)) < 1e-13);
    CHECK(std::abs(faddeeva_upper({2.0, 0.1}) - cd(0.040201398161451280, 0.33158268733456301)) < 1e-13);
    for (double x : {0.0, 0.1, 1.0, 3.0, 10.0}) {
        double ref = std::exp(x * x) * boost::math::erfc(x);
        CHECK(erfcx_complex({x, 0.0}).real() == doctest::Approx(ref).epsilon(1e-13));
    }
}

TEST_CASE("exponential integral") {
    CHECK(std::abs(expint_e1({1.0, 1.0}) - cd(0.00028162445198141833, -0.17932453503935894)) < 1e-13);
    CHECK(std::abs(expint_e1({0.3, 2.0}) - cd(-0.30214996908482007, -0.010635359762969186)) < 1e-13);
    CHECK(std::abs(expint_e1({5.0, 0.5}) - cd(0.00095268124276191629, -0.00063311422763858650)) < 1e-15);
    CHECK(std::abs(expint_e1({0.01, 0.01}) - cd(3.6913808201114747, -0.77544805228700202)) < 1e-12);
    for (double x : {0.05, 0.9, 1.1, 7.0}) CHECK(expint_e1({x, 0.0}).real() == doctest::Approx(boost::math::expint(1, x)).epsilon(1e-13));
}

TEST_CASE("jump correlator against the contour integral") {
    NoiseSpectrum sp;
    for (double t : {0.0, 1e-7, 1e-6, 1e-5, 1e-3, 1e-1, 10.0, 1e3}) {
        CAPTURE(t);
        double ref = g_oracle(t, sp);
        CHECK(std::abs(jump_correlator(t, sp) - ref) <= 1e-6 * std::abs(ref));
    }
    CHECK(jump_correlator(-2e-6, sp) == doctest::Approx(jump_correlator(2e-6, sp)));
}

TEST_CASE("Parseval: ∫g² dt = ∫J̃ dω on the graded grid") {
    NoiseSpectrum sp;
    NoiseGrid grid = build_noise_grid(sp);
    double s = 0.0;
    for (std::size_t m = 0; m < grid.t.size(); ++m) {
        double g = jump_correlator(grid.t[m], sp);
        s += g * g * grid.dt[m];
    }
    CHECK(s == doctest::Approx(sp.shape_integral()).epsilon(2e-3));
    CHECK(grid.coverage_begin < grid.window_begin);
    CHECK(grid.coverage_end > grid.window_end);
}

TEST_CASE("target autocorrelation at zero lag equals the PSD integral") {
    NoiseSpectrum sp;
    sp.gamma_phi = 2.0;
    CHECK(target_autocorrelation(0.0, sp) ==
          doctest::Approx(sp.psd_scale() * sp.shape_integral() / (2.0 * units::pi)).epsilon(1e-8));
    CHECK(target_autocorrelation(1e-3, sp) < target_autocorrelation(0.0, sp));
}

TEST_CASE("ensemble variance of generated signals") {
    NoiseSpectrum sp;
    NoiseGenerator gen(sp, build_noise_grid(sp), default_eval_times());
    const int n = 4000;
    double v0 = 0.0, v100 = 0.0;
    for (int s = 0; s < n; ++s) {
        NoiseSignal sig = gen.generate(static_cast<std::uint64_t>(s) + 17);
        v0 += sig.values()[0] * sig.values()[0];
        v100 += sig.values()[0] * sig.values()[100];
    }
    const double tol = 4.0 * std::sqrt(2.0 / n);
    CHECK(std::abs(v0 / n / target_autocorrelation(0.0, sp) - 1.0) < tol);
    CHECK(std::abs(v100 / n / target_autocorrelation(1e-4, sp) - 1.0) < tol);
    // fixed seeds reproduce
    CHECK(gen.generate(5).values() == gen.generate(5).values());
}

TEST_CASE("spline integral is exact for linear signals") {
    std::vector<double> t{0.0, 1e-9, 3e-9, 4e-9, 8e-9}, v;
    for (double x : t) v.push_back(2.0 + 5e8 * x);
    NoiseSignal s(t, v, 0);
    CHECK(s.value(2e-9) == doctest::Approx(3.0));
    CHECK(s.integral(1e-9, 6e-9) == doctest::Approx(2.0 * 5e-9 + 2.5e8 * (36e-18 - 1e-18)).epsilon(1e-12));
    CHECK_THROWS_AS(s.value(9e-9), std::out_of_range);
    CHECK(integrate_alpha(s, 1.0, 6.0, 2.5) ==
          doctest::Approx(4.0 * units::pi * units::inductive_energy(2.5) * s.integral(1e-9, 6e-9) * 1e9));
}

TEST_CASE("free-segment displacement matches the driven oscillator") {
    // constant offset c: exp(-i2π(H_LC + 2ε_L c x)t) = U_LC(t)·exp(-i(a p + b x)) up to a global phase
    QuadratureGrid g = build_grid(256, 8.0);
    const double L = 2.5, C = units::impedance_matched_capacitance(L), c = 0.01;
    const double f = units::lc_frequency(L, C), t = 0.25 / f;
    NoiseSignal sig({-1.0, 0.0, 1.0}, {c, c, c}, 0);
    FreeDisplacement d = free_segment_AB(sig, 0.0, t, f, L, units::impedance_ratio(L, C));
    CHECK(d.b == doctest::Approx(4.0 * units::pi * units::inductive_energy(L) * c / (2.0 * units::pi * f)));

    HermitianOperator H = hamiltonian_lc(g, L, C);
    HermitianOperator Hd = H;
    const double eL = units::inductive_energy(L);
    for (int j = 0; j < 256; ++j) Hd.matrix(j, j) += 2.0 * eL * c * g.x[j];
    StateVector psi(256);
    for (int j = 0; j < 256; ++j) psi[j] = std::exp(-(g.x[j] - 0.3) * (g.x[j] - 0.3) / 0.5);
    psi.normalize();
    StateVector exact = propagator(Hd, t) * psi;
    StateVector kicked = psi;
    for (int j = 0; j < 256; ++j) kicked[j] *= std::polar(1.0, -d.b * g.x[j]);
    kicked = apply_momentum_function(g, kicked, [&](double p) { return std::polar(1.0, -d.a * p); });
    StateVector approx = propagator(H, t) * kicked;
    CHECK(std::abs(exact.dot(approx)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("uniform synthesis PSD in a few bands") {
    NoiseSpectrum sp;
    UniformNoiseOptions uo;
    uo.samples = std::size_t{1} << 18;
    UniformNoiseSynth syn(sp, uo);
    std::vector<std::vector<double>> r;
    for (int s = 0; s < 16; ++s) r.push_back(syn.generate(100 + s));
    auto bands = band_psd(r, uo.dt, sp, 1e3, 1e5, 2);
    REQUIRE(bands.size() >= 3);
    for (const auto& b : bands) {
        CAPTURE(b.omega_center);
        CHECK(std::abs(b.empirical / b.target - 1.0) < 0.15);
    }
}
