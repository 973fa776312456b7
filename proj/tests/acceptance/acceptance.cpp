// Acceptance checks: one PASS/FAIL line per criterion, tolerances fixed below.
// Usage: gkpsim_acceptance [--only name[,name...]] [--threads n]

#include "gkpsim/circuit.hpp"
#include "gkpsim/fluxnoise.hpp"
#include "gkpsim/harness.hpp"
#include "gkpsim/search.hpp"
#include "gkpsim/units.hpp"

#include "../toy_model.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#ifndef GKPSIM_CLI_PATH
#define GKPSIM_CLI_PATH "gkpsim"
#endif

using namespace gkpsim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    std::function<Outcome()> run;
    bool known_failure = false;  // documented as unattainable with this model
};

unsigned g_threads = 0;

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string sci(double v) { return fmt("%.3g", v); }

// ------------------------------------------------------------------ revival arithmetic

Outcome revival_arithmetic() {
    bool ok = true;
    double worst = 0.0;
    for (long long N = -50; N <= 50; ++N) {
        long long n2 = N * N, n4 = n2 * n2;
        long long parity = std::llabs(N) % 2;
        ok = ok && (n4 % 16 == parity) && (n2 % 4 == parity);
        // quartic: ε₄ < 0, ε₄t₄ = -1/16 in h·GHz·ns; -2πε₄t₄N⁴ = πN⁴/8
        std::complex<double> q = std::polar(1.0, 2.0 * units::pi * std::fmod(static_cast<double>(n4) / 16.0, 1.0));
        std::complex<double> qe = std::polar(1.0, units::pi / 8.0 * static_cast<double>(parity));
        // quadratic: ε_L t_rev = 1/4, so e^{-i2πε_L N² t_rev} = e^{-iπN²/2}
        std::complex<double> s = std::polar(1.0, -2.0 * units::pi * std::fmod(static_cast<double>(n2) / 4.0, 1.0));
        std::complex<double> se = parity ? std::complex<double>(0.0, -1.0) : std::complex<double>(1.0, 0.0);
        worst = std::max({worst, std::abs(q - qe), std::abs(s - se)});
    }
    // durations computed by the library realize those products
    CircuitParams p = table_set(3);
    EffectivePotential ep = fit_effective_potential(p);
    DerivedScales sc = derived_scales(p, ep.v(4), ep.quadratic_residual);
    double quartic = std::abs(16.0 * ep.v(4) * sc.t4) - 1.0;
    double quadratic = 4.0 * sc.eps_L * sc.t_rev - 1.0;
    ok = ok && worst <= 1e-12 && std::abs(quartic) <= 1e-12 && std::abs(quadratic) <= 1e-12;
    return {ok, "max phase error " + sci(worst) + ", |16ε₄t₄|-1 = " + sci(quartic) + ", 4ε_L t_rev-1 = " + sci(quadratic)};
}

// ------------------------------------------------------------------ scales

Outcome scale_identities() {
    CircuitParams p = table_set(3);
    DerivedScales s = base_scales(p);
    const double L = p.total_inductance(), C = p.capacitance();
    double root = std::sqrt(L * 1e-6 * C * 1e-15) * 1e9;
    double rel = std::abs(s.t_rev / root - 1.0);
    // πħ/2ε_L with ε_L in h·GHz: 1/(4ε_L) ns
    double rel2 = std::abs(s.t_rev * 4.0 * units::inductive_energy(L) - 1.0);
    double f = units::lc_frequency(2.5, units::impedance_matched_capacitance(2.5));
    bool ok = rel <= 1e-10 && rel2 <= 1e-10 && std::abs(f - 0.82) < 0.005;
    return {ok, "t_rev/√(LC)-1 = " + sci(rel) + ", f_LC(2.5 μH) = " + fmt("%.4f GHz", f)};
}

// ------------------------------------------------------------------ effective potential

Outcome effective_potential() {
    CircuitParams p = table_set(3);
    p.J_anc = {0.0, 0.0, 0.0};
    EffectivePotential ep = fit_effective_potential(p);
    const double eL = units::inductive_energy(p.total_inductance());
    double err = std::abs(ep.v(2) - eL);
    for (int k : {4, 6, 8}) err = std::max(err, std::abs(ep.v(k)));
    for (double x : {0.5, 2.0, 5.0}) err = std::max(err, std::abs(minimize_potential(p, x) - eL * x * x));
    bool ok = err <= 1e-10;
    std::ostringstream os;
    os << "inductor oracle error " << sci(err) << "; t_gate/published:";
    for (int i = 1; i <= 5; ++i) {
        CircuitParams q = table_set(i);
        EffectivePotential e = fit_effective_potential(q);
        DerivedScales s = derived_scales(q, e.v(4), e.quadratic_residual);
        double ratio = s.t_gate / 1e3 / table_gate_time_us(i);
        ok = ok && std::abs(ratio - 1.0) <= 0.10;
        os << ' ' << fmt("%.3f", ratio);
    }
    return {ok, os.str()};
}

// ------------------------------------------------------------------ constraints

Outcome constraint_suite() {
    ValidationReport r = validate_parameter_set(table_set(3), 3);
    double worst = 0.0;
    for (double v : r.eigenstate.ratio) worst = std::max(worst, v);
    for (double v : r.dephasing.ratio) worst = std::max(worst, v);
    bool ok = r.eigenstate.pass && r.dephasing.pass && worst < 0.1;
    return {ok, "largest ratio " + sci(worst)};
}

// ------------------------------------------------------------------ normal modes

Outcome normal_modes() {
    CircuitParams p = table_set(3);
    p.C_junc_fF = 0.1;
    NormalModes m = normal_mode_frequencies(p);
    double r2 = m.omega[1] / m.omega[0], r3 = m.omega[2] / m.omega[0];
    bool ok = r2 >= 10.0 && r3 >= 10.0 && m.temperature[1] >= 1.0 && m.temperature[2] >= 1.0;
    return {ok, "ω₂/ω₁ = " + fmt("%.3f", r2) + ", ω₃/ω₁ = " + fmt("%.3f", r3) + ", T₂ = " +
                    fmt("%.2f K", m.temperature[1]) + ", T₃ = " + fmt("%.2f K", m.temperature[2])};
}

// ------------------------------------------------------------------ noise

double g_oracle(double t, const NoiseSpectrum& sp) {
    using cd = std::complex<double>;
    const cd s(0.5 / sp.Lambda, t);
    boost::math::quadrature::exp_sinh<double> q;
    auto f = [&](double v) { return std::exp(-v) / std::sqrt(cd(v) / s + sp.omega0); };
    double re = q.integrate([&](double v) { return f(v).real(); }, 0.0, std::numeric_limits<double>::infinity(), 1e-14);
    double im = q.integrate([&](double v) { return f(v).imag(); }, 0.0, std::numeric_limits<double>::infinity(), 1e-14);
    return std::sqrt(2.0 / units::pi) * std::sqrt(sp.Omega) * (cd(re, im) / s).real();
}

Outcome noise_statistics() {
    NoiseSpectrum spec;
    const std::uint64_t seed = 6;
    const std::size_t n_auto = 20000, n_psd = 200;

    double g_err = 0.0;
    for (double t : {0.0, 1e-9, 1e-7, 3e-6, 1e-4, 1e-2, 1.0}) {
        double ref = g_oracle(t, spec);
        g_err = std::max(g_err, std::abs(jump_correlator(t, spec) - ref) / std::abs(ref));
    }

    NoiseGenerator gen(spec, build_noise_grid(spec), default_eval_times());
    const auto& tt = gen.eval_times();
    std::vector<double> acc(tt.size(), 0.0);
    for (std::size_t s = 0; s < n_auto; ++s) {
        NoiseSignal sig = gen.generate(derive_seed(seed, 0, 1, s));
        const auto& v = sig.values();
        for (std::size_t k = 0; k < v.size(); ++k) acc[k] += v[0] * v[k];
    }
    double auto_err = 0.0;
    for (std::size_t k = 0; k < tt.size(); ++k) {
        double t = target_autocorrelation(tt[k] - tt[0], spec);
        auto_err = std::max(auto_err, std::abs(acc[k] / static_cast<double>(n_auto) / t - 1.0));
    }

    UniformNoiseOptions uo;
    UniformNoiseSynth syn(spec, uo);
    std::vector<std::vector<double>> reals(n_psd);
    for (std::size_t s = 0; s < n_psd; ++s) reals[s] = syn.generate(derive_seed(seed, 0, 2, s));
    auto bands = band_psd(reals, uo.dt, spec, 10.0, 1e5, 4);
    double psd_err = 0.0;
    for (const auto& b : bands) psd_err = std::max(psd_err, std::abs(b.empirical / b.target - 1.0));

    bool ok = g_err <= 1e-6 && auto_err <= 0.05 && psd_err <= 0.10 && !bands.empty();
    return {ok, "g rel. error " + sci(g_err) + ", autocorrelation " + fmt("%.2f%%", 100 * auto_err) + " (" +
                    std::to_string(n_auto) + " seeds, τ ≤ 100 μs), PSD " + fmt("%.2f%%", 100 * psd_err) + " (" +
                    std::to_string(n_psd) + " seeds, " + std::to_string(bands.size()) + " bands over 10..1e5 rad/s)"};
}

// ------------------------------------------------------------------ unitary gate

Outcome unitary_gate() {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::SingleGate;
    cfg.table_set = 3;
    cfg.n_traj = 1;
    cfg.n_resample = 1;
    cfg.prep_cycles = 0;
    cfg.cleanup_steps = 0;
    cfg.dissipation = false;
    cfg.D = 1024;
    cfg.seed = 11;
    cfg.noise.gamma_phi = 0.0;
    SweepResult r = run_experiment(cfg, g_threads);
    const SweepPoint& p = r.points.at(0);
    if (!p.ok()) return {false, p.error};
    double angle = std::atan2(p.mean_bloch.y, p.mean_bloch.x);
    double expect = std::atan2(p.target.y, p.target.x);
    bool ok = p.infidelity <= 1e-3 && std::abs(std::abs(expect) - units::pi / 8.0) < 1e-12;
    return {ok, "1-F = " + sci(p.infidelity) + ", rotation " + fmt("%.5f", angle) + " rad (target " +
                    fmt("%.5f", expect) + "), t_gate = " + fmt("%.4g ns", p.t_gate_ns)};
}

// ------------------------------------------------------------------ SSE vs Lindblad

Outcome sse_lindblad() {
    toy::Model m = toy::make_model(12, 0.5);
    Eigen::MatrixXcd rho = toy::lindblad(m);
    Eigen::Vector3d exact = toy::observables(rho, m.block.energies);
    toy::Estimate est = toy::trajectories(m, 1000, 101);
    bool ok = true;
    std::ostringstream os;
    const char* names[3] = {"P₀", "⟨E⟩", "Re ρ₀₄"};
    for (int k = 0; k < 3; ++k) {
        double z = std::abs(est.mean[k] - exact[k]) / est.stderr_of_mean[k];
        ok = ok && z <= 2.0;
        os << names[k] << ' ' << fmt("%.2fσ", z) << (k < 2 ? ", " : "");
    }
    os << "; " << fmt("%.2f", est.mean_jumps) << " jumps per trajectory, 1000 trajectories";
    return {ok, os.str()};
}

// ------------------------------------------------------------------ trends

ExperimentConfig trend_config(ExperimentKind kind, std::vector<double> axis, std::uint64_t seed) {
    ExperimentConfig c;
    c.kind = kind;
    c.table_set = 3;
    c.axis = std::move(axis);
    c.n_traj = 250;
    c.cleanup_steps = 2;
    c.seed = seed;
    return c;
}

std::string describe(const SweepResult& r) {
    std::ostringstream os;
    for (std::size_t i = 0; i < r.points.size(); ++i) {
        const auto& p = r.points[i];
        os << (i ? ", " : "") << p.axis << ": ";
        if (p.ok())
            os << sci(p.infidelity) << "±" << sci(p.std_error);
        else
            os << "error (" << p.error << ")";
    }
    return os.str();
}

bool all_ok(const SweepResult& r) {
    for (const auto& p : r.points)
        if (!p.ok()) return false;
    return true;
}

double combined(const SweepPoint& a, const SweepPoint& b) { return std::hypot(a.std_error, b.std_error); }

Outcome trend_gate_time() {
    SweepResult r = run_experiment(trend_config(ExperimentKind::GateTimeSweep, {0.01, 0.03, 0.1}, 1), g_threads);
    bool ok = all_ok(r);
    for (std::size_t i = 1; ok && i < r.points.size(); ++i)
        ok = r.points[i].infidelity <= r.points[i - 1].infidelity + 2.0 * combined(r.points[i], r.points[i - 1]);
    return {ok, "t_gate μs → " + describe(r)};
}

Outcome trend_timing() {
    SweepResult r = run_experiment(trend_config(ExperimentKind::TimingSweep, {0.0, 10.0}, 2), g_threads);
    bool ok = all_ok(r);
    if (ok) {
        const auto &a = r.points[0], &b = r.points[1];
        const double floor = 1.0 / static_cast<double>(a.n_traj);
        bool both_below = a.infidelity < floor && b.infidelity < floor;
        ok = both_below || std::abs(a.infidelity - b.infidelity) <= 2.0 * combined(a, b);
    }
    return {ok, "Δt ps → " + describe(r) + " (floor 1/N = " + sci(1.0 / 250) + ")"};
}

Outcome trend_mistargeting() {
    ExperimentConfig c = trend_config(ExperimentKind::MistargetingSweep, {0.001, 0.05}, 3);
    c.n_resample = 25;
    SweepResult r = run_experiment(c, g_threads);
    bool ok = all_ok(r);
    if (ok) {
        const auto &a = r.points[0], &b = r.points[1];
        ok = a.infidelity < 1e-2 && b.infidelity - 2.0 * b.std_error >= 10.0 * (a.infidelity + 2.0 * a.std_error);
    }
    return {ok, "u → " + describe(r)};
}

Outcome trend_decoupling() {
    SweepPoint pts[2];
    std::ostringstream os;
    bool ok = true;
    int k = 0;
    for (int n_dd : {0, 4}) {
        ExperimentConfig c = trend_config(ExperimentKind::NoiseSweep, {1.0}, 4);
        c.J = 200.0;
        c.n_dd = n_dd;
        c.n_resample = 25;
        SweepResult r = run_experiment(c, g_threads);
        ok = ok && all_ok(r);
        pts[k++] = r.points.at(0);
        os << (n_dd ? ", " : "") << "N_DD " << n_dd << ": " << describe(r);
    }
    if (ok) ok = pts[1].infidelity < pts[0].infidelity - 2.0 * combined(pts[0], pts[1]);
    return {ok, "γ_φ = 1, J = 200 → " + os.str()};
}

Outcome trends() {
    struct Sub {
        const char* name;
        Outcome (*fn)();
    };
    bool ok = true;
    std::ostringstream os;
    for (Sub s : {Sub{"a", trend_gate_time}, Sub{"b", trend_timing}, Sub{"c", trend_mistargeting},
                  Sub{"d", trend_decoupling}}) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o = s.fn();
        double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("    (%s) %s  %s [%.0f s]\n", s.name, o.pass ? "pass" : "fail", o.detail.c_str(), sec);
        std::fflush(stdout);
        ok = ok && o.pass;
        os << '(' << s.name << ')' << (o.pass ? "pass " : "fail ");
    }
    return {ok, os.str()};
}

// ------------------------------------------------------------------ determinism

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

int run_cli(const fs::path& config, const fs::path& out, int threads) {
    fs::create_directories(out);
    std::string cmd = std::string("\"") + GKPSIM_CLI_PATH + "\" sweep --config \"" + config.string() + "\" --out \"" +
                      out.string() + "\" --seed 77 --threads " + std::to_string(threads) + " > \"" +
                      (out / "log.txt").string() + "\" 2>&1";
    return std::system(cmd.c_str());
}

Outcome determinism() {
    fs::path dir = fs::temp_directory_path() / ("gkpsim_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    fs::path cfg = dir / "point.json";
    {
        std::ofstream f(cfg);
        f << R"({"kind": "timing_sweep", "table_set": 3, "axis": [20], "n_traj": 8, "cleanup_steps": 2,
                 "output": "point.csv"})";
    }
    int rc = run_cli(cfg, dir / "a", 1) | run_cli(cfg, dir / "b", 1) | run_cli(cfg, dir / "c", 2);
    if (rc != 0) return {false, "CLI exited with an error, see " + dir.string()};
    bool same = true;
    for (const char* name : {"point.csv", "point.json"}) {
        std::string a = slurp(dir / "a" / name);
        same = same && !a.empty() && a == slurp(dir / "b" / name) && a == slurp(dir / "c" / name);
    }
    std::string csv = slurp(dir / "a" / "point.csv");
    if (same) fs::remove_all(dir);
    return {same, same ? "two runs at 1 thread and one at 2 threads byte-identical; " +
                             csv.substr(csv.find('\n') + 1, csv.find('\n', csv.find('\n') + 1) - csv.find('\n') - 1)
                       : "outputs differ, kept in " + dir.string()};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<std::string> only;
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            for (std::string item; std::getline(ss, item, ',');) only.insert(item);
        } else if (a == "--threads" && i + 1 < argc) {
            g_threads = static_cast<unsigned>(std::stoul(argv[++i]));
        } else {
            std::fprintf(stderr, "usage: %s [--only name,...] [--threads n]\n", argv[0]);
            return 2;
        }
    }
    g_threads = resolve_threads(g_threads);

    const std::vector<Criterion> criteria = {
        {"revival_arithmetic", revival_arithmetic},
        {"scale_identities", scale_identities},
        {"effective_potential", effective_potential},
        {"constraint_suite", constraint_suite},
        {"normal_modes", normal_modes, true},
        {"noise_statistics", noise_statistics},
        {"unitary_sqrt_t", unitary_gate},
        {"sse_lindblad", sse_lindblad},
        {"trends", trends},
        {"determinism", determinism},
    };

    int unexpected = 0, known = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.name)) continue;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const char* tag = o.pass ? "PASS" : (c.known_failure ? "FAIL (known, documented)" : "FAIL");
        std::printf("%s  %s: %s [%.1f s]\n", tag, c.name.c_str(), o.detail.c_str(), sec);
        std::fflush(stdout);
        if (!o.pass) (c.known_failure ? known : unexpected)++;
    }
    std::printf("%d unexpected failure(s), %d known failure(s)\n", unexpected, known);
    return unexpected == 0 ? 0 : 1;
}
