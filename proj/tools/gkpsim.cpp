#include "gkpsim/circuit.hpp"
#include "gkpsim/fluxnoise.hpp"
#include "gkpsim/harness.hpp"
#include "gkpsim/search.hpp"
#include "gkpsim/units.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

using namespace gkpsim;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    unsigned threads = 0;
    int set = 3;
};

void add_common(CLI::App* app, Common& c, bool with_set) {
    app->add_option("--config", c.config, "JSON configuration file");
    app->add_option("--seed", c.seed, "master seed");
    app->add_option("--out", c.out, "output directory");
    app->add_option("--threads", c.threads, "worker threads (GKPSIM_THREADS when omitted)");
    if (with_set) app->add_option("--set", c.set, "table parameter set when no config is given")->check(CLI::Range(1, 5));
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return json::parse(in);
}

fs::path out_file(const Common& c, const std::string& name) {
    fs::create_directories(c.out);
    return fs::path(c.out) / name;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
    f.precision(17);
    return f;
}

CircuitParams circuit_for(const Common& c) { return c.config.empty() ? table_set(c.set) : load_circuit(c.config); }

int cmd_potential(const Common& c, double x_max, int points) {
    CircuitParams p = circuit_for(c);
    EffectivePotential ep = fit_effective_potential(p);
    {
        auto f = open_out(out_file(c, "potential.csv"));
        f << "phi,V_eff,V_fit\n";
        for (int i = 0; i < points; ++i) {
            double x = -x_max + 2.0 * x_max * i / (points - 1);
            f << x << ',' << minimize_potential(p, x) << ',' << ep.value(x) - ep.value(0.0) << '\n';
        }
    }
    json j;
    j["circuit"] = json::parse(circuit_to_json(p));
    j["V"] = ep.V;
    j["residual"] = ep.residual;
    j["quadratic_residual"] = ep.quadratic_residual;
    if (ep.v(4) != 0.0) {
        DerivedScales s = derived_scales(p, ep.v(4), ep.quadratic_residual);
        j["t4_ns"] = s.t4;
        j["t2_ns"] = s.t2;
        j["t_gate_us"] = s.t_gate / 1e3;
        j["t_rev_ns"] = s.t_rev;
        j["f_LC_GHz"] = s.f_LC;
        j["kappa"] = s.kappa;
        auto eig = constraint_eigenstate(ep.V, s);
        auto dep = constraint_dephasing(ep.V, s.kappa, s.t4);
        j["eigenstate_constraint"] = {{"k", eig.k}, {"ratio", eig.ratio}, {"pass", eig.pass}};
        j["dephasing_constraint"] = {{"k", dep.k}, {"ratio", dep.ratio}, {"pass", dep.pass}};
    }
    open_out(out_file(c, "potential.json")) << j.dump(2) << '\n';

    // Modified-envelope Fourier transforms for a sextic perturbation at several strengths.
    {
        const double kappa = 10.0 / units::pi;
        std::vector<double> q;
        for (int i = 0; i <= 200; ++i) q.push_back(-0.5 + 0.005 * i);
        auto f = open_out(out_file(c, "envelope.csv"));
        f << "alpha_kappa6,q,re,im,truncation_error,terms_used\n";
        for (double ak : {0.0, 1e-6, 1e-5, 1e-4, 1e-3}) {
            EnvelopeSeries es = envelope_ft_series(kappa, 6, ak / std::pow(kappa, 6), q, 40);
            for (std::size_t i = 0; i < q.size(); ++i)
                f << ak << ',' << q[i] << ',' << es.values[i].real() << ',' << es.values[i].imag() << ','
                  << es.truncation_error[i] << ',' << es.terms_used[i] << '\n';
        }
    }
    std::printf("V4 = %.6e h·GHz, fit residual %.2e, wrote %s\n", ep.v(4), ep.residual, c.out.c_str());
    return 0;
}

int cmd_modes(const Common& c, double cj_min, double cj_max, int points) {
    CircuitParams p = circuit_for(c);
    auto f = open_out(out_file(c, "modes.csv"));
    f << "C_junc_fF,omega1,omega2,omega3,T1_K,T2_K,T3_K\n";
    for (int i = 0; i < points; ++i) {
        double cj = cj_min * std::pow(cj_max / cj_min, points > 1 ? double(i) / (points - 1) : 0.0);
        p.C_junc_fF = cj;
        NormalModes m = normal_mode_frequencies(p);
        f << cj << ',' << m.omega[0] << ',' << m.omega[1] << ',' << m.omega[2] << ',' << m.temperature[0] << ','
          << m.temperature[1] << ',' << m.temperature[2] << '\n';
    }
    std::printf("wrote %s\n", (fs::path(c.out) / "modes.csv").c_str());
    return 0;
}

int cmd_search(const Common& c) {
    json j = c.config.empty() ? json::object() : read_json(c.config);
    CircuitParams base = j.contains("circuit_file") ? load_circuit(j["circuit_file"].get<std::string>())
                                                    : table_set(j.value("table_set", c.set));
    SearchSpace s = SearchSpace::around(base, j.value("relative", 0.2));
    s.starts = j.value("starts", s.starts);
    s.max_iterations = j.value("max_iterations", s.max_iterations);
    s.threshold = j.value("threshold", s.threshold);
    s.seed = c.seed.value_or(j.value("seed", s.seed));
    SearchOutcome o = search_parameters(s);
    json r;
    r["evaluations"] = o.evaluations;
    r["infeasible_starts"] = o.infeasible_starts;
    r["diagnostics"] = o.diagnostics;
    json res = json::array();
    for (const auto& sr : o.results) {
        json e;
        e["circuit"] = json::parse(circuit_to_json(sr.params));
        e["V"] = sr.V;
        e["t_gate_us"] = sr.t_gate_us;
        e["score"] = sr.score;
        e["eigenstate_ratio"] = sr.eigenstate.ratio;
        e["dephasing_ratio"] = sr.dephasing.ratio;
        res.push_back(e);
    }
    r["results"] = res;
    open_out(out_file(c, "search.json")) << r.dump(2) << '\n';
    std::printf("%zu feasible optima from %d evaluations\n", o.results.size(), o.evaluations);
    return 0;
}

int cmd_noise_check(const Common& c) {
    json j = c.config.empty() ? json::object() : read_json(c.config);
    NoiseSpectrum spec;
    if (j.contains("noise")) {
        const auto& n = j["noise"];
        spec.gamma_phi = n.value("gamma_phi", spec.gamma_phi);
        spec.Omega = n.value("Omega", spec.Omega);
        spec.omega0 = n.value("omega0", spec.omega0);
        spec.Lambda = n.value("Lambda", spec.Lambda);
    }
    spec.validate();
    const std::uint64_t seed = c.seed.value_or(j.value("seed", std::uint64_t{1}));
    const std::size_t n_auto = j.value("autocorrelation_seeds", std::size_t{20000});
    const std::size_t n_psd = j.value("psd_seeds", std::size_t{200});

    NoiseGenerator gen(spec, build_noise_grid(spec), default_eval_times());
    const auto& tt = gen.eval_times();
    std::vector<double> acc(tt.size(), 0.0);
    for (std::size_t s = 0; s < n_auto; ++s) {
        NoiseSignal sig = gen.generate(derive_seed(seed, 0, 1, s));
        const auto& v = sig.values();
        for (std::size_t k = 0; k < v.size(); ++k) acc[k] += v[0] * v[k];
    }
    {
        auto f = open_out(out_file(c, "autocorrelation.csv"));
        f << "tau,empirical,target,relative_error\n";
        for (std::size_t k = 0; k < tt.size(); ++k) {
            double e = acc[k] / static_cast<double>(n_auto);
            double t = target_autocorrelation(tt[k] - tt[0], spec);
            f << tt[k] - tt[0] << ',' << e << ',' << t << ',' << e / t - 1.0 << '\n';
        }
    }
    if (n_psd > 0) {
        UniformNoiseOptions uo;
        UniformNoiseSynth syn(spec, uo);
        std::vector<std::vector<double>> reals(n_psd);
        for (std::size_t s = 0; s < n_psd; ++s) reals[s] = syn.generate(derive_seed(seed, 0, 2, s));
        auto bands = band_psd(reals, uo.dt, spec, j.value("omega_low", 10.0), j.value("omega_high", 1e5), 4);
        auto f = open_out(out_file(c, "psd.csv"));
        f << "omega_low,omega_high,omega_center,empirical,target,relative_error,bins\n";
        for (const auto& b : bands)
            f << b.omega_low << ',' << b.omega_high << ',' << b.omega_center << ',' << b.empirical << ',' << b.target
              << ',' << b.empirical / b.target - 1.0 << ',' << b.bins << '\n';
    }
    std::printf("wrote noise statistics to %s\n", c.out.c_str());
    return 0;
}

ExperimentConfig experiment_for(const Common& c, std::optional<ExperimentKind> force) {
    ExperimentConfig cfg;
    if (!c.config.empty()) {
        cfg = load_experiment(c.config);
    } else {
        if (!force) throw std::invalid_argument("sweep needs --config");
        cfg.table_set = c.set;
    }
    if (force) {
        cfg.kind = *force;
        cfg.axis.clear();
    }
    if (c.seed) cfg.seed = *c.seed;
    std::string name = cfg.output.empty() ? std::string(to_string(cfg.kind)) + ".csv" : fs::path(cfg.output).filename().string();
    cfg.output = (fs::path(c.out) / name).string();
    cfg.validate();
    return cfg;
}

int run_and_report(const ExperimentConfig& cfg, unsigned threads) {
    SweepResult r = run_experiment(cfg, threads);
    std::size_t failed = 0;
    for (const auto& p : r.points) {
        if (p.ok()) {
            std::printf("%-12.6g 1-F = %.4e ± %.2e (n = %zu%s)\n", p.axis, p.infidelity, p.std_error, p.n_traj,
                        p.resolution_limited ? ", below 1/N" : "");
        } else {
            ++failed;
            std::fprintf(stderr, "point %g failed: %s\n", p.axis, p.error.c_str());
        }
    }
    std::printf("wrote %s\n", cfg.output.c_str());
    return failed == r.points.size() ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GKP √T gate simulator"};
    app.require_subcommand(1);
    Common common;

    double x_max = 6.0;
    int points = 241;
    auto* pot = app.add_subcommand("potential", "effective potential, fit and envelope series");
    add_common(pot, common, true);
    pot->add_option("--x-max", x_max, "flux range");
    pot->add_option("--points", points, "samples")->check(CLI::Range(2, 100000));

    double cj_min = 0.01, cj_max = 10.0;
    int mode_points = 61;
    auto* modes = app.add_subcommand("modes", "normal-mode frequencies versus junction capacitance");
    add_common(modes, common, true);
    modes->add_option("--cj-min", cj_min, "smallest C_junc (fF)");
    modes->add_option("--cj-max", cj_max, "largest C_junc (fF)");
    modes->add_option("--points", mode_points, "samples")->check(CLI::Range(1, 100000));

    auto* search = app.add_subcommand("search", "multi-start parameter search");
    add_common(search, common, true);
    auto* noise = app.add_subcommand("noise-check", "flux-noise autocorrelation and PSD");
    add_common(noise, common, false);
    auto* gate = app.add_subcommand("gate", "single √T gate");
    add_common(gate, common, true);
    auto* sweep = app.add_subcommand("sweep", "experiment sweep from a config");
    add_common(sweep, common, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        const unsigned threads = resolve_threads(common.threads);
        if (pot->parsed()) return cmd_potential(common, x_max, points);
        if (modes->parsed()) return cmd_modes(common, cj_min, cj_max, mode_points);
        if (search->parsed()) return cmd_search(common);
        if (noise->parsed()) return cmd_noise_check(common);
        if (gate->parsed()) return run_and_report(experiment_for(common, ExperimentKind::SingleGate), threads);
        if (sweep->parsed()) return run_and_report(experiment_for(common, std::nullopt), threads);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
