#include "gkpsim/harness.hpp"

#include "gkpsim/units.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace gkpsim {

using json = nlohmann::json;

namespace {

constexpr std::uint64_t stream_circuit = 1;
constexpr std::uint64_t stream_noise = 2;
constexpr std::uint64_t stream_sse = 3;
constexpr std::uint64_t stream_jitter = 4;

std::uint64_t splitmix64(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json noise_to_json(const NoiseSpectrum& n) {
    return {{"gamma_phi", n.gamma_phi}, {"Omega", n.Omega}, {"omega0", n.omega0}, {"Lambda", n.Lambda}};
}

json bloch_to_json(const BlochVector& b) { return json::array({b.x, b.y, b.z}); }

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

// Everything one circuit realization needs to run trajectories.
struct Realization {
    CircuitParams circuit;
    std::shared_ptr<ProtocolSystem> system;
    Schedule prep;
    Schedule gate;
    StateVector initial;
    ScheduleTimes times;
    std::size_t rejected = 0;
};

BathSpec make_bath(const CircuitParams& nominal) {
    BathSpec b;
    b.Gamma_GHz = nominal.Gamma_GHz;
    b.T_mK = nominal.T_mK;
    b.omega_ref = base_scales(nominal).eps0;
    return b;
}

class ExperimentRunner {
public:
    ExperimentRunner(const ExperimentConfig& cfg, unsigned threads)
        : cfg_(cfg), threads_(threads), nominal_(experiment_circuit(cfg)), grid_(build_grid(cfg.D, cfg.X)) {
        bath_ = make_bath(nominal_);
        sys_opts_.energy_window = cfg.energy_window;
    }

    SweepPoint run_point(std::size_t index, double axis) {
        SweepPoint pt;
        pt.axis = axis;
        pt.seed = derive_seed(cfg_.seed, index);
        pt.n_traj = cfg_.n_traj;
        const std::size_t R = resamples();
        pt.n_resample = R;
        try {
            run_point_impl(index, axis, R, pt);
        } catch (const std::exception& e) {
            pt.error = e.what();
            pt.infidelity = nan_value();
            pt.std_error = nan_value();
        }
        return pt;
    }

private:
    const ExperimentConfig& cfg_;
    unsigned threads_;
    CircuitParams nominal_;
    QuadratureGrid grid_;
    BathSpec bath_;
    SystemOptions sys_opts_;
    std::optional<ScheduleTimes> nominal_times_;
    std::optional<Realization> shared_;  // reused across points that share the circuit

    std::size_t resamples() const {
        if (cfg_.kind == ExperimentKind::MistargetingSweep || cfg_.kind == ExperimentKind::NoiseSweep)
            return std::min(cfg_.n_resample, cfg_.n_traj);
        return 1;
    }

    std::vector<double> phi4_terms(const CircuitParams& c, double axis) const {
        if (cfg_.kind == ExperimentKind::GateTimeSweep) return {0.0, 0.0, 0.0, 0.0, -1.0 / (16.0 * axis * 1e3)};
        return fit_effective_potential(c).hamiltonian_terms();
    }

    ScheduleTimes analytic_times(const CircuitParams& c) const {
        EffectivePotential ep = fit_effective_potential(c);
        return schedule_times(derived_scales(c, ep.v(4), ep.quadratic_residual));
    }

    const ScheduleTimes& nominal_times() {
        if (!nominal_times_) {
            if (cfg_.calibrate) {
                ProtocolSystem sys =
                    ProtocolSystem::build(grid_, nominal_, phi4_terms(nominal_, 0.0), nullptr, sys_opts_);
                nominal_times_ = sys.calibrated_times();
            } else {
                nominal_times_ = analytic_times(nominal_);
            }
        }
        return *nominal_times_;
    }

    Realization realize(const CircuitParams& c, double axis, bool mistargeted) {
        Realization r;
        r.circuit = c;
        const BathSpec* bath = cfg_.dissipation ? &bath_ : nullptr;
        r.system = std::make_shared<ProtocolSystem>(
            ProtocolSystem::build(grid_, c, phi4_terms(c, axis), bath, sys_opts_));
        ScheduleTimes times;
        if (mistargeted && cfg_.mistargeting_schedule == "quadratic") {
            times = recalibrate_quadratic(nominal_times(), r.system->block("phi4").wells,
                                          r.system->block("lcj").wells, r.system->f_LC());
        } else if (mistargeted && cfg_.mistargeting_schedule == "none") {
            times = nominal_times();
        } else if (cfg_.calibrate || cfg_.kind == ExperimentKind::GateTimeSweep) {
            times = r.system->calibrated_times();
        } else {
            times = analytic_times(c);
        }
        r.times = times;
        r.prep = build_stabilization_schedule(times, cfg_.prep_cycles, cfg_.prep_revivals);
        r.gate = build_tgate_schedule(times, cfg_.n_dd, cfg_.cleanup_steps, cfg_.cleanup_revivals);
        double t_max = 0.0;
        for (const auto& seg : concatenate(r.prep, r.gate).segments)
            if (seg.dissipative) t_max = std::max(t_max, seg.duration);
        if (cfg_.kind == ExperimentKind::TimingSweep)
            t_max += (cfg_.axis.empty() ? axis : std::max(axis, cfg_.axis.back())) * 1e-3;
        if (cfg_.dissipation) r.system->prepare(t_max * 1.001 + 1.0, cfg_.delta);
        r.initial = initial_codeword(grid_, c, Codeword::PlusX);
        return r;
    }

    struct TrajOutcome {
        BlochVector bloch;
        BlochVector target;
        std::size_t jumps = 0;
        double edge = 0.0;
        double loss = 0.0;
        bool tripped = false;
        std::string error;
    };

    TrajOutcome run_one(const Realization& r, const NoiseSignal* noise, std::size_t index, double axis,
                        std::size_t traj) const {
        TrajOutcome out;
        Schedule gate = r.gate;
        if (cfg_.kind == ExperimentKind::TimingSweep)
            gate = apply_timing_jitter(gate, axis * 1e-3, derive_seed(cfg_.seed, index, stream_jitter, traj));
        Schedule full = concatenate(r.prep, gate);
        SseConfig sc;
        sc.seed = derive_seed(cfg_.seed, index, stream_sse, traj);
        sc.delta = cfg_.delta;
        sc.leakage_threshold = cfg_.leakage_threshold;
        sc.leakage_is_error = cfg_.leakage_is_error;
        sc.noise_offset = r.prep.total_duration();
        TrajectoryResult res = run_trajectory(full, *r.system, r.initial, noise, sc);
        out.bloch = res.readouts.back().bloch;
        out.target = logical_target(full, {1.0, 0.0, 0.0});
        out.jumps = res.jumps;
        out.edge = res.max_edge_probability;
        out.loss = res.truncation_loss;
        out.tripped = res.leakage_tripped;
        return out;
    }

    void run_point_impl(std::size_t index, double axis, std::size_t R, SweepPoint& pt) {
        const std::size_t N = cfg_.n_traj;
        const bool mistarget = cfg_.kind == ExperimentKind::MistargetingSweep;
        const bool noisy = cfg_.kind == ExperimentKind::NoiseSweep && axis > 0.0;

        std::unique_ptr<NoiseGenerator> gen;
        if (noisy) {
            NoiseSpectrum spec = cfg_.noise;
            spec.gamma_phi = axis;
            NoiseGridOptions go;
            go.ratio = cfg_.noise_grid_ratio;
            gen = std::make_unique<NoiseGenerator>(spec, build_noise_grid(spec, go), default_eval_times());
        }

        // trajectory k belongs to resample k·R/N
        auto owner = [&](std::size_t k) { return k * R / N; };
        std::vector<std::size_t> first(R + 1, N);
        for (std::size_t k = N; k-- > 0;) first[owner(k)] = k;
        first[R] = N;

        std::vector<TrajOutcome> outcomes(N);
        std::vector<std::size_t> rejected(R, 0);
        std::vector<std::string> errors(R);

        auto realization_for = [&](std::size_t r) {
            CircuitParams c = nominal_;
            std::size_t rej = 0;
            if (mistarget) {
                MistargetingDraw d = sample_mistargeting(nominal_, axis, derive_seed(cfg_.seed, index, stream_circuit, r));
                c = d.circuit;
                rej = d.rejected;
            }
            Realization real = realize(c, axis, mistarget);
            real.rejected = rej;
            return real;
        };
        auto noise_for = [&](std::size_t r) {
            return gen ? gen->generate(derive_seed(cfg_.seed, index, stream_noise, r)) : NoiseSignal{};
        };

        if (R == 1 || !mistarget) {
            // one circuit shared by all trajectories
            const bool reusable = !mistarget && cfg_.kind != ExperimentKind::GateTimeSweep;
            if (!reusable || !shared_) shared_ = realization_for(0);
            const Realization& real = *shared_;
            rejected[0] = real.rejected;
            pt.t_gate_ns = real.times.t_gate();
            std::vector<NoiseSignal> signals(R);
            for (std::size_t r = 0; r < R; ++r) signals[r] = noise_for(r);
            parallel_for(N, threads_, [&](std::size_t k) {
                const NoiseSignal* sig = gen ? &signals[owner(k)] : nullptr;
                try {
                    outcomes[k] = run_one(real, sig, index, axis, k);
                } catch (const std::exception& e) {
                    outcomes[k].error = e.what();
                }
            });
        } else {
            pt.t_gate_ns = nominal_times().t_gate();
            parallel_for(R, threads_, [&](std::size_t r) {
                try {
                    Realization real = realization_for(r);
                    rejected[r] = real.rejected;
                    NoiseSignal sig = noise_for(r);
                    for (std::size_t k = first[r]; k < first[r + 1]; ++k)
                        outcomes[k] = run_one(real, gen ? &sig : nullptr, index, axis, k);
                } catch (const std::exception& e) {
                    errors[r] = e.what();
                }
            });
        }

        for (std::size_t r = 0; r < R; ++r)
            if (!errors[r].empty()) throw std::runtime_error("resample " + std::to_string(r) + ": " + errors[r]);
        for (std::size_t k = 0; k < N; ++k)
            if (!outcomes[k].error.empty())
                throw std::runtime_error("trajectory " + std::to_string(k) + ": " + outcomes[k].error);

        // Targets agree up to rounding for shared schedules; jittered and mistargeted frames are identical
        // Clifford sequences, so the first target stands for all.
        const BlochVector target = outcomes.front().target;
        std::vector<BlochVector> bloch(N);
        std::vector<std::size_t> blocks(N);
        const std::size_t nb = R > 1 ? R : std::min<std::size_t>(N, 25);
        double jumps = 0.0;
        for (std::size_t k = 0; k < N; ++k) {
            bloch[k] = outcomes[k].bloch;
            blocks[k] = R > 1 ? owner(k) : k * nb / N;
            jumps += static_cast<double>(outcomes[k].jumps);
            pt.max_edge_probability = std::max(pt.max_edge_probability, outcomes[k].edge);
            pt.max_truncation_loss = std::max(pt.max_truncation_loss, outcomes[k].loss);
            if (outcomes[k].tripped) ++pt.leakage_trips;
        }
        Aggregate a = aggregate(bloch, target, blocks);
        pt.infidelity = std::clamp(1.0 - a.fidelity, 0.0, 1.0);
        pt.std_error = a.std_error;
        pt.mean_bloch = a.mean;
        pt.target = target;
        pt.mean_jumps = jumps / static_cast<double>(N);
        for (auto r : rejected) pt.rejected_draws += r;
        pt.resolution_limited = pt.infidelity < 1.0 / static_cast<double>(N);
    }
};

}  // namespace

const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::SingleGate: return "single_gate";
        case ExperimentKind::GateTimeSweep: return "gate_time_sweep";
        case ExperimentKind::TimingSweep: return "timing_sweep";
        case ExperimentKind::MistargetingSweep: return "mistargeting_sweep";
        case ExperimentKind::NoiseSweep: return "noise_sweep";
    }
    return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
    for (auto k : {ExperimentKind::SingleGate, ExperimentKind::GateTimeSweep, ExperimentKind::TimingSweep,
                   ExperimentKind::MistargetingSweep, ExperimentKind::NoiseSweep})
        if (s == to_string(k)) return k;
    throw std::invalid_argument("unknown experiment kind '" + s + "'");
}

void ExperimentConfig::validate() const {
    if (n_traj < 1) throw std::invalid_argument("n_traj must be at least 1");
    if (n_resample < 1) throw std::invalid_argument("n_resample must be at least 1");
    if (kind != ExperimentKind::SingleGate && axis.empty()) throw std::invalid_argument("sweep axis is empty");
    for (double v : axis)
        if (!std::isfinite(v)) throw std::invalid_argument("sweep values must be finite");
    if (!std::is_sorted(axis.begin(), axis.end())) throw std::invalid_argument("sweep values must be sorted");
    if (!axis.empty()) {
        if (kind == ExperimentKind::GateTimeSweep && !(axis.front() > 0.0))
            throw std::invalid_argument("gate times must be positive");
        if (kind != ExperimentKind::SingleGate && kind != ExperimentKind::GateTimeSweep && axis.front() < 0.0)
            throw std::invalid_argument("sweep values must be non-negative");
    }
    if (n_dd < 0 || cleanup_steps < 0 || cleanup_revivals < 1 || prep_cycles < 0 || prep_revivals < 1)
        throw std::invalid_argument("schedule counts out of range");
    if (D < 16 || !(X > 0.0)) throw std::invalid_argument("invalid grid");
    if (!(delta > 0.0)) throw std::invalid_argument("SSE step must be positive");
    if (!(leakage_threshold > 0.0)) throw std::invalid_argument("leakage threshold must be positive");
    if (mistargeting_schedule != "quadratic" && mistargeting_schedule != "full" && mistargeting_schedule != "none")
        throw std::invalid_argument("mistargeting_schedule must be quadratic, full or none");
    if (!(noise_grid_ratio > 1.0)) throw std::invalid_argument("noise grid ratio must exceed 1");
    if (J && !(*J > 0.0)) throw std::invalid_argument("J must be positive");
    if (T_mK && !(*T_mK >= 0.0)) throw std::invalid_argument("T must be non-negative");
    if (Gamma_GHz && !(*Gamma_GHz >= 0.0)) throw std::invalid_argument("Γ must be non-negative");
    noise.validate();
}

ExperimentConfig experiment_from_json(const std::string& text) {
    json j = json::parse(text);
    ExperimentConfig c;
    c.kind = experiment_kind_from_string(j.value("kind", std::string("single_gate")));
    c.circuit_file = j.value("circuit_file", c.circuit_file);
    c.table_set = j.value("table_set", c.table_set);
    if (j.contains("J")) c.J = j.at("J").get<double>();
    if (j.contains("T_mK")) c.T_mK = j.at("T_mK").get<double>();
    if (j.contains("Gamma_GHz")) c.Gamma_GHz = j.at("Gamma_GHz").get<double>();
    c.n_traj = j.value("n_traj", c.n_traj);
    c.n_resample = j.value("n_resample", c.n_resample);
    c.axis = j.value("axis", c.axis);
    c.n_dd = j.value("n_dd", c.n_dd);
    c.cleanup_steps = j.value("cleanup_steps", c.cleanup_steps);
    c.cleanup_revivals = j.value("cleanup_revivals", c.cleanup_revivals);
    c.prep_cycles = j.value("prep_cycles", c.prep_cycles);
    c.prep_revivals = j.value("prep_revivals", c.prep_revivals);
    c.seed = j.value("seed", c.seed);
    c.output = j.value("output", c.output);
    c.D = j.value("D", c.D);
    c.X = j.value("X", c.X);
    c.energy_window = j.value("energy_window", c.energy_window);
    c.delta = j.value("delta", c.delta);
    c.leakage_threshold = j.value("leakage_threshold", c.leakage_threshold);
    c.leakage_is_error = j.value("leakage_is_error", c.leakage_is_error);
    c.calibrate = j.value("calibrate", c.calibrate);
    c.mistargeting_schedule = j.value("mistargeting_schedule", c.mistargeting_schedule);
    c.dissipation = j.value("dissipation", c.dissipation);
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        c.noise.gamma_phi = n.value("gamma_phi", c.noise.gamma_phi);
        c.noise.Omega = n.value("Omega", c.noise.Omega);
        c.noise.omega0 = n.value("omega0", c.noise.omega0);
        c.noise.Lambda = n.value("Lambda", c.noise.Lambda);
    }
    c.noise_grid_ratio = j.value("noise_grid_ratio", c.noise_grid_ratio);
    c.validate();
    return c;
}

namespace {

json config_json(const ExperimentConfig& c) {
    json j;
    j["kind"] = to_string(c.kind);
    j["circuit_file"] = c.circuit_file;
    j["table_set"] = c.table_set;
    if (c.J) j["J"] = *c.J;
    if (c.T_mK) j["T_mK"] = *c.T_mK;
    if (c.Gamma_GHz) j["Gamma_GHz"] = *c.Gamma_GHz;
    j["n_traj"] = c.n_traj;
    j["n_resample"] = c.n_resample;
    j["axis"] = c.axis;
    j["n_dd"] = c.n_dd;
    j["cleanup_steps"] = c.cleanup_steps;
    j["cleanup_revivals"] = c.cleanup_revivals;
    j["prep_cycles"] = c.prep_cycles;
    j["prep_revivals"] = c.prep_revivals;
    j["seed"] = c.seed;
    j["output"] = c.output;
    j["D"] = c.D;
    j["X"] = c.X;
    j["energy_window"] = c.energy_window;
    j["delta"] = c.delta;
    j["leakage_threshold"] = c.leakage_threshold;
    j["leakage_is_error"] = c.leakage_is_error;
    j["calibrate"] = c.calibrate;
    j["mistargeting_schedule"] = c.mistargeting_schedule;
    j["dissipation"] = c.dissipation;
    j["noise"] = noise_to_json(c.noise);
    j["noise_grid_ratio"] = c.noise_grid_ratio;
    return j;
}

}  // namespace

std::string experiment_to_json(const ExperimentConfig& cfg) { return config_json(cfg).dump(2); }

ExperimentConfig load_experiment(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    ExperimentConfig c = experiment_from_json(ss.str());
    // relative circuit paths resolve against the config file
    if (!c.circuit_file.empty()) {
        std::filesystem::path p(c.circuit_file);
        if (p.is_relative() && !std::filesystem::exists(p)) {
            auto alt = std::filesystem::path(path).parent_path() / p;
            if (std::filesystem::exists(alt)) c.circuit_file = alt.string();
        }
    }
    return c;
}

CircuitParams experiment_circuit(const ExperimentConfig& cfg) {
    CircuitParams c = cfg.circuit_file.empty() ? table_set(cfg.table_set) : load_circuit(cfg.circuit_file);
    if (cfg.J) c.J = *cfg.J;
    if (cfg.T_mK) c.T_mK = *cfg.T_mK;
    if (cfg.Gamma_GHz) c.Gamma_GHz = *cfg.Gamma_GHz;
    c.validate();
    return c;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t s = master;
    std::uint64_t h = splitmix64(s);
    for (std::uint64_t v : {a, b, c}) {
        s = h ^ (v + 0x632BE59BD9B4E019ULL);
        h = splitmix64(s);
    }
    return h;
}

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("GKPSIM_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
        throw std::invalid_argument(std::string("invalid GKPSIM_THREADS value '") + env + "'");
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    unsigned t = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::size_t>(n, 1u << 16))));
    if (t == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mutex;
    auto worker = [&]() {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!err) err = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < t; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

MistargetingDraw sample_mistargeting(const CircuitParams& circuit, double u, std::uint64_t seed) {
    if (!(u >= 0.0) || !std::isfinite(u)) throw std::invalid_argument("relative spread must be non-negative");
    if (!circuit.has_ancilla) throw std::invalid_argument("mistargeting needs the ancilla circuit");
    MistargetingDraw d;
    d.circuit = circuit;
    d.circuit.C_fF = circuit.capacitance();
    if (u == 0.0) {
        d.circuit.L_uH = circuit.total_inductance();
        return d;
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    constexpr std::size_t max_draws = 10000;
    for (std::size_t attempt = 0; attempt < max_draws; ++attempt) {
        CircuitParams c = d.circuit;
        bool physical = true;
        for (int i = 0; i < 3; ++i) {
            c.L_anc_uH[i] = circuit.L_anc_uH[i] * (1.0 + u * normal(rng));
            physical = physical && c.L_anc_uH[i] > 0.0;
        }
        for (int i = 0; i < 3; ++i) c.J_anc[i] = circuit.J_anc[i] + u * std::abs(circuit.J_anc[i]) * normal(rng);
        if (!physical) {
            ++d.rejected;
            continue;
        }
        c.L_uH = c.total_inductance();
        d.circuit = c;
        return d;
    }
    throw std::runtime_error("no physical mistargeted circuit after repeated draws");
}

Aggregate aggregate(const std::vector<BlochVector>& results, const BlochVector& target,
                    const std::vector<std::size_t>& blocks) {
    if (results.empty()) throw std::invalid_argument("aggregate needs at least one result");
    if (!blocks.empty() && blocks.size() != results.size())
        throw std::invalid_argument("block ids must match the results");
    const std::size_t n = results.size();
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    std::map<std::size_t, std::pair<Eigen::Vector3d, std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Vector3d v = results[i].vec();
        sum += v;
        auto& g = groups.try_emplace(blocks.empty() ? i : blocks[i], Eigen::Vector3d::Zero(), 0).first->second;
        g.first += v;
        ++g.second;
    }
    Aggregate a;
    a.mean = BlochVector::from(sum / static_cast<double>(n));
    a.fidelity = fidelity(a.mean, target);
    const std::size_t B = groups.size();
    if (B < 2) return a;
    // delete-one-block jackknife of the infidelity
    std::vector<double> theta;
    theta.reserve(B);
    for (const auto& [id, g] : groups) {
        Eigen::Vector3d m = (sum - g.first) / static_cast<double>(n - g.second);
        theta.push_back(1.0 - fidelity(BlochVector::from(m), target));
    }
    double mean = 0.0;
    for (double t : theta) mean += t;
    mean /= static_cast<double>(B);
    double var = 0.0;
    for (double t : theta) var += (t - mean) * (t - mean);
    a.std_error = std::sqrt(var * static_cast<double>(B - 1) / static_cast<double>(B));
    return a;
}

SweepResult run_experiment(const ExperimentConfig& cfg, unsigned threads) {
    cfg.validate();
    SweepResult res;
    res.config = cfg;
    const unsigned t = resolve_threads(threads);
    ExperimentRunner runner(res.config, t);
    std::vector<double> axis = cfg.axis;
    if (axis.empty()) axis.push_back(0.0);
    for (std::size_t i = 0; i < axis.size(); ++i) res.points.push_back(runner.run_point(i, axis[i]));
    if (!cfg.output.empty()) write_csv(res, cfg.output);
    return res;
}

void write_csv(const SweepResult& result, const std::string& path) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    {
        std::ofstream out(p);
        if (!out) throw std::runtime_error("cannot write '" + path + "'");
        out << "axis,infidelity,stderr,n_traj,n_resample,seed\n";
        for (const auto& pt : result.points)
            out << format_double(pt.axis) << ',' << format_double(pt.infidelity) << ','
                << format_double(pt.std_error) << ',' << pt.n_traj << ',' << pt.n_resample << ',' << pt.seed
                << '\n';
    }
    std::filesystem::path side = p;
    side.replace_extension(".json");
    std::ofstream js(side);
    if (!js) throw std::runtime_error("cannot write '" + side.string() + "'");
    js << sweep_to_json(result) << '\n';
}

std::string sweep_to_json(const SweepResult& result) {
    json j;
    j["config"] = config_json(result.config);
    // the file name only, so that identical runs in different directories agree byte for byte
    j["config"]["output"] = std::filesystem::path(result.config.output).filename().string();
    j["circuit"] = json::parse(circuit_to_json(experiment_circuit(result.config)));
    json pts = json::array();
    for (const auto& pt : result.points) {
        json q;
        q["axis"] = pt.axis;
        q["infidelity"] = std::isnan(pt.infidelity) ? json(nullptr) : json(pt.infidelity);
        q["stderr"] = std::isnan(pt.std_error) ? json(nullptr) : json(pt.std_error);
        q["n_traj"] = pt.n_traj;
        q["n_resample"] = pt.n_resample;
        q["seed"] = pt.seed;
        q["resolution_floor"] = 1.0 / static_cast<double>(pt.n_traj);
        q["resolution_limited"] = pt.resolution_limited;
        if (!pt.ok()) q["error"] = pt.error;
        q["mean_bloch"] = bloch_to_json(pt.mean_bloch);
        q["target"] = bloch_to_json(pt.target);
        q["t_gate_ns"] = pt.t_gate_ns;
        q["mean_jumps"] = pt.mean_jumps;
        q["max_edge_probability"] = pt.max_edge_probability;
        q["max_truncation_loss"] = pt.max_truncation_loss;
        q["rejected_draws"] = pt.rejected_draws;
        q["leakage_trips"] = pt.leakage_trips;
        pts.push_back(q);
    }
    j["points"] = pts;
    return j.dump(2);
}

}  // namespace gkpsim
