#pragma once

#include "gkpsim/circuit.hpp"
#include "gkpsim/fluxnoise.hpp"
#include "gkpsim/logical.hpp"
#include "gkpsim/protocol.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gkpsim {

enum class ExperimentKind { SingleGate, GateTimeSweep, TimingSweep, MistargetingSweep, NoiseSweep };

const char* to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& s);

// Axis units: gate_time_sweep μs (target t₄), timing_sweep ps (Δt), mistargeting_sweep relative u,
// noise_sweep φ₀²/THz (γ_φ). single_gate ignores the axis.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::SingleGate;
    std::string circuit_file;  // empty: table set below
    int table_set = 3;
    std::optional<double> J;          // h·GHz
    std::optional<double> T_mK;
    std::optional<double> Gamma_GHz;
    std::size_t n_traj = 250;
    std::size_t n_resample = 25;
    std::vector<double> axis;
    int n_dd = 0;
    int cleanup_steps = 2;
    int cleanup_revivals = 1;
    int prep_cycles = 2;
    int prep_revivals = 4;
    std::uint64_t seed = 1;
    std::string output;  // CSV path; empty: no file

    std::size_t D = 1024;
    double X = 16.0;
    double energy_window = 450.0;
    double delta = 1e-4;
    double leakage_threshold = 1e-6;
    bool leakage_is_error = false;  // false: count trips and continue
    bool calibrate = true;
    // Schedule used for a mistargeted circuit: "quadratic" keeps the nominal t₄ and sign and re-derives
    // t₂, t_rev and f_LC from the drawn circuit; "full" calibrates every duration on the drawn circuit;
    // "none" runs the nominal schedule.
    std::string mistargeting_schedule = "full";
    bool dissipation = true;
    NoiseSpectrum noise;  // gamma_phi replaced by the axis in noise sweeps
    double noise_grid_ratio = 1.02;

    void validate() const;
};

ExperimentConfig experiment_from_json(const std::string& text);
std::string experiment_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_experiment(const std::string& path);

struct SweepPoint {
    double axis = 0.0;
    double infidelity = 0.0;
    double std_error = 0.0;
    std::size_t n_traj = 0;
    std::size_t n_resample = 0;
    std::uint64_t seed = 0;
    bool resolution_limited = false;  // infidelity below 1/n_traj
    std::string error;                // non-empty when the point failed
    BlochVector mean_bloch;
    BlochVector target;
    double t_gate_ns = 0.0;
    double mean_jumps = 0.0;
    double max_edge_probability = 0.0;
    double max_truncation_loss = 0.0;
    std::size_t leakage_trips = 0;  // trajectories whose edge probability passed the threshold
    std::size_t rejected_draws = 0;

    bool ok() const { return error.empty(); }
};

struct SweepResult {
    ExperimentConfig config;
    std::vector<SweepPoint> points;
};

// Deterministic seed derivation (splitmix64 chain).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

// Resolves threads from the argument, GKPSIM_THREADS, or hardware concurrency.
unsigned resolve_threads(unsigned requested);

// Runs fn(i) for i in [0, n) on `threads` workers.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

struct MistargetingDraw {
    CircuitParams circuit;
    std::size_t rejected = 0;
};

// Resamples L_i and J'_i with relative spread u; L = ΣL_i, C fixed at the nominal value.
MistargetingDraw sample_mistargeting(const CircuitParams& circuit, double u, std::uint64_t seed);

struct Aggregate {
    BlochVector mean;
    double fidelity = 0.0;
    double std_error = 0.0;
};

// Bloch vectors are averaged first; stderr by jackknife over the given blocks (block id per result).
Aggregate aggregate(const std::vector<BlochVector>& results, const BlochVector& target,
                    const std::vector<std::size_t>& blocks = {});

SweepResult run_experiment(const ExperimentConfig& cfg, unsigned threads = 0);

void write_csv(const SweepResult& result, const std::string& path);
std::string sweep_to_json(const SweepResult& result);

// Circuit with config overrides applied.
CircuitParams experiment_circuit(const ExperimentConfig& cfg);

}  // namespace gkpsim
