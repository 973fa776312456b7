#pragma once

#include "gkpsim/circuit.hpp"
#include "gkpsim/dissipation.hpp"
#include "gkpsim/fluxnoise.hpp"
#include "gkpsim/logical.hpp"
#include "gkpsim/quadratures.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace gkpsim {

enum class SegmentKind { Stabilizer, Free, HalfFree, Phi4, Phi2 };

const char* to_string(SegmentKind k);

struct Segment {
    SegmentKind kind = SegmentKind::Free;
    double duration = 0.0;  // ns
    bool dissipative = false;
    std::string hamiltonian_id;  // "lcj", "phi4" or "lc"
    int revivals = 0;            // Stabilizer: nominal multiple of t_rev
};

Segment make_segment(SegmentKind kind, double duration, int revivals = 0);

// Durations that define a √T schedule.
struct ScheduleTimes {
    double t4 = 0.0;     // ns
    double t2 = 0.0;     // ns
    double t_rev = 0.0;  // ns, revival time during φ² and stabilizer segments
    double f_LC = 0.0;   // GHz
    int sign = 1;        // +1: √T, -1: √T†

    double t_gate() const { return t4 + t2; }
    double free_duration() const { return 0.25 / f_LC; }
    double half_free_duration() const { return 0.5 / f_LC; }
};

// Closed-form durations from the fitted potential.
ScheduleTimes schedule_times(const DerivedScales& s);

struct Schedule {
    std::vector<Segment> segments;
    int n_dd = 0;
    int cleanup_steps = 0;
    int gate_sign = 0;           // 0 when the schedule has no φ⁴ segment
    std::vector<double> jitter;  // per-segment δt, ns
    double total_duration() const;
};

Schedule build_tgate_schedule(const ScheduleTimes& times, int n_dd, int cleanup_steps, int cleanup_revivals = 1);

// Stabilization cycles Stabilizer(revivals·t_rev) + Free.
Schedule build_stabilization_schedule(const ScheduleTimes& times, int cycles, int revivals);

Schedule concatenate(const Schedule& a, const Schedule& b);

Schedule apply_timing_jitter(const Schedule& schedule, double delta_t, std::uint64_t seed);

// Bloch-vector map of the logical frame realized by the schedule.
Eigen::Matrix3d logical_frame(const Schedule& schedule);
BlochVector logical_target(const Schedule& schedule, const BlochVector& initial);

// Per-well ground energies E(N) of a segment Hamiltonian.
struct WellSpectrum {
    std::vector<int> N;
    std::vector<double> energy;
    Eigen::Vector4d coeffs = Eigen::Vector4d::Zero();  // a + bN² + cN⁴ + dN⁶
    double fit_residual = 0.0;
};

WellSpectrum well_spectrum(const EigenSystem& es, const QuadratureGrid& grid, int n_max = 12,
                           double localization = 0.99);

// t₄ = 1/(16|c₄|), t₂ = (1 - frac(b₄t₄))/b₂, t_rev = 1/(4b₂).
ScheduleTimes calibrate_schedule(const WellSpectrum& phi4, const WellSpectrum& phi2, double f_LC);

// Keeps t₄ and the sign, re-aligns the quadratic phase: t₂, t_rev and f_LC from the given spectra.
ScheduleTimes recalibrate_quadratic(const ScheduleTimes& nominal, const WellSpectrum& phi4, const WellSpectrum& phi2,
                                    double f_LC);

class PropagatorCache {
public:
    PropagatorCache() = default;

    // Exact levels exp(-i2πH·2^kδ) from an eigensystem.
    static PropagatorCache from_eigensystem(const EigenSystem& es, double t_max, double delta = 1e-4);
    // Levels for a general generator G (U = exp(-i2πGt)) by exponentiation and squaring.
    static PropagatorCache from_generator(const Eigen::MatrixXcd& G, double t_max, double delta = 1e-4);

    bool empty() const { return levels_.empty(); }
    int levels() const { return static_cast<int>(levels_.size()); }
    double delta() const { return delta_; }
    double max_duration() const;
    const Eigen::MatrixXcd& level(int k) const { return levels_.at(static_cast<std::size_t>(k)); }

    Eigen::MatrixXcd compose(double t) const;
    // Sub-δ remainder on a vector.
    void apply_remainder(double r, StateVector& v) const;

private:
    std::vector<Eigen::MatrixXcd> levels_;
    double delta_ = 1e-4;
    Eigen::MatrixXcd generator_;
    std::shared_ptr<const EigenSystem> es_;  // set for Hermitian caches
    Eigen::MatrixXcd residual(double r) const;
};

// Empty durations give an empty cache.
PropagatorCache precompute_propagators(const HermitianOperator& H, const std::vector<double>& durations,
                                       double delta = 1e-4);

struct SseConfig {
    std::uint64_t seed = 0;
    double delta = 1e-4;  // ns, finest cached step; must match ProtocolSystem::prepare
    double leakage_threshold = 1e-8;
    double edge_band = 0.5;
    bool leakage_is_error = true;
    double noise_offset = 0.0;  // schedule time (ns) mapped to signal time 0

    void validate() const;
};

class LeakageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NormUnderflowError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dissipative segment Hamiltonian in a truncated eigenbasis.
struct DissipativeBlock {
    std::string id;
    Eigen::VectorXd energies;   // M
    Eigen::MatrixXcd vectors;   // D×M
    Eigen::MatrixXcd jump;      // M×M, empty without dissipation
    Eigen::MatrixXcd generator; // H - (i/4π)L†L in the eigenbasis
    PropagatorCache cache;
    WellSpectrum wells;

    bool dissipative() const { return jump.size() > 0; }
    std::size_t basis_size() const { return static_cast<std::size_t>(energies.size()); }
};

struct SystemOptions {
    double energy_window = 450.0;  // h·GHz above the N = 0 well ground state; <= 0 keeps the full basis
    int well_fit_n_max = 12;
};

// Operators shared by all trajectories of one circuit realization.
class ProtocolSystem {
public:
    // φ⁴ segments evolve under H_LCJ + Σ phi4_terms[k] x^k.
    static ProtocolSystem build(const QuadratureGrid& grid, const CircuitParams& circuit,
                                const std::vector<double>& phi4_terms, const BathSpec* bath,
                                const SystemOptions& opts = {});

    const QuadratureGrid& grid() const { return grid_; }
    const CircuitParams& circuit() const { return circuit_; }
    double L_uH() const { return L_uH_; }
    double C_fF() const { return C_fF_; }
    double f_LC() const;
    double nu() const;
    double eps_L() const;
    const DissipativeBlock& block(const std::string& id) const;
    const EigenSystem& lc() const { return lc_; }

    ScheduleTimes calibrated_times() const;
    // Builds propagator caches covering durations up to t_max (ns).
    void prepare(double t_max, double delta = 1e-4);
    bool prepared() const { return prepared_; }

    StateVector free_evolve(const StateVector& psi, double t_ns) const;

private:
    QuadratureGrid grid_;
    CircuitParams circuit_;
    double L_uH_ = 0.0, C_fF_ = 0.0;
    EigenSystem lc_;
    std::map<std::string, DissipativeBlock> blocks_;
    bool prepared_ = false;
};

struct TrajectoryResult {
    StateVector final_state;
    std::size_t jumps = 0;
    std::vector<Readout> readouts;  // one per checkpoint, final state last
    std::uint64_t seed = 0;
    double truncation_loss = 0.0;   // accumulated grid→basis projection loss
    double max_edge_probability = 0.0;
    bool leakage_tripped = false;
};

// checkpoints: indices of segments after which a readout is recorded.
TrajectoryResult run_trajectory(const Schedule& schedule, const ProtocolSystem& system, const StateVector& initial,
                                const NoiseSignal* noise, const SseConfig& config,
                                const std::vector<std::size_t>& checkpoints = {});

// Evolves a basis vector through one dissipative segment with waiting-time jumps.
std::size_t evolve_dissipative(const DissipativeBlock& block, StateVector& c, double duration, std::mt19937_64& rng);

// Ideal |X⟩ codeword for a circuit.
StateVector initial_codeword(const QuadratureGrid& grid, const CircuitParams& circuit, Codeword which = Codeword::PlusX);

}  // namespace gkpsim
