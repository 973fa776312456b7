#include "gkpsim/protocol.hpp"

#include "gkpsim/units.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gkpsim {

namespace {

constexpr double two_pi = 2.0 * units::pi;

std::uint64_t step_count(double t, double delta) {
    if (t < 0.0) throw std::invalid_argument("negative duration");
    return static_cast<std::uint64_t>(std::floor(t / delta));
}

int highest_bit(std::uint64_t n) {
    int k = -1;
    while (n) {
        n >>= 1;
        ++k;
    }
    return k;
}

}  // namespace

const char* to_string(SegmentKind k) {
    switch (k) {
        case SegmentKind::Stabilizer: return "Stabilizer";
        case SegmentKind::Free: return "Free";
        case SegmentKind::HalfFree: return "HalfFree";
        case SegmentKind::Phi4: return "Phi4";
        case SegmentKind::Phi2: return "Phi2";
    }
    return "?";
}

Segment make_segment(SegmentKind kind, double duration, int revivals) {
    if (!(duration > 0.0)) throw std::invalid_argument("segment duration must be positive");
    Segment s;
    s.kind = kind;
    s.duration = duration;
    s.revivals = revivals;
    switch (kind) {
        case SegmentKind::Stabilizer:
            if (revivals < 1) throw std::invalid_argument("stabilizer segment needs a positive revival count");
            s.dissipative = true;
            s.hamiltonian_id = "lcj";
            break;
        case SegmentKind::Phi2:
            s.dissipative = true;
            s.hamiltonian_id = "lcj";
            break;
        case SegmentKind::Phi4:
            s.dissipative = true;
            s.hamiltonian_id = "phi4";
            break;
        case SegmentKind::Free:
        case SegmentKind::HalfFree:
            s.hamiltonian_id = "lc";
            break;
    }
    return s;
}

ScheduleTimes schedule_times(const DerivedScales& s) {
    ScheduleTimes t;
    t.t4 = s.t4;
    t.t2 = s.t2;
    t.t_rev = s.t_rev;
    t.f_LC = s.f_LC;
    t.sign = s.V4 < 0.0 ? 1 : -1;
    return t;
}

double Schedule::total_duration() const {
    double t = 0.0;
    for (const auto& s : segments) t += s.duration;
    return t;
}

Schedule build_tgate_schedule(const ScheduleTimes& times, int n_dd, int cleanup_steps, int cleanup_revivals) {
    if (n_dd < 0) throw std::invalid_argument("N_DD must be non-negative");
    if (cleanup_steps < 0) throw std::invalid_argument("cleanup step count must be non-negative");
    if (!(times.t4 > 0.0) || !(times.t2 > 0.0) || !(times.f_LC > 0.0))
        throw std::invalid_argument("t4, t2 and f_LC must be positive");
    if (cleanup_steps > 0 && !(times.t_rev > 0.0)) throw std::invalid_argument("t_rev must be positive");
    if (times.sign != 1 && times.sign != -1) throw std::invalid_argument("gate sign must be +1 or -1");
    Schedule s;
    s.n_dd = n_dd;
    s.cleanup_steps = cleanup_steps;
    s.gate_sign = times.sign;
    const int n = n_dd;
    double prev = 0.0;
    for (int j = 1; j <= n + 1; ++j) {
        double sn = std::sin(j * units::pi / (2.0 * n + 2.0));
        double tau = (j == n + 1) ? times.t4 : times.t4 * sn * sn;
        s.segments.push_back(make_segment(SegmentKind::Phi4, tau - prev));
        prev = tau;
        if (j <= n) s.segments.push_back(make_segment(SegmentKind::HalfFree, times.half_free_duration()));
    }
    s.segments.push_back(make_segment(SegmentKind::Phi2, times.t2));
    for (int c = 0; c < cleanup_steps; ++c) {
        s.segments.push_back(make_segment(SegmentKind::Stabilizer, cleanup_revivals * times.t_rev, cleanup_revivals));
        s.segments.push_back(make_segment(SegmentKind::Free, times.free_duration()));
    }
    s.jitter.assign(s.segments.size(), 0.0);
    return s;
}

Schedule build_stabilization_schedule(const ScheduleTimes& times, int cycles, int revivals) {
    if (cycles < 0) throw std::invalid_argument("cycle count must be non-negative");
    if (!(times.t_rev > 0.0) || !(times.f_LC > 0.0)) throw std::invalid_argument("t_rev and f_LC must be positive");
    Schedule s;
    for (int c = 0; c < cycles; ++c) {
        s.segments.push_back(make_segment(SegmentKind::Stabilizer, revivals * times.t_rev, revivals));
        s.segments.push_back(make_segment(SegmentKind::Free, times.free_duration()));
    }
    s.jitter.assign(s.segments.size(), 0.0);
    return s;
}

Schedule concatenate(const Schedule& a, const Schedule& b) {
    if (a.gate_sign != 0 && b.gate_sign != 0) throw std::invalid_argument("cannot concatenate two gate schedules");
    Schedule s = a;
    s.segments.insert(s.segments.end(), b.segments.begin(), b.segments.end());
    s.jitter.resize(a.segments.size(), 0.0);
    auto bj = b.jitter;
    bj.resize(b.segments.size(), 0.0);
    s.jitter.insert(s.jitter.end(), bj.begin(), bj.end());
    s.gate_sign = a.gate_sign != 0 ? a.gate_sign : b.gate_sign;
    s.n_dd = a.n_dd + b.n_dd;
    s.cleanup_steps = a.cleanup_steps + b.cleanup_steps;
    return s;
}

Schedule apply_timing_jitter(const Schedule& schedule, double delta_t, std::uint64_t seed) {
    if (!(delta_t >= 0.0)) throw std::invalid_argument("timing uncertainty must be non-negative");
    Schedule s = schedule;
    s.jitter.assign(s.segments.size(), 0.0);
    if (delta_t == 0.0) return s;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.5 * delta_t, 0.5 * delta_t);
    for (std::size_t i = 0; i < s.segments.size(); ++i) {
        auto& seg = s.segments[i];
        if (seg.kind == SegmentKind::Phi4 || seg.kind == SegmentKind::Phi2) {
            double d = u(rng);
            seg.duration += d;
            s.jitter[i] = d;
        } else if (seg.kind == SegmentKind::Stabilizer && i + 1 < s.segments.size() &&
                   s.segments[i + 1].kind == SegmentKind::Free) {
            // the cleanup step keeps its period
            double d = u(rng);
            seg.duration += d;
            s.segments[i + 1].duration -= d;
            s.jitter[i] = d;
            s.jitter[i + 1] = -d;
        }
    }
    for (const auto& seg : s.segments)
        if (!(seg.duration > 0.0)) throw std::invalid_argument("timing jitter produced a non-positive duration");
    return s;
}

Eigen::Matrix3d logical_frame(const Schedule& schedule) {
    Eigen::Matrix3d M = Eigen::Matrix3d::Identity();
    for (const auto& seg : schedule.segments) {
        switch (seg.kind) {
            case SegmentKind::Stabilizer: M = frame_s_dagger(seg.revivals) * M; break;
            case SegmentKind::Free: M = frame_hadamard() * M; break;
            case SegmentKind::Phi2:
                if (schedule.gate_sign != 0) M = rotation_z(schedule.gate_sign * units::pi / 8.0) * M;
                break;
            case SegmentKind::HalfFree:
            case SegmentKind::Phi4: break;
        }
    }
    return M;
}

BlochVector logical_target(const Schedule& schedule, const BlochVector& initial) {
    return BlochVector::from(logical_frame(schedule) * initial.vec());
}

WellSpectrum well_spectrum(const EigenSystem& es, const QuadratureGrid& grid, int n_max, double localization) {
    if (n_max < 2) throw std::invalid_argument("well fit needs n_max >= 2");
    WellSpectrum ws;
    std::vector<bool> found(static_cast<std::size_t>(n_max) + 1, false);
    int remaining = n_max + 1;
    const Eigen::ArrayXd x2 = grid.x.array().square();
    const Eigen::ArrayXd ax = grid.x.array().abs();
    for (Eigen::Index n = 0; n < es.values.size() && remaining > 0; ++n) {
        Eigen::ArrayXd prob = es.vectors.col(n).cwiseAbs2().array();
        double tot = prob.sum();
        int N = static_cast<int>(std::llround(std::sqrt((prob * x2).sum() / tot)));
        if (N > n_max || found[static_cast<std::size_t>(N)]) continue;
        double inside = ((ax - N).abs() < 0.5).select(prob, 0.0).sum() / tot;
        if (inside < localization) continue;
        found[static_cast<std::size_t>(N)] = true;
        --remaining;
        ws.N.push_back(N);
        ws.energy.push_back(es.values[n]);
    }
    if (ws.N.size() < 5) throw std::runtime_error("too few localized well states for the spectral fit");
    const auto m = static_cast<Eigen::Index>(ws.N.size());
    const double s = static_cast<double>(n_max);
    Eigen::MatrixXd A(m, 4);
    Eigen::VectorXd b(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        double u = ws.N[static_cast<std::size_t>(i)] / s;
        double u2 = u * u;
        A(i, 0) = 1.0;
        A(i, 1) = u2;
        A(i, 2) = u2 * u2;
        A(i, 3) = u2 * u2 * u2;
        b[i] = ws.energy[static_cast<std::size_t>(i)];
    }
    Eigen::Vector4d c = A.colPivHouseholderQr().solve(b);
    ws.fit_residual = (A * c - b).cwiseAbs().maxCoeff();
    ws.coeffs << c[0], c[1] / (s * s), c[2] / std::pow(s, 4), c[3] / std::pow(s, 6);
    return ws;
}

ScheduleTimes calibrate_schedule(const WellSpectrum& phi4, const WellSpectrum& phi2, double f_LC) {
    const double b4 = phi4.coeffs[1], c4 = phi4.coeffs[2], b2 = phi2.coeffs[1];
    if (c4 == 0.0) throw std::invalid_argument("φ⁴ spectrum has no quartic term");
    if (!(b2 > 0.0)) throw std::invalid_argument("φ² spectrum has no positive quadratic term");
    ScheduleTimes t;
    t.t4 = 1.0 / (16.0 * std::abs(c4));
    double q = b4 * t.t4;
    t.t2 = (1.0 - (q - std::floor(q))) / b2;
    t.t_rev = 1.0 / (4.0 * b2);
    t.f_LC = f_LC;
    t.sign = c4 < 0.0 ? 1 : -1;
    return t;
}

ScheduleTimes recalibrate_quadratic(const ScheduleTimes& nominal, const WellSpectrum& phi4, const WellSpectrum& phi2,
                                    double f_LC) {
    const double b4 = phi4.coeffs[1], b2 = phi2.coeffs[1];
    if (!(b2 > 0.0)) throw std::invalid_argument("φ² spectrum has no positive quadratic term");
    ScheduleTimes t = nominal;
    double q = b4 * t.t4;
    t.t2 = (1.0 - (q - std::floor(q))) / b2;
    t.t_rev = 1.0 / (4.0 * b2);
    t.f_LC = f_LC;
    return t;
}

PropagatorCache PropagatorCache::from_eigensystem(const EigenSystem& es, double t_max, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("cache step must be positive");
    PropagatorCache c;
    c.delta_ = delta;
    c.es_ = std::make_shared<const EigenSystem>(es);
    int K = highest_bit(step_count(t_max, delta));
    for (int k = 0; k <= K; ++k) {
        double t = delta * std::ldexp(1.0, k);
        Eigen::VectorXcd ph = (es.values.array() * (-two_pi * t)).unaryExpr([](double a) { return std::polar(1.0, a); });
        c.levels_.push_back(es.vectors * ph.asDiagonal() * es.vectors.adjoint());
    }
    return c;
}

PropagatorCache PropagatorCache::from_generator(const Eigen::MatrixXcd& G, double t_max, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("cache step must be positive");
    if (G.rows() != G.cols()) throw std::invalid_argument("generator must be square");
    PropagatorCache c;
    c.delta_ = delta;
    c.generator_ = G;
    int K = highest_bit(step_count(t_max, delta));
    if (K < 0) return c;
    Eigen::MatrixXcd A = cplx(0.0, -two_pi * delta) * G;
    c.levels_.push_back(A.exp());
    for (int k = 1; k <= K; ++k) c.levels_.push_back(c.levels_.back() * c.levels_.back());
    return c;
}

double PropagatorCache::max_duration() const {
    if (levels_.empty()) return 0.0;
    return delta_ * (std::ldexp(1.0, levels()) - 1.0);
}

Eigen::MatrixXcd PropagatorCache::residual(double r) const {
    if (es_) {
        Eigen::VectorXcd ph = (es_->values.array() * (-two_pi * r)).unaryExpr([](double a) { return std::polar(1.0, a); });
        return es_->vectors * ph.asDiagonal() * es_->vectors.adjoint();
    }
    Eigen::MatrixXcd A = cplx(0.0, -two_pi * r) * generator_;
    return A.exp();
}

Eigen::MatrixXcd PropagatorCache::compose(double t) const {
    if (levels_.empty()) throw std::logic_error("empty propagator cache");
    std::uint64_t n = step_count(t, delta_);
    if (highest_bit(n) >= levels()) throw std::out_of_range("duration exceeds the propagator cache");
    const auto dim = levels_.front().rows();
    Eigen::MatrixXcd U = Eigen::MatrixXcd::Identity(dim, dim);
    for (int k = 0; n; ++k, n >>= 1)
        if (n & 1U) U = levels_[static_cast<std::size_t>(k)] * U;
    double r = t - delta_ * static_cast<double>(step_count(t, delta_));
    if (r > 0.0) U = residual(r) * U;
    return U;
}

void PropagatorCache::apply_remainder(double r, StateVector& v) const {
    if (r <= 0.0) return;
    if (es_) {
        Eigen::VectorXcd ph = (es_->values.array() * (-two_pi * r)).unaryExpr([](double a) { return std::polar(1.0, a); });
        v = es_->vectors * (ph.asDiagonal() * (es_->vectors.adjoint() * v));
        return;
    }
    // Taylor series of exp(-i2πGr) on the vector
    const cplx f(0.0, -two_pi * r);
    StateVector term = v, sum = v;
    for (int k = 1; k < 40; ++k) {
        term = (f / static_cast<double>(k)) * (generator_ * term);
        sum += term;
        if (term.norm() < 1e-17 * sum.norm()) break;
    }
    v = sum;
}

PropagatorCache precompute_propagators(const HermitianOperator& H, const std::vector<double>& durations,
                                       double delta) {
    if (durations.empty()) return {};
    double t_max = *std::max_element(durations.begin(), durations.end());
    return PropagatorCache::from_eigensystem(diagonalize(H), t_max, delta);
}

void SseConfig::validate() const {
    if (!(delta > 0.0)) throw std::invalid_argument("SSE step must be positive");
    if (!(leakage_threshold > 0.0)) throw std::invalid_argument("leakage threshold must be positive");
    if (!(edge_band > 0.0)) throw std::invalid_argument("edge band must be positive");
}

namespace {

DissipativeBlock make_block(const std::string& id, const EigenSystem& es, const QuadratureGrid& grid,
                            const Eigen::MatrixXcd& p, const BathSpec* bath, const SystemOptions& opts) {
    DissipativeBlock b;
    b.id = id;
    b.wells = well_spectrum(es, grid, opts.well_fit_n_max);
    Eigen::Index M = es.values.size();
    if (opts.energy_window > 0.0) {
        double ref = b.wells.energy.front();
        for (std::size_t i = 0; i < b.wells.N.size(); ++i)
            if (b.wells.N[i] == 0) ref = b.wells.energy[i];
        M = 0;
        while (M < es.values.size() && es.values[M] <= ref + opts.energy_window) ++M;
    }
    b.energies = es.values.head(M);
    b.vectors = es.vectors.leftCols(M);
    b.generator = b.energies.cast<cplx>().asDiagonal();
    if (bath && bath->Gamma_GHz > 0.0) {
        Eigen::MatrixXcd X = b.vectors.adjoint() * (p * b.vectors);
        b.jump = ule_jump_eigenbasis(b.energies, X, *bath);
        b.generator = effective_hamiltonian(b.generator, b.jump);
    }
    return b;
}

}  // namespace

ProtocolSystem ProtocolSystem::build(const QuadratureGrid& grid, const CircuitParams& circuit,
                                     const std::vector<double>& phi4_terms, const BathSpec* bath,
                                     const SystemOptions& opts) {
    circuit.validate();
    if (bath) bath->validate();
    ProtocolSystem s;
    s.grid_ = grid;
    s.circuit_ = circuit;
    s.L_uH_ = circuit.has_ancilla ? circuit.total_inductance() : circuit.L_uH;
    s.C_fF_ = circuit.capacitance();
    const double J = circuit.J;
    HermitianOperator p = momentum_operator(grid);
    EigenSystem lcj = diagonalize(hamiltonian_lcj(grid, s.L_uH_, s.C_fF_, J));
    s.blocks_.emplace("lcj", make_block("lcj", lcj, grid, p.matrix, bath, opts));
    lcj = EigenSystem{};
    bool odd = false;
    EigenSystem phi4 = diagonalize(hamiltonian_effective(grid, s.L_uH_, s.C_fF_, J, phi4_terms, &odd));
    if (odd) throw std::invalid_argument("odd terms in the φ⁴ potential are not supported");
    s.blocks_.emplace("phi4", make_block("phi4", phi4, grid, p.matrix, bath, opts));
    s.lc_ = diagonalize(hamiltonian_lc(grid, s.L_uH_, s.C_fF_));
    return s;
}

double ProtocolSystem::f_LC() const { return units::lc_frequency(L_uH_, C_fF_); }
double ProtocolSystem::nu() const { return units::impedance_ratio(L_uH_, C_fF_); }
double ProtocolSystem::eps_L() const { return units::inductive_energy(L_uH_); }

const DissipativeBlock& ProtocolSystem::block(const std::string& id) const {
    auto it = blocks_.find(id);
    if (it == blocks_.end()) throw std::out_of_range("no dissipative block '" + id + "'");
    return it->second;
}

ScheduleTimes ProtocolSystem::calibrated_times() const {
    return calibrate_schedule(block("phi4").wells, block("lcj").wells, f_LC());
}

void ProtocolSystem::prepare(double t_max, double delta) {
    for (auto& [id, b] : blocks_)
        if (b.dissipative()) b.cache = PropagatorCache::from_generator(b.generator, t_max, delta);
    prepared_ = true;
}

StateVector ProtocolSystem::free_evolve(const StateVector& psi, double t_ns) const {
    Eigen::VectorXcd ph = (lc_.values.array() * (-two_pi * t_ns)).unaryExpr([](double a) { return std::polar(1.0, a); });
    return lc_.vectors * (ph.asDiagonal() * (lc_.vectors.adjoint() * psi));
}

std::size_t evolve_dissipative(const DissipativeBlock& block, StateVector& c, double duration, std::mt19937_64& rng) {
    if (!block.dissipative()) {
        Eigen::VectorXcd ph =
            (block.energies.array() * (-two_pi * duration)).unaryExpr([](double a) { return std::polar(1.0, a); });
        c = ph.asDiagonal() * c;
        return 0;
    }
    const auto& cache = block.cache;
    if (cache.empty()) throw std::logic_error("propagator cache not prepared");
    const double delta = cache.delta();
    std::uint64_t left = step_count(duration, delta);
    const double rem = duration - delta * static_cast<double>(left);
    if (highest_bit(left) >= cache.levels()) throw std::out_of_range("segment longer than the propagator cache");
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    c.normalize();
    double r = 1.0 - uni(rng);
    std::size_t jumps = 0;
    StateVector tmp(c.size());
    while (left > 0) {
        for (int k = highest_bit(left); k >= 0; --k) {
            const std::uint64_t s = std::uint64_t{1} << k;
            while (s <= left) {
                tmp.noalias() = cache.level(k) * c;
                if (tmp.squaredNorm() < r) break;
                c.swap(tmp);
                left -= s;
            }
        }
        if (left == 0) break;
        // the norm crosses the threshold within the next δ
        tmp.noalias() = block.jump * c;
        double n2 = tmp.squaredNorm();
        if (!(n2 > 1e-300)) throw NormUnderflowError("jump on a state annihilated by the jump operator");
        c = tmp / std::sqrt(n2);
        ++jumps;
        r = 1.0 - uni(rng);
    }
    cache.apply_remainder(rem, c);
    double n2 = c.squaredNorm();
    if (!(n2 > 1e-300)) throw NormUnderflowError("state norm underflow");
    c /= std::sqrt(n2);
    return jumps;
}

TrajectoryResult run_trajectory(const Schedule& schedule, const ProtocolSystem& system, const StateVector& initial,
                                const NoiseSignal* noise, const SseConfig& config,
                                const std::vector<std::size_t>& checkpoints) {
    config.validate();
    const auto& grid = system.grid();
    if (initial.size() != static_cast<Eigen::Index>(grid.D)) throw std::invalid_argument("initial state has wrong dimension");
    for (const auto& seg : schedule.segments)
        if (seg.dissipative && system.block(seg.hamiltonian_id).dissipative()) {
            const auto& cache = system.block(seg.hamiltonian_id).cache;
            if (cache.empty()) throw std::logic_error("system not prepared for dissipative evolution");
            if (std::abs(cache.delta() - config.delta) > 1e-15)
                throw std::invalid_argument("SSE step differs from the prepared cache step");
        }
    const bool noisy = noise && !noise->empty() && !noise->is_zero();
    TrajectoryResult res;
    res.seed = config.seed;
    std::mt19937_64 rng(config.seed);
    StateVector psi = initial / initial.norm();
    double t = 0.0;
    auto monitor = [&]() {
        double e = edge_probability(grid, psi, config.edge_band);
        res.max_edge_probability = std::max(res.max_edge_probability, e);
        if (e > config.leakage_threshold) {
            res.leakage_tripped = true;
            if (config.leakage_is_error) {
                std::ostringstream os;
                os << "edge probability " << e << " exceeds " << config.leakage_threshold << " at t = " << t << " ns";
                throw LeakageError(os.str());
            }
        }
    };
    for (std::size_t i = 0; i < schedule.segments.size(); ++i) {
        const auto& seg = schedule.segments[i];
        const double ts = t - config.noise_offset;  // signal clock, ns
        const bool apply_noise = noisy && ts >= 0.0;
        if (seg.dissipative) {
            const auto& b = system.block(seg.hamiltonian_id);
            StateVector c = b.vectors.adjoint() * psi;
            res.truncation_loss += std::max(0.0, psi.squaredNorm() - c.squaredNorm());
            res.jumps += evolve_dissipative(b, c, seg.duration, rng);
            psi = b.vectors * c;
            psi.normalize();
            if (apply_noise) {
                double alpha = integrate_alpha(*noise, ts, ts + seg.duration, system.L_uH());
                for (Eigen::Index j = 0; j < psi.size(); ++j) psi[j] *= std::polar(1.0, -alpha * grid.x[j]);
            }
        } else {
            if (apply_noise) {
                auto ab = free_segment_AB(*noise, ts, seg.duration, system.f_LC(), system.L_uH(), system.nu());
                for (Eigen::Index j = 0; j < psi.size(); ++j) psi[j] *= std::polar(1.0, -ab.b * grid.x[j]);
                const double a = ab.a;
                psi = apply_momentum_function(grid, psi, [a](double p) { return std::polar(1.0, -a * p); });
            }
            psi = system.free_evolve(psi, seg.duration);
        }
        t += seg.duration;
        monitor();
        if (std::find(checkpoints.begin(), checkpoints.end(), i) != checkpoints.end())
            res.readouts.push_back(measure_logicals(psi, grid, config.edge_band));
    }
    psi.normalize();
    res.readouts.push_back(measure_logicals(psi, grid, config.edge_band));
    res.final_state = std::move(psi);
    return res;
}

StateVector initial_codeword(const QuadratureGrid& grid, const CircuitParams& circuit, Codeword which) {
    const double L = circuit.has_ancilla ? circuit.total_inductance() : circuit.L_uH;
    const double C = circuit.capacitance();
    DerivedScales s = base_scales(circuit);
    double var = well_variance(units::charging_energy(C), units::inductive_energy(L), circuit.J);
    return codeword(grid, which, s.kappa, var);
}

}  // namespace gkpsim
