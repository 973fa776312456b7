#pragma once

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

namespace gkpsim {

// Times in seconds, angular frequencies in rad/s, flux in φ₀.
struct NoiseSpectrum {
    double gamma_phi = 1.0;  // φ₀²/THz
    double Omega = 6.283185307179586;
    double omega0 = 1e-4;
    double Lambda = 1e6;

    void validate() const;
    double psd_scale() const { return gamma_phi * 1e-12; }  // φ₀²/Hz
    // J̃(ω) = e^{-|ω|/Λ} Ω / (|ω| + ω₀)
    double shape(double omega) const;
    // Two-sided PSD γ_φ J̃(ω) with ⟨ξ(t)ξ(0)⟩ = (1/2π)∫S(ω)e^{iωt}dω.
    double psd(double omega) const { return psd_scale() * shape(omega); }
    // ∫J̃(ω)dω over the real line.
    double shape_integral() const;
};

// w(z) = e^{-z²} erfc(-iz) for Im z >= 0 (Weideman rational expansion).
std::complex<double> faddeeva_upper(std::complex<double> z);
// e^{z²} erfc(z) for Re z >= 0.
std::complex<double> erfcx_complex(std::complex<double> z);
// E₁(z) for Re z > 0: power series for |z| < 1, continued fraction beyond.
std::complex<double> expint_e1(std::complex<double> z);

// g(t) = √(2Ω) Re[erfcx(√(ω₀ s))/√s], s = 1/2Λ + it.
double jump_correlator(double t, const NoiseSpectrum& spec);

// Target autocorrelation γ_φ J(τ) in φ₀².
double target_autocorrelation(double tau, const NoiseSpectrum& spec);

struct NoiseGrid {
    std::vector<double> t;   // strictly increasing
    std::vector<double> dt;  // cell widths
    double window_begin = 0.0;
    double window_end = 0.0;
    double coverage_begin = 0.0;
    double coverage_end = 0.0;
};

struct NoiseGridOptions {
    double window_begin = 0.0;
    double window_end = 1e-4;
    double guard = 0.0;     // 0: 10³/Λ
    double ratio = 1.02;    // geometric growth of cell widths outside the fine band
    double span_factor = 50.0;  // grid reaches ±span_factor/ω₀
};

NoiseGrid build_noise_grid(const NoiseSpectrum& spec, const NoiseGridOptions& opts = {});

class NoiseSignal {
public:
    NoiseSignal() = default;
    NoiseSignal(std::vector<double> times, std::vector<double> values, std::uint64_t seed);

    const std::vector<double>& times() const { return t_; }
    const std::vector<double>& values() const { return v_; }
    std::uint64_t seed() const { return seed_; }
    bool empty() const { return t_.empty(); }
    bool is_zero() const;

    // Natural cubic spline interpolant and its exact integral.
    double value(double t) const;
    double integral(double t1, double t2) const;
    double begin() const { return t_.empty() ? 0.0 : t_.front(); }
    double end() const { return t_.empty() ? 0.0 : t_.back(); }

private:
    std::vector<double> t_, v_, m_;  // m_: second derivatives
    std::uint64_t seed_ = 0;
    double antiderivative(std::size_t i, double t) const;
    std::vector<double> cumulative_;
};

// Kernel matrix G with ξ = G·χ for a grid and evaluation times.
class NoiseGenerator {
public:
    NoiseGenerator(const NoiseSpectrum& spec, const NoiseGrid& grid, std::vector<double> eval_times);
    NoiseSignal generate(std::uint64_t seed) const;
    const std::vector<double>& eval_times() const { return eval_; }
    std::size_t grid_size() const { return grid_.t.size(); }

private:
    NoiseSpectrum spec_;
    NoiseGrid grid_;
    std::vector<double> eval_;
    std::vector<double> kernel_;  // row-major eval × grid, √(γ/2π)·g·√Δt
};

// 101 evaluation points on [0, 10⁻⁴ s].
std::vector<double> default_eval_times(std::size_t n = 101, double t_end = 1e-4);

NoiseSignal generate_signal(const NoiseSpectrum& spec, const NoiseGrid& grid, std::uint64_t seed,
                            const std::vector<double>& eval_times);

// Displacement coefficient for exp(-iαx) after a dissipative segment; times in ns.
double integrate_alpha(const NoiseSignal& signal, double t1_ns, double t2_ns, double L_uH);

struct FreeDisplacement {
    double a = 0.0;  // multiplies p
    double b = 0.0;  // multiplies x
};

// Coefficients of exp(-i(a p + b x)) for a free segment starting at t_start (ns) of length
// t_ns, evolving at f_LC (GHz); nu = (4e²/h)√(L/C).
FreeDisplacement free_segment_AB(const NoiseSignal& signal, double t_start_ns, double t_ns, double f_LC,
                                 double L_uH, double nu);

// Uniform-grid realizations by FFT convolution with g tapered beyond taper_begin (s).
struct UniformNoiseOptions {
    double dt = 4e-6;
    std::size_t samples = std::size_t{1} << 21;
    double taper_begin = 2.0;
    double taper_end = 4.0;
};

class UniformNoiseSynth {
public:
    UniformNoiseSynth(const NoiseSpectrum& spec, const UniformNoiseOptions& opts);
    ~UniformNoiseSynth();
    UniformNoiseSynth(const UniformNoiseSynth&) = delete;
    UniformNoiseSynth& operator=(const UniformNoiseSynth&) = delete;
    std::vector<double> generate(std::uint64_t seed) const;

private:
    NoiseSpectrum spec_;
    UniformNoiseOptions opts_;
    std::size_t n_fft_ = 0;
    std::size_t half_kernel_ = 0;
    std::vector<std::complex<double>> kernel_hat_;
};

struct BandEstimate {
    double omega_low = 0.0, omega_high = 0.0, omega_center = 0.0;
    double empirical = 0.0;
    double target = 0.0;
    std::size_t bins = 0;
};

// Hann-windowed periodogram averaged over realizations and log-spaced bands.
std::vector<BandEstimate> band_psd(const std::vector<std::vector<double>>& realizations, double dt,
                                   const NoiseSpectrum& spec, double omega_low, double omega_high,
                                   int bands_per_decade);

}  // namespace gkpsim
