#include "gkpsim/fluxnoise.hpp"

#include "gkpsim/quadratures.hpp"
#include "gkpsim/units.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <fftw3.h>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <random>
#include <stdexcept>

namespace gkpsim {

namespace {

using cd = std::complex<double>;

constexpr int kWeidemanN = 40;

struct WeidemanTable {
    double L = 0.0;
    std::array<double, kWeidemanN> a{};  // a[n-1] multiplies Z^{n-1}

    WeidemanTable() {
        const int M = 2 * kWeidemanN;
        L = std::sqrt(kWeidemanN / std::sqrt(2.0));
        std::vector<double> F(2 * M, 0.0);  // F[k + M], k = -M..M-1
        for (int k = -M + 1; k <= M - 1; ++k) {
            double t = L * std::tan(0.5 * k * units::pi / M);
            F[k + M] = std::exp(-t * t) * (L * L + t * t);
        }
        for (int n = 1; n <= kWeidemanN; ++n) {
            double s = 0.0;
            for (int k = -M; k <= M - 1; ++k) s += F[k + M] * std::cos(units::pi * k * n / M);
            a[n - 1] = s / (2.0 * M);
        }
    }
};

const WeidemanTable& weideman() {
    static const WeidemanTable t;
    return t;
}

std::size_t locate(const std::vector<double>& t, double x) {
    auto it = std::upper_bound(t.begin(), t.end(), x);
    std::size_t i = (it == t.begin()) ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
    return std::min(i, t.size() - 2);
}

}  // namespace

void NoiseSpectrum::validate() const {
    if (gamma_phi < 0.0) throw std::invalid_argument("gamma_phi must be non-negative");
    if (!(Omega > 0.0) || !(omega0 > 0.0) || !(Lambda > 0.0))
        throw std::invalid_argument("spectrum scales must be positive");
    if (!(omega0 < Lambda)) throw std::invalid_argument("infrared cutoff must lie below the ultraviolet cutoff");
}

double NoiseSpectrum::shape(double omega) const {
    double w = std::abs(omega);
    return std::exp(-w / Lambda) * Omega / (w + omega0);
}

double NoiseSpectrum::shape_integral() const {
    double r = omega0 / Lambda;
    return 2.0 * Omega * std::exp(r) * expint_e1(cd(r, 0.0)).real();
}

cd faddeeva_upper(cd z) {
    if (z.imag() < 0.0) throw std::domain_error("faddeeva_upper requires Im z >= 0");
    const auto& tab = weideman();
    const cd iz(-z.imag(), z.real());
    const cd den = tab.L - iz;
    const cd Z = (tab.L + iz) / den;
    cd p = 0.0;
    for (int n = kWeidemanN - 1; n >= 0; --n) p = p * Z + tab.a[static_cast<std::size_t>(n)];
    return 2.0 * p / (den * den) + (1.0 / std::sqrt(units::pi)) / den;
}

cd erfcx_complex(cd z) {
    if (z.real() < 0.0) throw std::domain_error("erfcx_complex requires Re z >= 0");
    return faddeeva_upper(cd(-z.imag(), z.real()));
}

cd expint_e1(cd z) {
    if (!(z.real() > 0.0)) throw std::domain_error("expint_e1 requires Re z > 0");
    constexpr double euler = 0.57721566490153286061;
    if (std::abs(z) < 1.0) {
        cd term = 1.0;
        cd sum = 0.0;
        for (int k = 1; k < 60; ++k) {
            term *= -z / static_cast<double>(k);
            cd add = term / static_cast<double>(k);
            sum += add;
            if (std::abs(add) < 1e-17 * std::abs(sum)) break;
        }
        return -euler - std::log(z) - sum;
    }
    // modified Lentz on the even continued fraction
    const double tiny = 1e-300;
    cd b = z + 1.0;
    cd c = 1.0 / tiny;
    cd d = 1.0 / b;
    cd h = d;
    for (int i = 1; i < 10000; ++i) {
        double an = -static_cast<double>(i) * i;
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        cd del = c * d;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-z);
}

double jump_correlator(double t, const NoiseSpectrum& spec) {
    const cd s(0.5 / spec.Lambda, t);
    const cd z = std::sqrt(spec.omega0 * s);
    return std::sqrt(2.0 * spec.Omega) * (erfcx_complex(z) / std::sqrt(s)).real();
}

double target_autocorrelation(double tau, const NoiseSpectrum& spec) {
    const cd s(1.0 / spec.Lambda, std::abs(tau));
    const cd w = spec.omega0 * s;
    return spec.psd_scale() * spec.Omega / units::pi * (std::exp(w) * expint_e1(w)).real();
}

NoiseGrid build_noise_grid(const NoiseSpectrum& spec, const NoiseGridOptions& opts) {
    spec.validate();
    if (!(opts.window_end >= opts.window_begin)) throw std::invalid_argument("noise window is reversed");
    if (!(opts.ratio > 1.0)) throw std::invalid_argument("grid growth ratio must exceed 1");
    const double h0 = 0.5 / spec.Lambda;
    const double guard = opts.guard > 0.0 ? opts.guard : 1e3 / spec.Lambda;
    const double a = opts.window_begin - guard;
    const double b = opts.window_end + guard;
    const auto nfine = static_cast<std::size_t>(std::ceil((b - a) / h0));
    const double span = opts.span_factor / spec.omega0;

    std::vector<double> left_edges;  // outward from a
    {
        double e = a, h = h0;
        while (e > opts.window_begin - span) {
            e -= h;
            left_edges.push_back(e);
            h *= opts.ratio;
        }
    }
    std::vector<double> edges(left_edges.rbegin(), left_edges.rend());
    for (std::size_t i = 0; i <= nfine; ++i) edges.push_back(a + h0 * static_cast<double>(i));
    {
        double e = edges.back(), h = h0;
        while (e < opts.window_end + span) {
            e += h;
            edges.push_back(e);
            h *= opts.ratio;
        }
    }
    NoiseGrid g;
    g.window_begin = opts.window_begin;
    g.window_end = opts.window_end;
    g.coverage_begin = edges.front();
    g.coverage_end = edges.back();
    g.t.reserve(edges.size() - 1);
    g.dt.reserve(edges.size() - 1);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        g.t.push_back(0.5 * (edges[i] + edges[i + 1]));
        g.dt.push_back(edges[i + 1] - edges[i]);
    }
    return g;
}

NoiseSignal::NoiseSignal(std::vector<double> times, std::vector<double> values, std::uint64_t seed)
    : t_(std::move(times)), v_(std::move(values)), seed_(seed) {
    const std::size_t n = t_.size();
    if (n != v_.size()) throw std::invalid_argument("signal times and values differ in length");
    if (n < 2) throw std::invalid_argument("signal needs at least two samples");
    for (std::size_t i = 1; i < n; ++i)
        if (!(t_[i] > t_[i - 1])) throw std::invalid_argument("signal times must increase");
    // natural spline: tridiagonal system for interior second derivatives
    m_.assign(n, 0.0);
    if (n > 2) {
        std::vector<double> c(n, 0.0), d(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            double h0 = t_[i] - t_[i - 1], h1 = t_[i + 1] - t_[i];
            double a = h0 / 6.0, b = (h0 + h1) / 3.0, cc = h1 / 6.0;
            double r = (v_[i + 1] - v_[i]) / h1 - (v_[i] - v_[i - 1]) / h0;
            double denom = b - a * c[i - 1];
            c[i] = cc / denom;
            d[i] = (r - a * d[i - 1]) / denom;
        }
        for (std::size_t i = n - 1; i-- > 1;) m_[i] = d[i] - c[i] * m_[i + 1];
    }
    cumulative_.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) cumulative_[i + 1] = cumulative_[i] + antiderivative(i, t_[i + 1]);
}

bool NoiseSignal::is_zero() const {
    for (double v : v_)
        if (v != 0.0) return false;
    return true;
}

double NoiseSignal::value(double t) const {
    if (t_.empty()) return 0.0;
    if (t < t_.front() - 1e-15 || t > t_.back() + 1e-15) throw std::out_of_range("time outside noise coverage");
    std::size_t i = locate(t_, t);
    double h = t_[i + 1] - t_[i];
    double B = (t - t_[i]) / h, A = 1.0 - B;
    return A * v_[i] + B * v_[i + 1] + ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
}

double NoiseSignal::antiderivative(std::size_t i, double t) const {
    double h = t_[i + 1] - t_[i];
    double B = (t - t_[i]) / h;
    double iA = h * (B - 0.5 * B * B);
    double iB = 0.5 * h * B * B;
    double oneA = 1.0 - B;
    double iA3 = h * ((1.0 - oneA * oneA * oneA * oneA) / 4.0 - (B - 0.5 * B * B));
    double iB3 = h * (B * B * B * B / 4.0 - 0.5 * B * B);
    return iA * v_[i] + iB * v_[i + 1] + (iA3 * m_[i] + iB3 * m_[i + 1]) * h * h / 6.0;
}

double NoiseSignal::integral(double t1, double t2) const {
    if (t_.empty()) return 0.0;
    if (t2 < t1) return -integral(t2, t1);
    if (t1 < t_.front() - 1e-15 || t2 > t_.back() + 1e-15) throw std::out_of_range("interval outside noise coverage");
    auto F = [&](double t) {
        std::size_t i = locate(t_, t);
        return cumulative_[i] + antiderivative(i, t);
    };
    return F(t2) - F(t1);
}

NoiseGenerator::NoiseGenerator(const NoiseSpectrum& spec, const NoiseGrid& grid, std::vector<double> eval_times)
    : spec_(spec), grid_(grid), eval_(std::move(eval_times)) {
    spec_.validate();
    for (double t : eval_)
        if (t < grid_.window_begin || t > grid_.window_end)
            throw std::out_of_range("evaluation time outside the noise grid window");
    const std::size_t G = grid_.t.size();
    kernel_.resize(eval_.size() * G);
    const double pref = std::sqrt(spec_.psd_scale() / (2.0 * units::pi));
    for (std::size_t i = 0; i < eval_.size(); ++i)
        for (std::size_t m = 0; m < G; ++m)
            kernel_[i * G + m] = pref * jump_correlator(eval_[i] - grid_.t[m], spec_) * std::sqrt(grid_.dt[m]);
}

NoiseSignal NoiseGenerator::generate(std::uint64_t seed) const {
    const auto G = static_cast<Eigen::Index>(grid_.t.size());
    const auto E = static_cast<Eigen::Index>(eval_.size());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd chi(G);
    for (Eigen::Index m = 0; m < G; ++m) chi[m] = normal(rng);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> K(kernel_.data(), E, G);
    Eigen::VectorXd xi = K * chi;
    return NoiseSignal(eval_, std::vector<double>(xi.data(), xi.data() + E), seed);
}

std::vector<double> default_eval_times(std::size_t n, double t_end) {
    if (n < 2) throw std::invalid_argument("need at least two evaluation times");
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = t_end * static_cast<double>(i) / static_cast<double>(n - 1);
    return t;
}

NoiseSignal generate_signal(const NoiseSpectrum& spec, const NoiseGrid& grid, std::uint64_t seed,
                            const std::vector<double>& eval_times) {
    return NoiseGenerator(spec, grid, eval_times).generate(seed);
}

double integrate_alpha(const NoiseSignal& signal, double t1_ns, double t2_ns, double L_uH) {
    if (signal.empty()) return 0.0;
    const double eps_L = units::inductive_energy(L_uH);
    return 4.0 * units::pi * eps_L * signal.integral(t1_ns * 1e-9, t2_ns * 1e-9) * 1e9;
}

FreeDisplacement free_segment_AB(const NoiseSignal& signal, double t_start_ns, double t_ns, double f_LC,
                                 double L_uH, double nu) {
    FreeDisplacement d;
    if (signal.empty() || t_ns <= 0.0) return d;
    const double eps_L = units::inductive_energy(L_uH);
    const double w = 2.0 * units::pi * f_LC;
    using Q = boost::math::quadrature::gauss<double, 20>;
    auto xi = [&](double u) { return signal.value((t_start_ns + u) * 1e-9); };
    double is = Q::integrate([&](double u) { return std::sin(w * u) * xi(u); }, 0.0, t_ns);
    double ic = Q::integrate([&](double u) { return std::cos(w * u) * xi(u); }, 0.0, t_ns);
    d.a = 2.0 * units::pi * nu * eps_L * is;
    d.b = 4.0 * units::pi * eps_L * ic;
    return d;
}

UniformNoiseSynth::UniformNoiseSynth(const NoiseSpectrum& spec, const UniformNoiseOptions& opts)
    : spec_(spec), opts_(opts) {
    spec_.validate();
    if (!(opts_.dt > 0.0) || opts_.samples < 16) throw std::invalid_argument("invalid uniform noise options");
    if (!(opts_.taper_end > opts_.taper_begin) || !(opts_.taper_begin > 0.0))
        throw std::invalid_argument("invalid kernel taper");
    half_kernel_ = static_cast<std::size_t>(std::ceil(opts_.taper_end / opts_.dt));
    n_fft_ = 1;
    while (n_fft_ < opts_.samples + 2 * half_kernel_ + 1) n_fft_ <<= 1;

    // Each white-noise cell carries the integral of g over its width.
    const double dt = opts_.dt;
    const double pref = std::sqrt(spec_.psd_scale() / (2.0 * units::pi)) / std::sqrt(dt);
    std::vector<double> k(n_fft_, 0.0);
    using Qfine = boost::math::quadrature::gauss<double, 30>;
    using Qcoarse = boost::math::quadrature::gauss<double, 7>;
    const double fine_until = 200.0 / spec_.Lambda;
    for (std::size_t j = 0; j <= half_kernel_; ++j) {
        double c = static_cast<double>(j) * dt;
        auto f = [&](double u) { return jump_correlator(u, spec_); };
        double lo = c - 0.5 * dt, hi = c + 0.5 * dt;
        double cell;
        if (lo < fine_until) {
            // g is sharply peaked on the scale 1/Λ
            cell = 0.0;
            const int pieces = 16;
            for (int q = 0; q < pieces; ++q)
                cell += Qfine::integrate(f, lo + (hi - lo) * q / pieces, lo + (hi - lo) * (q + 1) / pieces);
        } else {
            cell = Qcoarse::integrate(f, lo, hi);
        }
        double w = 1.0;
        if (c > opts_.taper_begin) {
            double r = std::min(1.0, (c - opts_.taper_begin) / (opts_.taper_end - opts_.taper_begin));
            double cw = std::cos(0.5 * units::pi * r);
            w = cw * cw;
        }
        double v = pref * cell * w;
        k[j] = v;
        if (j > 0) k[n_fft_ - j] = v;
    }
    kernel_hat_.resize(n_fft_ / 2 + 1);
    std::lock_guard<std::mutex> lock(fftw_mutex());
    auto* out = reinterpret_cast<fftw_complex*>(kernel_hat_.data());
    fftw_plan p = fftw_plan_dft_r2c_1d(static_cast<int>(n_fft_), k.data(), out, FFTW_ESTIMATE);
    fftw_execute(p);
    fftw_destroy_plan(p);
}

UniformNoiseSynth::~UniformNoiseSynth() = default;

std::vector<double> UniformNoiseSynth::generate(std::uint64_t seed) const {
    std::vector<double> buf(n_fft_, 0.0);
    std::vector<std::complex<double>> spec(n_fft_ / 2 + 1);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t n_in = opts_.samples + 2 * half_kernel_;
    for (std::size_t i = 0; i < n_in; ++i) buf[i] = normal(rng);
    fftw_plan fwd, bwd;
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n_fft_), buf.data(),
                                   reinterpret_cast<fftw_complex*>(spec.data()), FFTW_ESTIMATE);
        bwd = fftw_plan_dft_c2r_1d(static_cast<int>(n_fft_), reinterpret_cast<fftw_complex*>(spec.data()),
                                   buf.data(), FFTW_ESTIMATE);
    }
    fftw_execute(fwd);
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= kernel_hat_[i];
    fftw_execute(bwd);
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }
    std::vector<double> out(opts_.samples);
    const double inv = 1.0 / static_cast<double>(n_fft_);
    for (std::size_t i = 0; i < opts_.samples; ++i) out[i] = buf[i + half_kernel_] * inv;
    return out;
}

std::vector<BandEstimate> band_psd(const std::vector<std::vector<double>>& realizations, double dt,
                                   const NoiseSpectrum& spec, double omega_low, double omega_high,
                                   int bands_per_decade) {
    if (realizations.empty()) throw std::invalid_argument("no realizations");
    if (!(omega_high > omega_low) || !(omega_low > 0.0) || bands_per_decade < 1)
        throw std::invalid_argument("invalid band specification");
    const std::size_t N = realizations.front().size();
    std::vector<double> window(N);
    double w2 = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
        double s = std::sin(units::pi * static_cast<double>(n) / static_cast<double>(N));
        window[n] = s * s;
        w2 += window[n] * window[n];
    }
    std::vector<double> acc(N / 2 + 1, 0.0);
    std::vector<double> buf(N);
    std::vector<std::complex<double>> out(N / 2 + 1);
    fftw_plan p;
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        p = fftw_plan_dft_r2c_1d(static_cast<int>(N), buf.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                 FFTW_ESTIMATE);
    }
    for (const auto& r : realizations) {
        if (r.size() != N) throw std::invalid_argument("realizations differ in length");
        for (std::size_t n = 0; n < N; ++n) buf[n] = r[n] * window[n];
        fftw_execute(p);
        for (std::size_t k = 0; k < out.size(); ++k) acc[k] += std::norm(out[k]);
    }
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(p);
    }
    const double norm = dt / (w2 * static_cast<double>(realizations.size()));
    const double dw = 2.0 * units::pi / (static_cast<double>(N) * dt);
    std::vector<BandEstimate> bands;
    const double step = std::pow(10.0, 1.0 / bands_per_decade);
    for (double lo = omega_low; lo * (1.0 + 1e-12) < omega_high; lo *= step) {
        BandEstimate b;
        b.omega_low = lo;
        b.omega_high = std::min(lo * step, omega_high);
        b.omega_center = std::sqrt(b.omega_low * b.omega_high);
        for (std::size_t k = 1; k < acc.size(); ++k) {
            double w = dw * static_cast<double>(k);
            if (w < b.omega_low || w >= b.omega_high) continue;
            b.empirical += acc[k] * norm;
            b.target += spec.psd(w);
            ++b.bins;
        }
        if (b.bins == 0) throw std::invalid_argument("band contains no frequency bins; lengthen the record");
        b.empirical /= static_cast<double>(b.bins);
        b.target /= static_cast<double>(b.bins);
        bands.push_back(b);
    }
    return bands;
}

}  // namespace gkpsim
