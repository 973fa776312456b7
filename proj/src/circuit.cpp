#include "gkpsim/circuit.hpp"

#include "gkpsim/units.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gkpsim {

using json = nlohmann::json;
using units::pi;

double CircuitParams::total_inductance() const {
    if (!has_ancilla) return L_uH;
    return L_anc_uH[0] + L_anc_uH[1] + L_anc_uH[2];
}

double CircuitParams::capacitance() const {
    return C_fF > 0.0 ? C_fF : units::impedance_matched_capacitance(total_inductance());
}

void CircuitParams::validate() const {
    if (!(L_uH > 0.0)) throw std::invalid_argument("L must be positive");
    if (!(J > 0.0)) throw std::invalid_argument("J must be positive");
    if (T_mK < 0.0) throw std::invalid_argument("T must be non-negative");
    if (Gamma_GHz < 0.0) throw std::invalid_argument("Gamma must be non-negative");
    if (has_ancilla) {
        for (double l : L_anc_uH)
            if (!(l > 0.0)) throw std::invalid_argument("ancillary inductors must be positive");
        if (std::abs(total_inductance() - L_uH) > 0.01 * L_uH)
            throw std::invalid_argument("ancillary inductors do not sum to L");
        if (!(C_junc_fF > 0.0)) throw std::invalid_argument("junction capacitance must be positive");
    }
}

std::string circuit_to_json(const CircuitParams& p) {
    json j;
    j["name"] = p.name;
    j["L_uH"] = p.L_uH;
    if (p.C_fF > 0.0) j["C_fF"] = p.C_fF;
    j["J_hGHz"] = p.J;
    j["Gamma_GHz"] = p.Gamma_GHz;
    j["T_mK"] = p.T_mK;
    if (p.has_ancilla) {
        j["ancilla"] = {{"L1_uH", p.L_anc_uH[0]}, {"L2_uH", p.L_anc_uH[1]}, {"L3_uH", p.L_anc_uH[2]},
                        {"Jp1_hGHz", p.J_anc[0]}, {"Jp2_hGHz", p.J_anc[1]}, {"Jp3_hGHz", p.J_anc[2]},
                        {"C_junc_fF", p.C_junc_fF}};
    }
    return j.dump(2);
}

CircuitParams circuit_from_json(const std::string& text) {
    json j = json::parse(text);
    CircuitParams p;
    p.name = j.value("name", std::string{});
    p.L_uH = j.at("L_uH").get<double>();
    p.C_fF = j.value("C_fF", 0.0);
    p.J = j.value("J_hGHz", p.J);
    p.Gamma_GHz = j.value("Gamma_GHz", p.Gamma_GHz);
    p.T_mK = j.value("T_mK", p.T_mK);
    if (j.contains("ancilla")) {
        const auto& a = j["ancilla"];
        p.has_ancilla = true;
        p.L_anc_uH = {a.at("L1_uH").get<double>(), a.at("L2_uH").get<double>(), a.at("L3_uH").get<double>()};
        p.J_anc = {a.at("Jp1_hGHz").get<double>(), a.at("Jp2_hGHz").get<double>(), a.at("Jp3_hGHz").get<double>()};
        p.C_junc_fF = a.value("C_junc_fF", p.C_junc_fF);
    }
    p.validate();
    return p;
}

CircuitParams load_circuit(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open circuit file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return circuit_from_json(ss.str());
}

void save_circuit(const CircuitParams& params, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write circuit file " + path);
    out << circuit_to_json(params) << "\n";
}

namespace {

struct TableRow {
    double L1, L2, L3, J1, J2, J3, t_gate_us;
};

constexpr TableRow kTable[5] = {
    {2.35, 0.0696, 0.0758, 0.0238, 0.583, 0.0118, 3.41},
    {2.36, 0.0688, 0.0699, 0.0614, 0.629, 0.00872, 4.19},
    {2.40, 0.0556, 0.0436, 0.843, -0.289, 0.0420, 9.42},
    {2.41, 0.0471, 0.0369, 1.18, -0.139, 0.0550, 12.5},
    {2.41, 0.0469, 0.0393, 0.870, -0.107, 0.0250, 16.5},
};

const TableRow& row(int index) {
    if (index < 1 || index > 5) throw std::out_of_range("parameter set index must be 1..5");
    return kTable[index - 1];
}

// Ancilla nodes: node 1 sits between L1 and L2, node 2 between L2 and L3.
// J'_1 bridges the two nodes, J'_3 grounds node 1 and J'_2 grounds node 2.
struct Chain {
    double e1, e2, e3;
    double jb, jn1, jn2;
};

Chain chain_of(const CircuitParams& p) {
    return {units::inductive_energy(p.L_anc_uH[0]), units::inductive_energy(p.L_anc_uH[1]),
            units::inductive_energy(p.L_anc_uH[2]), p.J_anc[0], p.J_anc[2], p.J_anc[1]};
}

double chain_energy(const Chain& c, double x, double y1, double y2) {
    const double tp = 2.0 * pi;
    return c.e1 * (x - y1) * (x - y1) + c.e2 * (y1 - y2) * (y1 - y2) + c.e3 * y2 * y2 -
           c.jb * std::cos(tp * (y1 - y2)) - c.jn1 * std::cos(tp * y1) - c.jn2 * std::cos(tp * y2);
}

void chain_derivatives(const Chain& c, double x, double y1, double y2, Eigen::Vector2d& g, Eigen::Matrix2d& H) {
    const double tp = 2.0 * pi;
    double sb = std::sin(tp * (y1 - y2)), cb = std::cos(tp * (y1 - y2));
    g[0] = 2 * c.e1 * (y1 - x) + 2 * c.e2 * (y1 - y2) + tp * c.jb * sb + tp * c.jn1 * std::sin(tp * y1);
    g[1] = -2 * c.e2 * (y1 - y2) + 2 * c.e3 * y2 - tp * c.jb * sb + tp * c.jn2 * std::sin(tp * y2);
    double cbb = tp * tp * c.jb * cb;
    H(0, 0) = 2 * c.e1 + 2 * c.e2 + cbb + tp * tp * c.jn1 * std::cos(tp * y1);
    H(1, 1) = 2 * c.e2 + 2 * c.e3 + cbb + tp * tp * c.jn2 * std::cos(tp * y2);
    H(0, 1) = H(1, 0) = -2 * c.e2 - cbb;
}

struct NewtonResult {
    Eigen::Vector2d y;
    double energy;
    bool converged;
};

NewtonResult newton(const Chain& c, double x, Eigen::Vector2d y) {
    const double scale = c.e1 + c.e2 + c.e3;
    double E = chain_energy(c, x, y[0], y[1]);
    Eigen::Vector2d g;
    Eigen::Matrix2d H;
    for (int it = 0; it < 200; ++it) {
        chain_derivatives(c, x, y[0], y[1], g, H);
        if (g.cwiseAbs().maxCoeff() < 1e-13 * scale) {
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(H);
            return {y, E, es.eigenvalues()[0] > 0.0};
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(H);
        double lo = es.eigenvalues()[0];
        if (lo <= 1e-8 * scale) H += Eigen::Matrix2d::Identity() * (1e-6 * scale - lo);
        Eigen::Vector2d d = H.ldlt().solve(g);
        double step = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            Eigen::Vector2d yn = y - step * d;
            double En = chain_energy(c, x, yn[0], yn[1]);
            if (En <= E + 1e-15 * (std::abs(E) + scale)) {
                y = yn;
                E = En;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved || (step * d).cwiseAbs().maxCoeff() < 1e-15) {
            chain_derivatives(c, x, y[0], y[1], g, H);
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> fin(H);
            bool ok = g.cwiseAbs().maxCoeff() < 1e-9 * scale && fin.eigenvalues()[0] > 0.0;
            return {y, E, ok};
        }
    }
    return {y, E, false};
}

}  // namespace

CircuitParams table_set(int index) {
    const TableRow& r = row(index);
    CircuitParams p;
    p.name = "set" + std::to_string(index);
    p.L_uH = 2.5;
    p.J = 150.0;
    p.Gamma_GHz = 1.5;
    p.T_mK = 40.0;
    p.has_ancilla = true;
    p.L_anc_uH = {r.L1, r.L2, r.L3};
    p.J_anc = {r.J1, r.J2, r.J3};
    p.C_junc_fF = 0.1;
    return p;
}

double table_gate_time_us(int index) { return row(index).t_gate_us; }

AncillaMinimum minimize_ancilla(const CircuitParams& params, double x, const double* guess) {
    if (!params.has_ancilla) {
        return {units::inductive_energy(params.L_uH) * x * x, 0.0, 0.0};
    }
    const Chain c = chain_of(params);
    const double L = params.total_inductance();
    Eigen::Vector2d lin(x * (params.L_anc_uH[1] + params.L_anc_uH[2]) / L, x * params.L_anc_uH[2] / L);
    std::vector<Eigen::Vector2d> starts;
    if (guess) starts.emplace_back(guess[0], guess[1]);
    starts.push_back(lin);
    const double o = 1.0 / 3.0;
    for (Eigen::Vector2d off : {Eigen::Vector2d(o, 0), Eigen::Vector2d(-o, 0), Eigen::Vector2d(0, o),
                                Eigen::Vector2d(0, -o)})
        starts.push_back(lin + off);

    std::vector<NewtonResult> minima;
    for (const auto& s : starts) {
        NewtonResult r = newton(c, x, s);
        if (!r.converged) continue;
        bool dup = false;
        for (const auto& m : minima)
            if ((m.y - r.y).cwiseAbs().maxCoeff() < 1e-6) dup = true;
        if (!dup) minima.push_back(r);
    }
    if (minima.empty()) throw MinimizationError("ancilla minimization did not converge at x = " + std::to_string(x));
    std::sort(minima.begin(), minima.end(), [](const auto& a, const auto& b) { return a.energy < b.energy; });
    const double scale = c.e1 + c.e2 + c.e3;
    if (minima.size() > 1 && minima[1].energy - minima[0].energy < 1e-12 * scale) {
        std::ostringstream os;
        os << "degenerate ancilla minima at x = " << x << ": (" << minima[0].y.transpose() << ") and ("
           << minima[1].y.transpose() << ")";
        throw MinimizationError(os.str());
    }
    return {minima[0].energy, minima[0].y[0], minima[0].y[1]};
}

namespace {

// ħΣω_k/2 of the two ancilla modes at fixed main flux, h·GHz.
double vacuum_energy(const CircuitParams& p, const AncillaMinimum& m, double x) {
    const Chain c = chain_of(p);
    Eigen::Vector2d g;
    Eigen::Matrix2d K;
    chain_derivatives(c, x, m.y1, m.y2, g, K);
    Eigen::Matrix2d Cm;
    Cm << 2.0, -1.0, -1.0, 2.0;
    Cm *= p.C_junc_fF;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix2d> es(K, Cm);
    // ω² in (rad/s)²: K [h·GHz/φ₀²] / C [fF]
    const double conv = units::planck * 1e9 / (units::flux_quantum * units::flux_quantum) / 1e-15;
    double e = 0.0;
    for (int i = 0; i < 2; ++i) {
        double w = std::sqrt(std::max(0.0, es.eigenvalues()[i] * conv));
        e += 0.5 * w / (2.0 * pi) / 1e9;  // ħω/2 in h·GHz
    }
    return e;
}

}  // namespace

double minimize_potential(const CircuitParams& params, double x, bool vacuum_correction) {
    AncillaMinimum m = minimize_ancilla(params, x);
    AncillaMinimum m0 = minimize_ancilla(params, 0.0);
    double v = m.energy - m0.energy;
    if (vacuum_correction && params.has_ancilla) v += vacuum_energy(params, m, x) - vacuum_energy(params, m0, 0.0);
    return v;
}

double EffectivePotential::value(double x) const {
    double s = 0.0, xp = 1.0;
    for (double c : V) {
        s += c * xp;
        xp *= x;
    }
    return s;
}

std::vector<double> EffectivePotential::hamiltonian_terms() const {
    std::vector<double> t = V;
    if (t.size() > 2) t[2] = quadratic_residual;
    if (!t.empty()) t[0] = 0.0;
    return t;
}

EffectivePotential fit_effective_potential(const CircuitParams& params, const FitOptions& opts) {
    params.validate();
    if (opts.k_max < 2 || opts.samples < 4 * opts.k_max) throw std::invalid_argument("too few fit samples");
    double width = opts.weight_width > 0.0 ? opts.weight_width : base_scales(params).kappa;
    const int n = opts.samples;
    Eigen::VectorXd xs(n), vs(n), w(n);
    const double E0 = minimize_ancilla(params, 0.0).energy;
    // March outward from x = 0 so each point is seeded by its neighbour.
    const int mid = n / 2;
    for (int dir : {1, -1}) {
        double guess[2] = {0.0, 0.0};
        for (int i = mid; i >= 0 && i < n; i += dir) {
            double x = -opts.x_max + 2.0 * opts.x_max * i / (n - 1);
            AncillaMinimum m = minimize_ancilla(params, x, guess);
            guess[0] = m.y1;
            guess[1] = m.y2;
            xs[i] = x;
            vs[i] = m.energy - E0;
            if (opts.vacuum_correction && params.has_ancilla) {
                AncillaMinimum m0 = minimize_ancilla(params, 0.0);
                vs[i] += vacuum_energy(params, m, x) - vacuum_energy(params, m0, 0.0);
            }
        }
    }
    for (int i = 0; i < n; ++i) w[i] = std::exp(-xs[i] * xs[i] / (2.0 * width * width));

    const int nk = opts.k_max / 2 + 1;
    Eigen::MatrixXd A(n, nk);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < nk; ++j) A(i, j) = std::sqrt(w[i]) * std::pow(xs[i] / opts.x_max, 2 * j);
    Eigen::VectorXd b = w.cwiseSqrt().cwiseProduct(vs);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < nk) throw std::runtime_error("rank-deficient potential fit");
    Eigen::VectorXd c = qr.solve(b);

    EffectivePotential ep;
    ep.V.assign(static_cast<std::size_t>(opts.k_max + 1), 0.0);
    for (int j = 0; j < nk; ++j) ep.V[static_cast<std::size_t>(2 * j)] = c[j] / std::pow(opts.x_max, 2 * j);
    Eigen::VectorXd r = A * c - b;
    ep.residual = std::sqrt(r.squaredNorm() / w.sum());
    ep.x_max = opts.x_max;
    ep.samples = n;
    ep.quadratic_residual = ep.v(2) - units::inductive_energy(params.total_inductance());
    if (ep.residual > opts.residual_tolerance) {
        std::ostringstream os;
        os << "potential fit residual " << ep.residual << " exceeds tolerance " << opts.residual_tolerance;
        throw std::runtime_error(os.str());
    }
    return ep;
}

NormalModes normal_mode_frequencies(const CircuitParams& params, int N_well) {
    (void)N_well;  // linearized frequencies do not depend on the well
    if (!params.has_ancilla) throw std::invalid_argument("normal modes need the ancillary circuit");
    if (!(params.C_junc_fF > 0.0)) throw std::invalid_argument("junction capacitance must be positive");
    const Chain c = chain_of(params);
    const double q = 4.0 * pi * pi;
    Eigen::Matrix3d K;
    K << q * params.J + 2 * c.e1, -2 * c.e1, 0.0,
        -2 * c.e1, 2 * c.e1 + 2 * c.e2 + q * (c.jb + c.jn1), -2 * c.e2 - q * c.jb,
        0.0, -2 * c.e2 - q * c.jb, 2 * c.e2 + 2 * c.e3 + q * (c.jb + c.jn2);
    const double cj = params.C_junc_fF;
    Eigen::Matrix3d Cm;
    Cm << params.capacitance(), 0.0, 0.0, 0.0, 2 * cj, -cj, 0.0, -cj, 2 * cj;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix3d> es(K, Cm);
    const double conv = units::planck * 1e9 / (units::flux_quantum * units::flux_quantum) / 1e-15;
    NormalModes nm;
    for (int i = 0; i < 3; ++i) {
        double w2 = es.eigenvalues()[i];
        if (!(w2 > 0.0)) throw std::runtime_error("unstable normal mode " + std::to_string(i + 1));
        double w = std::sqrt(w2 * conv);  // rad/s
        nm.omega[static_cast<std::size_t>(i)] = w * 1e-9;
        nm.temperature[static_cast<std::size_t>(i)] = units::planck * w / (2.0 * pi) / units::boltzmann;
    }
    return nm;
}

DerivedScales base_scales(const CircuitParams& params) {
    DerivedScales s;
    const double L = params.total_inductance();
    const double C = params.capacitance();
    s.f_LC = units::lc_frequency(L, C);
    s.eps_L = units::inductive_energy(L);
    s.E_C = units::charging_energy(C);
    s.lambda0 = std::pow(s.f_LC / (4.0 * pi * pi * pi * params.J), 0.25);
    s.eps0 = s.f_LC / (pi * s.lambda0 * s.lambda0);
    s.kT = units::thermal_energy(params.T_mK);
    s.c_T = s.kT > 0.0 ? std::sqrt(1.0 / std::tanh(2.0 * s.eps0 / s.kT)) : 1.0;
    s.kappa = s.c_T / (pi * s.lambda0);
    s.t_rev = 1.0 / (4.0 * s.eps_L);
    s.t_rev_prime = s.t_rev;
    return s;
}

DerivedScales derived_scales(const CircuitParams& params, double V4, double V2) {
    if (V4 == 0.0) throw std::invalid_argument("V4 = 0 gives no gate time");
    DerivedScales s = base_scales(params);
    s.V4 = V4;
    s.V2 = V2;
    s.t4 = 1.0 / (16.0 * std::abs(V4));
    s.t_rev_prime = 1.0 / (4.0 * (s.eps_L + V2));
    double r = std::fmod(s.t4 / s.t_rev_prime, 4.0);
    s.t2 = s.t_rev * (4.0 - r);
    s.t_gate = s.t4 + s.t2;
    return s;
}

ConstraintReport constraint_eigenstate(const std::vector<double>& V, const DerivedScales& s, double alpha,
                                       double zeta, double threshold) {
    ConstraintReport rep;
    rep.threshold = threshold;
    const double temp = std::sqrt(1.0 / (1.0 + s.kT * pi * s.lambda0 * s.lambda0 / (zeta * s.f_LC)));
    for (std::size_t k = 3; k < V.size(); ++k) {
        double kk = static_cast<double>(k);
        double bound = s.f_LC * std::pow(s.lambda0, kk - 4) * std::pow(pi, kk - 2) /
                       (std::pow(alpha, kk - 1) * std::pow(s.c_T, kk - 1)) * temp;
        double r = std::abs(V[k]) / bound;
        rep.k.push_back(static_cast<int>(k));
        rep.ratio.push_back(r);
        if (!(r < threshold)) rep.pass = false;
    }
    return rep;
}

ConstraintReport constraint_dephasing(const std::vector<double>& V, double kappa, double t4_ns, double threshold) {
    ConstraintReport rep;
    rep.threshold = threshold;
    for (std::size_t k = 1; k < V.size(); ++k) {
        if (k == 2 || k == 4) continue;
        double r = 2.0 * pi * std::abs(V[k]) * std::pow(kappa, static_cast<double>(k)) * t4_ns;
        rep.k.push_back(static_cast<int>(k));
        rep.ratio.push_back(r);
        if (!(r < threshold)) rep.pass = false;
    }
    return rep;
}

EnvelopeSeries envelope_ft_series(double kappa, int k, double a_k, const std::vector<double>& q, int m_max,
                                  double tolerance) {
    if (m_max < 1 || k < 1 || !(kappa > 0.0)) throw std::invalid_argument("invalid series parameters");
    using cd = std::complex<double>;
    EnvelopeSeries out;
    const cd mi(0.0, -1.0);
    for (double qq : q) {
        const double u = pi * kappa * qq;
        // Probabilists' Hermite polynomials He_n(u) up to n = k·m_max.
        const int nmax = k * m_max;
        std::vector<double> he(static_cast<std::size_t>(nmax + 1));
        he[0] = 1.0;
        if (nmax >= 1) he[1] = u;
        for (int n = 2; n <= nmax; ++n)
            he[static_cast<std::size_t>(n)] = u * he[static_cast<std::size_t>(n - 1)] -
                                              (n - 1) * he[static_cast<std::size_t>(n - 2)];
        cd sum = 1.0;
        double smallest = std::abs(a_k) > 0.0 ? 1.0 : 0.0;
        int used = 1;
        double log_pref = 0.0;  // log(|a κ^k|^m / m!)
        double prev = 1.0;
        for (int m = 1; m <= m_max && a_k != 0.0; ++m) {
            log_pref += std::log(std::abs(a_k) * std::pow(kappa, k)) - std::log(static_cast<double>(m));
            const int M = m * k;
            double mag = std::exp(log_pref) * std::abs(he[static_cast<std::size_t>(M)]);
            if (m >= 2 && mag > prev) break;  // asymptotic: stop at the smallest term
            cd phase = std::pow(a_k > 0 ? mi : -mi, m) * std::pow(mi, M);
            double sign = he[static_cast<std::size_t>(M)] < 0 ? -1.0 : 1.0;
            sum += phase * sign * mag;
            smallest = std::min(smallest, mag);
            prev = mag;
            used = m + 1;
            if (mag < 1e-17 * std::abs(sum)) break;
        }
        const double tail = std::abs(a_k) > 0.0 ? smallest : 0.0;
        out.values.push_back(kappa * std::exp(-0.5 * u * u) * sum);
        out.truncation_error.push_back(kappa * std::exp(-0.5 * u * u) * tail);
        out.terms_used.push_back(used);
        if (kappa * tail > tolerance) out.diverged = true;
    }
    return out;
}

}  // namespace gkpsim
