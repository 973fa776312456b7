#include "gkpsim/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace gkpsim {

void SearchSpace::validate() const {
    for (std::size_t i = 0; i < 5; ++i) {
        if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || lower[i] > upper[i])
            throw std::invalid_argument("search bounds must be finite and ordered");
    }
    if (!(lower[0] > 0.0) || !(lower[1] > 0.0)) throw std::invalid_argument("inductor lower bounds must be positive");
    if (starts < 1) throw std::invalid_argument("at least one start is needed");
}

SearchSpace SearchSpace::around(const CircuitParams& p, double relative) {
    SearchSpace s;
    s.base = p;
    s.L_total = p.total_inductance();
    std::array<double, 5> c{p.L_anc_uH[1], p.L_anc_uH[2], p.J_anc[0], p.J_anc[1], p.J_anc[2]};
    for (std::size_t i = 0; i < 5; ++i) {
        double d = std::abs(c[i]) * relative;
        s.lower[i] = c[i] - d;
        s.upper[i] = c[i] + d;
    }
    return s;
}

namespace {

struct Evaluation {
    bool ok = false;
    double objective = std::numeric_limits<double>::infinity();
    SearchResult result;
};

CircuitParams params_at(const SearchSpace& s, const std::array<double, 5>& v) {
    CircuitParams p = s.base;
    p.has_ancilla = true;
    p.L_anc_uH = {s.L_total - v[0] - v[1], v[0], v[1]};
    p.J_anc = {v[2], v[3], v[4]};
    p.L_uH = s.L_total;
    return p;
}

Evaluation evaluate(const SearchSpace& s, const std::array<double, 5>& v) {
    Evaluation e;
    CircuitParams p = params_at(s, v);
    if (p.L_anc_uH[0] < s.L1_min) return e;
    try {
        EffectivePotential ep = fit_effective_potential(p, s.fit);
        double V4 = ep.v(4);
        if (V4 == 0.0) return e;
        DerivedScales sc = derived_scales(p, V4, ep.quadratic_residual);
        auto eig = constraint_eigenstate(ep.V, sc, s.alpha, s.zeta, s.threshold);
        auto dep = constraint_dephasing(ep.V, sc.kappa, sc.t4, s.threshold);
        double penalty = 0.0;
        for (const auto* rep : {&eig, &dep})
            for (double r : rep->ratio) {
                double over = r / s.threshold - 1.0;
                if (over > 0.0) penalty += over * over + over;
            }
        e.ok = true;
        // |V₄| in units of 1e-6 h·GHz keeps the objective O(1).
        e.objective = -std::abs(V4) * 1e6 + 100.0 * penalty;
        e.result.params = p;
        e.result.V = ep.V;
        e.result.eigenstate = eig;
        e.result.dephasing = dep;
        e.result.t_gate_us = sc.t_gate / 1e3;
        e.result.score = std::abs(V4);
    } catch (const std::exception&) {
        e.ok = false;
    }
    return e;
}

std::array<double, 5> clamp(const SearchSpace& s, std::array<double, 5> v) {
    for (std::size_t i = 0; i < 5; ++i) v[i] = std::clamp(v[i], s.lower[i], s.upper[i]);
    return v;
}

bool feasible(const SearchResult& r) { return r.eigenstate.pass && r.dephasing.pass; }

}  // namespace

SearchOutcome search_parameters(const SearchSpace& space) {
    space.validate();
    SearchOutcome out;
    std::mt19937_64 rng(space.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    std::vector<std::size_t> free_dims;
    for (std::size_t i = 0; i < 5; ++i)
        if (space.upper[i] > space.lower[i]) free_dims.push_back(i);

    std::vector<SearchResult> found;
    for (int st = 0; st < space.starts; ++st) {
        std::array<double, 5> x0{};
        for (std::size_t i = 0; i < 5; ++i) {
            double mid = 0.5 * (space.lower[i] + space.upper[i]);
            x0[i] = st == 0 ? mid : space.lower[i] + (space.upper[i] - space.lower[i]) * uni(rng);
        }
        if (free_dims.empty()) {
            Evaluation e = evaluate(space, x0);
            ++out.evaluations;
            if (e.ok) found.push_back(e.result);
            else ++out.infeasible_starts;
            break;
        }

        // Nelder-Mead on the free coordinates, points clamped into the box.
        const std::size_t n = free_dims.size();
        std::vector<std::array<double, 5>> simplex(n + 1, x0);
        std::vector<double> f(n + 1);
        for (std::size_t j = 0; j < n; ++j) {
            std::size_t d = free_dims[j];
            double span = space.upper[d] - space.lower[d];
            simplex[j + 1][d] = x0[d] + (x0[d] + 0.1 * span <= space.upper[d] ? 0.1 : -0.1) * span;
        }
        std::vector<Evaluation> evals(n + 1);
        for (std::size_t j = 0; j <= n; ++j) {
            evals[j] = evaluate(space, simplex[j]);
            f[j] = evals[j].objective;
            ++out.evaluations;
        }
        for (int it = 0; it < space.max_iterations; ++it) {
            std::vector<std::size_t> order(n + 1);
            for (std::size_t j = 0; j <= n; ++j) order[j] = j;
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
            auto reorder = [&](auto& vec) {
                auto copy = vec;
                for (std::size_t j = 0; j <= n; ++j) vec[j] = copy[order[j]];
            };
            reorder(simplex);
            reorder(f);
            reorder(evals);
            if (std::isfinite(f[0]) && std::abs(f[n] - f[0]) <= space.tolerance * (1.0 + std::abs(f[0]))) break;

            std::array<double, 5> centroid = simplex[0];
            for (std::size_t d : free_dims) {
                double s = 0.0;
                for (std::size_t j = 0; j < n; ++j) s += simplex[j][d];
                centroid[d] = s / static_cast<double>(n);
            }
            auto along = [&](double t) {
                std::array<double, 5> p = centroid;
                for (std::size_t d : free_dims) p[d] = centroid[d] + t * (simplex[n][d] - centroid[d]);
                return clamp(space, p);
            };
            auto try_point = [&](const std::array<double, 5>& p) {
                ++out.evaluations;
                return evaluate(space, p);
            };
            auto xr = along(-1.0);
            Evaluation er = try_point(xr);
            if (er.objective < f[0]) {
                auto xe = along(-2.0);
                Evaluation ee = try_point(xe);
                if (ee.objective < er.objective) {
                    simplex[n] = xe;
                    evals[n] = ee;
                } else {
                    simplex[n] = xr;
                    evals[n] = er;
                }
            } else if (er.objective < f[n - 1]) {
                simplex[n] = xr;
                evals[n] = er;
            } else {
                auto xc = er.objective < f[n] ? along(-0.5) : along(0.5);
                Evaluation ec = try_point(xc);
                if (ec.objective < std::min(f[n], er.objective)) {
                    simplex[n] = xc;
                    evals[n] = ec;
                } else {
                    for (std::size_t j = 1; j <= n; ++j) {
                        for (std::size_t d : free_dims) simplex[j][d] = simplex[0][d] + 0.5 * (simplex[j][d] - simplex[0][d]);
                        evals[j] = try_point(simplex[j]);
                        f[j] = evals[j].objective;
                    }
                }
            }
            f[n] = evals[n].objective;
        }
        std::size_t best = 0;
        for (std::size_t j = 1; j <= n; ++j)
            if (f[j] < f[best]) best = j;
        if (evals[best].ok && feasible(evals[best].result)) found.push_back(evals[best].result);
        else ++out.infeasible_starts;
    }

    std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
    for (const auto& r : found) {
        bool dup = false;
        for (const auto& k : out.results) {
            double d = 0.0;
            for (std::size_t i = 0; i < 3; ++i) {
                d = std::max(d, std::abs(r.params.L_anc_uH[i] - k.params.L_anc_uH[i]));
                d = std::max(d, std::abs(r.params.J_anc[i] - k.params.J_anc[i]));
            }
            if (d < 1e-6) dup = true;
        }
        if (!dup && feasible(r)) out.results.push_back(r);
    }
    std::ostringstream os;
    os << out.results.size() << " feasible optima from " << space.starts << " starts, " << out.evaluations
       << " evaluations, " << out.infeasible_starts << " starts without a feasible point";
    out.diagnostics = os.str();
    return out;
}

ValidationReport validate_parameter_set(const CircuitParams& params, std::optional<int> table_index,
                                        const FitOptions& fit, double alpha, double zeta, double threshold) {
    ValidationReport rep;
    rep.params = params;
    rep.potential = fit_effective_potential(params, fit);
    rep.scales = derived_scales(params, rep.potential.v(4), rep.potential.quadratic_residual);
    rep.eigenstate = constraint_eigenstate(rep.potential.V, rep.scales, alpha, zeta, threshold);
    rep.dephasing = constraint_dephasing(rep.potential.V, rep.scales.kappa, rep.scales.t4, threshold);
    rep.t_gate_us = rep.scales.t_gate / 1e3;
    rep.table_index = table_index;
    rep.pass = rep.eigenstate.pass && rep.dephasing.pass;
    if (table_index) {
        rep.published_t_gate_us = table_gate_time_us(*table_index);
        rep.relative_error = rep.t_gate_us / rep.published_t_gate_us - 1.0;
    }
    return rep;
}

}  // namespace gkpsim
