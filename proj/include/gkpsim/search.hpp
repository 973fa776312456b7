#pragma once

#include "gkpsim/circuit.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gkpsim {

// Search coordinates: (L2, L3, J'1, J'2, J'3); L1 = L_total - L2 - L3.
struct SearchSpace {
    std::array<double, 5> lower{};
    std::array<double, 5> upper{};
    double L1_min = 1e-3;
    double L_total = 2.5;
    CircuitParams base;  // J, T, Γ, C_junc and capacitance taken from here
    int starts = 8;
    std::uint64_t seed = 1;
    int max_iterations = 400;
    double tolerance = 1e-10;
    double threshold = 0.1;
    double alpha = 2.0;
    double zeta = 1.0;
    FitOptions fit;

    void validate() const;
    static SearchSpace around(const CircuitParams& p, double relative);
};

struct SearchResult {
    CircuitParams params;
    std::vector<double> V;
    ConstraintReport eigenstate;
    ConstraintReport dephasing;
    double t_gate_us = 0.0;
    double score = 0.0;  // |V₄| in h·GHz for feasible sets
};

struct SearchOutcome {
    std::vector<SearchResult> results;  // feasible local optima, best first
    int evaluations = 0;
    int infeasible_starts = 0;
    std::string diagnostics;
};

SearchOutcome search_parameters(const SearchSpace& space);

struct ValidationReport {
    CircuitParams params;
    EffectivePotential potential;
    DerivedScales scales;
    ConstraintReport eigenstate;
    ConstraintReport dephasing;
    double t_gate_us = 0.0;
    std::optional<int> table_index;
    double published_t_gate_us = 0.0;
    double relative_error = 0.0;
    bool pass = false;
};

ValidationReport validate_parameter_set(const CircuitParams& params, std::optional<int> table_index = std::nullopt,
                                        const FitOptions& fit = {}, double alpha = 2.0, double zeta = 1.0,
                                        double threshold = 0.1);

}  // namespace gkpsim
