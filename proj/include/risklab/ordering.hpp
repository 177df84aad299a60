#pragma once

// Increasing-convex order, consistency and dilatation monotonicity on finite spaces.

#include <cstdint>
#include <optional>
#include <vector>

#include "risklab/probspace.hpp"
#include "risklab/riskmeasures.hpp"

namespace risklab {

struct DominanceVerdict {
    bool dominated = false;
    /// Set iff not dominated: a threshold t with E(X - t)+ > E(Y - t)+.
    std::optional<double> failing_threshold;
};

/// Stop-loss test of X <=_icx Y under Q at every value of X and Y and at min - 1.
DominanceVerdict icx_dominates(const ProbMeasure& q, const Rv& x, const Rv& y, double tol = 1e-12);

struct OrderingOptions {
    std::size_t samples = 1000;
    std::uint64_t seed = 1;
    double payoff_range = 10.0;
    double tol = 1e-9;
    /// Payoffs checked before the random ones. Empty uses 4 * indicator of each atom.
    std::vector<Rv> probes;
};

struct DilatationCounterexample {
    Rv x;
    PartitionAlgebra g;
    double conditioned;  // rho(E^Q(X|G))
    double original;     // rho(X)
};

struct DilatationReport {
    bool passed = true;
    std::size_t checks = 0;
    std::optional<DilatationCounterexample> counterexample;
};

/// rho(E^Q(X|G)) <= rho(X) + tol over probes then seeded X, for every partition G
/// (coarsest first). Stops at the first counterexample. Requires d <= 6.
DilatationReport dilatation_monotone_check(const RiskFunctional& rho, const FiniteProbSpace& s, const ProbMeasure& q,
                                           const OrderingOptions& opts = {});
DilatationReport dilatation_monotone_check(const RiskMeasureSpec& spec, const FiniteProbSpace& s,
                                           const ProbMeasure& q, const OrderingOptions& opts = {});

struct ConsistencyCounterexample {
    Rv x;
    Rv y;
    double rho_x;
    double rho_y;
};

struct ConsistencyReport {
    bool passed = true;
    std::size_t checks = 0;
    /// Generated pairs that failed the dominance test and were skipped.
    std::size_t skipped = 0;
    std::optional<ConsistencyCounterexample> counterexample;
};

/// rho(X) <= rho(Y) + tol for pairs X <=_icx Y under Q. Pairs are
/// X = E^Q(Y|G) - c with c >= 0, for probe and seeded Y and random G.
ConsistencyReport consistency_spot_check(const RiskFunctional& rho, const FiniteProbSpace& s, const ProbMeasure& q,
                                         const OrderingOptions& opts = {});
ConsistencyReport consistency_spot_check(const RiskMeasureSpec& spec, const FiniteProbSpace& s,
                                         const ProbMeasure& q, const OrderingOptions& opts = {});

}  // namespace risklab
