#pragma once

// Weighted infimal convolution of risk measures over a finite population:
//
//   value(X) = inf { sum_i w_i rho_i(X_i) : sum_i w_i X_i = X }
//
// (all w_i = 1 in unweighted mode), together with dual lower bounds, an
// improperness probe, and the group / sub-algebra reductions.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "risklab/conjugate.hpp"
#include "risklab/extended.hpp"
#include "risklab/population.hpp"
#include "risklab/probspace.hpp"
#include "risklab/riskmeasures.hpp"

namespace risklab {

struct SolverOptions {
    /// Randomised restarts of the heuristic (in addition to structured starts).
    std::size_t restarts = 4;
    std::uint64_t seed = 1;
    /// Pattern search stops once the step falls below scale * min_step_ratio.
    double min_step_ratio = 1e-11;
    std::size_t max_evaluations = 500'000'000;
    /// Exact solver: lattice points per side per free coordinate.
    std::size_t grid_half_width = 4;
    std::size_t max_grid_points = 2'000'000;
    /// Exact solver: initial lattice radius; 0 picks max(1, |X|_inf).
    double radius = 0.0;
    std::size_t max_radius_doublings = 3;
    /// Relative improvement below which radius escalation stops.
    double radius_tol = 1e-9;
    /// Objective values below -threshold * max(1, |X|_inf) are reported as -inf.
    double unbounded_threshold = 1e6;
    /// Restrict allocations to payoffs measurable w.r.t. this partition.
    std::optional<PartitionAlgebra> measurable;
    /// Extra starting allocations (must be feasible for the same X).
    std::vector<std::vector<Rv>> warm_starts;
    /// Per-agent conjugate tables on one shared grid; enables dual_bound and gap.
    std::shared_ptr<const std::vector<ConjugateTable>> dual_tables;
};

struct SolverMeta {
    std::string method;
    std::size_t evaluations = 0;
    std::size_t restarts = 0;
    std::uint64_t seed = 0;
};

struct AllocationResult {
    ExtReal value;
    std::vector<Rv> allocation;
    std::optional<ExtReal> dual_bound;
    /// value - dual_bound when both are finite.
    std::optional<double> gap;
    SolverMeta meta;
};

/// Exhaustive lattice search over agents 0..n-2 (the last agent takes the
/// residual), with radius escalation and a local polish. Requires n <= 3 and
/// d <= 4; throws BudgetExceeded otherwise.
AllocationResult solve_exact(const AgentPopulation& pop, const FiniteProbSpace& s, const Rv& x,
                             const SolverOptions& opts = {});

/// Pairwise block-coordinate descent from structured and random starts.
AllocationResult solve_heuristic(const AgentPopulation& pop, const FiniteProbSpace& s, const Rv& x,
                                 const SolverOptions& opts = {});

/// solve_exact where its budget allows, solve_heuristic otherwise.
AllocationResult solve(const AgentPopulation& pop, const FiniteProbSpace& s, const Rv& x,
                       const SolverOptions& opts = {});

/// The value function X -> value(X) as a callable (heuristic solver unless exact is requested).
RiskFunctional value_function(const AgentPopulation& pop, const FiniteProbSpace& s, SolverOptions opts = {},
                              bool exact = false);

/// max over the shared grid of E^Q X - sum_i w_i rho_i*(Q), skipping measures
/// where any agent's conjugate diverges; -inf if none survives.
ExtReal dual_lower_bound(const AgentPopulation& pop, const FiniteProbSpace& s, const Rv& x,
                         const std::vector<ConjugateTable>& tables);

/// One conjugate table per agent, all on the same simplex grid.
std::vector<ConjugateTable> agent_tables(const AgentPopulation& pop, const FiniteProbSpace& s,
                                         std::size_t denominator, const ConjOptions& opts = {});

struct ProbeStep {
    double scale = 0.0;
    double objective = 0.0;
    std::vector<Rv> allocation;
};

/// Outcome of the improperness search. FiniteSoFar is not a proof of finiteness.
struct ImpropernessVerdict {
    enum class Kind { FiniteSoFar, MinusInf };
    Kind kind = Kind::FiniteSoFar;
    /// The transfer that escaped: agents (i, j) along 1_A - 1_B.
    std::size_t agent_i = 0, agent_j = 0;
    Rv direction;
    std::vector<ProbeStep> witness;
    bool minus_inf() const { return kind == Kind::MinusInf; }
};

struct ProbeOptions {
    /// Scales K = 10^0, ..., 10^(steps-1).
    std::size_t steps = 7;
    double threshold = 1e6;
};

/// Searches zero-sum transfers K * (1_A - 1_B), A and B disjoint, between pairs of agents around
/// the proportional split of x (default 0).
ImpropernessVerdict improperness_probe(const AgentPopulation& pop, const FiniteProbSpace& s,
                                       const ProbeOptions& opts = {}, std::optional<Rv> x = std::nullopt);

/// Convolution computed group-by-group: each group's value function is itself
/// a risk measure, and the groups are then convolved with each other.
AllocationResult group_convolve(const AgentPopulation& pop, const std::vector<std::vector<std::size_t>>& groups,
                                const FiniteProbSpace& s, const Rv& x, const SolverOptions& opts = {});

struct ConditionalReduction {
    AllocationResult all;         // unrestricted allocations
    AllocationResult measurable;  // allocations constant on the blocks of G
    double value_all = 0.0;
    double value_measurable = 0.0;
};

/// Compares the value over all allocations with the value over G-measurable
/// allocations, for a G-measurable aggregate x. q must charge every block of g.
ConditionalReduction conditional_reduction(const AgentPopulation& pop, const FiniteProbSpace& s,
                                           const PartitionAlgebra& g, const ProbMeasure& q, const Rv& x,
                                           const SolverOptions& opts = {});

/// Largest deviation of sum_i w_i X_i from x (sup-norm).
double feasibility_error(const AgentPopulation& pop, const Rv& x, const std::vector<Rv>& allocation);

}  // namespace risklab
