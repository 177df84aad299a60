#pragma once

// How replication convexifies the value function: convexity violation along a
// segment, duality gap to the biconjugate, and nonconvexity of averaged
// Minkowski sums.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "risklab/conjugate.hpp"
#include "risklab/infconv.hpp"
#include "risklab/probspace.hpp"
#include "risklab/riskmeasures.hpp"

namespace risklab {

struct ReplicationExperiment {
    RiskMeasureSpec base;
    std::vector<std::size_t> n_list;
    /// The segment lambda * x + (1 - lambda) * y.
    Rv x;
    Rv y;
    std::vector<double> lambda_grid;
};

/// Validates n_list (strictly increasing, >= 1) and lambda_grid (in [0,1], contains 0, 0.5, 1).
void validate(const ReplicationExperiment& exp, const FiniteProbSpace& s);

/// Lambda grid k / m for k = 0..m; m must be even so that 0.5 is included.
std::vector<double> uniform_lambda_grid(std::size_t m);

/// Value of n copies of spec with weights 1/n. n = 1 evaluates the spec directly.
AllocationResult replicated_solve(const RiskMeasureSpec& spec, const FiniteProbSpace& s, std::size_t n, const Rv& x,
                                  const SolverOptions& opts = {});
double replicated_value(const RiskMeasureSpec& spec, const FiniteProbSpace& s, std::size_t n, const Rv& x,
                        const SolverOptions& opts = {});

/// max over lambda of v(lambda) - [lambda v(1) + (1 - lambda) v(0)], floored at 0.
/// values[k] is the value at lambdas[k]; lambdas must contain 0 and 1.
/// Throws std::invalid_argument on non-finite values (e.g. an improper value function).
double convexity_violation(std::span<const double> values, std::span<const double> lambdas);

struct ReplicationPoint {
    std::size_t n = 0;
    double violation = 0.0;
    /// max over the segment of value - biconjugate; empty if the biconjugate is -inf.
    std::optional<double> gap;
    std::vector<double> values;
};

struct DecayReport {
    std::vector<ReplicationPoint> per_n;
    /// Least-squares slope of log(violation) against log(n); empty when saturated.
    std::optional<double> fitted_slope;
    bool saturated() const { return !fitted_slope.has_value(); }
};

/// Slope of log(violation) vs log(n) over the points with violation > tol.
/// Returns empty (saturated) when fewer than two such points exist or the n = 1 violation is <= tol.
std::optional<double> decay_slope(std::span<const std::size_t> ns, std::span<const double> violations,
                                  double tol = 1e-9);

struct ReplicationOptions {
    SolverOptions solver{};
    ConjOptions conj{};
    std::size_t simplex_denominator = 0;  // 0 -> default for d
    double saturation_tol = 1e-9;
};

/// Runs the whole experiment. Allocations found for n seed the solves for
/// multiples of n, so nested replication never reports a worse value.
DecayReport run_replication(const ReplicationExperiment& exp, const FiniteProbSpace& s,
                            const ReplicationOptions& opts = {});

/// Fits a report from precomputed violations and gaps.
DecayReport decay_fit(std::span<const std::size_t> ns, std::span<const double> violations,
                      std::span<const std::optional<double>> gaps, double tol = 1e-9);

/// Grid points of [-box, box]^d (spacing `step`) accepted by rho.
std::vector<Rv> acceptance_cloud(const RiskFunctional& rho, const FiniteProbSpace& s, double box, double step);

/// (1/n)(A + ... + A), keeping one point per cell of side `resolution`.
std::vector<Rv> minkowski_average(const std::vector<Rv>& cloud, std::size_t n, double resolution = 1e-9);

struct NonconvexityOptions {
    double resolution = 1e-9;
    /// Use every pair of points when there are at most this many pairs, else a seeded sample.
    std::size_t max_pairs = 2'000'000;
    std::uint64_t seed = 1;
};

/// Largest sup-norm distance from the midpoint of two points of the n-fold
/// Minkowski average to that average.
double minkowski_nonconvexity(const std::vector<Rv>& cloud, std::size_t n, const NonconvexityOptions& opts = {});

/// Sup-norm distance from x to the nearest point of cloud.
double distance_to_cloud(const std::vector<Rv>& cloud, const Rv& x);

}  // namespace risklab
