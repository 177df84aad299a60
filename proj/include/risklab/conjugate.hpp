#pragma once

// Fenchel conjugates of risk measures over the probability simplex:
//   rho*(Q) = sup_X ( E^Q X - rho(X) ).
// For probability Q the objective is invariant under X -> X + c, so the
// supremum is taken over payoffs in the box [0, M]^d with a zero coordinate.

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "risklab/extended.hpp"
#include "risklab/population.hpp"
#include "risklab/probspace.hpp"
#include "risklab/riskmeasures.hpp"

namespace risklab {

struct ConjOptions {
    /// Box sizes M, escalated in order. The payoff grid scales with M.
    std::vector<double> box_schedule{10.0, 100.0, 1000.0};
    /// Grid points per axis (payoff step = M / (points - 1)).
    std::size_t points_per_axis = 21;
    /// Upper bound on payoff grid size; points_per_axis is reduced to fit.
    std::size_t max_grid_points = 400000;
    /// A boxed supremum above this is DIVERGED outright.
    double divergence_threshold = 1e6;
    /// Increments below floor * M_last are rounding noise.
    double growth_floor = 1e-9;
    /// Polishing stops once the step falls below grid step * this ratio.
    double polish_step_ratio = 1.0 / (1 << 26);
    /// Polish the best grid point of every level (true) or only the overall best.
    bool polish_all_levels = true;
    std::size_t threads = 1;
};

struct ConjValue {
    bool diverged = false;
    /// Finite conjugate value; meaningful only when !diverged.
    double value = 0.0;
    /// Maximising payoff in the largest box.
    Rv witness;
    /// Grid suprema per box level, before polishing.
    std::vector<double> level_sups;

    ExtReal as_ext() const { return diverged ? ExtReal::plus_inf() : ExtReal(value); }
};

/// Regular simplex lattice {k / denominator}, with the vertices and the
/// reference measure of s always included (reference appended if off-lattice).
std::vector<ProbMeasure> simplex_grid(const FiniteProbSpace& s, std::size_t denominator);

/// Default lattice denominator: 20 for d <= 3, 10 for d = 4, 6 beyond.
std::size_t default_simplex_denominator(std::size_t d);

struct ConjugateTable {
    std::vector<ProbMeasure> grid;
    std::vector<ConjValue> values;
    double box_bound = 0.0;     // largest M in the schedule
    double payoff_step = 0.0;   // grid step at the first level
    double simplex_step = 0.0;  // 1 / denominator
};

/// Evaluates conjugates of one functional at many measures, reusing the
/// payoff-grid evaluations (they do not depend on Q).
class ConjugateEngine {
public:
    ConjugateEngine(RiskFunctional rho, FiniteProbSpace s, ConjOptions opts = {});
    ~ConjugateEngine();
    ConjugateEngine(ConjugateEngine&&) noexcept;
    ConjugateEngine& operator=(ConjugateEngine&&) noexcept;

    ConjValue at(const ProbMeasure& q);
    ConjugateTable table(std::size_t denominator);
    ConjugateTable table(const std::vector<ProbMeasure>& grid);

    const ConjOptions& options() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// rho*(Q) with box bound M and payoff step `step`, escalating M by 10 twice.
ConjValue conj(const RiskFunctional& rho, const FiniteProbSpace& s, const ProbMeasure& q, double M = 10.0,
               double step = 0.5);
ConjValue conj(const RiskMeasureSpec& spec, const FiniteProbSpace& s, const ProbMeasure& q, double M = 10.0,
               double step = 0.5);

ConjugateTable conj_table(const RiskFunctional& rho, const FiniteProbSpace& s, std::size_t denominator,
                          const ConjOptions& opts = {});
ConjugateTable conj_table(const RiskMeasureSpec& spec, const FiniteProbSpace& s, std::size_t denominator,
                          const ConjOptions& opts = {});

/// rho**(X) = sup over finite table entries of E^Q X - rho*(Q); -inf if none.
ExtReal biconj(const ConjugateTable& table, const Rv& x);

struct DegeneracyVerdict {
    bool degenerate = false;
    /// Budget ran out before a finite point was found; degenerate is false.
    bool inconclusive = false;
    std::optional<ProbMeasure> witness_q;
    std::optional<double> witness_value;
    /// Normalised payoff along which the objective at the reference measure grows.
    std::optional<Rv> escape_direction;
};

struct DegeneracyOptions {
    std::size_t denominator = 0;  // 0 -> default_simplex_denominator(d)
    ConjOptions conj{};
    std::size_t max_measures = 100000;
};

/// Degenerate iff every grid measure (reference first) has a divergent conjugate.
DegeneracyVerdict detect_degeneracy(const RiskFunctional& rho, const FiniteProbSpace& s,
                                    const DegeneracyOptions& opts = {});
DegeneracyVerdict detect_degeneracy(const RiskMeasureSpec& spec, const FiniteProbSpace& s,
                                    const DegeneracyOptions& opts = {});

/// The affine map X -> E^Q X - offset, a global lower bound on the value function.
struct AffineMinorant {
    ProbMeasure q;
    double offset = 0.0;
    double operator()(const Rv& x) const { return expectation(q, x) - offset; }
};

/// Checks rho_i*(Q) <= xi_i for every agent (numerically, with tolerance) and
/// returns the minorant with offset sum_i w_i xi_i. Throws CertificateInvalid otherwise.
AffineMinorant finiteness_certificate(const AgentPopulation& pop, const FiniteProbSpace& s, const ProbMeasure& q,
                                      const std::vector<double>& xi, const ConjOptions& opts = {},
                                      double tol = 1e-9);

}  // namespace risklab
