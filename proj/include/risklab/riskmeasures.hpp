#pragma once

// Catalog of monetary risk measures on finite spaces, convex and non-convex.
//
// Sign convention: positive payoff values are losses, and a risk measure is
// monotone (X <= Y implies rho(X) <= rho(Y)) and cash additive
// (rho(X + c) = rho(X) + c).

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "risklab/probspace.hpp"

namespace risklab {

/// Piecewise-linear distortion h: [0,1] -> [0,1] with h(0) = 0, h(1) = 1, nondecreasing.
class Distortion {
public:
    struct Point {
        double t;
        double h;
        friend bool operator==(const Point&, const Point&) = default;
    };

    explicit Distortion(std::vector<Point> breakpoints);

    /// h(x) = (x - a)^+ / (1 - a). With a = 1/2 this is 2(x - 1/2)^+.
    static Distortion threshold(double a);
    static Distortion identity() { return Distortion({{0.0, 0.0}, {1.0, 1.0}}); }

    double operator()(double t) const;
    const std::vector<Point>& breakpoints() const { return points_; }

    friend bool operator==(const Distortion&, const Distortion&) = default;

private:
    std::vector<Point> points_;
};

class RiskMeasureSpec;
using SpecPtr = std::shared_ptr<const RiskMeasureSpec>;

/// Immutable tagged description of one risk measure.
class RiskMeasureSpec {
public:
    struct VaR { double beta; };
    struct ES { double beta; };
    struct Entropic { double theta; };
    struct Choquet { Distortion h; };
    struct EssSup {};
    /// Expectation under q; the reference measure when q is empty.
    struct ExpectationUnder { std::optional<ProbMeasure> q; };
    struct MinOf { SpecPtr left, right; };
    /// gamma * inner(X / gamma).
    struct Scaled { double gamma; SpecPtr inner; };
    /// inner(X) + shift.
    struct Shifted { double shift; SpecPtr inner; };

    using Variant = std::variant<VaR, ES, Entropic, Choquet, EssSup, ExpectationUnder, MinOf, Scaled, Shifted>;

    explicit RiskMeasureSpec(Variant v) : v_(std::move(v)) {}

    static RiskMeasureSpec var(double beta) { return RiskMeasureSpec(VaR{beta}); }
    static RiskMeasureSpec es(double beta) { return RiskMeasureSpec(ES{beta}); }
    static RiskMeasureSpec entropic(double theta) { return RiskMeasureSpec(Entropic{theta}); }
    static RiskMeasureSpec choquet(Distortion h) { return RiskMeasureSpec(Choquet{std::move(h)}); }
    static RiskMeasureSpec ess_sup() { return RiskMeasureSpec(EssSup{}); }
    static RiskMeasureSpec expectation() { return RiskMeasureSpec(ExpectationUnder{std::nullopt}); }
    static RiskMeasureSpec expectation(ProbMeasure q) { return RiskMeasureSpec(ExpectationUnder{std::move(q)}); }
    static RiskMeasureSpec min_of(RiskMeasureSpec a, RiskMeasureSpec b);
    static RiskMeasureSpec scaled(double gamma, RiskMeasureSpec inner);
    static RiskMeasureSpec shifted(double shift, RiskMeasureSpec inner);

    const Variant& variant() const { return v_; }
    template <class T>
    bool is() const { return std::holds_alternative<T>(v_); }

    /// Nesting depth of MinOf/Scaled/Shifted wrappers; a leaf has depth 1.
    std::size_t depth() const;
    /// Compact human-readable form, e.g. "min(esssup,shift(1,expectation))".
    std::string describe() const;

private:
    Variant v_;
};

inline constexpr std::size_t kDefaultMaxSpecDepth = 16;

/// Throws std::invalid_argument for out-of-range parameters or depth, and
/// DimensionMismatch if an embedded measure does not live on s.
void validate(const RiskMeasureSpec& spec, const FiniteProbSpace& s, std::size_t max_depth = kDefaultMaxSpecDepth);

double value_at_risk(const FiniteProbSpace& s, const Rv& x, double beta);
double expected_shortfall(const FiniteProbSpace& s, const Rv& x, double beta);
double entropic_risk(const FiniteProbSpace& s, const Rv& x, double theta);
double choquet_integral(const FiniteProbSpace& s, const Rv& x, const Distortion& h);
double ess_sup(const FiniteProbSpace& s, const Rv& x);

/// rho(X) for the given spec.
double evaluate(const RiskMeasureSpec& spec, const FiniteProbSpace& s, const Rv& x);

/// A risk measure as a plain callable. Used wherever the spec catalog is not
/// enough (value functions of sub-populations, falsification fixtures).
using RiskFunctional = std::function<double(const Rv&)>;

/// Validates once, then returns a callable that evaluates the spec on s.
RiskFunctional bind(const RiskMeasureSpec& spec, const FiniteProbSpace& s);

/// X lies in the acceptance set {rho <= 0}, up to tol.
bool acceptance_membership(const RiskMeasureSpec& spec, const FiniteProbSpace& s, const Rv& x, double tol = 0.0);

struct AxiomWitness {
    std::string property;  // "monotonicity" or "cash-additivity"
    Rv x;
    Rv y;
    double c = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct AxiomReport {
    bool passed = true;
    std::size_t checks = 0;
    /// First few failures, in the order found.
    std::vector<AxiomWitness> failures;
};

struct AxiomOptions {
    std::size_t samples = 1000;
    std::uint64_t seed = 1;
    double monotonicity_tol = 1e-12;
    double cash_tol = 1e-9;
    double payoff_range = 10.0;
    std::size_t max_failures = 5;
};

/// Property check of monotonicity and cash additivity on seeded random payoffs.
AxiomReport check_axioms(const RiskFunctional& rho, const FiniteProbSpace& s, const AxiomOptions& opts);
AxiomReport check_axioms(const RiskMeasureSpec& spec, const FiniteProbSpace& s, const AxiomOptions& opts);

}  // namespace risklab
