#include "risklab/ordering.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "risklab/errors.hpp"

namespace risklab {

namespace {

double stop_loss(const ProbMeasure& q, const Rv& x, double t) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += q[k] * std::max(x[k] - t, 0.0);
    return s;
}

void check_dims(const FiniteProbSpace& s, const ProbMeasure& q) {
    if (q.dim() != s.dim()) throw DimensionMismatch(s.dim(), q.dim());
}

std::vector<Rv> probes_for(const FiniteProbSpace& s, const OrderingOptions& opts) {
    if (!opts.probes.empty()) {
        for (const Rv& p : opts.probes)
            if (p.size() != s.dim()) throw DimensionMismatch(s.dim(), p.size());
        return opts.probes;
    }
    std::vector<Rv> out;
    for (std::size_t k = s.dim(); k-- > 0;) out.push_back(Rv::indicator(s.dim(), k, 4.0));
    return out;
}

Rv random_payoff(std::mt19937_64& rng, std::size_t d, double range) {
    std::uniform_real_distribution<double> u(-range, range);
    std::vector<double> v(d);
    for (double& c : v) c = u(rng);
    return Rv(std::move(v));
}

}  // namespace

DominanceVerdict icx_dominates(const ProbMeasure& q, const Rv& x, const Rv& y, double tol) {
    if (x.size() != q.dim()) throw DimensionMismatch(q.dim(), x.size());
    if (y.size() != q.dim()) throw DimensionMismatch(q.dim(), y.size());
    std::vector<double> ts(x.vec().begin(), x.vec().end());
    ts.insert(ts.end(), y.vec().begin(), y.vec().end());
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    ts.insert(ts.begin(), ts.front() - 1.0);
    for (double t : ts)
        if (stop_loss(q, x, t) > stop_loss(q, y, t) + tol) return {false, t};
    return {true, std::nullopt};
}

DilatationReport dilatation_monotone_check(const RiskFunctional& rho, const FiniteProbSpace& s, const ProbMeasure& q,
                                           const OrderingOptions& opts) {
    check_dims(s, q);
    if (s.dim() > 6) throw std::invalid_argument("dilatation_monotone_check: d must be <= 6");
    const auto partitions = all_partitions(s.dim());
    DilatationReport r;
    auto test = [&](const Rv& x) {
        const double original = rho(x);
        for (const PartitionAlgebra& g : partitions) {
            const Rv cx = conditional_expectation(s, q, x, g);
            const double conditioned = rho(cx);
            ++r.checks;
            if (conditioned > original + opts.tol) {
                r.passed = false;
                r.counterexample = DilatationCounterexample{x, g, conditioned, original};
                return false;
            }
        }
        return true;
    };
    for (const Rv& p : probes_for(s, opts))
        if (!test(p)) return r;
    std::mt19937_64 rng(opts.seed);
    for (std::size_t i = 0; i < opts.samples; ++i)
        if (!test(random_payoff(rng, s.dim(), opts.payoff_range))) return r;
    return r;
}

DilatationReport dilatation_monotone_check(const RiskMeasureSpec& spec, const FiniteProbSpace& s,
                                           const ProbMeasure& q, const OrderingOptions& opts) {
    return dilatation_monotone_check(bind(spec, s), s, q, opts);
}

ConsistencyReport consistency_spot_check(const RiskFunctional& rho, const FiniteProbSpace& s, const ProbMeasure& q,
                                         const OrderingOptions& opts) {
    check_dims(s, q);
    ConsistencyReport r;
    auto test = [&](const Rv& x, const Rv& y) {
        if (!icx_dominates(q, x, y).dominated) {
            ++r.skipped;
            return true;
        }
        ++r.checks;
        const double rx = rho(x), ry = rho(y);
        if (rx > ry + opts.tol) {
            r.passed = false;
            r.counterexample = ConsistencyCounterexample{x, y, rx, ry};
            return false;
        }
        return true;
    };
    const std::size_t d = s.dim();
    const PartitionAlgebra trivial = PartitionAlgebra::trivial(d);
    for (const Rv& y : probes_for(s, opts))
        if (!test(conditional_expectation(s, q, y, trivial), y)) return r;

    std::mt19937_64 rng(opts.seed);
    std::uniform_int_distribution<std::size_t> label(0, d - 1);
    std::uniform_real_distribution<double> shift(0.0, 1.0);
    for (std::size_t i = 0; i < opts.samples; ++i) {
        const Rv y = random_payoff(rng, d, opts.payoff_range);
        std::vector<std::vector<std::size_t>> by_label(d);
        for (std::size_t k = 0; k < d; ++k) by_label[label(rng)].push_back(k);
        std::vector<PartitionAlgebra::Block> blocks;
        for (auto& b : by_label)
            if (!b.empty()) blocks.push_back(std::move(b));
        const PartitionAlgebra g(d, std::move(blocks));
        // Half the pairs are pure contractions, half are also shifted down.
        const double c = (i % 2) ? shift(rng) : 0.0;
        if (!test(conditional_expectation(s, q, y, g) - Rv::constant(d, c), y)) return r;
    }
    return r;
}

ConsistencyReport consistency_spot_check(const RiskMeasureSpec& spec, const FiniteProbSpace& s,
                                         const ProbMeasure& q, const OrderingOptions& opts) {
    return consistency_spot_check(bind(spec, s), s, q, opts);
}

}  // namespace risklab
