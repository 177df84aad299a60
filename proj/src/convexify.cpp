#include "risklab/convexify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include "risklab/errors.hpp"

namespace risklab {

void validate(const ReplicationExperiment& exp, const FiniteProbSpace& s) {
    validate(exp.base, s);
    if (exp.x.size() != s.dim()) throw DimensionMismatch(s.dim(), exp.x.size());
    if (exp.y.size() != s.dim()) throw DimensionMismatch(s.dim(), exp.y.size());
    if (exp.n_list.empty()) throw std::invalid_argument("replication: empty n list");
    for (std::size_t i = 0; i < exp.n_list.size(); ++i) {
        if (exp.n_list[i] == 0) throw std::invalid_argument("replication: n must be >= 1");
        if (i && exp.n_list[i] <= exp.n_list[i - 1])
            throw std::invalid_argument("replication: n list must be strictly increasing");
    }
    for (double l : exp.lambda_grid)
        if (!(l >= 0.0 && l <= 1.0)) throw std::invalid_argument("replication: lambda outside [0, 1]");
    for (double must : {0.0, 0.5, 1.0})
        if (std::find(exp.lambda_grid.begin(), exp.lambda_grid.end(), must) == exp.lambda_grid.end())
            throw std::invalid_argument("replication: lambda grid must contain 0, 0.5 and 1");
}

std::vector<double> uniform_lambda_grid(std::size_t m) {
    if (m == 0 || m % 2) throw std::invalid_argument("uniform_lambda_grid: m must be even and positive");
    std::vector<double> g(m + 1);
    for (std::size_t k = 0; k <= m; ++k) g[k] = static_cast<double>(k) / static_cast<double>(m);
    return g;
}

AllocationResult replicated_solve(const RiskMeasureSpec& spec, const FiniteProbSpace& s, std::size_t n, const Rv& x,
                                  const SolverOptions& opts) {
    if (n == 0) throw std::invalid_argument("replicated_value: n must be >= 1");
    if (n == 1) {
        AllocationResult r;
        r.value = evaluate(spec, s, x);
        r.allocation = {x};
        r.meta.method = "direct";
        r.meta.seed = opts.seed;
        return r;
    }
    return solve(AgentPopulation::replicated(spec, n), s, x, opts);
}

double replicated_value(const RiskMeasureSpec& spec, const FiniteProbSpace& s, std::size_t n, const Rv& x,
                        const SolverOptions& opts) {
    return replicated_solve(spec, s, n, x, opts).value.as_double();
}

double convexity_violation(std::span<const double> values, std::span<const double> lambdas) {
    if (values.size() != lambdas.size()) throw std::invalid_argument("convexity_violation: size mismatch");
    const auto at = [&](double l) {
        auto it = std::find(lambdas.begin(), lambdas.end(), l);
        if (it == lambdas.end()) throw std::invalid_argument("convexity_violation: lambda grid must contain 0 and 1");
        return values[static_cast<std::size_t>(it - lambdas.begin())];
    };
    for (double v : values)
        if (!std::isfinite(v))
            throw std::invalid_argument("convexity_violation: value function is not finite on the segment");
    const double v1 = at(1.0), v0 = at(0.0);
    double worst = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k)
        worst = std::max(worst, values[k] - (lambdas[k] * v1 + (1.0 - lambdas[k]) * v0));
    return worst;
}

std::optional<double> decay_slope(std::span<const std::size_t> ns, std::span<const double> violations, double tol) {
    if (ns.size() != violations.size()) throw std::invalid_argument("decay_slope: size mismatch");
    if (ns.empty() || violations.front() <= tol) return std::nullopt;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        if (violations[i] <= tol) continue;
        lx.push_back(std::log(static_cast<double>(ns[i])));
        ly.push_back(std::log(violations[i]));
    }
    if (lx.size() < 2) return std::nullopt;
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (sxx == 0.0) return std::nullopt;
    return sxy / sxx;
}

DecayReport decay_fit(std::span<const std::size_t> ns, std::span<const double> violations,
                      std::span<const std::optional<double>> gaps, double tol) {
    if (ns.size() < 3) throw std::invalid_argument("decay_fit: need at least three values of n");
    if (violations.size() != ns.size() || gaps.size() != ns.size())
        throw std::invalid_argument("decay_fit: size mismatch");
    DecayReport r;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        if (violations[i] < 0.0) throw std::invalid_argument("decay_fit: violations must be nonnegative");
        r.per_n.push_back({ns[i], violations[i], gaps[i], {}});
    }
    r.fitted_slope = decay_slope(ns, violations, tol);
    return r;
}

DecayReport run_replication(const ReplicationExperiment& exp, const FiniteProbSpace& s,
                            const ReplicationOptions& opts) {
    validate(exp, s);
    const std::size_t denom = opts.simplex_denominator ? opts.simplex_denominator : default_simplex_denominator(s.dim());
    const ConjugateTable floor_table = conj_table(exp.base, s, denom, opts.conj);

    std::vector<Rv> points;
    std::vector<ExtReal> floor;
    for (double l : exp.lambda_grid) {
        points.push_back(exp.x * l + exp.y * (1.0 - l));
        floor.push_back(biconj(floor_table, points.back()));
    }

    // allocations[n][k]: best allocation found for n copies at lambda_grid[k].
    std::map<std::size_t, std::vector<std::vector<Rv>>> allocations;
    std::vector<std::size_t> ns;
    std::vector<double> violations;
    std::vector<std::optional<double>> gaps;
    std::vector<std::vector<double>> all_values;
    for (std::size_t n : exp.n_list) {
        std::vector<double> values;
        std::vector<std::vector<Rv>> allocs;
        for (std::size_t k = 0; k < points.size(); ++k) {
            SolverOptions so = opts.solver;
            for (const auto& [m, prev] : allocations) {
                if (n % m != 0) continue;
                std::vector<Rv> warm;
                for (const Rv& a : prev[k])
                    for (std::size_t rep = 0; rep < n / m; ++rep) warm.push_back(a);
                so.warm_starts.push_back(std::move(warm));
            }
            AllocationResult r = replicated_solve(exp.base, s, n, points[k], so);
            values.push_back(r.value.as_double());
            allocs.push_back(std::move(r.allocation));
        }
        std::optional<double> gap;
        if (std::all_of(floor.begin(), floor.end(), [](const ExtReal& f) { return f.finite(); })) {
            double g = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < points.size(); ++k) g = std::max(g, values[k] - floor[k].value());
            gap = g;
        }
        ns.push_back(n);
        violations.push_back(convexity_violation(values, exp.lambda_grid));
        gaps.push_back(gap);
        all_values.push_back(values);
        allocations.emplace(n, std::move(allocs));
    }
    DecayReport r = decay_fit(ns, violations, gaps, opts.saturation_tol);
    for (std::size_t i = 0; i < r.per_n.size(); ++i) r.per_n[i].values = std::move(all_values[i]);
    return r;
}

std::vector<Rv> acceptance_cloud(const RiskFunctional& rho, const FiniteProbSpace& s, double box, double step) {
    if (!(box > 0.0) || !(step > 0.0)) throw std::invalid_argument("acceptance_cloud: box and step must be > 0");
    const std::size_t d = s.dim();
    const auto k = static_cast<std::size_t>(std::llround(2.0 * box / step)) + 1;
    std::vector<Rv> out;
    std::vector<std::size_t> idx(d, 0);
    for (;;) {
        Rv x = Rv::zero(d);
        for (std::size_t c = 0; c < d; ++c) x[c] = -box + static_cast<double>(idx[c]) * step;
        if (rho(x) <= 0.0) out.push_back(std::move(x));
        std::size_t c = 0;
        while (c < d && ++idx[c] == k) idx[c++] = 0;
        if (c == d) break;
    }
    return out;
}

namespace {

std::vector<long long> cell_of(const Rv& x, double resolution) {
    std::vector<long long> key(x.size());
    for (std::size_t c = 0; c < x.size(); ++c) key[c] = std::llround(x[c] / resolution);
    return key;
}

}  // namespace

std::vector<Rv> minkowski_average(const std::vector<Rv>& cloud, std::size_t n, double resolution) {
    if (cloud.empty()) throw std::invalid_argument("minkowski_average: empty cloud");
    if (n == 0) throw std::invalid_argument("minkowski_average: n must be >= 1");
    if (!(resolution > 0.0)) throw std::invalid_argument("minkowski_average: resolution must be > 0");
    // sums holds the k-fold sum set, pruned on the averaged scale.
    std::map<std::vector<long long>, Rv> sums;
    for (const Rv& a : cloud) sums.emplace(cell_of(a, resolution), a);
    for (std::size_t k = 2; k <= n; ++k) {
        std::map<std::vector<long long>, Rv> next;
        for (const auto& [key, sum] : sums)
            for (const Rv& a : cloud) {
                Rv t = sum + a;
                next.emplace(cell_of(t / static_cast<double>(k), resolution), std::move(t));
            }
        sums = std::move(next);
    }
    std::vector<Rv> out;
    out.reserve(sums.size());
    for (const auto& [key, sum] : sums) out.push_back(sum / static_cast<double>(n));
    return out;
}

double distance_to_cloud(const std::vector<Rv>& cloud, const Rv& x) {
    if (cloud.empty()) throw std::invalid_argument("distance_to_cloud: empty cloud");
    double best = std::numeric_limits<double>::infinity();
    for (const Rv& p : cloud) {
        double dist = 0.0;
        for (std::size_t c = 0; c < x.size() && dist < best; ++c) dist = std::max(dist, std::abs(p[c] - x[c]));
        best = std::min(best, dist);
    }
    return best;
}

namespace {

// Nearest-point queries in sup-norm over a cloud sorted by first coordinate:
// points whose first coordinate is further than the incumbent cannot win.
class SortedCloud {
public:
    explicit SortedCloud(std::vector<Rv> pts) : pts_(std::move(pts)) {
        std::sort(pts_.begin(), pts_.end(), [](const Rv& a, const Rv& b) { return a[0] < b[0]; });
    }

    double distance(const Rv& x) const {
        auto mid = std::lower_bound(pts_.begin(), pts_.end(), x[0], [](const Rv& p, double v) { return p[0] < v; });
        double best = std::numeric_limits<double>::infinity();
        auto scan = [&](const Rv& p) {
            double dist = 0.0;
            for (std::size_t c = 0; c < x.size() && dist < best; ++c) dist = std::max(dist, std::abs(p[c] - x[c]));
            best = std::min(best, dist);
        };
        for (auto it = mid; it != pts_.end() && (*it)[0] - x[0] < best; ++it) scan(*it);
        for (auto it = mid; it != pts_.begin();) {
            --it;
            if (x[0] - (*it)[0] >= best) break;
            scan(*it);
        }
        return best;
    }

private:
    std::vector<Rv> pts_;
};

}  // namespace

double minkowski_nonconvexity(const std::vector<Rv>& cloud, std::size_t n, const NonconvexityOptions& opts) {
    const std::vector<Rv> avg = minkowski_average(cloud, n, opts.resolution);
    const SortedCloud index(avg);
    const std::size_t m = avg.size();
    const double pairs = 0.5 * static_cast<double>(m) * static_cast<double>(m - 1);
    double worst = 0.0;
    auto midpoint = [&](std::size_t i, std::size_t j) { return (avg[i] + avg[j]) * 0.5; };
    if (pairs <= static_cast<double>(opts.max_pairs)) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j) worst = std::max(worst, index.distance(midpoint(i, j)));
    } else {
        std::mt19937_64 rng(opts.seed);
        std::uniform_int_distribution<std::size_t> pick(0, m - 1);
        for (std::size_t t = 0; t < opts.max_pairs; ++t) {
            const std::size_t i = pick(rng), j = pick(rng);
            if (i != j) worst = std::max(worst, index.distance(midpoint(i, j)));
        }
    }
    return worst;
}

}  // namespace risklab
