#include "risklab/infconv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "risklab/errors.hpp"
#include "solver.hpp"

namespace risklab {

AgentPopulation::AgentPopulation(std::vector<Agent> agents, PopulationMode mode)
    : agents_(std::move(agents)), mode_(mode) {
    if (agents_.empty()) throw std::invalid_argument("AgentPopulation: need at least one agent");
    for (const auto& a : agents_) {
        if (!(a.weight > 0.0) || !std::isfinite(a.weight))
            throw std::invalid_argument("AgentPopulation: weights must be > 0");
        if (mode_ == PopulationMode::Unweighted && a.weight != 1.0)
            throw std::invalid_argument("AgentPopulation: unweighted populations have unit weights");
    }
}

AgentPopulation AgentPopulation::unweighted(std::vector<RiskMeasureSpec> specs) {
    std::vector<Agent> agents;
    for (auto& s : specs) agents.push_back({1.0, std::move(s)});
    return AgentPopulation(std::move(agents), PopulationMode::Unweighted);
}

AgentPopulation AgentPopulation::replicated(const RiskMeasureSpec& spec, std::size_t n) {
    if (n == 0) throw std::invalid_argument("AgentPopulation::replicated: n must be >= 1");
    return weighted(std::vector<Agent>(n, Agent{1.0 / static_cast<double>(n), spec}));
}

double AgentPopulation::total_weight() const {
    double w = 0.0;
    for (const auto& a : agents_) w += a.weight;
    return w;
}

double feasibility_error(const AgentPopulation& pop, const Rv& x, const std::vector<Rv>& allocation) {
    if (allocation.size() != pop.size()) throw std::invalid_argument("feasibility_error: wrong number of payoffs");
    Rv r = x;
    for (std::size_t i = 0; i < pop.size(); ++i) r -= allocation[i] * pop.weight(i);
    return r.norm_inf();
}

namespace {

std::vector<detail::Member> members_of(const AgentPopulation& pop, const FiniteProbSpace& s) {
    std::vector<detail::Member> m;
    for (const auto& a : pop.agents()) m.push_back({a.weight, bind(a.spec, s)});
    return m;
}

void check_x(const FiniteProbSpace& s, const Rv& x) {
    if (x.size() != s.dim()) throw DimensionMismatch(s.dim(), x.size());
}

AllocationResult finish(detail::Outcome o, std::string method, const AgentPopulation& pop,
                        const FiniteProbSpace& s, const Rv& x, const SolverOptions& opts) {
    AllocationResult r;
    r.value = o.unbounded ? ExtReal::minus_inf() : ExtReal(o.value);
    r.meta = {std::move(method), o.evaluations, o.restarts, opts.seed};
    double mag = 1.0;
    for (std::size_t i = 0; i < pop.size(); ++i) mag = std::max(mag, pop.weight(i) * o.allocation[i].norm_inf());
    const double err = feasibility_error(pop, x, o.allocation);
    if (err > 1e-9 * mag)
        throw InvariantViolation("allocation violates the aggregate constraint by " + std::to_string(err));
    r.allocation = std::move(o.allocation);
    if (opts.dual_tables) {
        r.dual_bound = dual_lower_bound(pop, s, x, *opts.dual_tables);
        if (r.value.finite() && r.dual_bound->finite()) r.gap = r.value.value() - r.dual_bound->value();
    }
    return r;
}

bool exact_fits(std::size_t n, const FiniteProbSpace& s) { return n <= 3 && s.dim() <= 4; }

// solve() only dispatches to the lattice search when one lattice pass is cheap.
bool exact_cheap(std::size_t n, const FiniteProbSpace& s, const SolverOptions& opts) {
    if (!exact_fits(n, s)) return false;
    const double side = 2.0 * static_cast<double>(opts.grid_half_width) + 1.0;
    return std::pow(side, static_cast<double>((s.dim() - 1) * (n - 1))) <= 1e5;
}

}  // namespace

AllocationResult solve_exact(const AgentPopulation& pop, const FiniteProbSpace& s, const Rv& x,
                             const SolverOptions& opts) {
    check_x(s, x);
    detail::Convolution conv(members_of(pop, s), s, opts);
    return finish(conv.exact(x), "exact", pop, s, x, opts);
}

AllocationResult solve_heuristic(const AgentPopulation& pop, const FiniteProbSpace& s, const Rv& x,
                                 const SolverOptions& opts) {
    check_x(s, x);
    detail::Convolution conv(members_of(pop, s), s, opts);
    return finish(conv.heuristic(x), "heuristic", pop, s, x, opts);
}

AllocationResult solve(const AgentPopulation& pop, const FiniteProbSpace& s, const Rv& x, const SolverOptions& opts) {
    return exact_cheap(pop.size(), s, opts) ? solve_exact(pop, s, x, opts) : solve_heuristic(pop, s, x, opts);
}

RiskFunctional value_function(const AgentPopulation& pop, const FiniteProbSpace& s, SolverOptions opts, bool exact) {
    opts.dual_tables.reset();
    opts.warm_starts.clear();
    return [pop, s, opts, exact](const Rv& x) {
        const AllocationResult r = exact ? solve_exact(pop, s, x, opts) : solve_heuristic(pop, s, x, opts);
        return r.value.as_double();
    };
}

std::vector<ConjugateTable> agent_tables(const AgentPopulation& pop, const FiniteProbSpace& s,
                                         std::size_t denominator, const ConjOptions& opts) {
    std::map<std::string, std::size_t> seen;
    std::vector<ConjugateTable> tables;
    for (const auto& a : pop.agents()) {
        const std::string key = a.spec.describe();
        if (auto it = seen.find(key); it != seen.end()) {
            tables.push_back(tables[it->second]);
            continue;
        }
        seen.emplace(key, tables.size());
        tables.push_back(conj_table(a.spec, s, denominator, opts));
    }
    return tables;
}

ExtReal dual_lower_bound(const AgentPopulation& pop, const FiniteProbSpace& s, const Rv& x,
                         const std::vector<ConjugateTable>& tables) {
    check_x(s, x);
    if (tables.size() != pop.size()) throw std::invalid_argument("dual_lower_bound: need one table per agent");
    const auto& grid = tables.front().grid;
    for (const auto& t : tables)
        if (t.grid != grid) throw std::invalid_argument("dual_lower_bound: conjugate tables use different grids");
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double penalty = 0.0;
        bool finite = true;
        for (std::size_t i = 0; i < pop.size() && finite; ++i) {
            if (tables[i].values[g].diverged) finite = false;
            else penalty += pop.weight(i) * tables[i].values[g].value;
        }
        if (finite) best = std::max(best, expectation(grid[g], x) - penalty);
    }
    if (std::isinf(best)) return ExtReal::minus_inf();
    return best;
}

ImpropernessVerdict improperness_probe(const AgentPopulation& pop, const FiniteProbSpace& s, const ProbeOptions& opts,
                                       std::optional<Rv> x) {
    if (pop.size() < 2) throw std::invalid_argument("improperness_probe: need at least two agents");
    if (opts.steps < 2) throw std::invalid_argument("improperness_probe: need at least two scales");
    const std::size_t d = s.dim();
    const Rv agg = x ? *x : Rv::zero(d);
    check_x(s, agg);
    std::vector<RiskFunctional> rho;
    for (const auto& a : pop.agents()) rho.push_back(bind(a.spec, s));
    const Rv base = agg / pop.total_weight();

    // Directions 1_A - 1_B over disjoint nonempty A, B, fewest atoms first.
    std::vector<Rv> directions;
    std::size_t states = 1;
    for (std::size_t k = 0; k < d; ++k) states *= 3;
    for (std::size_t code = 0; code < states; ++code) {
        Rv dir = Rv::zero(d);
        bool plus = false, minus = false;
        for (std::size_t k = 0, c = code; k < d; ++k, c /= 3) {
            if (c % 3 == 1) dir[k] = 1.0, plus = true;
            if (c % 3 == 2) dir[k] = -1.0, minus = true;
        }
        if (plus && minus) directions.push_back(std::move(dir));
    }
    const auto support = [](const Rv& r) {
        return std::count_if(r.vec().begin(), r.vec().end(), [](double c) { return c != 0.0; });
    };
    std::stable_sort(directions.begin(), directions.end(),
                     [&](const Rv& a, const Rv& b) { return support(a) < support(b); });

    ImpropernessVerdict v;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        for (std::size_t j = i + 1; j < pop.size(); ++j) {
            for (const Rv& dir : directions) {
                std::vector<ProbeStep> steps;
                bool decreasing = true;
                double scale = 1.0;
                for (std::size_t t = 0; t < opts.steps && decreasing; ++t, scale *= 10.0) {
                    std::vector<Rv> alloc(pop.size(), base);
                    alloc[i] += dir * (scale / pop.weight(i));
                    alloc[j] -= dir * (scale / pop.weight(j));
                    double obj = 0.0;
                    for (std::size_t a = 0; a < pop.size(); ++a) obj += pop.weight(a) * rho[a](alloc[a]);
                    if (!steps.empty() && !(obj < steps.back().objective)) decreasing = false;
                    steps.push_back({scale, obj, std::move(alloc)});
                }
                if (decreasing && steps.back().objective < -opts.threshold) {
                    v.kind = ImpropernessVerdict::Kind::MinusInf;
                    v.agent_i = i;
                    v.agent_j = j;
                    v.direction = dir;
                    v.witness = std::move(steps);
                    return v;
                }
            }
        }
    }
    return v;
}

AllocationResult group_convolve(const AgentPopulation& pop, const std::vector<std::vector<std::size_t>>& groups,
                                const FiniteProbSpace& s, const Rv& x, const SolverOptions& opts) {
    check_x(s, x);
    std::vector<int> owner(pop.size(), -1);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty()) throw std::invalid_argument("group_convolve: empty group");
        for (std::size_t i : groups[g]) {
            if (i >= pop.size()) throw std::invalid_argument("group_convolve: agent index out of range");
            if (owner[i] != -1) throw std::invalid_argument("group_convolve: groups overlap");
            owner[i] = static_cast<int>(g);
        }
    }
    if (std::find(owner.begin(), owner.end(), -1) != owner.end())
        throw std::invalid_argument("group_convolve: groups do not cover the population");
    if (groups.size() == 1 || groups.size() == pop.size()) return solve(pop, s, x, opts);

    const bool weighted = pop.mode() == PopulationMode::Weighted;
    SolverOptions inner_opts = opts;
    inner_opts.dual_tables.reset();
    inner_opts.warm_starts.clear();
    inner_opts.restarts = 0;

    std::vector<AgentPopulation> subs;
    std::vector<detail::Member> members;
    for (const auto& g : groups) {
        double wg = 0.0;
        for (std::size_t i : g) wg += pop.weight(i);
        std::vector<Agent> agents;
        for (std::size_t i : g) agents.push_back({weighted ? pop.weight(i) / wg : 1.0, pop.agent(i).spec});
        subs.emplace_back(std::move(agents), pop.mode());
        const AgentPopulation& sub = subs.back();
        const double member_weight = weighted ? wg : 1.0;
        if (g.size() == 1) {
            members.push_back({member_weight, bind(pop.agent(g.front()).spec, s)});
            continue;
        }
        auto memo = std::make_shared<std::map<std::vector<double>, double>>();
        members.push_back({member_weight, [sub, s, inner_opts, memo](const Rv& y) {
                               if (auto it = memo->find(y.vec()); it != memo->end()) return it->second;
                               const double v = solve_heuristic(sub, s, y, inner_opts).value.as_double();
                               memo->emplace(y.vec(), v);
                               return v;
                           }});
    }

    SolverOptions outer_opts = opts;
    outer_opts.warm_starts.clear();
    detail::Convolution outer(members, s, outer_opts);
    detail::Outcome o = outer.heuristic(x);

    // Expand each group's share into per-agent payoffs.
    detail::Outcome flat;
    flat.allocation.assign(pop.size(), Rv::zero(s.dim()));
    flat.evaluations = o.evaluations;
    flat.restarts = o.restarts;
    flat.unbounded = o.unbounded;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].size() == 1) {
            flat.allocation[groups[g].front()] = o.allocation[g];
            continue;
        }
        const AllocationResult inner = solve_heuristic(subs[g], s, o.allocation[g], inner_opts);
        flat.unbounded = flat.unbounded || inner.value.is_minus_inf();
        for (std::size_t k = 0; k < groups[g].size(); ++k) flat.allocation[groups[g][k]] = inner.allocation[k];
    }
    double total = 0.0;
    for (std::size_t i = 0; i < pop.size(); ++i) total += pop.weight(i) * evaluate(pop.agent(i).spec, s, flat.allocation[i]);
    flat.value = total;
    return finish(std::move(flat), "group", pop, s, x, opts);
}

ConditionalReduction conditional_reduction(const AgentPopulation& pop, const FiniteProbSpace& s,
                                           const PartitionAlgebra& g, const ProbMeasure& q, const Rv& x,
                                           const SolverOptions& opts) {
    check_x(s, x);
    if (g.dim() != s.dim()) throw DimensionMismatch(s.dim(), g.dim());
    if (q.dim() != s.dim()) throw DimensionMismatch(s.dim(), q.dim());
    if (!g.measurable(x, 1e-12)) throw std::invalid_argument("conditional_reduction: X is not G-measurable");
    for (const auto& block : g.blocks()) {
        double mass = 0.0;
        for (std::size_t atom : block) mass += q[atom];
        if (!(mass > 0.0)) throw std::invalid_argument("conditional_reduction: Q does not charge every block");
    }
    ConditionalReduction out;
    SolverOptions restricted = opts;
    restricted.measurable = g;
    out.measurable = solve(pop, s, x, restricted);

    SolverOptions free = opts;
    free.measurable.reset();
    free.warm_starts.push_back(out.measurable.allocation);
    out.all = solve(pop, s, x, free);
    out.value_all = out.all.value.as_double();
    out.value_measurable = out.measurable.value.as_double();
    return out;
}

}  // namespace risklab
