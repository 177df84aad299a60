#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>

#include "risklab/cli.hpp"
#include "risklab/errors.hpp"

namespace risklab::cli {

namespace {

using nlohmann::json;
using Row = std::vector<std::string>;

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string vec(std::span<const double> v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + num(v[i]);
    return s + "]";
}

std::string partition_str(const PartitionAlgebra& g) {
    std::string s = "{";
    for (std::size_t b = 0; b < g.num_blocks(); ++b) {
        s += b ? "|" : "";
        for (std::size_t i = 0; i < g.block(b).size(); ++i) s += (i ? " " : "") + std::to_string(g.block(b)[i]);
    }
    return s + "}";
}

std::string alloc_str(const std::vector<Rv>& a) {
    std::string s;
    for (std::size_t i = 0; i < a.size(); ++i) s += (i ? " " : "") + vec(a[i].values());
    return s;
}

std::string seed_str(const ExperimentConfig& c) { return c.seed ? std::to_string(*c.seed) : "none"; }

std::vector<Rv> payoffs(const ExperimentConfig& c) {
    std::vector<Rv> out = c.payoffs;
    if (c.random_payoffs) {
        std::mt19937_64 rng(*c.seed);
        std::uniform_real_distribution<double> u(-c.random_payoffs->range, c.random_payoffs->range);
        for (std::size_t i = 0; i < c.random_payoffs->count; ++i) {
            std::vector<double> v(c.space->dim());
            for (double& x : v) x = u(rng);
            out.emplace_back(std::move(v));
        }
    }
    return out;
}

SolverOptions solver_opts(const ExperimentConfig& c) {
    SolverOptions o = c.solver;
    if (c.seed) o.seed = *c.seed;
    return o;
}

AllocationResult solve_with(const ExperimentConfig& c, const AgentPopulation& pop, const Rv& x,
                            const SolverOptions& o) {
    return c.exact ? solve_exact(pop, *c.space, x, o) : solve(pop, *c.space, x, o);
}

std::size_t denominator(const ExperimentConfig& c) {
    return c.simplex_denominator ? c.simplex_denominator : default_simplex_denominator(c.space->dim());
}

struct Builder {
    const ExperimentConfig& cfg;
    std::string hash;
    ResultTable t;

    Builder(const ExperimentConfig& c, std::vector<std::string> cols) : cfg(c), hash(config_hash(c)) {
        t.columns = {"experiment", "config_hash", "seed"};
        t.columns.insert(t.columns.end(), cols.begin(), cols.end());
    }
    void add(Row r) {
        Row full{cfg.experiment, hash, seed_str(cfg)};
        full.insert(full.end(), r.begin(), r.end());
        t.rows.push_back(std::move(full));
    }
};

ResultTable run_eval(const ExperimentConfig& c) {
    Builder b(c, {"measure", "payoff", "value"});
    const auto& s = *c.space;
    for (const Rv& x : payoffs(c)) {
        for (const auto& spec : c.specs) b.add({spec.describe(), vec(x.values()), num(evaluate(spec, s, x))});
        if (c.population) {
            const auto r = solve_with(c, *c.population, x, solver_opts(c));
            b.add({"convolution", vec(x.values()), r.value.to_string()});
        }
    }
    return std::move(b.t);
}

ResultTable run_conj(const ExperimentConfig& c) {
    std::vector<std::string> cols{"measure"};
    for (std::size_t k = 0; k < c.space->dim(); ++k) cols.push_back("q_" + std::to_string(k));
    cols.insert(cols.end(), {"value", "diverged", "witness"});
    Builder b(c, cols);
    const auto grid = simplex_grid(*c.space, denominator(c));
    for (const auto& spec : c.specs) {
        ConjugateEngine eng(bind(spec, *c.space), *c.space, c.conj);
        for (const auto& q : grid) {
            const ConjValue v = eng.at(q);
            Row r{spec.describe()};
            for (double p : q.probs()) r.push_back(num(p));
            r.insert(r.end(), {v.as_ext().to_string(), v.diverged ? "true" : "false", vec(v.witness.values())});
            b.add(std::move(r));
        }
    }
    return std::move(b.t);
}

ResultTable run_infconv(const ExperimentConfig& c) {
    Builder b(c, {"payoff", "method", "value", "dual_bound", "gap", "evaluations", "allocation"});
    SolverOptions o = solver_opts(c);
    if (c.simplex_denominator)
        o.dual_tables = std::make_shared<const std::vector<ConjugateTable>>(
            agent_tables(*c.population, *c.space, c.simplex_denominator, c.conj));
    for (const Rv& x : payoffs(c)) {
        const auto r = solve_with(c, *c.population, x, o);
        b.add({vec(x.values()), r.meta.method, r.value.to_string(), r.dual_bound ? r.dual_bound->to_string() : "",
               r.gap ? num(*r.gap) : "", std::to_string(r.meta.evaluations), alloc_str(r.allocation)});
    }
    return std::move(b.t);
}

ResultTable run_degeneracy(const ExperimentConfig& c) {
    Builder b(c, {"measure", "verdict", "witness_q", "witness_value", "escape_direction"});
    DegeneracyOptions o;
    o.denominator = c.simplex_denominator;
    o.conj = c.conj;
    int degenerate = 0;
    for (const auto& spec : c.specs) {
        const auto v = detect_degeneracy(spec, *c.space, o);
        degenerate += v.degenerate;
        b.add({spec.describe(), v.degenerate ? "degenerate" : v.inconclusive ? "inconclusive" : "non-degenerate",
               v.witness_q ? vec(v.witness_q->probs()) : "", v.witness_value ? num(*v.witness_value) : "",
               v.escape_direction ? vec(v.escape_direction->values()) : ""});
    }
    b.t.summary["degenerate_count"] = degenerate;
    return std::move(b.t);
}

ResultTable run_improperness(const ExperimentConfig& c) {
    Builder b(c, {"payoff", "verdict", "agent_i", "agent_j", "direction", "scale", "objective"});
    std::vector<Rv> xs = payoffs(c);
    if (xs.empty()) xs.push_back(Rv::zero(c.space->dim()));
    for (const Rv& x : xs) {
        const auto v = improperness_probe(*c.population, *c.space, c.probe, x);
        if (!v.minus_inf()) {
            b.add({vec(x.values()), "finite-so-far", "", "", "", "", ""});
            continue;
        }
        for (const auto& st : v.witness)
            b.add({vec(x.values()), "minus-inf", std::to_string(v.agent_i), std::to_string(v.agent_j),
                   vec(v.direction.values()), num(st.scale), num(st.objective)});
    }
    return std::move(b.t);
}

ResultTable run_convexify(const ExperimentConfig& c) {
    Builder b(c, {"n", "violation", "gap", "fitted_slope"});
    const auto& r = *c.replication;
    ReplicationOptions o;
    o.solver = solver_opts(c);
    o.conj = c.conj;
    o.simplex_denominator = c.simplex_denominator;
    const DecayReport rep =
        run_replication({r.base, r.n_list, r.x, r.y, uniform_lambda_grid(r.lambda_steps)}, *c.space, o);
    const std::string slope = rep.fitted_slope ? num(*rep.fitted_slope) : "saturated";
    for (const auto& p : rep.per_n)
        b.add({std::to_string(p.n), num(p.violation), p.gap ? num(*p.gap) : "", slope});
    b.t.summary["saturated"] = rep.saturated();
    return std::move(b.t);
}

ResultTable run_consistency(const ExperimentConfig& c) {
    Builder b(c, {"measure", "check", "passed", "checks", "counterexample_x", "counterexample_other", "lhs", "rhs"});
    const ProbMeasure q = c.measure ? *c.measure : ProbMeasure::of(*c.space);
    OrderingOptions o = c.ordering;
    o.seed = *c.seed;
    for (const auto& spec : c.specs) {
        const auto dm = dilatation_monotone_check(spec, *c.space, q, o);
        if (dm.counterexample) {
            const auto& e = *dm.counterexample;
            b.add({spec.describe(), "dilatation", "false", std::to_string(dm.checks), vec(e.x.values()),
                   partition_str(e.g), num(e.conditioned), num(e.original)});
        } else {
            b.add({spec.describe(), "dilatation", "true", std::to_string(dm.checks), "", "", "", ""});
        }
        const auto cs = consistency_spot_check(spec, *c.space, q, o);
        if (cs.counterexample) {
            const auto& e = *cs.counterexample;
            b.add({spec.describe(), "consistency", "false", std::to_string(cs.checks), vec(e.x.values()),
                   vec(e.y.values()), num(e.rho_x), num(e.rho_y)});
        } else {
            b.add({spec.describe(), "consistency", "true", std::to_string(cs.checks), "", "", "", ""});
        }
    }
    return std::move(b.t);
}

ResultTable run_identity(const ExperimentConfig& c) {
    Builder b(c, {"payoff", "convolution", "var_of_sum", "identity_holds"});
    std::vector<RiskMeasureSpec> agents;
    double total = 0.0;
    for (double beta : c.identity_betas) {
        agents.push_back(RiskMeasureSpec::var(beta));
        total += beta;
    }
    const auto pop = AgentPopulation::unweighted(agents);
    const auto target = RiskMeasureSpec::var(total);
    validate(target, *c.space);
    std::size_t failures = 0;
    for (const Rv& x : payoffs(c)) {
        const auto r = solve_with(c, pop, x, solver_opts(c));
        const double rhs = evaluate(target, *c.space, x);
        const bool holds = r.value.finite() && std::abs(r.value.value() - rhs) <= 1e-9 * std::max(1.0, x.norm_inf());
        failures += !holds;
        b.add({vec(x.values()), r.value.to_string(), num(rhs), holds ? "true" : "false"});
    }
    b.t.summary["identity_failures"] = failures;
    return std::move(b.t);
}

ResultTable run_group(const ExperimentConfig& c) {
    Builder b(c, {"payoff", "direct", "grouped", "difference"});
    const SolverOptions o = solver_opts(c);
    for (const Rv& x : payoffs(c)) {
        const auto direct = solve_with(c, *c.population, x, o);
        const auto grouped = group_convolve(*c.population, c.groups, *c.space, x, o);
        const double diff = direct.value.as_double() - grouped.value.as_double();
        b.add({vec(x.values()), direct.value.to_string(), grouped.value.to_string(), num(diff)});
    }
    return std::move(b.t);
}

ResultTable run_conditional(const ExperimentConfig& c) {
    Builder b(c, {"partition", "payoff", "value_all", "value_measurable", "difference"});
    const ProbMeasure q = c.measure ? *c.measure : ProbMeasure::of(*c.space);
    const std::vector<PartitionAlgebra> parts = c.partition ? std::vector{*c.partition} : all_partitions(c.space->dim());
    const SolverOptions o = solver_opts(c);
    std::mt19937_64 rng(*c.seed);
    const double range = c.random_payoffs ? c.random_payoffs->range : 10.0;
    std::uniform_real_distribution<double> u(-range, range);
    for (const auto& g : parts) {
        std::vector<Rv> xs;
        for (const Rv& x : c.payoffs)
            if (g.measurable(x)) xs.push_back(x);
        for (std::size_t i = 0; c.random_payoffs && i < c.random_payoffs->count; ++i) {
            std::vector<double> v(g.dim());
            for (const auto& blk : g.blocks()) {
                const double val = u(rng);
                for (std::size_t k : blk) v[k] = val;
            }
            xs.emplace_back(std::move(v));
        }
        for (const Rv& x : xs) {
            const auto r = conditional_reduction(*c.population, *c.space, g, q, x, o);
            b.add({partition_str(g), vec(x.values()), num(r.value_all), num(r.value_measurable),
                   num(r.value_measurable - r.value_all)});
        }
    }
    return std::move(b.t);
}

std::string timestamp_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string csv_field(const std::string& f) {
    if (f.find_first_of(",\"\n") == std::string::npos) return f;
    std::string q = "\"";
    for (char ch : f) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

}  // namespace

const std::vector<ExperimentInfo>& experiments() {
    static const std::vector<ExperimentInfo> list{
        {"eval", "evaluate risk measures (and optionally a convolution) on payoffs", "risk measure definitions", false},
        {"conj", "tabulate Fenchel conjugates over a simplex grid", "dual representation", false},
        {"infconv", "solve the weighted infimal convolution with dual bounds", "risk sharing value function", true},
        {"degeneracy", "decide whether a conjugate is identically +inf", "conjugate degeneracy of VaR", false},
        {"improperness", "search zero-sum transfers driving the value to -inf", "improperness theorem", false},
        {"convexify", "convexity violation of replicated value functions", "duality gap decay", true},
        {"consistency", "dilatation monotonicity and icx consistency checks", "consistency characterisation", true},
        {"identity-var", "compare VaR convolutions with VaR of the summed level", "failure of the VaR identity", true},
        {"group-check", "convolve by groups and compare with a direct solve", "partitioned convolution", true},
        {"conditional-check", "all allocations versus block-constant allocations", "G-feasible allocations", true},
    };
    return list;
}

std::string list_experiments(bool as_json) {
    if (as_json) {
        json arr = json::array();
        for (const auto& e : experiments())
            arr.push_back({{"name", e.name},
                           {"description", e.description},
                           {"exercises", e.exercises},
                           {"randomized", e.randomized}});
        return arr.dump(2) + "\n";
    }
    std::string out;
    for (const auto& e : experiments()) {
        std::string name = e.name;
        name.resize(std::max<std::size_t>(name.size(), 18), ' ');
        out += name + e.description + " [" + e.exercises + "]\n";
    }
    return out;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string config_hash(const ExperimentConfig& cfg) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(cfg.canonical.dump())));
    return buf;
}

ResultTable run_experiment(const ExperimentConfig& c) {
    ResultTable t;
    const std::string& e = c.experiment;
    if (e == "eval") t = run_eval(c);
    else if (e == "conj") t = run_conj(c);
    else if (e == "infconv") t = run_infconv(c);
    else if (e == "degeneracy") t = run_degeneracy(c);
    else if (e == "improperness") t = run_improperness(c);
    else if (e == "convexify") t = run_convexify(c);
    else if (e == "consistency") t = run_consistency(c);
    else if (e == "identity-var") t = run_identity(c);
    else if (e == "group-check") t = run_group(c);
    else if (e == "conditional-check") t = run_conditional(c);
    else throw ConfigError("/experiment", "unknown experiment '" + e + "'");
    t.summary["experiment"] = e;
    t.summary["config_hash"] = config_hash(c);
    t.summary["seed"] = c.seed ? json(*c.seed) : json(nullptr);
    t.summary["rows"] = t.rows.size();
    return t;
}

std::string csv_body(const ResultTable& t) {
    std::string out;
    auto line = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) out += (i ? "," : "") + csv_field(fields[i]);
        out += "\n";
    };
    line(t.columns);
    for (const auto& r : t.rows) line(r);
    return out;
}

int run(const std::string& config_path, const RunFlags& flags, std::ostream& out, std::ostream& err) {
    try {
        ExperimentConfig cfg = load_config(config_path);
        if (flags.seed) {
            cfg.seed = *flags.seed;
            cfg.canonical["seed"] = *flags.seed;
        }
        if (flags.threads) cfg.conj.threads = std::max<std::size_t>(1, *flags.threads);
        if (flags.out_dir) cfg.out_dir = *flags.out_dir;

        const ResultTable t = run_experiment(cfg);
        const std::string stamp = flags.timestamp.empty() ? timestamp_now() : flags.timestamp;
        namespace fs = std::filesystem;
        fs::create_directories(cfg.out_dir);
        const fs::path csv = fs::path(cfg.out_dir) / (cfg.stem + ".csv");
        const fs::path side = fs::path(cfg.out_dir) / (cfg.stem + ".json");
        {
            std::ofstream f(csv);
            f << "# risklab " << kVersion << " generated " << stamp << "\n" << csv_body(t);
            if (!f) throw std::runtime_error("cannot write " + csv.string());
        }
        {
            json meta = t.summary;
            meta["version"] = kVersion;
            meta["generated"] = stamp;
            meta["columns"] = t.columns;
            meta["config"] = cfg.canonical;
            meta["csv"] = csv.filename().string();
            std::ofstream f(side);
            f << meta.dump(2) << "\n";
            if (!f) throw std::runtime_error("cannot write " + side.string());
        }
        out << csv.string() << "\n" << side.string() << "\n";
        return 0;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << "\n";
        return 1;
    } catch (const BudgetExceeded& e) {
        err << "budget exceeded: " << e.what() << "\n";
        return 2;
    } catch (const InvariantViolation& e) {
        err << "invariant violation: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace risklab::cli
