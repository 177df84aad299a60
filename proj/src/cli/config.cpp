#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "risklab/cli.hpp"
#include "risklab/errors.hpp"

namespace risklab::cli {

namespace {

using nlohmann::json;

// A JSON value together with its pointer, for diagnostics.
class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

    const json& raw() const { return j_; }
    const std::string& path() const { return path_; }
    [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_.empty() ? "/" : path_, msg); }

    void expect_object(std::initializer_list<const char*> allowed) const {
        if (!j_.is_object()) fail("expected an object");
        const std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& [k, v] : j_.items())
            if (!ok.count(k)) Node(v, path_ + "/" + k).fail("unknown key");
    }
    bool has(const char* key) const { return j_.contains(key); }
    Node at(const char* key) const {
        if (!j_.contains(key)) fail(std::string("missing required key '") + key + "'");
        return Node(j_.at(key), path_ + "/" + key);
    }
    std::vector<Node> items() const {
        if (!j_.is_array()) fail("expected an array");
        std::vector<Node> out;
        for (std::size_t i = 0; i < j_.size(); ++i) out.emplace_back(j_[i], path_ + "/" + std::to_string(i));
        return out;
    }
    double number() const {
        if (!j_.is_number()) fail("expected a number");
        const double v = j_.get<double>();
        if (!std::isfinite(v)) fail("expected a finite number");
        return v;
    }
    std::uint64_t count() const {
        if (!j_.is_number_integer() || j_.get<long long>() < 0) fail("expected a nonnegative integer");
        return j_.get<std::uint64_t>();
    }
    std::string string() const {
        if (!j_.is_string()) fail("expected a string");
        return j_.get<std::string>();
    }
    bool boolean() const {
        if (!j_.is_boolean()) fail("expected true or false");
        return j_.get<bool>();
    }
    std::vector<double> numbers() const {
        std::vector<double> v;
        for (const Node& n : items()) v.push_back(n.number());
        return v;
    }
    std::vector<std::size_t> counts() const {
        std::vector<std::size_t> v;
        for (const Node& n : items()) v.push_back(n.count());
        return v;
    }

private:
    const json& j_;
    std::string path_;
};

// Runs a library constructor, reporting its complaint against the node.
template <class F>
auto guarded(const Node& n, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        n.fail(e.what());
    }
}

RiskMeasureSpec parse_spec(const Node& n) {
    if (!n.raw().is_object()) n.fail("expected a risk measure object");
    const std::string kind = n.at("kind").string();
    if (kind == "var" || kind == "es") {
        n.expect_object({"kind", "beta"});
        const double beta = n.at("beta").number();
        return kind == "var" ? RiskMeasureSpec::var(beta) : RiskMeasureSpec::es(beta);
    }
    if (kind == "entropic") {
        n.expect_object({"kind", "theta"});
        const double theta = n.at("theta").number();
        if (!(theta > 0.0)) n.at("theta").fail("theta must be > 0");
        return RiskMeasureSpec::entropic(theta);
    }
    if (kind == "choquet") {
        n.expect_object({"kind", "breakpoints", "threshold"});
        if (n.has("threshold") == n.has("breakpoints")) n.fail("give exactly one of 'breakpoints' or 'threshold'");
        if (n.has("threshold")) {
            const Node t = n.at("threshold");
            return guarded(t, [&] { return RiskMeasureSpec::choquet(Distortion::threshold(t.number())); });
        }
        const Node b = n.at("breakpoints");
        std::vector<Distortion::Point> pts;
        for (const Node& p : b.items()) {
            const auto v = p.numbers();
            if (v.size() != 2) p.fail("expected a [t, h] pair");
            pts.push_back({v[0], v[1]});
        }
        return guarded(b, [&] { return RiskMeasureSpec::choquet(Distortion(pts)); });
    }
    if (kind == "esssup") {
        n.expect_object({"kind"});
        return RiskMeasureSpec::ess_sup();
    }
    if (kind == "expectation") {
        n.expect_object({"kind", "q"});
        if (!n.has("q")) return RiskMeasureSpec::expectation();
        const Node q = n.at("q");
        return guarded(q, [&] { return RiskMeasureSpec::expectation(ProbMeasure(q.numbers())); });
    }
    if (kind == "min") {
        n.expect_object({"kind", "left", "right"});
        return RiskMeasureSpec::min_of(parse_spec(n.at("left")), parse_spec(n.at("right")));
    }
    if (kind == "scaled") {
        n.expect_object({"kind", "gamma", "inner"});
        const double g = n.at("gamma").number();
        if (!(g > 0.0)) n.at("gamma").fail("gamma must be > 0");
        return RiskMeasureSpec::scaled(g, parse_spec(n.at("inner")));
    }
    if (kind == "shifted") {
        n.expect_object({"kind", "shift", "inner"});
        return RiskMeasureSpec::shifted(n.at("shift").number(), parse_spec(n.at("inner")));
    }
    n.at("kind").fail("unknown risk measure kind '" + kind + "'");
}

FiniteProbSpace parse_space(const Node& n) {
    n.expect_object({"uniform", "probs"});
    if (n.has("uniform") == n.has("probs")) n.fail("give exactly one of 'uniform' or 'probs'");
    if (n.has("uniform")) {
        const Node u = n.at("uniform");
        const auto d = u.count();
        if (d == 0) u.fail("need at least one atom");
        return FiniteProbSpace::uniform(d);
    }
    const Node p = n.at("probs");
    return guarded(p, [&] { return FiniteProbSpace(p.numbers()); });
}

Rv parse_rv(const Node& n, std::size_t d) {
    const auto v = n.numbers();
    if (v.size() != d) n.fail("expected " + std::to_string(d) + " entries, got " + std::to_string(v.size()));
    return Rv(v);
}

PartitionAlgebra parse_partition(const Node& n, std::size_t d) {
    std::vector<PartitionAlgebra::Block> blocks;
    for (const Node& b : n.items()) blocks.push_back(b.counts());
    return guarded(n, [&] { return PartitionAlgebra(d, blocks); });
}

AgentPopulation parse_population(const Node& n) {
    n.expect_object({"mode", "agents"});
    const std::string mode = n.has("mode") ? n.at("mode").string() : "weighted";
    if (mode != "weighted" && mode != "unweighted") n.at("mode").fail("mode must be 'weighted' or 'unweighted'");
    std::vector<Agent> agents;
    for (const Node& a : n.at("agents").items()) {
        a.expect_object({"weight", "spec"});
        const double w = a.has("weight") ? a.at("weight").number() : 1.0;
        agents.push_back({w, parse_spec(a.at("spec"))});
    }
    if (agents.empty()) n.at("agents").fail("need at least one agent");
    return guarded(n, [&] {
        return AgentPopulation(agents, mode == "weighted" ? PopulationMode::Weighted : PopulationMode::Unweighted);
    });
}

void parse_solver(const Node& n, ExperimentConfig& c) {
    n.expect_object({"restarts", "min_step_ratio", "max_evaluations", "grid_half_width", "max_grid_points",
                     "unbounded_threshold", "exact"});
    auto& s = c.solver;
    if (n.has("restarts")) s.restarts = n.at("restarts").count();
    if (n.has("min_step_ratio")) s.min_step_ratio = n.at("min_step_ratio").number();
    if (n.has("max_evaluations")) s.max_evaluations = n.at("max_evaluations").count();
    if (n.has("grid_half_width")) s.grid_half_width = n.at("grid_half_width").count();
    if (n.has("max_grid_points")) s.max_grid_points = n.at("max_grid_points").count();
    if (n.has("unbounded_threshold")) s.unbounded_threshold = n.at("unbounded_threshold").number();
    if (n.has("exact")) c.exact = n.at("exact").boolean();
    if (!(s.min_step_ratio > 0.0)) n.at("min_step_ratio").fail("must be > 0");
}

void parse_conj(const Node& n, ExperimentConfig& c) {
    n.expect_object({"box_schedule", "points_per_axis", "max_grid_points", "divergence_threshold",
                     "polish_step_ratio", "simplex_denominator"});
    auto& o = c.conj;
    if (n.has("box_schedule")) {
        o.box_schedule = n.at("box_schedule").numbers();
        if (o.box_schedule.size() < 2) n.at("box_schedule").fail("need at least two box sizes");
    }
    if (n.has("points_per_axis")) o.points_per_axis = n.at("points_per_axis").count();
    if (n.has("max_grid_points")) o.max_grid_points = n.at("max_grid_points").count();
    if (n.has("divergence_threshold")) o.divergence_threshold = n.at("divergence_threshold").number();
    if (n.has("polish_step_ratio")) o.polish_step_ratio = n.at("polish_step_ratio").number();
    if (n.has("simplex_denominator")) c.simplex_denominator = n.at("simplex_denominator").count();
    if (o.points_per_axis < 2) n.at("points_per_axis").fail("must be >= 2");
}

std::string line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::string msg = e.what();
        if (auto p = msg.find("parse error"); p != std::string::npos) msg = msg.substr(p);
        throw ConfigError(source + ": " + line_col(text, e.byte ? e.byte - 1 : 0), msg);
    }
    const Node root(doc, "");
    root.expect_object({"experiment", "seed", "space", "specs", "population", "payoffs", "random_payoffs", "measure",
                        "partition", "groups", "replication", "identity", "solver", "conj", "probe", "ordering",
                        "output"});
    ExperimentConfig c;
    c.canonical = doc;
    c.experiment = root.at("experiment").string();
    const auto& known = experiments();
    const auto info = std::find_if(known.begin(), known.end(), [&](const ExperimentInfo& e) {
        return e.name == c.experiment;
    });
    if (info == known.end()) root.at("experiment").fail("unknown experiment '" + c.experiment + "'");
    if (root.has("seed")) c.seed = root.at("seed").count();
    c.space = parse_space(root.at("space"));
    const std::size_t d = c.space->dim();

    if (root.has("specs")) {
        for (const Node& s : root.at("specs").items()) {
            c.specs.push_back(parse_spec(s));
            guarded(s, [&] { validate(c.specs.back(), *c.space); return 0; });
        }
    }
    if (root.has("population")) {
        c.population = parse_population(root.at("population"));
        for (std::size_t i = 0; i < c.population->size(); ++i) {
            const Node a = root.at("population").at("agents").items()[i];
            guarded(a, [&] { validate(c.population->agent(i).spec, *c.space); return 0; });
        }
    }
    if (root.has("payoffs"))
        for (const Node& p : root.at("payoffs").items()) c.payoffs.push_back(parse_rv(p, d));
    if (root.has("random_payoffs")) {
        const Node r = root.at("random_payoffs");
        r.expect_object({"count", "range"});
        RandomPayoffs rp;
        rp.count = r.at("count").count();
        if (r.has("range")) rp.range = r.at("range").number();
        if (!(rp.range > 0.0)) r.at("range").fail("must be > 0");
        c.random_payoffs = rp;
    }
    if (root.has("measure")) {
        const Node m = root.at("measure");
        c.measure = guarded(m, [&] { return ProbMeasure(m.numbers()); });
        if (c.measure->dim() != d) m.fail("expected " + std::to_string(d) + " entries");
    }
    if (root.has("partition")) c.partition = parse_partition(root.at("partition"), d);
    if (root.has("groups")) {
        for (const Node& g : root.at("groups").items()) c.groups.push_back(g.counts());
    }
    if (root.has("replication")) {
        const Node r = root.at("replication");
        r.expect_object({"spec", "n", "x", "y", "lambda_steps"});
        ReplicationConfig rc{parse_spec(r.at("spec")), r.at("n").counts(), parse_rv(r.at("x"), d),
                             parse_rv(r.at("y"), d), 128};
        if (r.has("lambda_steps")) rc.lambda_steps = r.at("lambda_steps").count();
        guarded(r, [&] {
            validate(ReplicationExperiment{rc.base, rc.n_list, rc.x, rc.y, uniform_lambda_grid(rc.lambda_steps)},
                     *c.space);
            return 0;
        });
        c.replication = std::move(rc);
    }
    if (root.has("identity")) {
        const Node id = root.at("identity");
        id.expect_object({"betas"});
        c.identity_betas = id.at("betas").numbers();
        double total = 0.0;
        for (double b : c.identity_betas) total += b;
        if (c.identity_betas.size() < 2) id.at("betas").fail("need at least two levels");
        for (double b : c.identity_betas)
            if (!(b > 0.0)) id.at("betas").fail("levels must be > 0");
        if (total > 1.0) id.at("betas").fail("levels must sum to at most 1");
    }
    if (root.has("solver")) parse_solver(root.at("solver"), c);
    if (root.has("conj")) parse_conj(root.at("conj"), c);
    if (root.has("probe")) {
        const Node p = root.at("probe");
        p.expect_object({"steps", "threshold"});
        if (p.has("steps")) c.probe.steps = p.at("steps").count();
        if (p.has("threshold")) c.probe.threshold = p.at("threshold").number();
    }
    if (root.has("ordering")) {
        const Node o = root.at("ordering");
        o.expect_object({"samples", "payoff_range", "tol", "probes"});
        if (o.has("samples")) c.ordering.samples = o.at("samples").count();
        if (o.has("payoff_range")) c.ordering.payoff_range = o.at("payoff_range").number();
        if (o.has("tol")) c.ordering.tol = o.at("tol").number();
        if (o.has("probes"))
            for (const Node& p : o.at("probes").items()) c.ordering.probes.push_back(parse_rv(p, d));
    }
    if (root.has("output")) {
        const Node o = root.at("output");
        o.expect_object({"dir", "stem"});
        if (o.has("dir")) c.out_dir = o.at("dir").string();
        if (o.has("stem")) c.stem = o.at("stem").string();
    }
    if (c.stem.empty()) c.stem = c.experiment;

    // Per-experiment requirements.
    const std::string& e = c.experiment;
    auto need = [&](bool ok, const char* key) {
        if (!ok) root.fail("experiment '" + e + "' requires '" + key + "'");
    };
    const bool has_payoffs = !c.payoffs.empty() || (c.random_payoffs && c.random_payoffs->count > 0);
    if (e == "eval" || e == "conj" || e == "degeneracy" || e == "consistency") need(!c.specs.empty(), "specs");
    if (e == "eval" || e == "infconv" || e == "identity-var" || e == "group-check" || e == "conditional-check")
        need(has_payoffs, "payoffs");
    if (e == "infconv" || e == "improperness" || e == "group-check" || e == "conditional-check")
        need(c.population.has_value(), "population");
    if (e == "group-check") need(!c.groups.empty(), "groups");
    if (e == "convexify") need(c.replication.has_value(), "replication");
    if (e == "identity-var") need(!c.identity_betas.empty(), "identity");
    if (c.random_payoffs || info->randomized) need(c.seed.has_value(), "seed");
    if (e == "consistency" && d > 6) root.at("space").fail("consistency checks need at most 6 atoms");
    if (e == "conditional-check" && !c.partition && d > 6)
        root.at("space").fail("enumerating all partitions needs at most 6 atoms; give 'partition'");
    if (e == "group-check") {
        std::vector<int> seen(c.population->size(), 0);
        for (const auto& g : c.groups) {
            if (g.empty()) root.at("groups").fail("empty group");
            for (std::size_t i : g) {
                if (i >= seen.size()) root.at("groups").fail("agent index " + std::to_string(i) + " out of range");
                ++seen[i];
            }
        }
        for (int s : seen)
            if (s != 1) root.at("groups").fail("groups must partition the agents");
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

}  // namespace risklab::cli
