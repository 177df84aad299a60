#include "risklab/riskmeasures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "risklab/errors.hpp"

namespace risklab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Slack used when comparing cumulative probabilities against a quantile level,
// so that e.g. 1 - 1/3 and 1/3 + 1/3 compare equal.
constexpr double kQuantileSlack = 1e-12;

void check_dim(const FiniteProbSpace& s, const Rv& x) {
    if (s.dim() != x.size()) throw DimensionMismatch(s.dim(), x.size());
}

std::vector<std::size_t> order_ascending(const Rv& x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    return idx;
}

std::string fmt_num(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace

Distortion::Distortion(std::vector<Point> breakpoints) : points_(std::move(breakpoints)) {
    if (points_.size() < 2) throw std::invalid_argument("Distortion: need at least two breakpoints");
    if (points_.front().t != 0.0 || points_.front().h != 0.0)
        throw std::invalid_argument("Distortion: first breakpoint must be (0, 0)");
    if (points_.back().t != 1.0) throw std::invalid_argument("Distortion: last breakpoint must have t = 1");
    if (std::abs(points_.back().h - 1.0) > 1e-12)
        throw std::invalid_argument("Distortion: h(1) must equal 1 for a cash-additive Choquet integral");
    for (std::size_t i = 1; i < points_.size(); ++i) {
        if (!(points_[i].t > points_[i - 1].t)) throw std::invalid_argument("Distortion: t must be strictly increasing");
        if (points_[i].h < points_[i - 1].h) throw std::invalid_argument("Distortion: h must be nondecreasing");
    }
}

Distortion Distortion::threshold(double a) {
    if (!(a >= 0.0 && a < 1.0)) throw std::invalid_argument("Distortion::threshold: a must be in [0, 1)");
    if (a == 0.0) return identity();
    return Distortion({{0.0, 0.0}, {a, 0.0}, {1.0, 1.0}});
}

double Distortion::operator()(double t) const {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return points_.back().h;
    auto it = std::upper_bound(points_.begin(), points_.end(), t, [](double v, const Point& p) { return v < p.t; });
    const Point& hi = *it;
    const Point& lo = *(it - 1);
    const double w = (t - lo.t) / (hi.t - lo.t);
    return lo.h + w * (hi.h - lo.h);
}

RiskMeasureSpec RiskMeasureSpec::min_of(RiskMeasureSpec a, RiskMeasureSpec b) {
    return RiskMeasureSpec(MinOf{std::make_shared<const RiskMeasureSpec>(std::move(a)),
                                 std::make_shared<const RiskMeasureSpec>(std::move(b))});
}

RiskMeasureSpec RiskMeasureSpec::scaled(double gamma, RiskMeasureSpec inner) {
    return RiskMeasureSpec(Scaled{gamma, std::make_shared<const RiskMeasureSpec>(std::move(inner))});
}

RiskMeasureSpec RiskMeasureSpec::shifted(double shift, RiskMeasureSpec inner) {
    return RiskMeasureSpec(Shifted{shift, std::make_shared<const RiskMeasureSpec>(std::move(inner))});
}

std::size_t RiskMeasureSpec::depth() const {
    return std::visit(Overloaded{
                          [](const MinOf& m) { return 1 + std::max(m.left->depth(), m.right->depth()); },
                          [](const Scaled& m) { return 1 + m.inner->depth(); },
                          [](const Shifted& m) { return 1 + m.inner->depth(); },
                          [](const auto&) { return std::size_t{1}; },
                      },
                      v_);
}

std::string RiskMeasureSpec::describe() const {
    return std::visit(
        Overloaded{
            [](const VaR& m) { return "var(" + fmt_num(m.beta) + ")"; },
            [](const ES& m) { return "es(" + fmt_num(m.beta) + ")"; },
            [](const Entropic& m) { return "entropic(" + fmt_num(m.theta) + ")"; },
            [](const Choquet& m) {
                std::string s = "choquet(";
                for (std::size_t i = 0; i < m.h.breakpoints().size(); ++i) {
                    const auto& p = m.h.breakpoints()[i];
                    s += (i ? ";" : "") + fmt_num(p.t) + ":" + fmt_num(p.h);
                }
                return s + ")";
            },
            [](const EssSup&) { return std::string("esssup"); },
            [](const ExpectationUnder& m) {
                if (!m.q) return std::string("expectation");
                std::string s = "expectation(";
                for (std::size_t k = 0; k < m.q->dim(); ++k) s += (k ? ";" : "") + fmt_num((*m.q)[k]);
                return s + ")";
            },
            [](const MinOf& m) { return "min(" + m.left->describe() + "," + m.right->describe() + ")"; },
            [](const Scaled& m) { return "scaled(" + fmt_num(m.gamma) + "," + m.inner->describe() + ")"; },
            [](const Shifted& m) { return "shift(" + fmt_num(m.shift) + "," + m.inner->describe() + ")"; },
        },
        v_);
}

void validate(const RiskMeasureSpec& spec, const FiniteProbSpace& s, std::size_t max_depth) {
    if (spec.depth() > max_depth)
        throw std::invalid_argument("risk measure nesting depth " + std::to_string(spec.depth()) +
                                    " exceeds limit " + std::to_string(max_depth));
    using S = RiskMeasureSpec;
    std::visit(Overloaded{
                   [](const S::VaR& m) {
                       if (!(m.beta >= 0.0 && m.beta < 1.0)) throw std::invalid_argument("var: beta must be in [0, 1)");
                   },
                   [](const S::ES& m) {
                       if (!(m.beta > 0.0 && m.beta <= 1.0)) throw std::invalid_argument("es: beta must be in (0, 1]");
                   },
                   [](const S::Entropic& m) {
                       if (!(m.theta > 0.0) || !std::isfinite(m.theta))
                           throw std::invalid_argument("entropic: theta must be > 0");
                   },
                   [](const S::Choquet&) {},
                   [](const S::EssSup&) {},
                   [&](const S::ExpectationUnder& m) {
                       if (m.q && m.q->dim() != s.dim()) throw DimensionMismatch(s.dim(), m.q->dim());
                   },
                   [&](const S::MinOf& m) {
                       validate(*m.left, s, max_depth);
                       validate(*m.right, s, max_depth);
                   },
                   [&](const S::Scaled& m) {
                       if (!(m.gamma > 0.0) || !std::isfinite(m.gamma))
                           throw std::invalid_argument("scaled: gamma must be > 0");
                       validate(*m.inner, s, max_depth);
                   },
                   [&](const S::Shifted& m) {
                       if (!std::isfinite(m.shift)) throw std::invalid_argument("shifted: shift must be finite");
                       validate(*m.inner, s, max_depth);
                   },
               },
               spec.variant());
}

double value_at_risk(const FiniteProbSpace& s, const Rv& x, double beta) {
    check_dim(s, x);
    // inf{x : P(X <= x) >= 1 - beta}, by enumeration over sorted atom values.
    const auto idx = order_ascending(x);
    const double level = 1.0 - beta - kQuantileSlack;
    double cum = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        cum += s.prob(idx[i]);
        const bool last_of_tie = i + 1 == idx.size() || x[idx[i + 1]] != x[idx[i]];
        if (last_of_tie && cum >= level) return x[idx[i]];
    }
    return x[idx.back()];
}

double expected_shortfall(const FiniteProbSpace& s, const Rv& x, double beta) {
    check_dim(s, x);
    // Average of the worst beta-tail; the boundary atom contributes fractionally.
    const auto idx = order_ascending(x);
    double remaining = beta, used = 0.0, acc = 0.0;
    for (auto it = idx.rbegin(); it != idx.rend() && remaining > 0.0; ++it) {
        const double take = std::min(s.prob(*it), remaining);
        acc += take * x[*it];
        used += take;
        remaining -= take;
    }
    return acc / used;
}

double entropic_risk(const FiniteProbSpace& s, const Rv& x, double theta) {
    check_dim(s, x);
    const double m = x.max();
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) acc += s.prob(k) * std::exp(theta * (x[k] - m));
    return m + std::log(acc) / theta;
}

double choquet_integral(const FiniteProbSpace& s, const Rv& x, const Distortion& h) {
    check_dim(s, x);
    // Layer cake over the distinct values v_1 > ... > v_m:
    //   C(X) = v_m h(1) + sum_{j<m} (v_j - v_{j+1}) h(P(X >= v_j)).
    auto idx = order_ascending(x);
    std::reverse(idx.begin(), idx.end());
    double acc = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        tail += s.prob(idx[i]);
        if (i + 1 == idx.size()) {
            acc += x[idx[i]] * h(1.0);
        } else if (x[idx[i + 1]] != x[idx[i]]) {
            acc += (x[idx[i]] - x[idx[i + 1]]) * h(tail);
        }
    }
    return acc;
}

double ess_sup(const FiniteProbSpace& s, const Rv& x) {
    check_dim(s, x);
    return x.max();
}

double evaluate(const RiskMeasureSpec& spec, const FiniteProbSpace& s, const Rv& x) {
    using S = RiskMeasureSpec;
    return std::visit(Overloaded{
                          [&](const S::VaR& m) { return value_at_risk(s, x, m.beta); },
                          [&](const S::ES& m) { return expected_shortfall(s, x, m.beta); },
                          [&](const S::Entropic& m) { return entropic_risk(s, x, m.theta); },
                          [&](const S::Choquet& m) { return choquet_integral(s, x, m.h); },
                          [&](const S::EssSup&) { return ess_sup(s, x); },
                          [&](const S::ExpectationUnder& m) { return m.q ? expectation(*m.q, x) : expectation(s, x); },
                          [&](const S::MinOf& m) { return std::min(evaluate(*m.left, s, x), evaluate(*m.right, s, x)); },
                          [&](const S::Scaled& m) { return m.gamma * evaluate(*m.inner, s, x / m.gamma); },
                          [&](const S::Shifted& m) { return evaluate(*m.inner, s, x) + m.shift; },
                      },
                      spec.variant());
}

RiskFunctional bind(const RiskMeasureSpec& spec, const FiniteProbSpace& s) {
    validate(spec, s);
    return [spec, s](const Rv& x) { return evaluate(spec, s, x); };
}

bool acceptance_membership(const RiskMeasureSpec& spec, const FiniteProbSpace& s, const Rv& x, double tol) {
    return evaluate(spec, s, x) <= tol;
}

AxiomReport check_axioms(const RiskFunctional& rho, const FiniteProbSpace& s, const AxiomOptions& opts) {
    if (opts.samples == 0) throw std::invalid_argument("check_axioms: samples must be >= 1");
    AxiomReport rep;
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> coord(-opts.payoff_range, opts.payoff_range);
    std::uniform_real_distribution<double> bump(0.0, opts.payoff_range);
    std::uniform_real_distribution<double> cash(-10.0, 10.0);
    std::bernoulli_distribution touch(0.5);
    const std::size_t d = s.dim();

    auto record = [&](AxiomWitness w) {
        rep.passed = false;
        if (rep.failures.size() < opts.max_failures) rep.failures.push_back(std::move(w));
    };

    for (std::size_t n = 0; n < opts.samples; ++n) {
        std::vector<double> xv(d), yv(d);
        for (std::size_t k = 0; k < d; ++k) {
            xv[k] = coord(rng);
            yv[k] = xv[k] + (touch(rng) ? bump(rng) : 0.0);
        }
        const Rv x(std::move(xv)), y(std::move(yv));
        const double rx = rho(x), ry = rho(y);
        ++rep.checks;
        if (rx > ry + opts.monotonicity_tol) record({"monotonicity", x, y, 0.0, rx, ry});

        const double c = cash(rng);
        const double shifted = rho(x + c);
        ++rep.checks;
        if (std::abs(shifted - (rx + c)) > opts.cash_tol) record({"cash-additivity", x, x + c, c, shifted, rx + c});
    }
    return rep;
}

AxiomReport check_axioms(const RiskMeasureSpec& spec, const FiniteProbSpace& s, const AxiomOptions& opts) {
    return check_axioms(bind(spec, s), s, opts);
}

}  // namespace risklab
