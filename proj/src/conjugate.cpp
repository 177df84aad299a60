#include "risklab/conjugate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "parallel.hpp"
#include "risklab/errors.hpp"

namespace risklab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Payoffs in [0, M]^d with at least one zero coordinate, on a lattice of
// `k` points per axis. Stored row-major.
struct LevelGrid {
    double box = 0.0;
    double step = 0.0;
    std::size_t d = 0;
    std::vector<double> coords;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    Rv point(std::size_t i) const {
        return Rv(std::vector<double>(coords.begin() + static_cast<std::ptrdiff_t>(i * d),
                                      coords.begin() + static_cast<std::ptrdiff_t>((i + 1) * d)));
    }
};

std::size_t face_count(std::size_t k, std::size_t d) {
    double full = std::pow(static_cast<double>(k), static_cast<double>(d));
    double inner = std::pow(static_cast<double>(k - 1), static_cast<double>(d));
    return static_cast<std::size_t>(full - inner);
}

LevelGrid build_level(const RiskFunctional& rho, std::size_t d, double box, std::size_t k, std::size_t threads) {
    LevelGrid g;
    g.box = box;
    g.d = d;
    g.step = box / static_cast<double>(k - 1);
    std::vector<std::size_t> idx(d, 0);
    for (;;) {
        if (std::find(idx.begin(), idx.end(), 0) != idx.end())
            for (std::size_t c = 0; c < d; ++c) g.coords.push_back(static_cast<double>(idx[c]) * g.step);
        std::size_t c = 0;
        while (c < d && ++idx[c] == k) idx[c++] = 0;
        if (c == d) break;
    }
    g.values.resize(g.coords.size() / d);
    detail::parallel_for(g.values.size(), threads, [&](std::size_t i) { g.values[i] = rho(g.point(i)); });
    return g;
}

// Nonzero 0/1 directions used when polishing: unit vectors plus indicators of
// atom subsets (which follow kinks of order-statistic functionals).
std::vector<std::vector<double>> polish_directions(std::size_t d) {
    std::vector<std::vector<double>> dirs;
    if (d <= 6) {
        for (std::size_t mask = 1; mask + 1 < (std::size_t{1} << d); ++mask) {
            std::vector<double> v(d, 0.0);
            for (std::size_t k = 0; k < d; ++k)
                if (mask & (std::size_t{1} << k)) v[k] = 1.0;
            dirs.push_back(v);
        }
    } else {
        for (std::size_t k = 0; k < d; ++k) {
            std::vector<double> v(d, 0.0);
            v[k] = 1.0;
            dirs.push_back(v);
        }
    }
    return dirs;
}

}  // namespace

std::size_t default_simplex_denominator(std::size_t d) {
    if (d <= 3) return 20;
    if (d == 4) return 10;
    return 6;
}

std::vector<ProbMeasure> simplex_grid(const FiniteProbSpace& s, std::size_t denominator) {
    if (denominator == 0) throw std::invalid_argument("simplex_grid: denominator must be >= 1");
    const std::size_t d = s.dim();
    std::vector<ProbMeasure> out;
    std::vector<std::size_t> parts(d, 0);
    // Compositions of `denominator` into d parts, lexicographic in parts[0..d-2].
    auto rec = [&](auto&& self, std::size_t pos, std::size_t left) -> void {
        if (pos + 1 == d) {
            parts[pos] = left;
            std::vector<double> q(d);
            for (std::size_t k = 0; k < d; ++k)
                q[k] = static_cast<double>(parts[k]) / static_cast<double>(denominator);
            out.emplace_back(std::move(q), 1e-9);
            return;
        }
        for (std::size_t v = 0; v <= left; ++v) {
            parts[pos] = v;
            self(self, pos + 1, left - v);
        }
    };
    rec(rec, 0, denominator);
    const ProbMeasure p = ProbMeasure::of(s);
    const bool on_lattice = std::any_of(out.begin(), out.end(), [&](const ProbMeasure& q) {
        for (std::size_t k = 0; k < d; ++k)
            if (std::abs(q[k] - p[k]) > 1e-14) return false;
        return true;
    });
    if (!on_lattice) out.push_back(p);
    return out;
}

struct ConjugateEngine::Impl {
    RiskFunctional rho;
    FiniteProbSpace s;
    ConjOptions opts;
    std::size_t k = 0;
    std::vector<LevelGrid> levels;
    std::vector<std::vector<double>> dirs;

    Impl(RiskFunctional r, FiniteProbSpace sp, ConjOptions o) : rho(std::move(r)), s(std::move(sp)), opts(std::move(o)) {
        if (opts.box_schedule.empty()) throw std::invalid_argument("ConjOptions: empty box schedule");
        for (std::size_t i = 0; i < opts.box_schedule.size(); ++i) {
            if (!(opts.box_schedule[i] > 0.0)) throw std::invalid_argument("ConjOptions: box bounds must be > 0");
            if (i && !(opts.box_schedule[i] > opts.box_schedule[i - 1]))
                throw std::invalid_argument("ConjOptions: box schedule must increase");
        }
        if (opts.points_per_axis < 2) throw std::invalid_argument("ConjOptions: need >= 2 points per axis");
        k = opts.points_per_axis;
        while (k > 2 && face_count(k, s.dim()) > opts.max_grid_points) --k;
        dirs = polish_directions(s.dim());
    }

    void ensure_levels() {
        if (!levels.empty()) return;
        for (double box : opts.box_schedule) levels.push_back(build_level(rho, s.dim(), box, k, opts.threads));
    }

    // Coordinate ascent of E^Q X - rho(X) inside [0, box]^d.
    double polish(const ProbMeasure& q, Rv& x, double value, double step, double box) const {
        const double min_step = step * opts.polish_step_ratio;
        const std::size_t d = x.size();
        while (step >= min_step) {
            bool improved = true;
            std::size_t sweeps = 0;
            while (improved && sweeps++ < 64) {
                improved = false;
                for (const auto& dir : dirs) {
                    for (double sign : {1.0, -1.0}) {
                        Rv y = x;
                        bool inside = true;
                        for (std::size_t c = 0; c < d && inside; ++c) {
                            y[c] += sign * step * dir[c];
                            inside = y[c] >= 0.0 && y[c] <= box;
                        }
                        if (!inside) continue;
                        const double v = expectation(q, y) - rho(y);
                        if (v > value + 1e-15 * (1.0 + std::abs(value))) {
                            value = v;
                            x = std::move(y);
                            improved = true;
                        }
                    }
                }
            }
            step *= 0.5;
        }
        return value;
    }

    ConjValue at(const ProbMeasure& q) const {
        if (q.dim() != s.dim()) throw DimensionMismatch(s.dim(), q.dim());
        ConjValue out;
        const std::size_t d = s.dim();
        std::vector<std::size_t> best_idx(levels.size(), 0);
        for (std::size_t l = 0; l < levels.size(); ++l) {
            const LevelGrid& g = levels[l];
            double best = kNegInf;
            for (std::size_t i = 0; i < g.size(); ++i) {
                double e = 0.0;
                for (std::size_t c = 0; c < d; ++c) e += q[c] * g.coords[i * d + c];
                const double obj = e - g.values[i];
                if (obj > best) {
                    best = obj;
                    best_idx[l] = i;
                }
            }
            out.level_sups.push_back(best);
        }
        const auto& sups = out.level_sups;
        const std::size_t L = sups.size();
        const double box = levels.back().box;
        out.witness = levels.back().point(best_idx.back());

        bool diverged = sups.back() > opts.divergence_threshold;
        if (!diverged && L >= 2) {
            const double inc_last = sups[L - 1] - sups[L - 2];
            const double inc_prev = L >= 3 ? sups[L - 2] - sups[L - 3] : 0.0;
            diverged = inc_last > opts.growth_floor * box && inc_last >= 2.0 * inc_prev;
        }
        if (diverged) {
            out.diverged = true;
            return out;
        }

        double best = sups.back();
        auto run = [&](std::size_t l) {
            Rv x = levels[l].point(best_idx[l]);
            const double v = polish(q, x, sups[l], levels[l].step, box);
            if (v > best) {
                best = v;
                out.witness = std::move(x);
            }
        };
        if (opts.polish_all_levels) {
            for (std::size_t l = 0; l < L; ++l) run(l);
        } else {
            run(static_cast<std::size_t>(std::max_element(sups.begin(), sups.end()) - sups.begin()));
        }
        out.value = best;
        if (best > opts.divergence_threshold) out.diverged = true;
        return out;
    }
};

ConjugateEngine::ConjugateEngine(RiskFunctional rho, FiniteProbSpace s, ConjOptions opts)
    : impl_(std::make_unique<Impl>(std::move(rho), std::move(s), std::move(opts))) {}
ConjugateEngine::~ConjugateEngine() = default;
ConjugateEngine::ConjugateEngine(ConjugateEngine&&) noexcept = default;
ConjugateEngine& ConjugateEngine::operator=(ConjugateEngine&&) noexcept = default;

const ConjOptions& ConjugateEngine::options() const { return impl_->opts; }

ConjValue ConjugateEngine::at(const ProbMeasure& q) {
    impl_->ensure_levels();
    return impl_->at(q);
}

ConjugateTable ConjugateEngine::table(std::size_t denominator) {
    ConjugateTable t = table(simplex_grid(impl_->s, denominator));
    t.simplex_step = 1.0 / static_cast<double>(denominator);
    return t;
}

ConjugateTable ConjugateEngine::table(const std::vector<ProbMeasure>& grid) {
    impl_->ensure_levels();
    ConjugateTable t;
    t.grid = grid;
    t.values.resize(grid.size());
    t.box_bound = impl_->opts.box_schedule.back();
    t.payoff_step = impl_->levels.front().step;
    detail::parallel_for(grid.size(), impl_->opts.threads, [&](std::size_t i) { t.values[i] = impl_->at(grid[i]); });
    return t;
}

namespace {

ConjOptions options_for(double M, double step) {
    if (!(M > 0.0)) throw std::invalid_argument("conj: M must be > 0");
    if (!(step > 0.0) || step > M) throw std::invalid_argument("conj: step must be in (0, M]");
    ConjOptions o;
    o.box_schedule = {M, 10.0 * M, 100.0 * M};
    o.points_per_axis = static_cast<std::size_t>(std::llround(M / step)) + 1;
    return o;
}

}  // namespace

ConjValue conj(const RiskFunctional& rho, const FiniteProbSpace& s, const ProbMeasure& q, double M, double step) {
    ConjugateEngine engine(rho, s, options_for(M, step));
    return engine.at(q);
}

ConjValue conj(const RiskMeasureSpec& spec, const FiniteProbSpace& s, const ProbMeasure& q, double M, double step) {
    return conj(bind(spec, s), s, q, M, step);
}

ConjugateTable conj_table(const RiskFunctional& rho, const FiniteProbSpace& s, std::size_t denominator,
                          const ConjOptions& opts) {
    ConjugateEngine engine(rho, s, opts);
    return engine.table(denominator);
}

ConjugateTable conj_table(const RiskMeasureSpec& spec, const FiniteProbSpace& s, std::size_t denominator,
                          const ConjOptions& opts) {
    return conj_table(bind(spec, s), s, denominator, opts);
}

ExtReal biconj(const ConjugateTable& table, const Rv& x) {
    if (table.grid.empty()) throw std::invalid_argument("biconj: empty conjugate table");
    double best = kNegInf;
    for (std::size_t i = 0; i < table.grid.size(); ++i) {
        if (table.values[i].diverged) continue;
        best = std::max(best, expectation(table.grid[i], x) - table.values[i].value);
    }
    if (best == kNegInf) return ExtReal::minus_inf();
    return best;
}

DegeneracyVerdict detect_degeneracy(const RiskFunctional& rho, const FiniteProbSpace& s,
                                    const DegeneracyOptions& opts) {
    const std::size_t denom = opts.denominator ? opts.denominator : default_simplex_denominator(s.dim());
    ConjugateEngine engine(rho, s, opts.conj);
    const ProbMeasure p = ProbMeasure::of(s);
    std::vector<ProbMeasure> order{p};
    for (auto& q : simplex_grid(s, denom))
        if (!(q == p)) order.push_back(std::move(q));

    DegeneracyVerdict verdict;
    std::optional<Rv> escape;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i >= opts.max_measures) {
            verdict.inconclusive = true;
            return verdict;
        }
        ConjValue c = engine.at(order[i]);
        if (!c.diverged) {
            verdict.witness_q = order[i];
            verdict.witness_value = c.value;
            return verdict;
        }
        if (i == 0) {
            const double scale = c.witness.norm_inf();
            escape = scale > 0.0 ? c.witness / scale : c.witness;
        }
    }
    verdict.degenerate = true;
    verdict.escape_direction = escape;
    return verdict;
}

DegeneracyVerdict detect_degeneracy(const RiskMeasureSpec& spec, const FiniteProbSpace& s,
                                    const DegeneracyOptions& opts) {
    return detect_degeneracy(bind(spec, s), s, opts);
}

AffineMinorant finiteness_certificate(const AgentPopulation& pop, const FiniteProbSpace& s, const ProbMeasure& q,
                                      const std::vector<double>& xi, const ConjOptions& opts, double tol) {
    if (xi.size() != pop.size())
        throw std::invalid_argument("finiteness_certificate: need one bound per agent");
    if (q.dim() != s.dim()) throw DimensionMismatch(s.dim(), q.dim());
    double offset = 0.0;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        ConjugateEngine engine(bind(pop.agent(i).spec, s), s, opts);
        const ConjValue c = engine.at(q);
        if (c.diverged)
            throw CertificateInvalid("agent " + std::to_string(i) + ": conjugate diverges at the proposed measure");
        if (c.value > xi[i] + tol)
            throw CertificateInvalid("agent " + std::to_string(i) + ": conjugate " + std::to_string(c.value) +
                                     " exceeds bound " + std::to_string(xi[i]));
        offset += pop.weight(i) * xi[i];
    }
    return AffineMinorant{q, offset};
}

}  // namespace risklab
