#include "solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "risklab/errors.hpp"

namespace risklab::detail {

namespace {

bool better(double candidate, double incumbent) {
    return candidate < incumbent - 1e-14 * std::max(1.0, std::abs(incumbent));
}

}  // namespace

Convolution::Convolution(std::vector<Member> members, const FiniteProbSpace& s, const SolverOptions& opts)
    : members_(std::move(members)),
      s_(s),
      opts_(opts),
      units_(opts.measurable ? *opts.measurable : PartitionAlgebra::discrete(s.dim())) {
    if (members_.empty()) throw std::invalid_argument("convolution: empty population");
    for (const auto& m : members_)
        if (!(m.weight > 0.0)) throw std::invalid_argument("convolution: weights must be > 0");
    if (units_.dim() != s.dim()) throw DimensionMismatch(s.dim(), units_.dim());

    // Indicators of unions of units that avoid unit 0; the complement of such a
    // union differs from its negation by a constant, which the objective ignores.
    const std::size_t u = units_.num_blocks();
    auto indicator = [&](const std::vector<std::size_t>& unit_set) {
        Rv d = Rv::zero(s.dim());
        for (std::size_t b : unit_set)
            for (std::size_t atom : units_.block(b)) d[atom] = 1.0;
        return d;
    };
    if (u >= 2 && u <= 8) {
        for (std::size_t mask = 1; mask < (std::size_t{1} << (u - 1)); ++mask) {
            std::vector<std::size_t> set;
            for (std::size_t b = 1; b < u; ++b)
                if (mask & (std::size_t{1} << (b - 1))) set.push_back(b);
            directions_.push_back(indicator(set));
        }
    } else if (u > 8) {
        for (std::size_t b = 1; b < u; ++b) directions_.push_back(indicator({b}));
        for (std::size_t b = 1; b < u; ++b)
            for (std::size_t c = b + 1; c < u; ++c) directions_.push_back(indicator({b, c}));
    }
}

double Convolution::eval(std::size_t i, const Rv& xi) {
    ++evaluations_;
    return members_[i].risk(xi);
}

double Convolution::objective(const std::vector<Rv>& alloc) {
    double total = 0.0;
    for (std::size_t i = 0; i < members_.size(); ++i) total += members_[i].weight * eval(i, alloc[i]);
    return total;
}

std::vector<Rv> Convolution::proportional(const Rv& x) const {
    double w = 0.0;
    for (const auto& m : members_) w += m.weight;
    return std::vector<Rv>(members_.size(), x / w);
}

std::vector<std::vector<Rv>> Convolution::structured_starts(const Rv& x) const {
    const std::size_t n = members_.size();
    std::vector<std::vector<Rv>> starts{proportional(x)};
    if (n == 1) return starts;
    const Rv zero = Rv::zero(x.size());
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<Rv> a(n, zero);
        a[k] = x / members_[k].weight;
        starts.push_back(std::move(a));
    }
    double prefix = members_[0].weight;
    for (std::size_t m = 2; m < n; ++m) {
        prefix += members_[m - 1].weight;
        std::vector<Rv> a(n, zero);
        for (std::size_t i = 0; i < m; ++i) a[i] = x / prefix;
        starts.push_back(std::move(a));
    }
    return starts;
}

void Convolution::recompute_residual(std::vector<Rv>& alloc, const Rv& x) const {
    const std::size_t last = members_.size() - 1;
    Rv r = x;
    for (std::size_t i = 0; i < last; ++i) r -= alloc[i] * members_[i].weight;
    alloc[last] = r / members_[last].weight;
}

Outcome Convolution::polish(std::vector<Rv> alloc, const Rv& x) {
    const std::size_t n = members_.size();
    const std::size_t start_evals = evaluations_;
    Outcome out;
    recompute_residual(alloc, x);
    std::vector<double> vals(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        vals[i] = eval(i, alloc[i]);
        total += members_[i].weight * vals[i];
    }
    const double scale = std::max(1.0, x.norm_inf());
    const double floor_value = -opts_.unbounded_threshold * scale;

    // Replace agents i and j by (xi, xj) if that strictly lowers the objective.
    auto attempt = [&](std::size_t i, std::size_t j, Rv xi, Rv xj) {
        const double vi = eval(i, xi), vj = eval(j, xj);
        const double wi = members_[i].weight, wj = members_[j].weight;
        const double cand = total + wi * (vi - vals[i]) + wj * (vj - vals[j]);
        if (!std::isfinite(cand) || !better(cand, total)) return false;
        alloc[i] = std::move(xi);
        alloc[j] = std::move(xj);
        vals[i] = vi;
        vals[j] = vj;
        total = cand;
        return true;
    };

    double step = scale;
    const double min_step = scale * opts_.min_step_ratio;
    while (n > 1 && step >= min_step && !over_budget() && !out.unbounded) {
        bool improved = true;
        std::size_t sweeps = 0;
        while (improved && sweeps++ < 200 && !over_budget() && !out.unbounded) {
            improved = false;
            for (std::size_t i = 0; i < n && !out.unbounded; ++i) {
                for (std::size_t j = i + 1; j < n && !out.unbounded; ++j) {
                    const double wi = members_[i].weight, wj = members_[j].weight;
                    const Rv zero = Rv::zero(x.size());
                    if (attempt(i, j, alloc[i] + alloc[j] * (wj / wi), zero)) improved = true;
                    if (attempt(i, j, zero, alloc[j] + alloc[i] * (wi / wj))) improved = true;
                    for (const Rv& dir : directions_) {
                        for (double sign : {1.0, -1.0}) {
                            double mult = 1.0;
                            // Expand along a successful direction.
                            while (attempt(i, j, alloc[i] + dir * (sign * mult * step / wi),
                                           alloc[j] - dir * (sign * mult * step / wj))) {
                                improved = true;
                                mult *= 2.0;
                                if (total < floor_value) {
                                    out.unbounded = true;
                                    break;
                                }
                            }
                            if (out.unbounded) break;
                        }
                        if (out.unbounded) break;
                    }
                }
            }
        }
        step *= 0.5;
    }
    recompute_residual(alloc, x);
    out.value = objective(alloc);
    if (out.value < floor_value) out.unbounded = true;
    out.allocation = std::move(alloc);
    out.evaluations = evaluations_ - start_evals;
    return out;
}

Outcome Convolution::heuristic(const Rv& x) {
    const std::size_t start_evals = evaluations_;
    std::vector<std::vector<Rv>> starts = structured_starts(x);
    const std::size_t structured = starts.size();
    for (const auto& w : opts_.warm_starts) {
        if (w.size() != members_.size()) throw std::invalid_argument("warm start has wrong number of agents");
        starts.push_back(w);
    }
    // Rank structured starts by their initial objective and polish the best few.
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t k = 0; k < starts.size(); ++k) {
        recompute_residual(starts[k], x);
        ranked.emplace_back(objective(starts[k]), k);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::size_t> chosen{0};
    for (std::size_t r = 0; r < ranked.size() && chosen.size() < 4; ++r)
        if (ranked[r].second != 0) chosen.push_back(ranked[r].second);
    for (std::size_t k = structured; k < starts.size(); ++k)
        if (std::find(chosen.begin(), chosen.end(), k) == chosen.end()) chosen.push_back(k);

    Outcome best;
    best.value = std::numeric_limits<double>::infinity();
    auto consider = [&](Outcome o) {
        if (best.allocation.empty() || better(o.value, best.value) || (o.unbounded && !best.unbounded)) {
            const bool ub = o.unbounded || best.unbounded;
            best = std::move(o);
            best.unbounded = ub;
        }
    };
    for (std::size_t k : chosen) {
        consider(polish(starts[k], x));
        if (best.unbounded || over_budget()) break;
    }

    const std::size_t n = members_.size();
    const double spread = std::max(1.0, x.norm_inf());
    for (std::size_t r = 0; r < opts_.restarts && n > 1 && !best.unbounded && !over_budget(); ++r) {
        std::mt19937_64 rng(opts_.seed + 0x9E3779B97F4A7C15ULL * (r + 1));
        std::uniform_real_distribution<double> u(-spread, spread);
        std::vector<Rv> a = proportional(x);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            Rv bump = Rv::zero(x.size());
            for (const auto& block : units_.blocks()) {
                const double v = u(rng);
                for (std::size_t atom : block) bump[atom] = v;
            }
            a[i] += bump / members_[i].weight;
        }
        consider(polish(std::move(a), x));
    }
    best.restarts = opts_.restarts;
    best.evaluations = evaluations_ - start_evals;
    if (over_budget()) throw BudgetExceeded("heuristic solver exceeded its evaluation budget");
    return best;
}

Outcome Convolution::exact(const Rv& x) {
    const std::size_t n = members_.size();
    if (n > 3 || s_.dim() > 4)
        throw BudgetExceeded("exact solver supports at most 3 agents on at most 4 atoms");
    const std::size_t start_evals = evaluations_;
    const std::size_t u = units_.num_blocks();
    const std::size_t dims = (u - 1) * (n - 1);

    std::size_t half = opts_.grid_half_width;
    auto points = [&](std::size_t h) { return std::pow(2.0 * static_cast<double>(h) + 1.0, static_cast<double>(dims)); };
    while (half > 0 && points(half) > static_cast<double>(opts_.max_grid_points)) --half;
    if (dims > 0 && half == 0) throw BudgetExceeded("exact solver grid exceeds its point budget");

    const std::vector<Rv> base = proportional(x);
    std::vector<Rv> best_alloc = base;
    recompute_residual(best_alloc, x);
    double best_val = objective(best_alloc);

    if (dims > 0) {
        double radius = opts_.radius > 0.0 ? opts_.radius : std::max(1.0, x.norm_inf());
        const std::size_t side = 2 * half + 1;
        const std::size_t total_points = static_cast<std::size_t>(points(half));
        for (std::size_t esc = 0; esc <= opts_.max_radius_doublings; ++esc) {
            const double h = radius / static_cast<double>(half);
            const double before = best_val;
            std::vector<Rv> a = base;
            for (std::size_t p = 0; p < total_points; ++p) {
                std::size_t code = p;
                for (std::size_t agent = 0; agent + 1 < n; ++agent) {
                    a[agent] = base[agent];
                    for (std::size_t b = 1; b < u; ++b) {
                        const double off =
                            (static_cast<double>(code % side) - static_cast<double>(half)) * h;
                        code /= side;
                        for (std::size_t atom : units_.block(b)) a[agent][atom] += off;
                    }
                }
                recompute_residual(a, x);
                const double v = objective(a);
                if (better(v, best_val)) {
                    best_val = v;
                    best_alloc = a;
                }
            }
            if (over_budget()) throw BudgetExceeded("exact solver exceeded its evaluation budget");
            if (esc > 0 && !(before - best_val > opts_.radius_tol * std::max(1.0, std::abs(before)))) break;
            radius *= 2.0;
        }
    }

    std::vector<std::vector<Rv>> candidates{best_alloc};
    for (auto& s : structured_starts(x)) candidates.push_back(std::move(s));
    for (const auto& w : opts_.warm_starts) candidates.push_back(w);
    Outcome best;
    for (auto& c : candidates) {
        Outcome o = polish(std::move(c), x);
        const bool unbounded = best.unbounded || o.unbounded;
        if (best.allocation.empty() || better(o.value, best.value)) best = std::move(o);
        best.unbounded = unbounded;
    }
    best.evaluations = evaluations_ - start_evals;
    return best;
}

}  // namespace risklab::detail
