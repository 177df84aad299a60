#include "risklab/probspace.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

#include "risklab/errors.hpp"

namespace risklab {

namespace {

void check_distribution(const std::vector<double>& q, double tol, bool strictly_positive, const char* what) {
    if (q.empty()) throw std::invalid_argument(std::string(what) + ": need at least one atom");
    double total = 0.0;
    for (double v : q) {
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite probability");
        if (strictly_positive ? !(v > 0.0) : v < 0.0)
            throw std::invalid_argument(std::string(what) + (strictly_positive ? ": atom probabilities must be > 0"
                                                                               : ": probabilities must be >= 0"));
        total += v;
    }
    if (std::abs(total - 1.0) > tol)
        throw std::invalid_argument(std::string(what) + ": probabilities sum to " + std::to_string(total));
}

void check_same_dim(std::size_t expected, std::size_t actual) {
    if (expected != actual) throw DimensionMismatch(expected, actual);
}

}  // namespace

FiniteProbSpace::FiniteProbSpace(std::vector<double> p, double tol) : p_(std::move(p)) {
    check_distribution(p_, tol, true, "FiniteProbSpace");
}

FiniteProbSpace FiniteProbSpace::uniform(std::size_t d) {
    if (d == 0) throw std::invalid_argument("FiniteProbSpace: need at least one atom");
    return FiniteProbSpace(std::vector<double>(d, 1.0 / static_cast<double>(d)));
}

double FiniteProbSpace::max_atom() const { return *std::max_element(p_.begin(), p_.end()); }

Rv::Rv(std::vector<double> x) : x_(std::move(x)) {
    for (double v : x_)
        if (!std::isfinite(v)) throw std::invalid_argument("Rv: entries must be finite");
}

Rv Rv::indicator(std::size_t d, std::size_t atom, double scale) {
    if (atom >= d) throw std::out_of_range("Rv::indicator: atom out of range");
    Rv r = zero(d);
    r.x_[atom] = scale;
    return r;
}

double Rv::max() const { return *std::max_element(x_.begin(), x_.end()); }
double Rv::min() const { return *std::min_element(x_.begin(), x_.end()); }

double Rv::norm_inf() const {
    double m = 0.0;
    for (double v : x_) m = std::max(m, std::abs(v));
    return m;
}

Rv& Rv::operator+=(const Rv& o) {
    check_same_dim(size(), o.size());
    for (std::size_t k = 0; k < x_.size(); ++k) x_[k] += o.x_[k];
    return *this;
}

Rv& Rv::operator-=(const Rv& o) {
    check_same_dim(size(), o.size());
    for (std::size_t k = 0; k < x_.size(); ++k) x_[k] -= o.x_[k];
    return *this;
}

Rv& Rv::operator+=(double c) {
    for (double& v : x_) v += c;
    return *this;
}

Rv& Rv::operator*=(double s) {
    for (double& v : x_) v *= s;
    return *this;
}

ProbMeasure::ProbMeasure(std::vector<double> q, double tol) : q_(std::move(q)) {
    check_distribution(q_, tol, false, "ProbMeasure");
}

ProbMeasure ProbMeasure::of(const FiniteProbSpace& s) {
    return ProbMeasure(std::vector<double>(s.probs().begin(), s.probs().end()));
}

ProbMeasure ProbMeasure::dirac(std::size_t d, std::size_t atom) {
    if (atom >= d) throw std::out_of_range("ProbMeasure::dirac: atom out of range");
    std::vector<double> q(d, 0.0);
    q[atom] = 1.0;
    return ProbMeasure(std::move(q));
}

PartitionAlgebra::PartitionAlgebra(std::size_t d, std::vector<Block> blocks)
    : blocks_(std::move(blocks)), block_of_(d, d) {
    if (d == 0) throw std::invalid_argument("PartitionAlgebra: need at least one atom");
    for (auto& b : blocks_) {
        if (b.empty()) throw std::invalid_argument("PartitionAlgebra: empty block");
        std::sort(b.begin(), b.end());
    }
    std::sort(blocks_.begin(), blocks_.end(), [](const Block& a, const Block& b) { return a.front() < b.front(); });
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
        for (std::size_t atom : blocks_[bi]) {
            if (atom >= d) throw std::invalid_argument("PartitionAlgebra: atom index out of range");
            if (block_of_[atom] != d) throw std::invalid_argument("PartitionAlgebra: blocks overlap");
            block_of_[atom] = bi;
        }
    }
    for (std::size_t atom = 0; atom < d; ++atom)
        if (block_of_[atom] == d) throw std::invalid_argument("PartitionAlgebra: blocks do not cover all atoms");
}

PartitionAlgebra PartitionAlgebra::discrete(std::size_t d) {
    std::vector<Block> blocks;
    for (std::size_t k = 0; k < d; ++k) blocks.push_back({k});
    return PartitionAlgebra(d, std::move(blocks));
}

PartitionAlgebra PartitionAlgebra::trivial(std::size_t d) {
    Block all(d);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return PartitionAlgebra(d, {all});
}

bool PartitionAlgebra::measurable(const Rv& x, double tol) const {
    check_same_dim(dim(), x.size());
    for (const auto& b : blocks_)
        for (std::size_t atom : b)
            if (std::abs(x[atom] - x[b.front()]) > tol) return false;
    return true;
}

std::vector<PartitionAlgebra> all_partitions(std::size_t d) {
    if (d == 0) throw std::invalid_argument("all_partitions: need at least one atom");
    if (d > 10) throw BudgetExceeded("all_partitions: d > 10 is not enumerable");
    // Restricted growth strings: a[0] = 0, a[k] <= 1 + max(a[0..k-1]).
    std::vector<std::vector<std::size_t>> rgs;
    std::vector<std::size_t> a(d, 0);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t k, std::size_t mx) {
        if (k == d) {
            rgs.push_back(a);
            return;
        }
        for (std::size_t v = 0; v <= mx + 1; ++v) {
            a[k] = v;
            rec(k + 1, std::max(mx, v));
        }
    };
    rec(1, 0);
    std::vector<PartitionAlgebra> out;
    out.reserve(rgs.size());
    for (const auto& s : rgs) {
        std::size_t nb = *std::max_element(s.begin(), s.end()) + 1;
        std::vector<PartitionAlgebra::Block> blocks(nb);
        for (std::size_t k = 0; k < d; ++k) blocks[s[k]].push_back(k);
        out.emplace_back(d, std::move(blocks));
    }
    std::stable_sort(out.begin(), out.end(), [](const PartitionAlgebra& x, const PartitionAlgebra& y) {
        return x.num_blocks() < y.num_blocks();
    });
    return out;
}

double expectation(const ProbMeasure& q, const Rv& x) {
    check_same_dim(q.dim(), x.size());
    double e = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) e += q[k] * x[k];
    return e;
}

double expectation(const FiniteProbSpace& s, const Rv& x) {
    check_same_dim(s.dim(), x.size());
    double e = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) e += s.prob(k) * x[k];
    return e;
}

ConditionalExpectation conditional_expectation_report(const FiniteProbSpace& s, const ProbMeasure& q,
                                                      const Rv& x, const PartitionAlgebra& g) {
    check_same_dim(s.dim(), q.dim());
    check_same_dim(s.dim(), x.size());
    check_same_dim(s.dim(), g.dim());
    ConditionalExpectation out{x, {}};
    for (std::size_t b = 0; b < g.num_blocks(); ++b) {
        const auto& block = g.block(b);
        double mass = 0.0, acc = 0.0;
        for (std::size_t atom : block) {
            mass += q[atom];
            acc += q[atom] * x[atom];
        }
        if (!(mass > 0.0)) {
            out.fallback_blocks.push_back(b);
            mass = acc = 0.0;
            for (std::size_t atom : block) {
                mass += s.prob(atom);
                acc += s.prob(atom) * x[atom];
            }
        }
        bool constant = true;
        for (std::size_t atom : block) constant = constant && x[atom] == x[block.front()];
        const double v = constant ? x[block.front()] : acc / mass;
        for (std::size_t atom : block) out.value[atom] = v;
    }
    return out;
}

bool partition_refines(const PartitionAlgebra& fine, const PartitionAlgebra& coarse) {
    check_same_dim(fine.dim(), coarse.dim());
    for (const auto& b : fine.blocks()) {
        const std::size_t target = coarse.block_of(b.front());
        for (std::size_t atom : b)
            if (coarse.block_of(atom) != target) return false;
    }
    return true;
}

}  // namespace risklab
