#pragma once

// Finite probability spaces, payoffs, measures and partition sub-algebras.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace risklab {

/// Default tolerance for "sums to one" checks.
inline constexpr double kProbabilityTolerance = 1e-12;

/// Omega = {0, ..., d-1} with strictly positive atom probabilities.
class FiniteProbSpace {
public:
    explicit FiniteProbSpace(std::vector<double> p, double tol = kProbabilityTolerance);

    static FiniteProbSpace uniform(std::size_t d);

    std::size_t dim() const { return p_.size(); }
    double prob(std::size_t k) const { return p_[k]; }
    std::span<const double> probs() const { return p_; }
    double max_atom() const;

    friend bool operator==(const FiniteProbSpace&, const FiniteProbSpace&) = default;

private:
    std::vector<double> p_;
};

/// A bounded payoff on a finite space; positive entries are losses.
class Rv {
public:
    Rv() = default;
    explicit Rv(std::vector<double> x);
    Rv(std::initializer_list<double> x) : Rv(std::vector<double>(x)) {}

    static Rv constant(std::size_t d, double c) { return Rv(std::vector<double>(d, c)); }
    static Rv zero(std::size_t d) { return constant(d, 0.0); }
    static Rv indicator(std::size_t d, std::size_t atom, double scale = 1.0);

    std::size_t size() const { return x_.size(); }
    double operator[](std::size_t k) const { return x_[k]; }
    double& operator[](std::size_t k) { return x_[k]; }
    std::span<const double> values() const { return x_; }
    const std::vector<double>& vec() const { return x_; }
    auto begin() const { return x_.begin(); }
    auto end() const { return x_.end(); }

    double max() const;
    double min() const;
    /// Sup-norm.
    double norm_inf() const;

    Rv& operator+=(const Rv& o);
    Rv& operator-=(const Rv& o);
    Rv& operator+=(double c);
    Rv& operator-=(double c) { return *this += -c; }
    Rv& operator*=(double s);

    friend Rv operator+(Rv a, const Rv& b) { return a += b; }
    friend Rv operator-(Rv a, const Rv& b) { return a -= b; }
    friend Rv operator+(Rv a, double c) { return a += c; }
    friend Rv operator-(Rv a, double c) { return a -= c; }
    friend Rv operator*(Rv a, double s) { return a *= s; }
    friend Rv operator*(double s, Rv a) { return a *= s; }
    friend Rv operator/(Rv a, double s) { return a *= 1.0 / s; }
    Rv operator-() const { return *this * -1.0; }

    friend bool operator==(const Rv&, const Rv&) = default;

private:
    std::vector<double> x_;
};

/// A probability measure on the atoms. Absolutely continuous w.r.t. any
/// FiniteProbSpace of the same dimension since reference atoms are positive.
class ProbMeasure {
public:
    explicit ProbMeasure(std::vector<double> q, double tol = kProbabilityTolerance);
    /// The reference measure of the space.
    static ProbMeasure of(const FiniteProbSpace& s);
    static ProbMeasure dirac(std::size_t d, std::size_t atom);

    std::size_t dim() const { return q_.size(); }
    double operator[](std::size_t k) const { return q_[k]; }
    std::span<const double> probs() const { return q_; }

    friend bool operator==(const ProbMeasure&, const ProbMeasure&) = default;

private:
    std::vector<double> q_;
};

/// A finite sub-sigma-algebra, given by the partition generating it.
class PartitionAlgebra {
public:
    using Block = std::vector<std::size_t>;

    /// Blocks are normalised (sorted internally, ordered by smallest atom).
    PartitionAlgebra(std::size_t d, std::vector<Block> blocks);

    static PartitionAlgebra discrete(std::size_t d);
    static PartitionAlgebra trivial(std::size_t d);

    std::size_t dim() const { return block_of_.size(); }
    std::size_t num_blocks() const { return blocks_.size(); }
    const std::vector<Block>& blocks() const { return blocks_; }
    const Block& block(std::size_t b) const { return blocks_[b]; }
    std::size_t block_of(std::size_t atom) const { return block_of_[atom]; }

    /// True iff x is constant on every block (exact comparison up to tol).
    bool measurable(const Rv& x, double tol = 0.0) const;

    friend bool operator==(const PartitionAlgebra&, const PartitionAlgebra&) = default;

private:
    std::vector<Block> blocks_;
    std::vector<std::size_t> block_of_;
};

/// Every partition of {0..d-1}, ordered from coarsest (one block) to finest.
/// Ties are broken by restricted-growth-string order. The count is Bell(d).
std::vector<PartitionAlgebra> all_partitions(std::size_t d);

double expectation(const ProbMeasure& q, const Rv& x);
double expectation(const FiniteProbSpace& s, const Rv& x);

struct ConditionalExpectation {
    Rv value;
    /// Blocks with zero Q-mass; their value is the P-conditional average.
    std::vector<std::size_t> fallback_blocks;
};

/// E^Q(X | G). Blocks without Q-mass fall back to the P-conditional average.
ConditionalExpectation conditional_expectation_report(const FiniteProbSpace& s, const ProbMeasure& q,
                                                      const Rv& x, const PartitionAlgebra& g);

inline Rv conditional_expectation(const FiniteProbSpace& s, const ProbMeasure& q, const Rv& x,
                                  const PartitionAlgebra& g) {
    return conditional_expectation_report(s, q, x, g).value;
}

/// True iff every block of fine lies inside a block of coarse.
bool partition_refines(const PartitionAlgebra& fine, const PartitionAlgebra& coarse);

}  // namespace risklab
