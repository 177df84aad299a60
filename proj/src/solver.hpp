#pragma once

// Search engine shared by the convolution solvers. Members are abstract
// weighted functionals so that groups of agents can be nested.

#include <cstdint>
#include <vector>

#include "risklab/infconv.hpp"

namespace risklab::detail {

struct Member {
    double weight = 1.0;
    RiskFunctional risk;
};

struct Outcome {
    double value = 0.0;
    std::vector<Rv> allocation;
    std::size_t evaluations = 0;
    std::size_t restarts = 0;
    bool unbounded = false;
};

class Convolution {
public:
    Convolution(std::vector<Member> members, const FiniteProbSpace& s, const SolverOptions& opts);

    std::size_t size() const { return members_.size(); }
    double objective(const std::vector<Rv>& alloc);

    /// Proportional split x / sum(w).
    std::vector<Rv> proportional(const Rv& x) const;
    /// Structured starts: proportional, all risk on one member, risk on prefixes.
    std::vector<std::vector<Rv>> structured_starts(const Rv& x) const;

    Outcome polish(std::vector<Rv> alloc, const Rv& x);
    Outcome heuristic(const Rv& x);
    Outcome exact(const Rv& x);

private:
    void recompute_residual(std::vector<Rv>& alloc, const Rv& x) const;
    double eval(std::size_t i, const Rv& xi);
    bool over_budget() const { return evaluations_ >= opts_.max_evaluations; }

    std::vector<Member> members_;
    FiniteProbSpace s_;
    SolverOptions opts_;
    PartitionAlgebra units_;
    std::vector<Rv> directions_;
    std::size_t evaluations_ = 0;
};

}  // namespace risklab::detail
