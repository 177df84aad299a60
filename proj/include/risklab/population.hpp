#pragma once

#include <cstddef>
#include <vector>

#include "risklab/riskmeasures.hpp"

namespace risklab {

/// How the aggregate constraint is formed.
///   Weighted:   sum_i w_i X_i = X, objective sum_i w_i rho_i(X_i).
///   Unweighted: every w_i = 1, i.e. sum_i X_i = X, objective sum_i rho_i(X_i).
enum class PopulationMode { Weighted, Unweighted };

struct Agent {
    double weight = 1.0;
    RiskMeasureSpec spec;
};

/// A finite, weighted population of agents standing in for the agent space.
class AgentPopulation {
public:
    AgentPopulation(std::vector<Agent> agents, PopulationMode mode);

    static AgentPopulation unweighted(std::vector<RiskMeasureSpec> specs);
    static AgentPopulation weighted(std::vector<Agent> agents) {
        return AgentPopulation(std::move(agents), PopulationMode::Weighted);
    }
    /// n copies of spec, each with weight 1/n.
    static AgentPopulation replicated(const RiskMeasureSpec& spec, std::size_t n);

    std::size_t size() const { return agents_.size(); }
    const Agent& agent(std::size_t i) const { return agents_[i]; }
    const std::vector<Agent>& agents() const { return agents_; }
    PopulationMode mode() const { return mode_; }
    double weight(std::size_t i) const { return agents_[i].weight; }
    double total_weight() const;

private:
    std::vector<Agent> agents_;
    PopulationMode mode_;
};

}  // namespace risklab
