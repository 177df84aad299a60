#pragma once

// Batch experiment runner: config parsing, experiment dispatch, CSV/JSON output.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "risklab/conjugate.hpp"
#include "risklab/convexify.hpp"
#include "risklab/infconv.hpp"
#include "risklab/ordering.hpp"
#include "risklab/probspace.hpp"
#include "risklab/riskmeasures.hpp"

namespace risklab::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Malformed or invalid configuration. `where` is a JSON pointer or "line L, column C".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string where, const std::string& msg)
        : std::runtime_error(where.empty() ? msg : where + ": " + msg), where_(std::move(where)) {}
    const std::string& where() const { return where_; }

private:
    std::string where_;
};

struct RandomPayoffs {
    std::size_t count = 0;
    double range = 10.0;
};

struct ReplicationConfig {
    RiskMeasureSpec base;
    std::vector<std::size_t> n_list;
    Rv x, y;
    std::size_t lambda_steps = 128;
};

struct ExperimentConfig {
    std::string experiment;
    std::optional<std::uint64_t> seed;
    std::optional<FiniteProbSpace> space;
    std::vector<RiskMeasureSpec> specs;
    std::optional<AgentPopulation> population;
    std::vector<Rv> payoffs;
    std::optional<RandomPayoffs> random_payoffs;
    std::optional<ProbMeasure> measure;
    std::optional<PartitionAlgebra> partition;
    std::vector<std::vector<std::size_t>> groups;
    std::optional<ReplicationConfig> replication;
    std::vector<double> identity_betas;
    SolverOptions solver{};
    bool exact = false;
    ConjOptions conj{};
    std::size_t simplex_denominator = 0;
    ProbeOptions probe{};
    OrderingOptions ordering{};
    std::string out_dir = ".";
    std::string stem;
    /// The parsed document, re-serialised with sorted keys.
    nlohmann::json canonical;
};

/// Parses and validates a config document. `source` names the input in diagnostics.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "config");
ExperimentConfig load_config(const std::string& path);

struct ExperimentInfo {
    std::string name;
    std::string description;
    std::string exercises;
    bool randomized;
};
const std::vector<ExperimentInfo>& experiments();
std::string list_experiments(bool json);

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    nlohmann::json summary;
};

/// Runs the configured experiment. Leading columns are experiment, config_hash, seed.
ResultTable run_experiment(const ExperimentConfig& cfg);

std::uint64_t fnv1a(const std::string& s);
std::string config_hash(const ExperimentConfig& cfg);
/// CSV body (header row plus data rows, no comment line).
std::string csv_body(const ResultTable& t);

struct RunFlags {
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    /// Fixed timestamp for the header comment (tests); empty uses the clock.
    std::string timestamp;
};

/// Loads, runs and writes <out>/<stem>.csv and <out>/<stem>.json. Returns the exit status:
/// 0 ok, 1 config error, 2 budget exceeded, 3 invariant violation.
int run(const std::string& config_path, const RunFlags& flags, std::ostream& out, std::ostream& err);

}  // namespace risklab::cli
