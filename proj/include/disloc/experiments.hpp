#pragma once

#include "disloc/config.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace disloc {

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

// Round-trip formatting (%.17g) so identical runs give identical bytes.
std::string format_csv(const Table& t);

struct Check {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    std::string relation;  // "<", "<=", ">", ">="
    bool pass = false;
    bool supplementary = false;  // reported but not part of the verdict
    std::string note;
};

Check make_check(std::string name, double value, std::string relation, double threshold, std::string note = "");

struct ExperimentOutput {
    std::string kind;
    json results = json::object();
    std::vector<Check> checks;
    std::vector<Table> tables;
    double seconds = 0.0;

    bool pass() const;
    json report(std::uint64_t seed) const;
};

struct RunContext {
    Thresholds thresholds = Thresholds::defaults();
    int threads = 1;
    std::optional<std::uint64_t> seed;  // overrides the config seed
};

const std::vector<std::string>& experiment_kinds();

// Dispatches on cfg["kind"]. ValidationError for bad configs, NumericalError
// for solver or quadrature failures.
ExperimentOutput run_experiment(const json& cfg, const RunContext& ctx);

// report.json plus one CSV per table.
void write_outputs(const ExperimentOutput& out, std::uint64_t seed, const std::filesystem::path& dir);

}  // namespace disloc
