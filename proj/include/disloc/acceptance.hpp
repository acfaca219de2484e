#pragma once

#include "disloc/experiments.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace disloc {

struct CriterionResult {
    int number = 0;
    std::string title;
    std::string config;
    bool pass = false;
    double seconds = 0.0;
    double budget = 0.0;
    std::vector<Check> checks;
    std::string error;  // set when the experiment threw

    std::string summary_line() const;
};

struct AcceptanceSummary {
    std::vector<CriterionResult> criteria;
    bool pass() const;
};

// Runs the bundled configs c01..c11 found in dir. Criteria are independent:
// an exception in one is recorded as a failure of that criterion only.
AcceptanceSummary verify_all(const std::filesystem::path& dir, const RunContext& ctx,
                             const std::vector<int>& only = {});

// Default location of the bundled configs (compiled in).
std::filesystem::path bundled_config_dir();

}  // namespace disloc
