#pragma once

// The acceptance battery: ten criteria grouped into named suites, each made
// of measured checks against fixed bounds.

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace thinobs {

struct Check {
    std::string name;
    double value = 0.0;
    std::string relation;  ///< "<", ">", "<=", "==" or "|v-t|<="
    double bound = 0.0;
    double target = 0.0;   ///< only for "|v-t|<="
    bool pass = false;
};

struct CriterionResult {
    int id = 0;
    std::string suite;
    std::string title;
    std::vector<Check> checks;
    double seconds = 0.0;
    [[nodiscard]] bool pass() const;
};

/// frequency, profiles, blowup, strata, all.
const std::vector<std::string>& suite_names();
bool is_suite(std::string_view name);

/// Criterion ids 1..10 of a suite, in order.
std::vector<int> suite_members(std::string_view name);

/// Runs one criterion. Solved instances are cached for the life of the process.
CriterionResult run_criterion(int id);

/// Runs every member of the suite; `progress` sees each result as it completes.
std::vector<CriterionResult> run_suite(std::string_view name,
                                       const std::function<void(const CriterionResult&)>& progress = {});

/// "criterion 3 PASS  monotonicity ...: worst = ..." style line.
std::string summary_line(const CriterionResult& result);

}  // namespace thinobs
