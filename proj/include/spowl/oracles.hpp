#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spowl::oracles {

/// One self-contained verification: a component checked against an
/// independently computed reference (finite differences, enumeration,
/// exhaustive search, Monte Carlo, or quadrature).
struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

CheckResult check_codec();
CheckResult check_lagrangian_table();
CheckResult check_gradients_model();
CheckResult check_gradients_policy();
CheckResult check_select_elites(int instances = 10000, std::uint64_t seed = 20260826);
CheckResult check_planner_grid();
CheckResult check_value_min2();
CheckResult check_grid_policy_eval();
CheckResult check_estimate_values();
CheckResult check_policy_density();
CheckResult check_cost_target_ordering();

std::vector<CheckResult> run_all();

}  // namespace spowl::oracles

namespace spowl {

/// Runs every oracle check, prints one line per check, returns overall
/// pass.
bool run_oracle_checks(std::ostream& os);

}  // namespace spowl
