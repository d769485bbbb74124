#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mvpi/model.hpp"
#include "mvpi/solvers.hpp"

namespace mvpi {

/// Supplies (J*, Q*) for models without a closed form.
using TruthOracle = std::function<GroundTruth(const TotalCostModel&)>;

/// Library oracle: optimal_cost_oracle and Q* = h_backup(J*).
GroundTruth default_truth(const TotalCostModel& model);

struct ScenarioOptions {
    TruthOracle oracle = default_truth;
    /// Size of the seeded random suites.
    std::size_t random_models = 50;
    /// (model, theta, J) triples per regime in the stopping-problem suites.
    std::size_t triples = 100;
    std::uint64_t seed = 20240;
};

struct ScenarioCheck {
    std::string label;
    std::string expected;
    std::string computed;
    /// Where the expected value comes from: "closed form", "oracle", "identity" or "bound".
    std::string basis;
    bool passed = false;
};

struct ScenarioReport {
    std::string name;
    std::string title;
    std::vector<ScenarioCheck> checks;
    std::vector<std::string> notes;

    bool passed() const noexcept;
    std::string to_string() const;
};

/// footnote8, footnote9, cor51-gap, prop51-fixedpoints, example51, theorem41-rate, theorem42,
/// theorem51, value-set-vi, theorem52, theorem53, lemmaA1-oracle, lemmaA2-bound, footnote5-equiv,
/// policy-extraction, lemmaE1, async-round-robin.
std::vector<std::string> scenario_names();

/// Throws ConfigError for an unknown name.
ScenarioReport run_scenario(const std::string& name, const ScenarioOptions& options = {});

} // namespace mvpi
