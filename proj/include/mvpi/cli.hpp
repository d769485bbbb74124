#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mvpi/model.hpp"
#include "mvpi/solvers.hpp"

namespace mvpi::cli {

enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_usage = 2 };

/// Runs one command line (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Model source: a file path, or "fixture:<name>" for a built-in fixture.
struct LoadedModel {
    TotalCostModel model;
    std::optional<GroundTruth> truth;
    std::string source;
};
LoadedModel load_model(const std::string& source, bool strict = true);

/// zero | inf | cJstar:<c> | file:<path> (JSON array, "inf" allowed).
ValueVector parse_j0(const std::string& spec, const TotalCostModel& model, const std::optional<GroundTruth>& truth);
/// h (h_backup of J0) | zero | inf | cQstar:<c> | file:<path>.
QVector parse_q0(const std::string& spec, const TotalCostModel& model, const ValueVector& J0,
                 const std::optional<GroundTruth>& truth);
/// A number applied to every state, or file:<path>.
ValueVector parse_bound(const std::string& spec, const TotalCostModel& model);
/// full | empty | occupation[:beta[:threshold]] | subsets:<s0>;<s1>;... with each s a comma list or "-".
BStrategy parse_b_strategy(const std::string& spec, const TotalCostModel& model);
/// none | round-robin (one pair per update) | by-state (all pairs of one state per update).
std::optional<AsyncSchedule> parse_mask_schedule(const std::string& spec, const TotalCostModel& model);
/// Comma list of control indices, one per state.
Policy parse_policy(const std::string& spec, const TotalCostModel& model);

/// MVPI_TOL when set and valid, else `fallback`.
double default_tolerance(double fallback = 1e-10);

/// One row of the solve / compare summary table.
struct SummaryRow {
    std::string algorithm;
    std::string termination;
    std::size_t iterations = 0;
    std::optional<double> residual;
    std::optional<double> dist_J;
    OperatorCounts counts;
};
SummaryRow summarize(const SolverRun& run, const std::optional<GroundTruth>& truth);
std::string render_summary(const std::vector<SummaryRow>& rows);

} // namespace mvpi::cli
