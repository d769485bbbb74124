#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mvpi/model.hpp"
#include "mvpi/solvers.hpp"
#include "mvpi/trace.hpp"

namespace mvpi {

inline constexpr int kModelFormatVersion = 1;

/// A parsed model file.
struct ModelDocument {
    TotalCostModel model;
    std::optional<GroundTruth> ground_truth;
    /// Unknown fields seen in lenient mode.
    std::vector<std::string> warnings;
};

struct ParseOptions {
    /// Reject unknown fields; otherwise they are reported as warnings.
    bool strict = true;
};

/**
 * JSON model document:
 *
 *   { "format_version": 1, "regime": "P", "discount": 1,
 *     "states": [ { "name": "a",
 *                   "controls": [ { "id": "go", "cost": 1,
 *                                   "transitions": [ { "state": 0, "prob": 1 } ] } ],
 *                   "families": [ { "id": "t", "lo": 0, "hi": 1, "lo_closed": false, "hi_closed": false,
 *                                   "cost": [0, 1],
 *                                   "transitions": [ { "state": 0, "p0": 1, "p1": -1 } ] } ] } ],
 *     "ground_truth": { "Jstar": [0, "inf"], "Qstar": [0] } }
 *
 * Costs and ground-truth entries accept "inf" and "-inf". Successor states
 * are indices or state names. Errors carry line and column.
 */
ModelDocument parse_model(const std::string& text, const ParseOptions& options = {});
ModelDocument read_model_file(const std::string& path, const ParseOptions& options = {});

/// Inverse of parse_model; finite doubles are written in shortest round-trip form.
std::string render_model(const TotalCostModel& model, const std::optional<GroundTruth>& truth = std::nullopt);
void write_model_file(const std::string& path, const TotalCostModel& model,
                      const std::optional<GroundTruth>& truth = std::nullopt);

enum class TraceFormat { csv, json };
TraceFormat parse_trace_format(const std::string& text);

std::string render_trace(const IterationTrace& trace, TraceFormat format);
IterationTrace parse_trace(const std::string& text, TraceFormat format);
void write_trace_file(const std::string& path, const IterationTrace& trace, TraceFormat format);

/// Reads a whole file; throws Error when it cannot be opened.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// Shortest decimal form that parses back to the same double ("inf" / "-inf" for infinities).
std::string format_double(double v);
/// Inverse of format_double; throws Error on malformed input.
double parse_double(const std::string& text);

} // namespace mvpi
