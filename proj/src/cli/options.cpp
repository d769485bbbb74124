#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "mvpi/cli.hpp"
#include "mvpi/errors.hpp"
#include "mvpi/io.hpp"
#include "mvpi/models.hpp"
#include "mvpi/operators.hpp"

namespace mvpi::cli {

namespace {

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

double parse_number(const std::string& text, const std::string& what) {
    try {
        return parse_double(text);
    } catch (const Error&) {
        throw ConfigError("invalid " + what + " '" + text + "'");
    }
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(item);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

std::size_t parse_index(const std::string& text, const std::string& what) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(text, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != text.size()) throw ConfigError("invalid " + what + " '" + text + "'");
    return static_cast<std::size_t>(v);
}

std::vector<ExtReal> read_vector_file(const std::string& path) {
    const std::string text = read_text_file(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    if (!doc.is_array()) throw ConfigError(path + ": expected a JSON array of numbers");
    std::vector<ExtReal> out;
    for (const auto& v : doc) {
        if (v.is_number()) {
            out.emplace_back(v.get<double>());
        } else if (v.is_string()) {
            out.push_back(parse_ext_real(v.get<std::string>()));
        } else {
            throw ConfigError(path + ": entries must be numbers, \"inf\" or \"-inf\"");
        }
    }
    return out;
}

template <class V>
V vector_from_file(const std::string& path, std::size_t expected, const char* what) {
    auto values = read_vector_file(path);
    if (values.size() != expected)
        throw ConfigError(std::string(what) + " from " + path + " has " + std::to_string(values.size()) +
                          " entries, expected " + std::to_string(expected));
    return V(std::move(values));
}

const GroundTruth& require_truth(const std::optional<GroundTruth>& truth, const std::string& spec) {
    if (!truth) throw ConfigError("'" + spec + "' needs ground truth (add a ground_truth block or pass --oracle)");
    return *truth;
}

} // namespace

LoadedModel load_model(const std::string& source, bool strict) {
    LoadedModel out;
    out.source = source;
    if (starts_with(source, "fixture:")) {
        Fixture f = fixture(source.substr(8));
        out.model = std::move(f.model);
        out.truth = GroundTruth{std::move(f.Jstar), std::move(f.Qstar)};
        return out;
    }
    ModelDocument doc = read_model_file(source, ParseOptions{strict});
    out.model = std::move(doc.model);
    out.truth = std::move(doc.ground_truth);
    return out;
}

ValueVector parse_j0(const std::string& spec, const TotalCostModel& model, const std::optional<GroundTruth>& truth) {
    const std::size_t n = model.num_states();
    if (spec == "zero") return ValueVector(n, 0.0);
    if (spec == "inf") return ValueVector(n, ExtReal::inf());
    if (starts_with(spec, "cJstar:")) {
        const double c = parse_number(spec.substr(7), "cJstar factor");
        return scaled(require_truth(truth, spec).J, c);
    }
    if (starts_with(spec, "file:")) return vector_from_file<ValueVector>(spec.substr(5), n, "J0");
    throw ConfigError("invalid --j0 '" + spec + "' (expected zero, inf, cJstar:<c> or file:<path>)");
}

QVector parse_q0(const std::string& spec, const TotalCostModel& model, const ValueVector& J0,
                 const std::optional<GroundTruth>& truth) {
    const std::size_t n = model.num_pairs();
    if (spec == "h") return h_backup(model, J0);
    if (spec == "zero") return QVector(n, 0.0);
    if (spec == "inf") return QVector(n, ExtReal::inf());
    if (starts_with(spec, "cQstar:")) {
        const double c = parse_number(spec.substr(7), "cQstar factor");
        const auto& t = require_truth(truth, spec);
        if (!t.Q) throw ConfigError("'" + spec + "' needs Q* in the ground truth");
        return scaled(*t.Q, c);
    }
    if (starts_with(spec, "file:")) return vector_from_file<QVector>(spec.substr(5), n, "Q0");
    throw ConfigError("invalid --q0 '" + spec + "' (expected h, zero, inf, cQstar:<c> or file:<path>)");
}

ValueVector parse_bound(const std::string& spec, const TotalCostModel& model) {
    if (starts_with(spec, "file:")) return vector_from_file<ValueVector>(spec.substr(5), model.num_states(), "bound");
    ExtReal v;
    try {
        v = parse_ext_real(spec);
    } catch (const Error&) {
        throw ConfigError("invalid bound '" + spec + "'");
    }
    return ValueVector(model.num_states(), v);
}

BStrategy parse_b_strategy(const std::string& spec, const TotalCostModel& model) {
    const std::size_t n = model.num_states();
    if (spec == "full") return FullB{};
    if (spec == "empty") return EmptyB{};
    if (spec == "occupation" || starts_with(spec, "occupation:")) {
        OccupationSupport o;
        o.rho.assign(n, n == 0 ? 0.0 : 1.0 / static_cast<double>(n));
        const auto parts = split(spec, ':');
        if (parts.size() > 3) throw ConfigError("invalid --bstrategy '" + spec + "'");
        if (parts.size() >= 2) o.beta = parse_number(parts[1], "occupation discount");
        if (parts.size() == 3) o.threshold = parse_number(parts[2], "occupation threshold");
        return o;
    }
    if (starts_with(spec, "subsets:")) {
        CustomSubsets cs;
        for (const auto& part : split(spec.substr(8), ';')) {
            StateSet s = StateSet::none(n);
            if (part != "-" && !part.empty()) {
                for (const auto& item : split(part, ',')) {
                    const std::size_t x = parse_index(item, "state index");
                    if (x >= n) throw ConfigError("state " + item + " out of range in --bstrategy");
                    s.insert(x);
                }
            }
            cs.subsets.push_back(std::move(s));
        }
        return cs;
    }
    throw ConfigError("invalid --bstrategy '" + spec + "' (expected full, empty, occupation[:beta[:threshold]] or "
                      "subsets:<list>;<list>...)");
}

std::optional<AsyncSchedule> parse_mask_schedule(const std::string& spec, const TotalCostModel& model) {
    if (spec == "none") return std::nullopt;
    if (spec == "round-robin") return AsyncSchedule::round_robin(model);
    if (spec == "by-state") {
        AsyncSchedule a;
        for (std::size_t x = 0; x < model.num_states(); ++x) {
            PairSet pairs = PairSet::none(model.num_pairs());
            for (std::size_t u = 0; u < model.num_controls(x); ++u) pairs.insert(model.pair_index(x, u));
            a.pair_masks.push_back(std::move(pairs));
            a.state_masks.push_back(StateSet::of(model.num_states(), {x}));
        }
        return a;
    }
    throw ConfigError("invalid --mask-schedule '" + spec + "' (expected none, round-robin or by-state)");
}

Policy parse_policy(const std::string& spec, const TotalCostModel& model) {
    const auto items = split(spec, ',');
    if (items.size() != model.num_states())
        throw ConfigError("--mu0 lists " + std::to_string(items.size()) + " controls for " +
                          std::to_string(model.num_states()) + " states");
    std::vector<std::size_t> controls;
    for (std::size_t x = 0; x < items.size(); ++x) {
        const std::size_t u = parse_index(items[x], "control index");
        if (u >= model.num_controls(x))
            throw ConfigError("--mu0: state " + std::to_string(x) + " has no control " + items[x]);
        controls.push_back(u);
    }
    return Policy::deterministic(model, controls);
}

double default_tolerance(double fallback) {
    const char* env = std::getenv("MVPI_TOL");
    if (!env || !*env) return fallback;
    try {
        const double v = parse_double(env);
        if (v > 0.0 && std::isfinite(v)) return v;
    } catch (const Error&) {
    }
    return fallback;
}

} // namespace mvpi::cli
