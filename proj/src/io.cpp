#include "mvpi/io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <variant>

#include <json.hpp>

namespace mvpi {

using nlohmann::json;

namespace {

using PathItem = std::variant<std::string, std::size_t>;
using Path = std::vector<PathItem>;

std::string pointer(const Path& path) {
    if (path.empty()) return "/";
    std::string s;
    for (const auto& p : path) {
        s += "/";
        if (const auto* k = std::get_if<std::string>(&p)) s += *k;
        else s += std::to_string(std::get<std::size_t>(p));
    }
    return s;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

// Byte offsets of values inside a document that is already known to be valid JSON.
class Locator {
public:
    explicit Locator(const std::string& text) : t_(text) {}

    std::size_t find(const Path& path) {
        std::size_t best = 0;
        pos_ = 0;
        ws();
        locate(path, 0, best);
        return best;
    }

private:
    void ws() {
        while (pos_ < t_.size() && (t_[pos_] == ' ' || t_[pos_] == '\t' || t_[pos_] == '\n' || t_[pos_] == '\r'))
            ++pos_;
    }

    std::string string_token() {
        std::string out;
        ++pos_;
        while (pos_ < t_.size() && t_[pos_] != '"') {
            if (t_[pos_] == '\\') ++pos_;
            if (pos_ < t_.size()) out += t_[pos_++];
        }
        ++pos_;
        return out;
    }

    void skip_value() {
        if (pos_ >= t_.size()) return;
        const char c = t_[pos_];
        if (c == '"') {
            string_token();
            return;
        }
        if (c == '{' || c == '[') {
            int depth = 0;
            while (pos_ < t_.size()) {
                const char d = t_[pos_];
                if (d == '"') {
                    string_token();
                    continue;
                }
                if (d == '{' || d == '[') ++depth;
                if (d == '}' || d == ']') {
                    --depth;
                    if (depth == 0) {
                        ++pos_;
                        return;
                    }
                }
                ++pos_;
            }
            return;
        }
        while (pos_ < t_.size() && t_[pos_] != ',' && t_[pos_] != '}' && t_[pos_] != ']' && t_[pos_] != ' ' &&
               t_[pos_] != '\n' && t_[pos_] != '\r' && t_[pos_] != '\t')
            ++pos_;
    }

    // Walks as deep as the path allows; `best` ends at the deepest matched value.
    void locate(const Path& path, std::size_t depth, std::size_t& best) {
        best = pos_;
        if (depth == path.size() || pos_ >= t_.size()) return;
        if (t_[pos_] == '{') {
            const auto* key = std::get_if<std::string>(&path[depth]);
            ++pos_;
            ws();
            while (pos_ < t_.size() && t_[pos_] != '}') {
                const std::string k = string_token();
                ws();
                ++pos_;  // ':'
                ws();
                if (key && k == *key) {
                    locate(path, depth + 1, best);
                    return;
                }
                skip_value();
                ws();
                if (pos_ < t_.size() && t_[pos_] == ',') ++pos_;
                ws();
            }
        } else if (t_[pos_] == '[') {
            const auto* idx = std::get_if<std::size_t>(&path[depth]);
            ++pos_;
            ws();
            std::size_t i = 0;
            while (pos_ < t_.size() && t_[pos_] != ']') {
                if (idx && i == *idx) {
                    locate(path, depth + 1, best);
                    return;
                }
                skip_value();
                ws();
                if (pos_ < t_.size() && t_[pos_] == ',') ++pos_;
                ws();
                ++i;
            }
        }
    }

    const std::string& t_;
    std::size_t pos_ = 0;
};

Path operator/(Path p, PathItem item) {
    p.push_back(std::move(item));
    return p;
}

class Reader {
public:
    Reader(const std::string& text, const ParseOptions& options, std::vector<std::string>& warnings)
        : text_(text), options_(options), warnings_(warnings) {}

    [[noreturn]] void fail(const Path& path, const std::string& message) const {
        const auto [line, col] = line_column(text_, Locator(text_).find(path));
        throw ParseError(message + " at " + pointer(path), line, col);
    }

    const json& object(const json& j, const Path& path, std::initializer_list<const char*> allowed) const {
        if (!j.is_object()) fail(path, "expected an object");
        const std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& [k, v] : j.items()) {
            if (ok.count(k)) continue;
            if (options_.strict) fail(path / k, "unknown field '" + k + "'");
            warnings_.push_back("ignored unknown field " + pointer(path / k));
        }
        return j;
    }

    const json& member(const json& j, const Path& path, const char* key) const {
        const auto it = j.find(key);
        if (it == j.end()) fail(path, std::string("missing field '") + key + "'");
        return *it;
    }

    const json* optional_member(const json& j, const char* key) const {
        const auto it = j.find(key);
        return it == j.end() ? nullptr : &*it;
    }

    const json& array(const json& j, const Path& path) const {
        if (!j.is_array()) fail(path, "expected an array");
        return j;
    }

    double number(const json& j, const Path& path) const {
        if (!j.is_number()) fail(path, "expected a number");
        return j.get<double>();
    }

    ExtReal ext(const json& j, const Path& path) const {
        if (j.is_number()) return j.get<double>();
        if (j.is_string()) {
            try {
                return parse_ext_real(j.get<std::string>());
            } catch (const Error&) {
            }
        }
        fail(path, "expected a number or one of \"inf\", \"-inf\"");
    }

    bool boolean(const json& j, const Path& path) const {
        if (!j.is_boolean()) fail(path, "expected true or false");
        return j.get<bool>();
    }

    std::string string(const json& j, const Path& path) const {
        if (!j.is_string()) fail(path, "expected a string");
        return j.get<std::string>();
    }

private:
    const std::string& text_;
    const ParseOptions& options_;
    std::vector<std::string>& warnings_;
};

std::size_t resolve_state(const Reader& r, const json& j, const Path& path, const std::vector<std::string>& names) {
    if (j.is_number_integer() || j.is_number_unsigned()) {
        const auto v = j.get<long long>();
        if (v < 0 || static_cast<std::size_t>(v) >= names.size())
            r.fail(path, "successor state " + std::to_string(v) + " out of range");
        return static_cast<std::size_t>(v);
    }
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        std::optional<std::size_t> found;
        for (std::size_t x = 0; x < names.size(); ++x)
            if (names[x] == name) {
                if (found) r.fail(path, "state name '" + name + "' is ambiguous");
                found = x;
            }
        if (!found) r.fail(path, "unknown state '" + name + "'");
        return *found;
    }
    r.fail(path, "expected a state index or name");
}

json ext_json(ExtReal v) {
    if (v.is_pos_inf()) return "inf";
    if (v.is_neg_inf()) return "-inf";
    return v.value();
}

} // namespace

std::string format_double(double v) { return to_string(ExtReal(v)); }

double parse_double(const std::string& text) { return parse_ext_real(text).value(); }

ModelDocument parse_model(const std::string& text, const ParseOptions& options) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        std::string msg = e.what();
        if (const auto p = msg.find("syntax error"); p != std::string::npos) msg = msg.substr(p);
        throw ParseError(msg, line, col);
    }

    ModelDocument out;
    const Reader r(text, options, out.warnings);
    const Path root;
    r.object(doc, root, {"format_version", "regime", "discount", "cost_bound", "states", "ground_truth"});

    const json& version = r.member(doc, root, "format_version");
    if (!version.is_number_integer() || version.get<long long>() != kModelFormatVersion)
        r.fail(root / "format_version", "unsupported format_version (expected " +
                                            std::to_string(kModelFormatVersion) + ")");
    Regime regime{};
    try {
        regime = parse_regime(r.string(r.member(doc, root, "regime"), root / "regime"));
    } catch (const ModelError& e) {
        r.fail(root / "regime", e.what());
    }
    const double discount = r.number(r.member(doc, root, "discount"), root / "discount");
    std::optional<double> bound;
    if (const json* b = r.optional_member(doc, "cost_bound")) bound = r.number(*b, root / "cost_bound");

    const Path sp = root / "states";
    const json& states = r.array(r.member(doc, root, "states"), sp);
    std::vector<std::string> names;
    for (std::size_t x = 0; x < states.size(); ++x) {
        r.object(states[x], sp / x, {"name", "controls", "families"});
        names.push_back(r.string(r.member(states[x], sp / x, "name"), sp / x / "name"));
    }

    std::vector<StateSpec> specs(states.size());
    for (std::size_t x = 0; x < states.size(); ++x) {
        const Path xp = sp / x;
        specs[x].name = names[x];
        if (const json* cs = r.optional_member(states[x], "controls")) {
            const Path cp = xp / "controls";
            r.array(*cs, cp);
            for (std::size_t u = 0; u < cs->size(); ++u) {
                const json& cj = (*cs)[u];
                const Path up = cp / u;
                r.object(cj, up, {"id", "cost", "transitions"});
                AtomicControl c;
                c.id = r.string(r.member(cj, up, "id"), up / "id");
                c.cost = r.ext(r.member(cj, up, "cost"), up / "cost");
                const Path tp = up / "transitions";
                const json& ts = r.array(r.member(cj, up, "transitions"), tp);
                for (std::size_t i = 0; i < ts.size(); ++i) {
                    r.object(ts[i], tp / i, {"state", "prob"});
                    Transition t;
                    t.target = resolve_state(r, r.member(ts[i], tp / i, "state"), tp / i / "state", names);
                    t.prob = r.number(r.member(ts[i], tp / i, "prob"), tp / i / "prob");
                    c.transitions.push_back(t);
                }
                specs[x].controls.push_back(std::move(c));
            }
        }
        if (const json* fs = r.optional_member(states[x], "families")) {
            const Path fp = xp / "families";
            r.array(*fs, fp);
            for (std::size_t f = 0; f < fs->size(); ++f) {
                const json& fj = (*fs)[f];
                const Path up = fp / f;
                r.object(fj, up, {"id", "lo", "hi", "lo_closed", "hi_closed", "cost", "transitions"});
                AffineFamily fam;
                fam.id = r.string(r.member(fj, up, "id"), up / "id");
                fam.interval.lo = r.number(r.member(fj, up, "lo"), up / "lo");
                fam.interval.hi = r.number(r.member(fj, up, "hi"), up / "hi");
                fam.interval.lo_closed = r.boolean(r.member(fj, up, "lo_closed"), up / "lo_closed");
                fam.interval.hi_closed = r.boolean(r.member(fj, up, "hi_closed"), up / "hi_closed");
                const json& cost = r.array(r.member(fj, up, "cost"), up / "cost");
                if (cost.size() != 2) r.fail(up / "cost", "expected [c0, c1]");
                fam.c0 = r.number(cost[0], up / "cost" / std::size_t{0});
                fam.c1 = r.number(cost[1], up / "cost" / std::size_t{1});
                const Path tp = up / "transitions";
                const json& ts = r.array(r.member(fj, up, "transitions"), tp);
                for (std::size_t i = 0; i < ts.size(); ++i) {
                    r.object(ts[i], tp / i, {"state", "p0", "p1"});
                    AffineTransition t;
                    t.target = resolve_state(r, r.member(ts[i], tp / i, "state"), tp / i / "state", names);
                    t.p0 = r.number(r.member(ts[i], tp / i, "p0"), tp / i / "p0");
                    t.p1 = r.number(r.member(ts[i], tp / i, "p1"), tp / i / "p1");
                    fam.transitions.push_back(t);
                }
                specs[x].families.push_back(std::move(fam));
            }
        }
    }
    out.model = TotalCostModel(std::move(specs), discount, regime, bound);

    if (const json* gt = r.optional_member(doc, "ground_truth")) {
        const Path gp = root / "ground_truth";
        r.object(*gt, gp, {"Jstar", "Qstar"});
        const json& js = r.array(r.member(*gt, gp, "Jstar"), gp / "Jstar");
        if (js.size() != out.model.num_states())
            r.fail(gp / "Jstar", "Jstar needs " + std::to_string(out.model.num_states()) + " entries");
        ValueVector J(js.size());
        for (std::size_t i = 0; i < js.size(); ++i) J[i] = r.ext(js[i], gp / "Jstar" / i);
        std::optional<QVector> Q;
        if (const json* qs = r.optional_member(*gt, "Qstar")) {
            r.array(*qs, gp / "Qstar");
            if (qs->size() != out.model.num_pairs())
                r.fail(gp / "Qstar", "Qstar needs " + std::to_string(out.model.num_pairs()) + " entries");
            Q.emplace(qs->size());
            for (std::size_t i = 0; i < qs->size(); ++i) (*Q)[i] = r.ext((*qs)[i], gp / "Qstar" / i);
        }
        out.ground_truth = GroundTruth{std::move(J), std::move(Q)};
    }
    return out;
}

ModelDocument read_model_file(const std::string& path, const ParseOptions& options) {
    return parse_model(read_text_file(path), options);
}

std::string render_model(const TotalCostModel& model, const std::optional<GroundTruth>& truth) {
    json doc = json::object();
    doc["format_version"] = kModelFormatVersion;
    doc["regime"] = std::string(1, regime_letter(model.regime()));
    doc["discount"] = model.discount();
    if (model.cost_bound()) doc["cost_bound"] = *model.cost_bound();
    json states = json::array();
    for (const auto& s : model.states()) {
        json sj = json::object();
        sj["name"] = s.name;
        json controls = json::array();
        for (const auto& c : s.controls) {
            json ts = json::array();
            for (const auto& t : c.transitions) ts.push_back({{"state", t.target}, {"prob", t.prob}});
            controls.push_back({{"id", c.id}, {"cost", ext_json(c.cost)}, {"transitions", ts}});
        }
        sj["controls"] = controls;
        if (!s.families.empty()) {
            json fams = json::array();
            for (const auto& f : s.families) {
                json ts = json::array();
                for (const auto& t : f.transitions) ts.push_back({{"state", t.target}, {"p0", t.p0}, {"p1", t.p1}});
                fams.push_back({{"id", f.id},
                                {"lo", f.interval.lo},
                                {"hi", f.interval.hi},
                                {"lo_closed", f.interval.lo_closed},
                                {"hi_closed", f.interval.hi_closed},
                                {"cost", {f.c0, f.c1}},
                                {"transitions", ts}});
            }
            sj["families"] = fams;
        }
        states.push_back(sj);
    }
    doc["states"] = states;
    if (truth) {
        json gt = json::object();
        json js = json::array();
        for (auto v : truth->J) js.push_back(ext_json(v));
        gt["Jstar"] = js;
        if (truth->Q) {
            json qs = json::array();
            for (auto v : *truth->Q) qs.push_back(ext_json(v));
            gt["Qstar"] = qs;
        }
        doc["ground_truth"] = gt;
    }
    return doc.dump(2) + "\n";
}

void write_model_file(const std::string& path, const TotalCostModel& model, const std::optional<GroundTruth>& truth) {
    write_text_file(path, render_model(model, truth));
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
    if (!out) throw Error("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Traces

TraceFormat parse_trace_format(const std::string& text) {
    if (text == "csv") return TraceFormat::csv;
    if (text == "json") return TraceFormat::json;
    throw ConfigError("unknown trace format '" + text + "' (expected csv or json)");
}

namespace {

const char* const kColumns[] = {"k",  "residual", "dist_J", "dist_Q", "above_optimal", "below_vi", "policy",
                                "B", "certificates", "wall_time"};

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line, std::size_t line_no) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw ParseError("unterminated quoted field", line_no, line.size() + 1);
    cells.push_back(std::move(cur));
    return cells;
}

std::string opt_double(const std::optional<double>& v) { return v ? format_double(*v) : ""; }
std::string opt_bool(const std::optional<bool>& v) { return v ? (*v ? "1" : "0") : ""; }

json opt_json(const std::optional<double>& v) {
    if (!v) return nullptr;
    return ext_json(*v);
}
json opt_json(const std::optional<bool>& v) {
    if (!v) return nullptr;
    return *v;
}

std::optional<double> json_opt_double(const json& j) {
    if (j.is_null()) return std::nullopt;
    if (j.is_string()) return parse_double(j.get<std::string>());
    return j.get<double>();
}

} // namespace

std::string render_trace(const IterationTrace& trace, TraceFormat format) {
    if (format == TraceFormat::json) {
        json doc = json::object();
        json header = json::object();
        json config = json::array();
        for (const auto& [k, v] : trace.config) config.push_back({k, v});
        header["config"] = config;
        header["model_hash"] = trace.model_hash;
        header["seed"] = trace.seed;
        doc["header"] = header;
        json rows = json::array();
        for (const auto& r : trace.records()) {
            rows.push_back({{"k", r.k},
                            {"residual", opt_json(r.residual)},
                            {"dist_J", opt_json(r.dist_J)},
                            {"dist_Q", opt_json(r.dist_Q)},
                            {"above_optimal", opt_json(r.above_optimal)},
                            {"below_vi", opt_json(r.below_vi)},
                            {"policy", r.policy},
                            {"B", r.B},
                            {"certificates", r.certificates},
                            {"wall_time", r.wall_time}});
        }
        doc["records"] = rows;
        return doc.dump(2) + "\n";
    }

    std::string out;
    for (const auto& [k, v] : trace.config) out += "# config." + k + "=" + v + "\n";
    out += "# model_hash=" + trace.model_hash + "\n";
    out += "# seed=" + std::to_string(trace.seed) + "\n";
    for (std::size_t i = 0; i < std::size(kColumns); ++i) out += (i ? "," : "") + std::string(kColumns[i]);
    out += "\n";
    for (const auto& r : trace.records()) {
        out += std::to_string(r.k) + "," + opt_double(r.residual) + "," + opt_double(r.dist_J) + "," +
               opt_double(r.dist_Q) + "," + opt_bool(r.above_optimal) + "," + opt_bool(r.below_vi) + "," +
               csv_quote(r.policy) + "," + csv_quote(r.B) + "," + csv_quote(r.certificates) + "," +
               format_double(r.wall_time) + "\n";
    }
    return out;
}

IterationTrace parse_trace(const std::string& text, TraceFormat format) {
    IterationTrace trace;
    if (format == TraceFormat::json) {
        json doc;
        try {
            doc = json::parse(text);
        } catch (const json::parse_error& e) {
            const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
            throw ParseError("malformed trace JSON", line, col);
        }
        try {
            const json& header = doc.at("header");
            for (const auto& kv : header.at("config")) trace.set(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
            trace.model_hash = header.at("model_hash").get<std::string>();
            trace.seed = header.at("seed").get<std::uint64_t>();
            for (const auto& row : doc.at("records")) {
                IterationRecord r;
                r.k = row.at("k").get<std::size_t>();
                r.residual = json_opt_double(row.at("residual"));
                r.dist_J = json_opt_double(row.at("dist_J"));
                r.dist_Q = json_opt_double(row.at("dist_Q"));
                if (!row.at("above_optimal").is_null()) r.above_optimal = row.at("above_optimal").get<bool>();
                if (!row.at("below_vi").is_null()) r.below_vi = row.at("below_vi").get<bool>();
                r.policy = row.at("policy").get<std::string>();
                r.B = row.at("B").get<std::string>();
                r.certificates = row.at("certificates").get<std::string>();
                r.wall_time = row.at("wall_time").get<double>();
                trace.append(std::move(r));
            }
        } catch (const json::exception& e) {
            throw ParseError(std::string("malformed trace: ") + e.what(), 1, 1);
        }
        return trace;
    }

    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string body = line.substr(line.find_first_not_of("# "));
            const auto eq = body.find('=');
            if (eq == std::string::npos) throw ParseError("header line without '='", line_no, 1);
            const std::string key = body.substr(0, eq);
            const std::string value = body.substr(eq + 1);
            if (key.rfind("config.", 0) == 0) trace.set(key.substr(7), value);
            else if (key == "model_hash") trace.model_hash = value;
            else if (key == "seed") trace.seed = std::stoull(value);
            continue;
        }
        const auto cells = csv_split(line, line_no);
        if (!header_seen) {
            if (cells.size() != std::size(kColumns) || cells[0] != "k")
                throw ParseError("unexpected trace column header", line_no, 1);
            header_seen = true;
            continue;
        }
        if (cells.size() != std::size(kColumns))
            throw ParseError("expected " + std::to_string(std::size(kColumns)) + " columns, found " +
                                 std::to_string(cells.size()),
                             line_no, 1);
        try {
            IterationRecord r;
            r.k = std::stoull(cells[0]);
            auto od = [](const std::string& s) -> std::optional<double> {
                if (s.empty()) return std::nullopt;
                return parse_double(s);
            };
            auto ob = [](const std::string& s) -> std::optional<bool> {
                if (s.empty()) return std::nullopt;
                if (s == "1") return true;
                if (s == "0") return false;
                throw Error("bad flag '" + s + "'");
            };
            r.residual = od(cells[1]);
            r.dist_J = od(cells[2]);
            r.dist_Q = od(cells[3]);
            r.above_optimal = ob(cells[4]);
            r.below_vi = ob(cells[5]);
            r.policy = cells[6];
            r.B = cells[7];
            r.certificates = cells[8];
            r.wall_time = parse_double(cells[9]);
            trace.append(std::move(r));
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(std::string("bad trace row: ") + e.what(), line_no, 1);
        }
    }
    return trace;
}

void write_trace_file(const std::string& path, const IterationTrace& trace, TraceFormat format) {
    write_text_file(path, render_trace(trace, format));
}

} // namespace mvpi
