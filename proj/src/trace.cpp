#include "mvpi/trace.hpp"

#include <bit>
#include <cstdio>

namespace mvpi {

void IterationTrace::append(IterationRecord r) {
    if (!records_.empty() && r.k <= records_.back().k)
        throw Error("trace records must have strictly increasing k (got " + std::to_string(r.k) + " after " +
                    std::to_string(records_.back().k) + ")");
    records_.push_back(std::move(r));
}

void IterationTrace::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : config)
        if (k == key) {
            v = value;
            return;
        }
    config.emplace_back(key, value);
}

std::optional<std::string> IterationTrace::get(const std::string& key) const {
    for (const auto& [k, v] : config)
        if (k == key) return v;
    return std::nullopt;
}

std::string OperatorCounts::describe() const {
    return "T=" + std::to_string(bellman) + " T_mu=" + std::to_string(policy_backup) +
           " F_theta=" + std::to_string(f_theta) + " solves=" + std::to_string(linear_solve) +
           " lp=" + std::to_string(lp_sweep);
}

namespace {

struct Fnv {
    std::uint64_t h = 1469598103934665603ull;
    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= c[i];
            h *= 1099511628211ull;
        }
    }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u64(s.size());
        bytes(s.data(), s.size());
    }
};

} // namespace

std::string model_fingerprint(const TotalCostModel& model) {
    Fnv f;
    f.u64(static_cast<std::uint64_t>(model.regime()));
    f.f64(model.discount());
    f.f64(model.cost_bound() ? *model.cost_bound() : -1.0);
    f.u64(model.num_states());
    for (const auto& s : model.states()) {
        f.str(s.name);
        f.u64(s.controls.size());
        for (const auto& c : s.controls) {
            f.str(c.id);
            f.f64(c.cost.value());
            f.u64(c.transitions.size());
            for (const auto& t : c.transitions) {
                f.u64(t.target);
                f.f64(t.prob);
            }
        }
        f.u64(s.families.size());
        for (const auto& fam : s.families) {
            f.str(fam.id);
            f.f64(fam.interval.lo);
            f.f64(fam.interval.hi);
            f.u64(fam.interval.lo_closed ? 1 : 0);
            f.u64(fam.interval.hi_closed ? 1 : 0);
            f.f64(fam.c0);
            f.f64(fam.c1);
            for (const auto& t : fam.transitions) {
                f.u64(t.target);
                f.f64(t.p0);
                f.f64(t.p1);
            }
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(f.h));
    return buf;
}

} // namespace mvpi
