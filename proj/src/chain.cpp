#include "mvpi/chain.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <map>

namespace mvpi {

InducedChain induced_chain(const TotalCostModel& model, const Policy& policy) {
    require_valid_policy(model, policy);
    const std::size_t n = model.num_states();
    InducedChain chain;
    chain.cost.assign(n, 0.0);
    chain.rows.resize(n);
    for (std::size_t x = 0; x < n; ++x) {
        std::map<std::size_t, double> row;
        const auto& act = policy.action(x);
        if (const auto* fc = std::get_if<FamilyChoice>(&act)) {
            const auto& fam = model.state(x).families[fc->family];
            chain.cost[x] = fam.cost_at(fc->parameter);
            for (const auto& t : fam.transitions) row[t.target] += t.p0 + t.p1 * fc->parameter;
        } else {
            const auto& dist = std::get<std::vector<double>>(act);
            ExtReal c = 0.0;
            for (std::size_t u = 0; u < dist.size(); ++u) {
                if (dist[u] <= 0.0) continue;
                const auto& ctl = model.control(x, u);
                c += ExtReal(dist[u]) * ctl.cost;
                for (const auto& t : ctl.transitions) row[t.target] += dist[u] * t.prob;
            }
            chain.cost[x] = c;
        }
        for (const auto& [y, p] : row)
            if (p > 0.0) chain.rows[x].push_back({y, p});
    }
    return chain;
}

std::vector<std::vector<std::size_t>> strongly_connected_components(const std::vector<std::vector<std::size_t>>& adj) {
    // iterative Tarjan
    const std::size_t n = adj.size();
    constexpr std::size_t unvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, unvisited), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::vector<std::vector<std::size_t>> components;
    std::size_t counter = 0;

    struct Frame {
        std::size_t v;
        std::size_t next;
    };
    std::vector<Frame> call;
    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != unvisited) continue;
        call.push_back({root, 0});
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            auto& f = call.back();
            if (f.next < adj[f.v].size()) {
                const std::size_t w = adj[f.v][f.next++];
                if (index[w] == unvisited) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
                continue;
            }
            const std::size_t v = f.v;
            call.pop_back();
            if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
            if (low[v] == index[v]) {
                std::vector<std::size_t> comp;
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp.push_back(w);
                } while (w != v);
                std::sort(comp.begin(), comp.end());
                components.push_back(std::move(comp));
            }
        }
    }
    return components;
}

std::vector<bool> can_reach(const std::vector<std::vector<std::size_t>>& adj, const std::vector<bool>& targets) {
    const std::size_t n = adj.size();
    std::vector<std::vector<std::size_t>> rev(n);
    for (std::size_t v = 0; v < n; ++v)
        for (auto w : adj[v]) rev[w].push_back(v);
    std::vector<bool> seen(targets);
    std::vector<std::size_t> todo;
    for (std::size_t v = 0; v < n; ++v)
        if (seen[v]) todo.push_back(v);
    while (!todo.empty()) {
        const auto w = todo.back();
        todo.pop_back();
        for (auto v : rev[w])
            if (!seen[v]) {
                seen[v] = true;
                todo.push_back(v);
            }
    }
    return seen;
}

std::vector<std::vector<std::size_t>> support_graph(const InducedChain& chain) {
    std::vector<std::vector<std::size_t>> adj(chain.rows.size());
    for (std::size_t x = 0; x < chain.rows.size(); ++x)
        for (const auto& t : chain.rows[x])
            if (t.prob > 0.0) adj[x].push_back(t.target);
    return adj;
}

namespace {

void require_distribution(const std::vector<double>& p, std::size_t n, const char* what) {
    if (p.size() != n) throw ModelError(std::string(what) + " has the wrong length");
    double s = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw ModelError(std::string(what) + " has a negative entry");
        s += v;
    }
    if (!(std::fabs(s - 1.0) <= kProbabilityTolerance)) throw ModelError(std::string(what) + " does not sum to 1");
}

std::vector<double> step(const InducedChain& chain, const std::vector<double>& p) {
    std::vector<double> next(p.size(), 0.0);
    for (std::size_t x = 0; x < p.size(); ++x) {
        if (p[x] == 0.0) continue;
        for (const auto& t : chain.rows[x]) next[t.target] += p[x] * t.prob;
    }
    return next;
}

} // namespace

std::vector<double> state_marginal(const TotalCostModel& model, const Policy& policy,
                                   const std::vector<double>& initial, std::size_t n) {
    require_distribution(initial, model.num_states(), "initial distribution");
    const auto chain = induced_chain(model, policy);
    std::vector<double> p = initial;
    for (std::size_t k = 0; k < n; ++k) p = step(chain, p);
    return p;
}

ExtReal expected_value_at_stage(const TotalCostModel& model, const Policy& policy,
                                const std::vector<double>& initial, std::size_t n, const ValueVector& J) {
    const auto p = state_marginal(model, policy, initial, n);
    ExtReal s = 0.0;
    for (std::size_t x = 0; x < p.size(); ++x) s += ExtReal(p[x]) * J[x];
    return s;
}

std::vector<double> occupation_measure(const TotalCostModel& model, const Policy& policy,
                                       const std::vector<double>& rho, double beta) {
    if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("occupation measure needs beta in [0, 1)");
    const std::size_t n = model.num_states();
    require_distribution(rho, n, "initial distribution");
    const auto chain = induced_chain(model, policy);
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
    for (std::size_t x = 0; x < n; ++x) {
        rhs(static_cast<Eigen::Index>(x)) = (1.0 - beta) * rho[x];
        for (const auto& t : chain.rows[x])
            A(static_cast<Eigen::Index>(t.target), static_cast<Eigen::Index>(x)) -= beta * t.prob;
    }
    const Eigen::VectorXd p = A.partialPivLu().solve(rhs);
    std::vector<double> out(n);
    for (std::size_t x = 0; x < n; ++x) out[x] = std::max(0.0, p(static_cast<Eigen::Index>(x)));
    return out;
}

StateSet absorbing_core(const TotalCostModel& model, const Policy& policy, const StateSet& B) {
    const std::size_t n = model.num_states();
    if (B.universe() != n) throw ModelError("state subset has the wrong universe size");
    const auto adj = support_graph(induced_chain(model, policy));
    std::vector<bool> outside(n);
    for (std::size_t x = 0; x < n; ++x) outside[x] = !B.contains(x);
    const auto leaks = can_reach(adj, outside);
    StateSet core = StateSet::none(n);
    for (std::size_t x = 0; x < n; ++x)
        if (B.contains(x) && !leaks[x]) core.insert(x);
    return core;
}

namespace {

struct Arc {
    ExtReal cost;
    std::vector<std::size_t> support;
};

// Atomic controls plus the two endpoint controls of every family.
std::vector<std::vector<Arc>> closure_arcs(const TotalCostModel& model) {
    std::vector<std::vector<Arc>> arcs(model.num_states());
    for (std::size_t x = 0; x < model.num_states(); ++x) {
        const auto& s = model.state(x);
        for (const auto& c : s.controls) {
            Arc a{c.cost, {}};
            for (const auto& t : c.transitions)
                if (t.prob > 0.0) a.support.push_back(t.target);
            arcs[x].push_back(std::move(a));
        }
        for (const auto& f : s.families) {
            for (double t : {f.interval.lo, f.interval.hi}) {
                Arc a{f.cost_at(t), {}};
                for (const auto& tr : f.transitions)
                    if (tr.p0 + tr.p1 * t > 0.0) a.support.push_back(tr.target);
                arcs[x].push_back(std::move(a));
            }
        }
    }
    return arcs;
}

bool subset_of(const std::vector<std::size_t>& support, const std::vector<bool>& set) {
    return std::all_of(support.begin(), support.end(), [&](std::size_t y) { return set[y]; });
}

LimitClassification classify_nonnegative(const std::vector<std::vector<Arc>>& arcs) {
    const std::size_t n = arcs.size();
    // largest set that can be held forever at zero cost
    std::vector<bool> zero(n, true);
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t x = 0; x < n; ++x) {
            if (!zero[x]) continue;
            const bool ok = std::any_of(arcs[x].begin(), arcs[x].end(),
                                        [&](const Arc& a) { return a.cost == 0.0 && subset_of(a.support, zero); });
            if (!ok) {
                zero[x] = false;
                changed = true;
            }
        }
    }
    // states that reach the zero set with probability one through finite-cost controls
    std::vector<bool> region(n, true);
    for (;;) {
        std::vector<bool> good = zero;
        for (bool grew = true; grew;) {
            grew = false;
            for (std::size_t x = 0; x < n; ++x) {
                if (good[x] || !region[x]) continue;
                for (const auto& a : arcs[x]) {
                    if (!a.cost.is_finite() || !subset_of(a.support, region)) continue;
                    if (std::any_of(a.support.begin(), a.support.end(), [&](std::size_t y) { return good[y]; })) {
                        good[x] = true;
                        grew = true;
                        break;
                    }
                }
            }
        }
        if (good == region) break;
        region = good;
    }
    LimitClassification out{StateSet::none(n), StateSet::none(n)};
    for (std::size_t x = 0; x < n; ++x)
        if (!region[x]) out.pos_inf.insert(x);
    return out;
}

LimitClassification classify_nonpositive(const std::vector<std::vector<Arc>>& arcs) {
    const std::size_t n = arcs.size();
    std::vector<std::vector<bool>> allowed(n);
    for (std::size_t x = 0; x < n; ++x) allowed[x].assign(arcs[x].size(), true);
    std::vector<bool> alive(n, true);
    std::vector<std::size_t> comp_of(n, 0);

    // maximal end components by repeated SCC refinement
    for (bool changed = true; changed;) {
        changed = false;
        std::vector<std::vector<std::size_t>> adj(n);
        for (std::size_t x = 0; x < n; ++x) {
            if (!alive[x]) continue;
            for (std::size_t a = 0; a < arcs[x].size(); ++a)
                if (allowed[x][a])
                    for (auto y : arcs[x][a].support) adj[x].push_back(y);
        }
        const auto comps = strongly_connected_components(adj);
        for (std::size_t c = 0; c < comps.size(); ++c)
            for (auto x : comps[c]) comp_of[x] = c;
        for (std::size_t x = 0; x < n; ++x) {
            if (!alive[x]) continue;
            bool any = false;
            for (std::size_t a = 0; a < arcs[x].size(); ++a) {
                if (!allowed[x][a]) continue;
                for (auto y : arcs[x][a].support) {
                    if (!alive[y] || comp_of[y] != comp_of[x]) {
                        allowed[x][a] = false;
                        changed = true;
                        break;
                    }
                }
                any = any || allowed[x][a];
            }
            if (!any) {
                alive[x] = false;
                changed = true;
            }
        }
    }

    std::vector<bool> source(n, false);
    std::vector<bool> negative_comp(n, false);
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t a = 0; a < arcs[x].size(); ++a) {
            if (arcs[x][a].cost.is_neg_inf()) source[x] = true;
            if (alive[x] && allowed[x][a] && arcs[x][a].cost < 0.0) negative_comp[comp_of[x]] = true;
        }
    }
    for (std::size_t x = 0; x < n; ++x)
        if (alive[x] && negative_comp[comp_of[x]]) source[x] = true;

    std::vector<std::vector<std::size_t>> full(n);
    for (std::size_t x = 0; x < n; ++x)
        for (const auto& a : arcs[x])
            for (auto y : a.support) full[x].push_back(y);
    const auto reach = can_reach(full, source);
    LimitClassification out{StateSet::none(n), StateSet::none(n)};
    for (std::size_t x = 0; x < n; ++x)
        if (reach[x]) out.neg_inf.insert(x);
    return out;
}

} // namespace

std::optional<LimitClassification> limit_infinite_states(const TotalCostModel& model) {
    const std::size_t n = model.num_states();
    if (model.discount() < 1.0 || model.regime() == Regime::discounted)
        return LimitClassification{StateSet::none(n), StateSet::none(n)};
    if (model.has_families()) {
        for (const auto& s : model.states())
            for (const auto& c : s.controls)
                if (!c.cost.is_finite()) return std::nullopt;
    }
    const auto arcs = closure_arcs(model);
    return model.regime() == Regime::nonnegative ? classify_nonnegative(arcs) : classify_nonpositive(arcs);
}

LimitClassification policy_infinite_states(const TotalCostModel& model, const InducedChain& chain) {
    const std::size_t n = chain.rows.size();
    const auto adj = support_graph(chain);
    std::vector<bool> pos(n, false), neg(n, false);
    for (std::size_t x = 0; x < n; ++x) {
        if (chain.cost[x].is_pos_inf()) pos[x] = true;
        if (chain.cost[x].is_neg_inf()) neg[x] = true;
    }
    if (model.discount() >= 1.0) {
        // closed classes accumulate their cost forever
        const auto comps = strongly_connected_components(adj);
        std::vector<std::size_t> comp_of(n);
        for (std::size_t c = 0; c < comps.size(); ++c)
            for (auto x : comps[c]) comp_of[x] = c;
        for (std::size_t c = 0; c < comps.size(); ++c) {
            bool closed = true;
            bool has_pos = false;
            bool has_neg = false;
            for (auto x : comps[c]) {
                for (auto y : adj[x]) closed = closed && comp_of[y] == c;
                has_pos = has_pos || chain.cost[x] > 0.0;
                has_neg = has_neg || chain.cost[x] < 0.0;
            }
            if (!closed) continue;
            if (has_pos && has_neg)
                throw ModelError("recurrent class with costs of both signs: total cost is undefined");
            for (auto x : comps[c]) {
                if (has_pos) pos[x] = true;
                if (has_neg) neg[x] = true;
            }
        }
    }
    const auto reach_pos = can_reach(adj, pos);
    const auto reach_neg = can_reach(adj, neg);
    LimitClassification out{StateSet::none(n), StateSet::none(n)};
    for (std::size_t x = 0; x < n; ++x) {
        if (reach_pos[x]) out.pos_inf.insert(x);
        else if (reach_neg[x]) out.neg_inf.insert(x);
    }
    return out;
}

} // namespace mvpi
