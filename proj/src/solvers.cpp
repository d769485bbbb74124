#include "mvpi/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "mvpi/chain.hpp"
#include "mvpi/operators.hpp"
#include "mvpi/stopping.hpp"

namespace mvpi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kStuckTolerance = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

ValueVector initial_J(const TotalCostModel& model, const SolverConfig& config) {
    return config.j0 ? *config.j0 : ValueVector(model.num_states(), 0.0);
}

void echo_config(IterationTrace& trace, const TotalCostModel& model, const SolverConfig& config,
                 Algorithm algorithm) {
    trace.set("algorithm", to_string(algorithm));
    trace.set("regime", std::string(1, regime_letter(model.regime())));
    trace.set("discount", to_string(ExtReal(model.discount())));
    trace.set("tolerance", to_string(ExtReal(config.tolerance)));
    trace.set("max_iterations", std::to_string(config.max_iterations));
    if (algorithm == Algorithm::modified_policy_iteration || algorithm == Algorithm::mixed)
        trace.set("nk", config.nk.describe());
    if (algorithm == Algorithm::mixed || algorithm == Algorithm::lp_variant) {
        trace.set("epsilon", to_string(ExtReal(config.epsilon)));
        trace.set("bstrategy", describe(config.b_strategy));
    }
    if (config.j0) trace.set("j0", to_string(*config.j0));
    if (config.clamp_lo) trace.set("clamp_lo", to_string(*config.clamp_lo));
    if (config.clamp_hi) trace.set("clamp_hi", to_string(*config.clamp_hi));
    if (config.async) trace.set("async_cycle", std::to_string(config.async->cycle()));
    trace.model_hash = model_fingerprint(model);
    trace.seed = config.seed;
}

std::optional<double> dist_or_none(const ValueVector& J, const std::optional<GroundTruth>& truth,
                                   const std::vector<bool>& skip = {}) {
    if (!truth) return std::nullopt;
    return sup_distance_excluding(J, truth->J, skip);
}

std::optional<double> qdist_or_none(const QVector& Q, const std::optional<GroundTruth>& truth) {
    if (!truth || !truth->Q) return std::nullopt;
    return sup_distance(Q, *truth->Q);
}

const char* monotone_label(const ValueVector& prev, const ValueVector& next) {
    const bool down = all_leq(next, prev);
    const bool up = all_leq(prev, next);
    if (down && up) return "monotone=constant";
    if (down) return "monotone=decreasing";
    if (up) return "monotone=increasing";
    return "monotone=none";
}

std::vector<bool> infinite_skip(const TotalCostModel& model, std::optional<LimitClassification>& cls) {
    std::vector<bool> skip(model.num_states(), false);
    if (model.discount() < 1.0) return skip;
    cls = limit_infinite_states(model);
    if (!cls) return skip;
    for (std::size_t x = 0; x < model.num_states(); ++x)
        skip[x] = cls->pos_inf.contains(x) || cls->neg_inf.contains(x);
    return skip;
}

Policy splice(const Policy& improved, const Policy& fallback, const StateSet& region) {
    std::vector<Policy::Action> actions;
    actions.reserve(improved.size());
    for (std::size_t x = 0; x < improved.size(); ++x)
        actions.push_back(region.contains(x) ? improved.action(x) : fallback.action(x));
    return Policy(std::move(actions));
}

StateSet choose_B(const TotalCostModel& model, const BStrategy& strategy, const Policy& mu, std::size_t k) {
    const std::size_t n = model.num_states();
    return std::visit(overloaded{
                          [&](const FullB&) { return StateSet::all(n); },
                          [&](const EmptyB&) { return StateSet::none(n); },
                          [&](const OccupationSupport& o) {
                              const auto p = occupation_measure(model, mu, o.rho, o.beta);
                              std::vector<bool> m(n);
                              for (std::size_t x = 0; x < n; ++x) m[x] = p[x] > o.threshold;
                              return StateSet(std::move(m));
                          },
                          [&](const CustomSubsets& c) { return c.subsets[std::min(k, c.subsets.size() - 1)]; },
                          [&](const SpliceRegion&) { return StateSet::all(n); },
                      },
                      strategy);
}

Policy choose_policy(const TotalCostModel& model, const SolverConfig& config, const QVector& Q, std::size_t k) {
    Policy mu;
    if (k < config.injected_policies.size())
        mu = config.injected_policies[k];
    else if (k == 0 && config.mu0)
        mu = *config.mu0;
    else
        mu = greedy_select(model, Q, config.epsilon);
    if (const auto* s = std::get_if<SpliceRegion>(&config.b_strategy)) mu = splice(mu, s->fallback, s->region);
    return mu;
}

ValueVector apply_clamp(const ValueVector& J, const SolverConfig& config) {
    if (!config.clamp_lo && !config.clamp_hi) return J;
    const ValueVector lo = config.clamp_lo ? *config.clamp_lo : ValueVector(J.size(), ExtReal::neg_inf());
    const ValueVector hi = config.clamp_hi ? *config.clamp_hi : ValueVector(J.size(), ExtReal::inf());
    return clamped(J, lo, hi);
}

bool dominates_truth(const std::optional<GroundTruth>& truth, const ValueVector& J0, const QVector* Q0) {
    if (!truth) return false;
    if (!all_leq(truth->J, J0)) return false;
    if (Q0 && truth->Q && !all_leq(*truth->Q, *Q0)) return false;
    return true;
}

// Smallest finite slack of a <= b over entries; -inf when an infinite violation occurs.
template <class Tag>
double leq_margin(const ExtVector<Tag>& a, const ExtVector<Tag>& b) {
    double m = kInf;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) {
            m = std::min(m, 0.0);
            continue;
        }
        const ExtReal gap = b[i] - a[i];
        if (b[i].is_pos_inf() || a[i].is_neg_inf()) continue;
        if (a[i].is_pos_inf() || b[i].is_neg_inf()) return -kInf;
        m = std::min(m, gap.value());
    }
    return m;
}

} // namespace

const char* to_string(Algorithm a) noexcept {
    switch (a) {
    case Algorithm::value_iteration: return "vi";
    case Algorithm::policy_iteration: return "pi";
    case Algorithm::modified_policy_iteration: return "mpi";
    case Algorithm::mixed: return "mixed";
    case Algorithm::lp_variant: return "lp-variant";
    }
    return "?";
}

Algorithm parse_algorithm(const std::string& text) {
    if (text == "vi") return Algorithm::value_iteration;
    if (text == "pi") return Algorithm::policy_iteration;
    if (text == "mpi") return Algorithm::modified_policy_iteration;
    if (text == "mixed") return Algorithm::mixed;
    if (text == "lp-variant" || text == "lp") return Algorithm::lp_variant;
    throw ConfigError("unknown algorithm '" + text + "' (expected vi, pi, mpi, mixed or lp-variant)");
}

const char* to_string(Termination t) noexcept {
    switch (t) {
    case Termination::converged: return "converged";
    case Termination::cap: return "cap";
    case Termination::stuck: return "stuck";
    case Termination::optimal_certified: return "optimal-certified";
    case Termination::cycle: return "cycle";
    }
    return "?";
}

NkSchedule NkSchedule::constant(std::size_t n) {
    NkSchedule s;
    s.ns_ = {n};
    return s;
}

NkSchedule NkSchedule::list(std::vector<std::size_t> ns) {
    if (ns.empty()) throw ConfigError("n_k list must not be empty");
    NkSchedule s;
    s.ns_ = std::move(ns);
    return s;
}

NkSchedule NkSchedule::exact() {
    NkSchedule s;
    s.ns_.clear();
    s.exact_ = true;
    return s;
}

std::size_t NkSchedule::at(std::size_t k) const {
    if (exact_) throw ConfigError("exact n_k schedule has no step count");
    return ns_[std::min(k, ns_.size() - 1)];
}

std::string NkSchedule::describe() const {
    if (exact_) return "exact";
    std::string s;
    for (std::size_t i = 0; i < ns_.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(ns_[i]);
    }
    return s;
}

NkSchedule NkSchedule::parse(const std::string& text) {
    if (text == "exact") return exact();
    std::vector<std::size_t> ns;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t pos = 0;
        long long v = 0;
        try {
            v = std::stoll(item, &pos);
        } catch (const std::exception&) {
            throw ConfigError("invalid n_k entry '" + item + "'");
        }
        if (pos != item.size() || v < 1) throw ConfigError("invalid n_k entry '" + item + "' (need an integer >= 1)");
        ns.push_back(static_cast<std::size_t>(v));
    }
    return list(std::move(ns));
}

std::string describe(const BStrategy& b) {
    return std::visit(overloaded{
                          [](const FullB&) -> std::string { return "full"; },
                          [](const EmptyB&) -> std::string { return "empty"; },
                          [](const OccupationSupport& o) -> std::string {
                              return "occupation(beta=" + fmt(o.beta) + ",threshold=" + fmt(o.threshold) + ")";
                          },
                          [](const CustomSubsets& c) -> std::string {
                              std::string s = "custom(";
                              for (std::size_t i = 0; i < c.subsets.size(); ++i) {
                                  if (i) s += ";";
                                  s += c.subsets[i].describe();
                              }
                              return s + ")";
                          },
                          [](const SpliceRegion& r) -> std::string {
                              return "splice(region=" + r.region.describe() + ")";
                          },
                      },
                      b);
}

AsyncSchedule AsyncSchedule::round_robin(const TotalCostModel& model) {
    AsyncSchedule s;
    for (std::size_t i = 0; i < model.num_pairs(); ++i) {
        PairSet p = PairSet::none(model.num_pairs());
        p.insert(i);
        s.pair_masks.push_back(std::move(p));
        s.state_masks.push_back(StateSet::of(model.num_states(), {model.pair_at(i).first}));
    }
    return s;
}

void validate_config(const TotalCostModel& model, const SolverConfig& c) {
    const std::size_t n = model.num_states();
    const std::size_t np = model.num_pairs();
    if (!(c.tolerance > 0.0)) throw ConfigError("tolerance must be positive");
    if (!(c.epsilon >= 0.0)) throw ConfigError("epsilon must be nonnegative");
    if (c.max_iterations == 0) throw ConfigError("max_iterations must be at least 1");
    if (!c.nk.is_exact())
        for (auto v : c.nk.values())
            if (v < 1) throw ConfigError("n_k must be at least 1");
    if (c.require_first_rule && c.nk.is_exact())
        throw ConfigError("exact update rule requested but the configuration restricts to Q_{k+1} = F^{n_k}(Q_k; J_k)");

    if (c.algorithm != Algorithm::value_iteration && model.has_families())
        throw ConfigError(std::string(to_string(c.algorithm)) + " requires a model without affine families");
    if (c.algorithm == Algorithm::lp_variant && model.regime() != Regime::nonnegative)
        throw ConfigError("lp-variant requires regime P (model is regime " +
                          std::string(1, regime_letter(model.regime())) + ")");

    if (c.j0) {
        if (c.j0->size() != n) throw ConfigError("J0 has " + std::to_string(c.j0->size()) + " entries, expected " +
                                                 std::to_string(n));
        for (std::size_t x = 0; x < n; ++x) {
            const ExtReal v = (*c.j0)[x];
            if (model.regime() == Regime::nonnegative && v < 0.0)
                throw ConfigError("regime P requires J0 >= 0 (state " + model.state(x).name + ")");
            if (model.regime() == Regime::nonpositive && v > 0.0 && !v.is_pos_inf())
                throw ConfigError("regime N requires J0 <= 0 (state " + model.state(x).name + ")");
            if (model.regime() == Regime::discounted && c.algorithm != Algorithm::mixed && v.is_infinite())
                throw ConfigError("regime D requires a finite J0 (state " + model.state(x).name + ")");
        }
    }
    if (c.q0) {
        if (c.q0->size() != np) throw ConfigError("Q0 has " + std::to_string(c.q0->size()) + " entries, expected " +
                                                  std::to_string(np));
        for (std::size_t i = 0; i < np; ++i) {
            if (model.regime() == Regime::nonnegative && (*c.q0)[i] < 0.0)
                throw ConfigError("regime P requires Q0 >= 0");
            if (model.regime() == Regime::discounted && (*c.q0)[i].is_infinite())
                throw ConfigError("regime D requires a finite Q0");
        }
    }
    if (c.mu0) require_valid_policy(model, *c.mu0);
    for (const auto& p : c.injected_policies) require_valid_policy(model, p);
    if (c.clamp_lo && c.clamp_lo->size() != n) throw ConfigError("clamp_lo must have one entry per state");
    if (c.clamp_hi && c.clamp_hi->size() != n) throw ConfigError("clamp_hi must have one entry per state");
    if (c.clamp_lo && c.clamp_hi && !all_leq(*c.clamp_lo, *c.clamp_hi))
        throw ConfigError("clamp bounds must satisfy lower <= upper");
    if (c.ground_truth) {
        if (c.ground_truth->J.size() != n) throw ConfigError("ground truth J* must have one entry per state");
        if (c.ground_truth->Q && c.ground_truth->Q->size() != np)
            throw ConfigError("ground truth Q* must have one entry per pair");
    }

    std::visit(overloaded{
                   [](const FullB&) {},
                   [](const EmptyB&) {},
                   [&](const OccupationSupport& o) {
                       if (o.rho.size() != n) throw ConfigError("occupation rho must have one entry per state");
                       if (!(o.beta > 0.0 && o.beta < 1.0)) throw ConfigError("occupation beta must lie in (0, 1)");
                       if (!(o.threshold >= 0.0)) throw ConfigError("occupation threshold must be nonnegative");
                   },
                   [&](const CustomSubsets& cs) {
                       if (cs.subsets.empty()) throw ConfigError("custom B strategy needs at least one subset");
                       for (const auto& s : cs.subsets)
                           if (s.universe() != n) throw ConfigError("custom subset has the wrong size");
                   },
                   [&](const SpliceRegion& r) {
                       if (c.algorithm == Algorithm::lp_variant)
                           throw ConfigError("lp-variant does not support the splice B strategy");
                       require_valid_policy(model, r.fallback);
                       if (r.region.universe() != n) throw ConfigError("splice region has the wrong size");
                   },
               },
               c.b_strategy);

    if (c.async) {
        if (c.algorithm != Algorithm::mixed) throw ConfigError("asynchronous masks apply to the mixed method only");
        if (c.nk.is_exact()) throw ConfigError("asynchronous masks need a finite n_k schedule");
        if (c.async->pair_masks.empty() || c.async->pair_masks.size() != c.async->state_masks.size())
            throw ConfigError("asynchronous schedule needs matching, nonempty pair and state masks");
        for (std::size_t j = 0; j < c.async->cycle(); ++j)
            if (c.async->pair_masks[j].universe() != np || c.async->state_masks[j].universe() != n)
                throw ConfigError("asynchronous mask " + std::to_string(j) + " has the wrong size");
    }
    if (c.algorithm == Algorithm::lp_variant && c.nk.is_exact())
        throw ConfigError("lp-variant computes its own Q update; n_k does not apply");
}

std::string ConeMembership::describe() const {
    if (member) return "in cone, c = " + fmt(c);
    return "outside every cJ* cone (witness state " + std::to_string(*witness) + ")";
}

ConeMembership cone_ratio(const ValueVector& J, const ValueVector& Jstar) {
    ConeMembership out;
    out.member = true;
    for (std::size_t x = 0; x < J.size(); ++x) {
        const ExtReal s = Jstar[x];
        const ExtReal v = J[x];
        if (s.is_pos_inf() || v <= 0.0) continue;
        if (s <= 0.0 || v.is_pos_inf()) {
            if (out.member) out.witness = x;
            out.member = false;
            continue;
        }
        out.c = std::max(out.c, v.value() / s.value());
    }
    return out;
}

SolverRun value_iteration(const TotalCostModel& model, const ValueVector& J0, const SolverConfig& config) {
    SolverConfig c = config;
    c.algorithm = Algorithm::value_iteration;
    c.j0 = J0;
    validate_config(model, c);
    Stopwatch clock;

    SolverRun run;
    run.algorithm = Algorithm::value_iteration;
    echo_config(run.trace, model, c, run.algorithm);
    std::optional<LimitClassification> cls;
    const auto skip = infinite_skip(model, cls);
    const auto& truth = c.ground_truth;

    run.J.push_back(J0);
    IterationRecord r0;
    r0.k = 0;
    r0.dist_J = dist_or_none(J0, truth, skip);
    if (truth) r0.above_optimal = all_leq(truth->J, J0);
    run.trace.append(r0);

    BoundDirection direction = BoundDirection::none;
    double residual = kInf;
    for (std::size_t k = 1; k <= c.max_iterations; ++k) {
        ValueVector next = bellman_T(model, run.J.back());
        ++run.counts.bellman;
        residual = sup_distance_excluding(next, run.J.back(), skip);
        if (k == 1 && model.discount() >= 1.0) {
            if (all_leq(next, run.J.back())) direction = BoundDirection::decreasing;
            else if (all_leq(run.J.back(), next)) direction = BoundDirection::increasing;
        }
        IterationRecord rec;
        rec.k = k;
        rec.residual = residual;
        rec.dist_J = dist_or_none(next, truth, skip);
        if (truth) rec.above_optimal = all_leq(truth->J, next);
        rec.certificates = monotone_label(run.J.back(), next);
        rec.wall_time = clock.seconds();
        run.J.push_back(std::move(next));
        run.trace.append(std::move(rec));
        if (residual <= c.tolerance && k >= c.min_iterations) {
            if (cls) {
                auto& last = run.J.back();
                for (std::size_t x = 0; x < model.num_states(); ++x) {
                    if (cls->pos_inf.contains(x)) last[x] = ExtReal::inf();
                    if (cls->neg_inf.contains(x)) last[x] = ExtReal::neg_inf();
                }
            }
            run.termination = Termination::converged;
            return run;
        }
    }
    throw ConvergenceError("value iteration reached the iteration cap (" + std::to_string(c.max_iterations) + ")",
                           run.J.back().values(), direction, residual);
}

SolverRun policy_iteration(const TotalCostModel& model, const Policy& mu0, const SolverConfig& config) {
    SolverConfig c = config;
    c.algorithm = Algorithm::policy_iteration;
    c.mu0 = mu0;
    validate_config(model, c);
    Stopwatch clock;

    SolverRun run;
    run.algorithm = Algorithm::policy_iteration;
    echo_config(run.trace, model, c, run.algorithm);
    const auto& truth = c.ground_truth;
    std::set<std::vector<std::size_t>> seen;
    if (mu0.is_deterministic()) seen.insert(mu0.controls());

    Policy mu = mu0;
    for (std::size_t k = 0;; ++k) {
        const PolicyEvaluation eval = evaluate_policy(model, mu, c.evaluation);
        if (eval.exact) ++run.counts.linear_solve;
        else run.counts.policy_backup += eval.iterations;
        const ValueVector& Jmu = eval.value;

        IterationRecord rec;
        rec.k = k;
        if (!run.J.empty()) rec.residual = sup_distance(Jmu, run.J.back());
        rec.dist_J = dist_or_none(Jmu, truth);
        if (truth) rec.above_optimal = all_leq(truth->J, Jmu);
        rec.policy = mu.describe();
        rec.certificates = "evaluation " + eval.describe();
        run.J.push_back(Jmu);
        run.policies.push_back(mu);

        const ValueVector TJ = bellman_T(model, Jmu);
        const ValueVector TmuJ = bellman_T_mu(model, mu, Jmu);
        ++run.counts.bellman;
        ++run.counts.policy_backup;
        bool stuck = true;
        for (std::size_t x = 0; x < model.num_states() && stuck; ++x)
            stuck = abs_diff(TmuJ[x], TJ[x]) <= kStuckTolerance;

        auto finish = [&](Termination t, const std::string& note) {
            rec.certificates += "; " + note;
            rec.wall_time = clock.seconds();
            run.trace.append(std::move(rec));
            run.termination = t;
            return run;
        };

        if (stuck) {
            if (model.regime() == Regime::discounted) return finish(Termination::optimal_certified, "T_mu J_mu = T J_mu");
            if (truth && sup_distance(Jmu, truth->J) <= c.tolerance)
                return finish(Termination::optimal_certified, "T_mu J_mu = T J_mu and J_mu = J*");
            return finish(Termination::stuck, "T_mu J_mu = T J_mu but optimality not certified");
        }
        if (k + 1 >= c.max_iterations) return finish(Termination::cap, "iteration cap");

        const QVector Q = h_backup(model, Jmu);
        std::vector<std::size_t> next(model.num_states());
        for (std::size_t x = 0; x < model.num_states(); ++x) {
            ExtReal best = ExtReal::inf();
            std::size_t arg = 0;
            for (std::size_t u = 0; u < model.num_controls(x); ++u) {
                const ExtReal q = Q[model.pair_index(x, u)];
                if (q < best) {
                    best = q;
                    arg = u;
                }
            }
            const auto cur = mu.deterministic_control(x);
            const bool keep = cur && Q[model.pair_index(x, *cur)] <= best + kStuckTolerance;
            next[x] = keep ? *cur : arg;
        }
        if (!seen.insert(next).second) return finish(Termination::cycle, "policy repeats an earlier one");
        rec.wall_time = clock.seconds();
        run.trace.append(std::move(rec));
        mu = Policy::deterministic(model, next);
    }
}

SolverRun modified_policy_iteration(const TotalCostModel& model, const std::optional<Policy>& mu0,
                                    const ValueVector& J0, const NkSchedule& nk, const SolverConfig& config) {
    SolverConfig c = config;
    c.algorithm = Algorithm::modified_policy_iteration;
    c.j0 = J0;
    c.mu0 = mu0;
    c.nk = nk;
    validate_config(model, c);
    Stopwatch clock;

    SolverRun run;
    run.algorithm = Algorithm::modified_policy_iteration;
    echo_config(run.trace, model, c, run.algorithm);
    const auto& truth = c.ground_truth;

    QVector H = h_backup(model, J0);
    ++run.counts.bellman;
    Policy mu = mu0 ? *mu0 : greedy_select(model, H);
    run.J.push_back(J0);
    run.qform_J.push_back(m_minimize(model, H));

    IterationRecord r0;
    r0.k = 0;
    r0.dist_J = dist_or_none(J0, truth);
    r0.policy = mu.describe();
    if (model.regime() == Regime::nonnegative && truth) {
        MpiPreconditions pre;
        pre.initial_descent = all_leq(bellman_T_mu(model, mu, J0), J0);
        ValueVector W = J0;
        for (std::size_t n = 0; n <= 50; ++n) {
            const auto cone = cone_ratio(W, truth->J);
            if (cone.member) {
                pre.cone_n = n;
                pre.cone_c = cone.c;
                break;
            }
            W = bellman_T(model, W);
        }
        r0.certificates = std::string("T_mu0 J0 <= J0: ") + (pre.initial_descent ? "yes" : "no") +
                          "; T^n J0 in cone: " +
                          (pre.cone_n ? "n = " + std::to_string(*pre.cone_n) + ", c = " + fmt(*pre.cone_c) : "no");
        run.mpi_preconditions = pre;
    }
    run.trace.append(r0);

    for (std::size_t k = 0; k < c.max_iterations; ++k) {
        ValueVector V;
        std::string note;
        if (nk.is_exact()) {
            const auto eval = evaluate_policy(model, mu, c.evaluation);
            if (eval.exact) ++run.counts.linear_solve;
            else run.counts.policy_backup += eval.iterations;
            V = eval.value;
            note = "evaluation " + eval.describe();
        } else {
            V = run.J.back();
            const std::size_t n = nk.at(k);
            for (std::size_t i = 0; i < n; ++i) V = bellman_T_mu(model, mu, V);
            run.counts.policy_backup += n;
        }
        run.policies.push_back(mu);
        H = h_backup(model, V);
        ++run.counts.bellman;
        Policy next = greedy_select(model, H);

        IterationRecord rec;
        rec.k = k + 1;
        rec.residual = sup_distance(V, run.J.back());
        rec.dist_J = dist_or_none(V, truth);
        if (truth) rec.above_optimal = all_leq(truth->J, V);
        rec.policy = mu.describe();
        rec.certificates = note;
        rec.wall_time = clock.seconds();
        const double r = *rec.residual;
        run.J.push_back(std::move(V));
        run.qform_J.push_back(m_minimize(model, H));
        run.trace.append(std::move(rec));
        mu = std::move(next);
        if (r <= c.tolerance && k + 1 >= c.min_iterations) {
            run.termination = Termination::converged;
            break;
        }
    }
    run.policies.push_back(mu);
    return run;
}

SolverRun mixed_vpi(const TotalCostModel& model, const SolverConfig& config) {
    SolverConfig c = config;
    c.algorithm = Algorithm::mixed;
    validate_config(model, c);
    model.require_atomic_only("mixed value and policy iteration");
    Stopwatch clock;

    SolverRun run;
    run.algorithm = Algorithm::mixed;
    echo_config(run.trace, model, c, run.algorithm);
    const auto& truth = c.ground_truth;

    ValueVector J = initial_J(model, c);
    QVector Q = c.q0 ? *c.q0 : h_backup(model, J);
    const bool dominant = dominates_truth(truth, J, &Q);
    ValueVector vi = J;

    run.J.push_back(J);
    run.Q.push_back(Q);
    if (c.track_vi_bound) run.vi_bound.push_back(vi);
    IterationRecord r0;
    r0.k = 0;
    r0.dist_J = dist_or_none(J, truth);
    r0.dist_Q = qdist_or_none(Q, truth);
    if (dominant) r0.above_optimal = true;
    if (c.track_vi_bound) r0.below_vi = true;
    run.trace.append(r0);

    std::size_t quiet = 0;
    for (std::size_t k = 0; k < c.max_iterations; ++k) {
        const Policy mu = choose_policy(model, c, Q, k);
        const StateSet B = choose_B(model, c.b_strategy, mu, k);
        const Theta theta{mu, B};

        QVector Qn;
        ValueVector Jn;
        std::string note;
        if (c.async) {
            const std::size_t j = k % c.async->cycle();
            const std::size_t n = c.nk.at(k);
            auto [q, v] = masked_update(model, theta, Q, J, c.async->pair_masks[j], c.async->state_masks[j], n);
            run.counts.f_theta += n;
            Qn = std::move(q);
            Jn = std::move(v);
            note = "mask " + std::to_string(j);
        } else if (c.nk.is_exact()) {
            FixedPointResult fp = q_fixed_point(model, theta, J, c.inner);
            run.counts.f_theta += fp.certificate.iterations;
            Qn = std::move(fp.Q);
            Jn = m_minimize(model, Qn);
            note = "fixed point " + fp.certificate.describe();
        } else {
            const std::size_t n = c.nk.at(k);
            Qn = f_theta_power(model, theta, Q, J, n);
            run.counts.f_theta += n;
            Jn = m_minimize(model, Qn);
        }
        Jn = apply_clamp(Jn, c);
        if (c.track_vi_bound) vi = bellman_T(model, vi);

        const double rJ = sup_distance(Jn, J);
        const double rQ = sup_distance(Qn, Q);
        IterationRecord rec;
        rec.k = k + 1;
        rec.residual = rJ;
        rec.dist_J = dist_or_none(Jn, truth);
        rec.dist_Q = qdist_or_none(Qn, truth);
        rec.policy = mu.describe();
        rec.B = B.describe();
        if (dominant) rec.above_optimal = all_leq(truth->J, Jn) && (!truth->Q || all_leq(*truth->Q, Qn));
        if (c.track_vi_bound) rec.below_vi = all_leq(Jn, vi);
        rec.certificates = note;
        rec.wall_time = clock.seconds();

        run.policies.push_back(mu);
        run.subsets.push_back(B);
        run.J.push_back(Jn);
        run.Q.push_back(Qn);
        if (c.track_vi_bound) run.vi_bound.push_back(vi);
        run.trace.append(std::move(rec));
        J = std::move(Jn);
        Q = std::move(Qn);

        const bool small = rJ <= c.tolerance && rQ <= c.tolerance;
        quiet = small ? quiet + 1 : 0;
        const std::size_t needed = c.async ? c.async->cycle() : 1;
        if (quiet >= needed && k + 1 >= c.min_iterations) {
            run.termination = Termination::converged;
            break;
        }
    }
    return run;
}

SolverRun lp_variant_vpi(const TotalCostModel& model, const SolverConfig& config, double cone_c) {
    SolverConfig c = config;
    c.algorithm = Algorithm::lp_variant;
    validate_config(model, c);
    Stopwatch clock;

    SolverRun run;
    run.algorithm = Algorithm::lp_variant;
    echo_config(run.trace, model, c, run.algorithm);
    run.trace.set("cone_c", to_string(ExtReal(cone_c)));
    const auto& truth = c.ground_truth;
    const ValueVector cJstar = truth ? scaled(truth->J, cone_c) : ValueVector();

    ValueVector J = initial_J(model, c);
    QVector Q = c.q0 ? *c.q0 : h_backup(model, J);
    const bool dominant = dominates_truth(truth, J, &Q);
    ValueVector vi = J;

    run.J.push_back(J);
    run.Q.push_back(Q);
    if (c.track_vi_bound) run.vi_bound.push_back(vi);
    IterationRecord r0;
    r0.k = 0;
    r0.dist_J = dist_or_none(J, truth);
    r0.dist_Q = qdist_or_none(Q, truth);
    if (dominant) r0.above_optimal = true;
    if (c.track_vi_bound) r0.below_vi = true;
    if (truth) r0.certificates = std::string("J0 <= cJ*: ") + (all_leq(J, cJstar) ? "yes" : "no");
    run.trace.append(r0);

    for (std::size_t k = 0; k < c.max_iterations; ++k) {
        const Policy mu = choose_policy(model, c, Q, k);
        const StateSet B = choose_B(model, c.b_strategy, mu, k);
        for (auto x : B.elements())
            if (J[x].is_infinite())
                throw ModelError("J_k is infinite at state " + model.state(x).name + " in B (iteration " +
                                 std::to_string(k) + ")");
        const LpBound lp = lp_upper_bound(model, Theta{mu, B}, J);
        run.counts.lp_sweep += lp.certificate.iterations;
        QVector Qn = lp.Qbar;
        ValueVector Jn = apply_clamp(m_minimize(model, Qn), c);
        if (c.track_vi_bound) vi = bellman_T(model, vi);

        LpIterationCheck check;
        check.upper_violation = lp.certificate.upper_violation;
        check.lower_violation = lp.certificate.lower_violation;
        if (truth) check.within_cone = all_leq(Jn, cJstar);
        run.lp_checks.push_back(check);

        const double rJ = sup_distance(Jn, J);
        const double rQ = sup_distance(Qn, Q);
        IterationRecord rec;
        rec.k = k + 1;
        rec.residual = rJ;
        rec.dist_J = dist_or_none(Jn, truth);
        rec.dist_Q = qdist_or_none(Qn, truth);
        rec.policy = mu.describe();
        rec.B = B.describe();
        if (dominant) rec.above_optimal = all_leq(truth->J, Jn) && (!truth->Q || all_leq(*truth->Q, Qn));
        if (c.track_vi_bound) rec.below_vi = all_leq(Jn, vi);
        rec.certificates = "upper violation " + fmt(check.upper_violation) + ", lower violation " +
                           fmt(check.lower_violation);
        if (check.within_cone) rec.certificates += std::string(", J <= cJ*: ") + (*check.within_cone ? "yes" : "no");
        rec.wall_time = clock.seconds();

        run.policies.push_back(mu);
        run.subsets.push_back(B);
        run.J.push_back(Jn);
        run.Q.push_back(Qn);
        if (c.track_vi_bound) run.vi_bound.push_back(vi);
        run.trace.append(std::move(rec));
        J = std::move(Jn);
        Q = std::move(Qn);
        if (rJ <= c.tolerance && rQ <= c.tolerance && k + 1 >= c.min_iterations) {
            run.termination = Termination::converged;
            break;
        }
    }
    return run;
}

SolverRun solve(const TotalCostModel& model, const SolverConfig& config) {
    const ValueVector J0 = initial_J(model, config);
    switch (config.algorithm) {
    case Algorithm::value_iteration: return value_iteration(model, J0, config);
    case Algorithm::policy_iteration: {
        model.require_atomic_only("policy iteration");
        const Policy mu0 = config.mu0 ? *config.mu0 : greedy_select(model, h_backup(model, J0));
        return policy_iteration(model, mu0, config);
    }
    case Algorithm::modified_policy_iteration:
        return modified_policy_iteration(model, config.mu0, J0, config.nk, config);
    case Algorithm::mixed: return mixed_vpi(model, config);
    case Algorithm::lp_variant: return lp_variant_vpi(model, config);
    }
    throw ConfigError("unknown algorithm");
}

ExtractedPolicy extract_policy_discounted(const TotalCostModel& model, const QVector& Qk, double epsilon,
                                          std::size_t k, std::optional<double> delta) {
    if (model.regime() != Regime::discounted)
        throw ConfigError("near-optimal policy extraction is provided for regime D only");
    ExtractedPolicy out;
    out.policy = greedy_select(model, Qk, epsilon);
    if (delta) {
        const double alpha = model.discount();
        out.bound = (2.0 * std::pow(alpha, static_cast<double>(k)) * *delta + epsilon) / (1.0 - alpha);
    }
    return out;
}

NStagePolicy build_n_stage_policy(const TotalCostModel& model, const ValueVector& J, double delta,
                                  std::size_t n_max) {
    if (model.regime() != Regime::nonnegative) throw ConfigError("the n-stage construction requires regime P");
    model.require_atomic_only("the n-stage construction");
    if (!(delta > 0.0)) throw ConfigError("delta must be positive");
    for (std::size_t x = 0; x < J.size(); ++x)
        if (J[x].is_infinite()) throw ConfigError("J must be finite (state " + model.state(x).name + ")");

    ValueVector target(J.size());
    for (std::size_t x = 0; x < J.size(); ++x) target[x] = J[x] + ExtReal(delta / 2.0);

    std::vector<ValueVector> powers{J};
    std::optional<std::size_t> found;
    double best = kInf;
    for (std::size_t n = 1; n <= n_max; ++n) {
        powers.push_back(bellman_T(model, powers.back()));
        const double excess = -leq_margin(powers.back(), J);
        best = std::min(best, excess);
        if (all_leq(powers.back(), target)) {
            found = n;
            break;
        }
    }
    if (!found)
        throw ConvergenceError("no n <= " + std::to_string(n_max) + " with T^n(J) <= J + delta/2; best margin " +
                                   fmt(best) + " against delta/2 = " + fmt(delta / 2.0),
                               powers.back().values(), BoundDirection::none, best);

    const std::size_t n = *found;
    NStagePolicy out;
    for (std::size_t i = 1; i <= n; ++i) out.stages.push_back(greedy_select(model, h_backup(model, powers[n - i])));
    ValueVector composed = J;
    for (std::size_t i = n; i >= 1; --i) composed = bellman_T_mu(model, out.stages[i - 1], composed);
    out.slack = ValueVector(J.size());
    out.max_slack = -kInf;
    for (std::size_t x = 0; x < J.size(); ++x) {
        out.slack[x] = composed[x] - J[x];
        out.max_slack = std::max(out.max_slack, out.slack[x].value());
    }
    return out;
}

bool CertificateReport::all_passed() const noexcept {
    return std::all_of(checks.begin(), checks.end(), [](const CertificateCheck& c) { return c.passed; });
}

const CertificateCheck* CertificateReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

std::string CertificateReport::to_string() const {
    std::string s;
    for (const auto& c : checks) {
        s += (c.passed ? "PASS " : "FAIL ") + c.name + " (margin " + fmt(c.margin) + ")";
        if (!c.detail.empty()) s += ": " + c.detail;
        s += "\n";
    }
    return s;
}

CertificateReport verify_certificates(const TotalCostModel& model, const SolverRun& run,
                                      const std::optional<GroundTruth>& truth, const CertificateOptions& options) {
    CertificateReport report;
    if (run.J.empty()) return report;
    const double tol = options.tolerance;
    const ValueVector& J0 = run.J.front();
    const bool q_based = !run.Q.empty();
    const bool iterates_from_J0 = run.algorithm == Algorithm::value_iteration || run.algorithm == Algorithm::mixed ||
                                  run.algorithm == Algorithm::lp_variant;

    if (model.regime() == Regime::discounted && truth && iterates_from_J0) {
        CertificateCheck chk{"geometric rate", true, kInf, ""};
        const bool use_q = q_based && truth->Q;
        double delta = sup_distance(J0, truth->J);
        if (use_q) delta = std::max(delta, sup_distance(run.Q.front(), *truth->Q));
        if (std::isinf(delta)) {
            chk.detail = "initial distance is infinite; the bound is vacuous";
        } else {
            const double alpha = model.discount();
            std::size_t worst_k = 0;
            for (std::size_t k = 0; k < run.J.size(); ++k) {
                double e = sup_distance(run.J[k], truth->J);
                if (use_q) e = std::max(e, sup_distance(run.Q[k], *truth->Q));
                const double m = std::pow(alpha, static_cast<double>(k)) * delta + tol - e;
                if (m < chk.margin) {
                    chk.margin = m;
                    worst_k = k;
                }
            }
            chk.passed = chk.margin >= 0.0;
            chk.detail = "Delta = " + fmt(delta) + ", tightest at k = " + std::to_string(worst_k);
        }
        report.checks.push_back(chk);
    }

    if (model.regime() != Regime::discounted && iterates_from_J0) {
        if (q_based) {
            CertificateCheck chk{"upper bound J_k <= T^k(J0)", true, kInf, ""};
            const bool tracked = run.vi_bound.size() == run.J.size();
            ValueVector V = J0;
            for (std::size_t k = 0; k < run.J.size(); ++k) {
                if (tracked) V = run.vi_bound[k];
                chk.margin = std::min(chk.margin, leq_margin(run.J[k], V));
                if (!tracked) V = bellman_T(model, V);
            }
            chk.passed = chk.margin >= -tol;
            report.checks.push_back(chk);
        }

        if (truth) {
            const QVector* Q0 = q_based ? &run.Q.front() : nullptr;
            if (dominates_truth(truth, J0, Q0)) {
                CertificateCheck low{"lower bound J* <= J_k", true, kInf, ""};
                for (std::size_t k = 0; k < run.J.size(); ++k) {
                    low.margin = std::min(low.margin, leq_margin(truth->J, run.J[k]));
                    if (q_based && truth->Q) low.margin = std::min(low.margin, leq_margin(*truth->Q, run.Q[k]));
                }
                low.passed = low.margin >= -tol;
                low.detail = q_based && truth->Q ? "includes Q* <= Q_k" : "";
                report.checks.push_back(low);
            }
        }
    }

    if (model.regime() == Regime::nonnegative && truth) {
        const auto cone = cone_ratio(J0, truth->J);
        CertificateCheck chk{"initial cone", cone.member, 0.0, ""};
        if (cone.member) {
            chk.margin = 0.0;
            chk.detail = "0 <= J0 <= cJ* with c = " + fmt(cone.c);
        } else {
            const std::size_t w = *cone.witness;
            chk.margin = -J0[w].value();
            chk.detail = "state " + std::to_string(w) + ": J0 = " + to_string(J0[w]) + " > c * " +
                         to_string(truth->J[w]) + " for every c";
        }
        report.checks.push_back(chk);

        CertificateCheck mem{"value set membership", true, 0.0, ""};
        for (std::size_t x = 0; x < J0.size(); ++x) {
            if (J0[x].is_infinite() || J0[x] < 0.0) {
                mem.passed = false;
                mem.margin = -kInf;
                mem.detail = "J0 is not a nonnegative real at state " + std::to_string(x);
                break;
            }
            if (truth->J[x] == 0.0 && J0[x] != 0.0) {
                mem.passed = false;
                mem.margin = std::min(mem.margin, -J0[x].value());
                if (mem.detail.empty())
                    mem.detail = "J0 = " + to_string(J0[x]) + " where J* = 0 at state " + std::to_string(x);
            }
        }
        report.checks.push_back(mem);
    }

    if (truth) {
        CertificateCheck conv{"convergence", false, 0.0, ""};
        double d = sup_distance(run.J.back(), truth->J);
        if (q_based && truth->Q) d = std::max(d, sup_distance(run.Q.back(), *truth->Q));
        conv.margin = options.convergence_tolerance - d;
        conv.passed = conv.margin >= 0.0;
        conv.detail = "final distance " + fmt(d) + " after " + std::to_string(run.iterations()) + " iterations";
        report.checks.push_back(conv);
    }
    return report;
}

} // namespace mvpi
