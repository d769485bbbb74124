#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mvpi/evaluation.hpp"
#include "mvpi/ftheta.hpp"
#include "mvpi/model.hpp"
#include "mvpi/trace.hpp"

namespace mvpi {

enum class Algorithm { value_iteration, policy_iteration, modified_policy_iteration, mixed, lp_variant };

/// "vi", "pi", "mpi", "mixed", "lp-variant".
const char* to_string(Algorithm a) noexcept;
Algorithm parse_algorithm(const std::string& text);

/// Number of F_theta applications per iteration, or the exact fixed point.
class NkSchedule {
public:
    static NkSchedule constant(std::size_t n);
    /// Entry k for iteration k; the last entry repeats.
    static NkSchedule list(std::vector<std::size_t> ns);
    static NkSchedule exact();

    bool is_exact() const noexcept { return exact_; }
    std::size_t at(std::size_t k) const;
    /// "10", "3,2,1" or "exact".
    std::string describe() const;
    /// Accepts the describe() forms.
    static NkSchedule parse(const std::string& text);

    const std::vector<std::size_t>& values() const noexcept { return ns_; }

private:
    std::vector<std::size_t> ns_{10};
    bool exact_ = false;
};

struct FullB {};
struct EmptyB {};

/// B = {x : p(x) > threshold}, p the beta-discounted occupation measure of mu_k from rho.
struct OccupationSupport {
    std::vector<double> rho;
    double beta = 0.9;
    double threshold = 0.0;
};

/// Explicit B_k per iteration; the last subset repeats.
struct CustomSubsets {
    std::vector<StateSet> subsets;
};

/// theta_k = (mu_k, S) where mu_k is the improved policy on `region` and `fallback` elsewhere.
struct SpliceRegion {
    Policy fallback;
    StateSet region;
};

using BStrategy = std::variant<FullB, EmptyB, OccupationSupport, CustomSubsets, SpliceRegion>;

std::string describe(const BStrategy& b);

/// Masks for asynchronous updates, used in turn: update j applies pair_masks[j % m] and state_masks[j % m].
struct AsyncSchedule {
    std::vector<PairSet> pair_masks;
    std::vector<StateSet> state_masks;

    /// One pair per update, together with its state.
    static AsyncSchedule round_robin(const TotalCostModel& model);
    std::size_t cycle() const noexcept { return pair_masks.size(); }
};

struct GroundTruth {
    ValueVector J;
    std::optional<QVector> Q;
};

struct SolverConfig {
    Algorithm algorithm = Algorithm::mixed;
    /// Defaults to 0.
    std::optional<ValueVector> j0;
    /// Defaults to h_backup(J0).
    std::optional<QVector> q0;
    /// Policy of the first iteration; greedy on Q0 (or J0) when empty.
    std::optional<Policy> mu0;
    NkSchedule nk;
    double epsilon = 0.0;
    BStrategy b_strategy = FullB{};
    std::optional<ValueVector> clamp_lo;
    std::optional<ValueVector> clamp_hi;
    std::optional<AsyncSchedule> async;
    std::size_t max_iterations = 10000;
    double tolerance = 1e-10;
    /// Iterations to run even after the stopping rule fires.
    std::size_t min_iterations = 0;
    std::optional<GroundTruth> ground_truth;
    /// Policy for iteration k when k < size (overrides greedy selection).
    std::vector<Policy> injected_policies;
    /// Rejects the exact update rule (Q_{k+1} = Q_{theta_k,J_k}).
    bool require_first_rule = false;
    /// Computes T^k(J0) alongside for the J_k <= T^k(J0) flag.
    bool track_vi_bound = true;
    std::uint64_t seed = 0;
    FixedPointOptions inner;
    EvaluationOptions evaluation;
};

/// Throws ConfigError on inconsistent settings, before any computation.
void validate_config(const TotalCostModel& model, const SolverConfig& config);

/// Where J0 lies relative to the cone {J : J <= c J*}.
struct ConeMembership {
    bool member = false;
    /// Smallest c with J <= c J*; max over J*(x) > 0 of J(x)/J*(x) (0 when there is no such x).
    double c = 0.0;
    /// A state with J*(x) = 0 < J(x), or J*(x) finite < J(x) = inf.
    std::optional<std::size_t> witness;
    std::string describe() const;
};

ConeMembership cone_ratio(const ValueVector& J, const ValueVector& Jstar);

/// Convergence preconditions of modified policy iteration under P.
struct MpiPreconditions {
    /// T_{mu_0}(J_0) <= J_0.
    bool initial_descent = false;
    /// Smallest n <= 50 with T^n(J_0) in the cJ* cone, and its c.
    std::optional<std::size_t> cone_n;
    std::optional<double> cone_c;
};

/// Per-iteration checks of lp_variant_vpi: Qbar <= F_theta(Qbar; J) and Qbar >= Q_{theta,J}.
struct LpIterationCheck {
    double upper_violation = 0.0;
    double lower_violation = 0.0;
    /// J_k <= c J* with the configured c, when ground truth is known.
    std::optional<bool> within_cone;
};

enum class Termination { converged, cap, stuck, optimal_certified, cycle };
const char* to_string(Termination t) noexcept;

struct SolverRun {
    Algorithm algorithm = Algorithm::mixed;
    /// J_0, J_1, ... (for policy iteration, J_{mu_0}, J_{mu_1}, ...; for modified PI, the V_k).
    std::vector<ValueVector> J;
    /// Q_0, Q_1, ... for Q-based methods.
    std::vector<QVector> Q;
    /// Policy of iteration k (theta_k for the mixed methods).
    std::vector<Policy> policies;
    /// B_k for the mixed methods.
    std::vector<StateSet> subsets;
    /// T^k(J_0), when tracked.
    std::vector<ValueVector> vi_bound;
    /// Modified PI only: T(V_k), the J iterates of the equivalent Q-form.
    std::vector<ValueVector> qform_J;
    IterationTrace trace;
    OperatorCounts counts;
    Termination termination = Termination::cap;
    std::optional<MpiPreconditions> mpi_preconditions;
    std::vector<LpIterationCheck> lp_checks;

    bool converged() const noexcept {
        return termination == Termination::converged || termination == Termination::optimal_certified;
    }
    const ValueVector& final_J() const { return J.back(); }
    std::size_t iterations() const noexcept { return J.empty() ? 0 : J.size() - 1; }
};

/**
 * J_{k+1} = T(J_k) until ||J_{k+1} - J_k|| < tolerance. States with infinite
 * limit (regimes N and P) are excluded from the residual and set at the end.
 * Throws ConvergenceError at the cap.
 */
SolverRun value_iteration(const TotalCostModel& model, const ValueVector& J0, const SolverConfig& config = {});

/// Exact evaluation and greedy improvement (ties keep the current control).
SolverRun policy_iteration(const TotalCostModel& model, const Policy& mu0, const SolverConfig& config = {});

/// V_{k+1} = T_{mu_k}^{n_k}(V_k), mu_{k+1} greedy for V_{k+1}; mu_0 defaults to greedy for V_0.
SolverRun modified_policy_iteration(const TotalCostModel& model, const std::optional<Policy>& mu0,
                                    const ValueVector& J0, const NkSchedule& nk, const SolverConfig& config = {});

/**
 * Q_{k+1} = F_{theta_k}^{n_k}(Q_k; J_k) (or Q_{theta_k,J_k}), J_{k+1} = M(Q_{k+1})
 * clamped to the configured bounds, theta_k = (mu_k, B_k) with mu_k greedy on Q_k.
 */
SolverRun mixed_vpi(const TotalCostModel& model, const SolverConfig& config);

/// Mixed iteration with Q_{k+1} the maximal solution of the stopping linear program (regime P).
SolverRun lp_variant_vpi(const TotalCostModel& model, const SolverConfig& config, double cone_c = 1.5);

/// Dispatch on config.algorithm.
SolverRun solve(const TotalCostModel& model, const SolverConfig& config);

struct ExtractedPolicy {
    Policy policy;
    /// (2 alpha^k Delta + epsilon) / (1 - alpha) when Delta is given.
    std::optional<double> bound;
};

/// Greedy nu_k from Q_k (regime D).
ExtractedPolicy extract_policy_discounted(const TotalCostModel& model, const QVector& Qk, double epsilon,
                                          std::size_t k = 0, std::optional<double> delta = std::nullopt);

struct NStagePolicy {
    /// mu_1, ..., mu_n (mu_n acts first on J).
    std::vector<Policy> stages;
    /// (T_{mu_1} ... T_{mu_n})(J) - J.
    ValueVector slack;
    double max_slack = 0.0;
};

/// Smallest n <= n_max with T^n(J) <= J + delta/2, then stage-wise greedy policies (regime P).
NStagePolicy build_n_stage_policy(const TotalCostModel& model, const ValueVector& J, double delta,
                                  std::size_t n_max = 1000);

struct CertificateCheck {
    std::string name;
    bool passed = false;
    /// Worst slack over all checked entries; negative when violated.
    double margin = 0.0;
    std::string detail;
};

struct CertificateReport {
    std::vector<CertificateCheck> checks;

    bool all_passed() const noexcept;
    const CertificateCheck* find(const std::string& name) const;
    std::string to_string() const;
};

struct CertificateOptions {
    /// Slack for ordered comparisons (0 = exact).
    double tolerance = 1e-12;
    /// Final distance to ground truth that counts as converged.
    double convergence_tolerance = 1e-8;
};

/**
 * Checks a run against the regime's guarantees: geometric rate (D), the
 * J* <= J_k <= T^k(J0) sandwich (N, P), membership of J0 in the cJ* cone and
 * in the set of real functions vanishing where J* vanishes (P), and final
 * convergence when ground truth is known.
 */
CertificateReport verify_certificates(const TotalCostModel& model, const SolverRun& run,
                                      const std::optional<GroundTruth>& truth,
                                      const CertificateOptions& options = {});

} // namespace mvpi
