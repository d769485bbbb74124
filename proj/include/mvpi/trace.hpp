#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mvpi/model.hpp"

namespace mvpi {

/// One solver iteration.
struct IterationRecord {
    std::size_t k = 0;
    /// ||J_k - J_{k-1}||; empty at k = 0.
    std::optional<double> residual;
    std::optional<double> dist_J;
    std::optional<double> dist_Q;
    std::string policy;
    std::string B;
    /// J* <= J_k (and Q* <= Q_k for Q-based methods), when the initial point dominates.
    std::optional<bool> above_optimal;
    /// J_k <= T^k(J_0).
    std::optional<bool> below_vi;
    std::string certificates;
    double wall_time = 0.0;

    friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

/// Append-only sequence of records with strictly increasing k.
class IterationTrace {
public:
    void append(IterationRecord r);
    const std::vector<IterationRecord>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    const IterationRecord& back() const { return records_.back(); }

    /// Ordered key/value echo of the configuration.
    std::vector<std::pair<std::string, std::string>> config;
    std::string model_hash;
    std::uint64_t seed = 0;

    void set(const std::string& key, const std::string& value);
    std::optional<std::string> get(const std::string& key) const;

    friend bool operator==(const IterationTrace&, const IterationTrace&) = default;

private:
    std::vector<IterationRecord> records_;
};

/// Operator applications performed by a solver run (each counts one full sweep).
struct OperatorCounts {
    std::size_t bellman = 0;       ///< T
    std::size_t policy_backup = 0; ///< T_mu
    std::size_t f_theta = 0;       ///< F_theta (including fixed-point iterations)
    std::size_t linear_solve = 0;  ///< exact policy evaluations
    std::size_t lp_sweep = 0;      ///< downward sweeps of the stopping linear program

    std::size_t total() const noexcept { return bellman + policy_backup + f_theta + linear_solve + lp_sweep; }
    std::string describe() const;
};

/// 64-bit FNV-1a hash of the model's exact contents, as 16 hex digits.
std::string model_fingerprint(const TotalCostModel& model);

} // namespace mvpi
