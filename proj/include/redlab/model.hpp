#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "redlab/rng.hpp"

namespace redlab {

using TypeId = int;
using ServerId = int;  // 0-based internally; printed 1-based

inline constexpr int kMaxServers = 20;

enum class CopyMode { Iid, Identical };

enum class PolicyId { Fcfs, Ps, Ros, PriorityExample };

/// Service-requirement law. Every variant has mean 1/mu.
struct ServiceDist {
    enum class Kind { Exponential, Deterministic, DegenerateHyperExp };

    Kind kind = Kind::Exponential;
    double mu = 1.0;
    double p = 1.0;  // only used by DegenerateHyperExp, in (0, 1]

    static ServiceDist exponential(double mu) { return {Kind::Exponential, mu, 1.0}; }
    /// Point mass at `mean`.
    static ServiceDist deterministic(double mean) { return {Kind::Deterministic, 1.0 / mean, 1.0}; }
    /// Zero with probability 1-p, otherwise Exp(mu*p).
    static ServiceDist degenerate_hyperexp(double mu, double p) {
        return {Kind::DegenerateHyperExp, mu, p};
    }

    double mean() const { return 1.0 / mu; }
    /// Squared coefficient of variation.
    double scv() const;
    bool is_exponential() const { return kind == Kind::Exponential; }

    void validate() const;
    bool operator==(const ServiceDist&) const = default;
};

double sample_service(const ServiceDist& dist, Rng& rng);

struct SystemConfig {
    int K = 1;
    int d = 1;
    double lambda = 0.5;
    std::vector<double> speeds;  // empty means homogeneous unit speeds
    CopyMode copy_mode = CopyMode::Identical;
    PolicyId policy = PolicyId::Fcfs;
    ServiceDist service;

    double mu() const { return service.mu; }
    double speed(ServerId s) const { return speeds.empty() ? 1.0 : speeds[static_cast<std::size_t>(s)]; }
    double total_speed() const;
    double max_speed() const;
    double min_speed() const;
    bool homogeneous() const;

    /// Throws ValidationError naming the violated invariant.
    void validate() const;
    bool operator==(const SystemConfig&) const = default;
};

/// lambda / (mu * sum of speeds).
double effective_load(const SystemConfig& config);

/// Returns a copy of `config` whose lambda gives load `rho`.
SystemConfig with_load(SystemConfig config, double rho);

std::uint64_t binomial(int n, int k);

/// Lexicographic enumeration of the d-subsets of {0..K-1} with server incidence.
class TypeTable {
public:
    static constexpr int kMaxEnumeratedServers = 20;

    TypeTable(int K, int d);

    int servers() const { return K_; }
    int copies() const { return d_; }
    int size() const { return static_cast<int>(types_.size()); }

    std::span<const ServerId> servers_of(TypeId c) const { return types_[static_cast<std::size_t>(c)]; }
    std::uint32_t mask(TypeId c) const { return masks_[static_cast<std::size_t>(c)]; }
    /// Types whose copy set contains s, ascending.
    std::span<const TypeId> types_at(ServerId s) const { return incidence_[static_cast<std::size_t>(s)]; }
    bool contains(TypeId c, ServerId s) const { return (mask(c) >> s) & 1U; }

    /// Combinatorial rank of a sorted subset; inverse of servers_of.
    TypeId rank(std::span<const ServerId> sorted_subset) const;
    TypeId rank_mask(std::uint32_t mask) const;

    /// "1-2-4" style label with 1-based servers.
    std::string label(TypeId c) const;

private:
    int K_;
    int d_;
    std::vector<std::vector<ServerId>> types_;
    std::vector<std::uint32_t> masks_;
    std::vector<std::vector<TypeId>> incidence_;
};

TypeTable build_type_table(int K, int d);

std::string to_string(CopyMode mode);
std::string to_string(PolicyId policy);
std::string to_string(const ServiceDist& dist);

}  // namespace redlab
