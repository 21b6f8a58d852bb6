#include "redlab/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "redlab/errors.hpp"

namespace redlab {

double ServiceDist::scv() const {
    switch (kind) {
        case Kind::Exponential: return 1.0;
        case Kind::Deterministic: return 0.0;
        case Kind::DegenerateHyperExp: return 2.0 / p - 1.0;
    }
    return 0.0;
}

void ServiceDist::validate() const {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw ValidationError("mu > 0");
    if (kind == Kind::DegenerateHyperExp && !(p > 0.0 && p <= 1.0))
        throw ValidationError("dhe probability p in (0, 1]");
}

double sample_service(const ServiceDist& dist, Rng& rng) {
    switch (dist.kind) {
        case ServiceDist::Kind::Exponential: return rng.exponential(dist.mu);
        case ServiceDist::Kind::Deterministic: return 1.0 / dist.mu;
        case ServiceDist::Kind::DegenerateHyperExp:
            if (!rng.bernoulli(dist.p)) return 0.0;
            return rng.exponential(dist.mu * dist.p);
    }
    return 0.0;
}

double SystemConfig::total_speed() const {
    if (speeds.empty()) return static_cast<double>(K);
    return std::accumulate(speeds.begin(), speeds.end(), 0.0);
}

double SystemConfig::max_speed() const {
    return speeds.empty() ? 1.0 : *std::max_element(speeds.begin(), speeds.end());
}

double SystemConfig::min_speed() const {
    return speeds.empty() ? 1.0 : *std::min_element(speeds.begin(), speeds.end());
}

bool SystemConfig::homogeneous() const {
    return std::all_of(speeds.begin(), speeds.end(), [&](double v) { return v == speeds.front(); });
}

void SystemConfig::validate() const {
    if (K < 1) throw ValidationError("K >= 1");
    if (d < 1) throw ValidationError("d >= 1");
    if (d > K) throw ValidationError("d <= K");
    if (K > kMaxServers) throw ValidationError("K <= 20");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda > 0");
    service.validate();
    if (!speeds.empty()) {
        if (static_cast<int>(speeds.size()) != K) throw ValidationError("speeds has K entries");
        for (double v : speeds)
            if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("speeds > 0");
    }
    if (policy == PolicyId::PriorityExample && (K != 3 || d != 2))
        throw ValidationError("priority_example requires K = 3 and d = 2");
}

double effective_load(const SystemConfig& config) {
    return config.lambda / (config.mu() * config.total_speed());
}

SystemConfig with_load(SystemConfig config, double rho) {
    config.lambda = rho * config.mu() * config.total_speed();
    return config;
}

std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    return r;
}

TypeTable::TypeTable(int K, int d) : K_(K), d_(d) {
    if (d < 1 || d > K) throw DimensionError("type table needs 1 <= d <= K");
    if (K > kMaxEnumeratedServers) throw DimensionError("type enumeration capped at K <= 20");

    std::vector<ServerId> subset(static_cast<std::size_t>(d));
    std::iota(subset.begin(), subset.end(), 0);
    while (true) {
        types_.push_back(subset);
        std::uint32_t m = 0;
        for (ServerId s : subset) m |= 1U << s;
        masks_.push_back(m);
        int i = d - 1;
        while (i >= 0 && subset[static_cast<std::size_t>(i)] == K - d + i) --i;
        if (i < 0) break;
        ++subset[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < d; ++j)
            subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
    }
    incidence_.resize(static_cast<std::size_t>(K));
    for (TypeId c = 0; c < size(); ++c)
        for (ServerId s : types_[static_cast<std::size_t>(c)]) incidence_[static_cast<std::size_t>(s)].push_back(c);
}

TypeId TypeTable::rank(std::span<const ServerId> subset) const {
    // Number of subsets lexicographically before `subset`.
    std::uint64_t r = 0;
    int prev = -1;
    for (int i = 0; i < d_; ++i) {
        for (int v = prev + 1; v < subset[static_cast<std::size_t>(i)]; ++v)
            r += binomial(K_ - 1 - v, d_ - 1 - i);
        prev = subset[static_cast<std::size_t>(i)];
    }
    return static_cast<TypeId>(r);
}

TypeId TypeTable::rank_mask(std::uint32_t m) const {
    std::vector<ServerId> subset;
    for (ServerId s = 0; s < K_; ++s)
        if ((m >> s) & 1U) subset.push_back(s);
    if (static_cast<int>(subset.size()) != d_) throw DimensionError("mask does not have d servers");
    return rank(subset);
}

std::string TypeTable::label(TypeId c) const {
    std::string out;
    for (ServerId s : servers_of(c)) {
        if (!out.empty()) out += '-';
        out += std::to_string(s + 1);
    }
    return out;
}

TypeTable build_type_table(int K, int d) { return TypeTable(K, d); }

std::string to_string(CopyMode mode) { return mode == CopyMode::Iid ? "iid" : "identical"; }

std::string to_string(PolicyId policy) {
    switch (policy) {
        case PolicyId::Fcfs: return "fcfs";
        case PolicyId::Ps: return "ps";
        case PolicyId::Ros: return "ros";
        case PolicyId::PriorityExample: return "priority_example";
    }
    return "?";
}

}  // namespace redlab
