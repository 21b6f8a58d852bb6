#include "redlab/stability.hpp"

#include <algorithm>
#include <cmath>

#include "redlab/errors.hpp"
#include "redlab/saturated.hpp"

namespace redlab {

std::optional<double> theoretical_threshold(const SystemConfig& config) {
    config.validate();
    if (!config.service.is_exponential() || config.policy == PolicyId::PriorityExample) return std::nullopt;
    const bool homogeneous = config.homogeneous();
    if (config.d == 1) {
        // Every server is an independent M/M/1 fed at lambda/K.
        if (homogeneous) return 1.0;
        return config.K * config.min_speed() / config.total_speed();
    }
    if (!homogeneous) {
        // d = K: the whole system acts as one server of the fastest speed.
        if (config.d == config.K && config.copy_mode == CopyMode::Identical &&
            (config.policy == PolicyId::Fcfs || config.policy == PolicyId::Ps))
            return config.max_speed() / config.total_speed();
        return std::nullopt;
    }
    if (config.copy_mode == CopyMode::Iid) return 1.0;
    switch (config.policy) {
        case PolicyId::Ros: return 1.0;
        case PolicyId::Ps: return 1.0 / config.d;
        case PolicyId::Fcfs: return stability_threshold_fcfs(config.K, config.d);
        case PolicyId::PriorityExample: break;
    }
    return std::nullopt;
}

Verdict probe_verdict(const SystemConfig& config_template, double rho, double horizon,
                      const BoundaryOptions& options, std::uint64_t probe_index) {
    const SystemConfig config = with_load(config_template, rho);
    SimOptions sim;
    sim.stop = StopRule::until(horizon);
    sim.stop.max_events = options.max_events;
    // Each probe draws from its own block of streams.
    const std::uint64_t seed = options.seed + 0x9E3779B97F4A7C15ULL * (probe_index + 1);
    const auto run = simulate_replications(config, seed, options.replications, sim, options.jobs);
    if (run.aggregate.verdict != Verdict::Inconclusive) return run.aggregate.verdict;

    sim.stop = StopRule::until(2.0 * horizon);
    sim.stop.max_events = 2 * options.max_events;
    const auto longer = simulate_replications(config, seed ^ 0xD1B54A32D192ED03ULL, options.replications, sim,
                                              options.jobs);
    return longer.aggregate.verdict;
}

BoundaryEstimate estimate_boundary(const SystemConfig& config_template, double rho_lo, double rho_hi, double tol,
                                   const BoundaryOptions& options) {
    config_template.validate();
    if (!(rho_lo > 0.0) || !(rho_hi > rho_lo)) throw DomainError("need 0 < lo < hi");
    if (!(tol >= 0.02)) throw DomainError("tol >= 0.02");
    if (options.replications < 1 || options.budget < 2) throw DomainError("replications >= 1 and budget >= 2");

    BoundaryEstimate out;
    out.rho_star_theory = theoretical_threshold(config_template);
    const double mu = config_template.mu();
    std::uint64_t probes = 0;

    auto horizon_at = [&](double rho, double lo, double hi) {
        const double center = options.center ? *options.center
                              : out.rho_star_theory ? *out.rho_star_theory
                                                    : 0.5 * (lo + hi);
        const double gap = std::max(std::abs(rho - center), tol / 4.0);
        return std::clamp(options.horizon_scale / (gap * mu), options.horizon_min, options.horizon_cap);
    };
    auto probe = [&](double rho, double lo, double hi) {
        const Verdict v = probe_verdict(config_template, rho, horizon_at(rho, lo, hi), options, probes++);
        out.verdict_trace.emplace_back(rho, v);
        return v;
    };

    double lo = rho_lo;
    double hi = rho_hi;
    const Verdict v_lo = probe(lo, lo, hi);
    const Verdict v_hi = probe(hi, lo, hi);
    if (v_lo != Verdict::StableLike || v_hi != Verdict::Diverging)
        throw NoBracket("endpoints must be stable at lo and diverging at hi (got " + to_string(v_lo) + ", " +
                        to_string(v_hi) + ")");

    out.status = BoundaryStatus::Converged;
    while (hi - lo > tol) {
        if (static_cast<int>(probes) >= options.budget) {
            out.status = BoundaryStatus::BudgetExhausted;
            break;
        }
        const double mid = 0.5 * (lo + hi);
        const Verdict v = probe(mid, lo, hi);
        if (v == Verdict::StableLike) {
            lo = mid;
        } else if (v == Verdict::Diverging) {
            hi = mid;
        } else {
            out.status = BoundaryStatus::Inconclusive;
            break;
        }
    }
    out.bracket = {lo, hi};
    out.rho_star_empirical = 0.5 * (lo + hi);
    return out;
}

std::vector<SweepRow> sweep(const SystemConfig& config_template, const std::vector<double>& rhos,
                            const SweepOptions& options) {
    config_template.validate();
    std::vector<SweepRow> rows;
    rows.reserve(rhos.size());
    for (std::size_t i = 0; i < rhos.size(); ++i) {
        const double rho = rhos[i];
        if (!(rho > 0.0)) throw DomainError("sweep loads must be positive");
        SimOptions sim;
        sim.stop = StopRule::cycles(options.busy_periods, options.horizon);
        sim.stop.max_events = options.max_events;
        const auto run = simulate_replications(with_load(config_template, rho), options.seed + i,
                                               options.replications, sim, options.jobs);
        const RunMetrics& m = run.aggregate;
        rows.push_back({rho, m.time_avg_jobs, m.ci_halfwidth, m.busy_periods_completed, m.divergence_slope,
                        m.verdict});
    }
    return rows;
}

std::string to_string(BoundaryStatus status) {
    switch (status) {
        case BoundaryStatus::Converged: return "converged";
        case BoundaryStatus::Inconclusive: return "inconclusive";
        case BoundaryStatus::BudgetExhausted: return "budget_exhausted";
    }
    return "?";
}

}  // namespace redlab
