#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "redlab/model.hpp"
#include "redlab/simulator.hpp"

namespace redlab {

/// Known load threshold below which the configuration is stable, if any.
std::optional<double> theoretical_threshold(const SystemConfig& config);

enum class BoundaryStatus { Converged, Inconclusive, BudgetExhausted };

struct BoundaryOptions {
    int replications = 3;
    /// Probe horizon is scale / (max(|rho - center|, tol/4) mu), clamped.
    double horizon_scale = 2000.0;
    double horizon_min = 1000.0;
    double horizon_cap = 2e5;
    std::uint64_t max_events = 20000000;
    /// Horizon focus; defaults to the theoretical threshold, else the
    /// midpoint of the current bracket.
    std::optional<double> center;
    /// Maximum number of probes, endpoints included.
    int budget = 24;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
};

struct BoundaryEstimate {
    double rho_star_empirical = 0.0;
    std::optional<double> rho_star_theory;
    std::pair<double, double> bracket;
    std::vector<std::pair<double, Verdict>> verdict_trace;
    BoundaryStatus status = BoundaryStatus::Converged;
};

/// Bisects on rho (scaling lambda) between a stable and a diverging endpoint
/// until the bracket is no wider than tol. Throws NoBracket when the endpoint
/// verdicts agree or are reversed.
BoundaryEstimate estimate_boundary(const SystemConfig& config_template, double rho_lo, double rho_hi, double tol,
                                   const BoundaryOptions& options = {});

/// Majority verdict of one probe at load rho, extending the horizon once on a tie.
Verdict probe_verdict(const SystemConfig& config_template, double rho, double horizon,
                      const BoundaryOptions& options, std::uint64_t probe_index);

struct SweepOptions {
    int replications = 3;
    std::uint64_t busy_periods = 10000;
    double horizon = 1e5;
    std::uint64_t max_events = 50000000;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
};

struct SweepRow {
    double rho = 0.0;
    double time_avg_jobs = 0.0;
    double ci_halfwidth = 0.0;
    std::uint64_t busy_periods = 0;
    double slope = 0.0;
    Verdict verdict = Verdict::Inconclusive;
};

std::vector<SweepRow> sweep(const SystemConfig& config_template, const std::vector<double>& rhos,
                            const SweepOptions& options = {});

std::string to_string(BoundaryStatus status);

}  // namespace redlab
