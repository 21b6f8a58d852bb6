#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace redlab {

struct Estimate {
    double mean = 0.0;
    double ci_halfwidth = 0.0;  // 95%
};

/// One regeneration cycle: arrival to an empty system until the next one.
struct Cycle {
    double area = 0.0;       // integral of |N(t)|
    double duration = 0.0;
    double copy_area = 0.0;  // integral of sum_s M_s(t)
};

/// Per-replication cycle lists. Merging keys by stream id, so folds in any
/// order give identical estimates.
class CycleAccumulator {
public:
    void add(std::uint64_t stream_id, const Cycle& cycle);
    void merge(const CycleAccumulator& other);

    std::size_t size() const;
    /// Cycles concatenated in ascending stream order.
    std::vector<Cycle> cycles() const;

private:
    std::map<std::uint64_t, std::vector<Cycle>> streams_;
};

inline constexpr std::size_t kMinRegenerativeCycles = 30;

/// Ratio estimator sum(area)/sum(duration) with a jackknife CI over cycles.
/// Throws TooFewCycles below 30 cycles.
Estimate regenerative_mean(std::span<const Cycle> cycles);
Estimate regenerative_copy_mean(std::span<const Cycle> cycles);
Estimate regenerative_ratio(std::span<const double> numerators, std::span<const double> denominators);

/// Least-squares slope of y on t.
double divergence_slope(std::span<const std::pair<double, double>> samples);

/// Batch-means CI of a time average given per-batch (area, time) sums.
Estimate batch_means(std::span<const double> areas, std::span<const double> times);

/// Two-sided 97.5% Student-t quantile (Cornish-Fisher expansion; df >= 1).
double student_t975(double df);

/// Piecewise-constant process sampled on an equally spaced grid that
/// coarsens (drops every other point) when the buffer fills.
class GridSampler {
public:
    explicit GridSampler(double initial_spacing, std::size_t capacity = 4096);

    /// The process held `value` on (last_time, t].
    void advance(double t, double value);
    const std::vector<std::pair<double, double>>& samples() const { return samples_; }
    /// Samples with time >= from.
    std::vector<std::pair<double, double>> tail(double from) const;

private:
    double spacing_;
    double next_;
    std::size_t capacity_;
    std::vector<std::pair<double, double>> samples_;
};

}  // namespace redlab
