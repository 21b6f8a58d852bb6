#include "redlab/stats.hpp"

#include <cmath>
#include <limits>

#include "redlab/errors.hpp"

namespace redlab {

void CycleAccumulator::add(std::uint64_t stream_id, const Cycle& cycle) {
    streams_[stream_id].push_back(cycle);
}

void CycleAccumulator::merge(const CycleAccumulator& other) {
    for (const auto& [id, cycles] : other.streams_) {
        auto& mine = streams_[id];
        mine.insert(mine.end(), cycles.begin(), cycles.end());
    }
}

std::size_t CycleAccumulator::size() const {
    std::size_t n = 0;
    for (const auto& [id, cycles] : streams_) n += cycles.size();
    return n;
}

std::vector<Cycle> CycleAccumulator::cycles() const {
    std::vector<Cycle> out;
    out.reserve(size());
    for (const auto& [id, cycles] : streams_) out.insert(out.end(), cycles.begin(), cycles.end());
    return out;
}

Estimate regenerative_ratio(std::span<const double> num, std::span<const double> den) {
    const std::size_t n = num.size();
    if (n < kMinRegenerativeCycles || den.size() != n)
        throw TooFewCycles("regenerative estimate needs at least 30 cycles");
    double sum_num = 0.0;
    double sum_den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum_num += num[i];
        sum_den += den[i];
    }
    const double ratio = sum_num / sum_den;

    // Leave-one-out ratios; variance (n-1)/n * sum (r_i - mean r)^2.
    double mean_loo = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean_loo += (sum_num - num[i]) / (sum_den - den[i]);
    mean_loo /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = (sum_num - num[i]) / (sum_den - den[i]) - mean_loo;
        ss += r * r;
    }
    const double var = ss * static_cast<double>(n - 1) / static_cast<double>(n);
    return {ratio, 1.959963984540054 * std::sqrt(var)};
}

namespace {

Estimate regenerative_of(std::span<const Cycle> cycles, double Cycle::*field) {
    std::vector<double> num;
    std::vector<double> den;
    num.reserve(cycles.size());
    den.reserve(cycles.size());
    for (const Cycle& c : cycles) {
        num.push_back(c.*field);
        den.push_back(c.duration);
    }
    return regenerative_ratio(num, den);
}

}  // namespace

Estimate regenerative_mean(std::span<const Cycle> cycles) { return regenerative_of(cycles, &Cycle::area); }

Estimate regenerative_copy_mean(std::span<const Cycle> cycles) {
    return regenerative_of(cycles, &Cycle::copy_area);
}

double divergence_slope(std::span<const std::pair<double, double>> samples) {
    const auto n = static_cast<double>(samples.size());
    if (samples.size() < 2) return 0.0;
    double mt = 0.0;
    double my = 0.0;
    for (const auto& [t, y] : samples) {
        mt += t;
        my += y;
    }
    mt /= n;
    my /= n;
    double sty = 0.0;
    double stt = 0.0;
    for (const auto& [t, y] : samples) {
        sty += (t - mt) * (y - my);
        stt += (t - mt) * (t - mt);
    }
    return stt > 0.0 ? sty / stt : 0.0;
}

double student_t975(double df) {
    const double z = 1.959963984540054;
    const double z3 = z * z * z;
    const double z5 = z3 * z * z;
    const double z7 = z5 * z * z;
    return z + (z3 + z) / (4 * df) + (5 * z5 + 16 * z3 + 3 * z) / (96 * df * df) +
           (3 * z7 + 19 * z5 + 17 * z3 - 15 * z) / (384 * df * df * df);
}

Estimate batch_means(std::span<const double> areas, std::span<const double> times) {
    const std::size_t b = areas.size();
    double total_area = 0.0;
    double total_time = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        total_area += areas[i];
        total_time += times[i];
    }
    Estimate e{total_area / total_time, std::numeric_limits<double>::infinity()};
    if (b < 2) return e;
    double mean = 0.0;
    for (std::size_t i = 0; i < b; ++i) mean += areas[i] / times[i];
    mean /= static_cast<double>(b);
    double ss = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        const double diff = areas[i] / times[i] - mean;
        ss += diff * diff;
    }
    const double sd = std::sqrt(ss / static_cast<double>(b - 1));
    e.ci_halfwidth = student_t975(static_cast<double>(b - 1)) * sd / std::sqrt(static_cast<double>(b));
    return e;
}

GridSampler::GridSampler(double initial_spacing, std::size_t capacity)
    : spacing_(initial_spacing), next_(0.0), capacity_(capacity) {
    samples_.reserve(capacity);
}

void GridSampler::advance(double t, double value) {
    while (next_ <= t) {
        samples_.emplace_back(next_, value);
        next_ += spacing_;
        if (samples_.size() >= capacity_) {
            std::size_t keep = 0;
            for (std::size_t i = 0; i < samples_.size(); i += 2) samples_[keep++] = samples_[i];
            samples_.resize(keep);
            spacing_ *= 2.0;
            next_ = samples_.back().first + spacing_;
        }
    }
}

std::vector<std::pair<double, double>> GridSampler::tail(double from) const {
    std::vector<std::pair<double, double>> out;
    for (const auto& s : samples_)
        if (s.first >= from) out.push_back(s);
    return out;
}

}  // namespace redlab
