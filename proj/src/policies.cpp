#include "redlab/policies.hpp"

#include <algorithm>
#include <cmath>

#include "redlab/errors.hpp"

namespace redlab {
namespace {

double clamp_delay(double delay) {
    if (delay < -1e-9 * (1.0 + std::abs(delay)))
        throw std::logic_error("completion time precedes clock");
    return std::max(delay, 0.0);
}

}  // namespace

std::unique_ptr<ServerQueue> make_server_queue(PolicyId policy, ServerId s, double speed,
                                               const TypeTable& types) {
    switch (policy) {
        case PolicyId::Fcfs: return std::make_unique<FcfsQueue>(speed);
        case PolicyId::Ps: return std::make_unique<PsQueue>(speed);
        case PolicyId::Ros: return std::make_unique<RosQueue>(speed);
        case PolicyId::PriorityExample: {
            if (types.servers() != 3 || types.copies() != 2)
                throw ValidationError("priority_example requires K = 3 and d = 2");
            // Server 1 is plain FCFS; server 2 favours {1,2}, server 3 favours {1,3}.
            if (s == 0) return std::make_unique<FcfsQueue>(speed);
            const ServerId favoured[] = {0, s};
            return std::make_unique<PriorityQueue>(speed, std::vector<TypeId>{types.rank(favoured)});
        }
    }
    throw ValidationError("unknown policy");
}

// FCFS

void FcfsQueue::enqueue(JobId job, TypeId, double requirement, Rng&) {
    copies_.emplace(job, Copy{requirement, 0.0});
}

void FcfsQueue::remove(JobId job, Rng&) { copies_.erase(job); }

void FcfsQueue::advance(double dt) {
    if (copies_.empty()) return;
    Copy& head = copies_.begin()->second;
    head.attained = std::min(head.requirement, head.attained + dt * speed_);
}

std::optional<PendingCompletion> FcfsQueue::next_completion() const {
    if (copies_.empty()) return std::nullopt;
    const auto& [job, head] = *copies_.begin();
    return PendingCompletion{job, clamp_delay((head.requirement - head.attained) / speed_)};
}

std::vector<CopyRate> FcfsQueue::service_rates() const {
    if (copies_.empty()) return {};
    return {CopyRate{copies_.begin()->first, speed_}};
}

double FcfsQueue::attained(JobId job) const {
    auto it = copies_.find(job);
    return it == copies_.end() ? 0.0 : it->second.attained;
}

// PS

void PsQueue::enqueue(JobId job, TypeId, double requirement, Rng&) {
    const double finish = virtual_time_ + requirement;
    finish_.emplace(job, Entry{finish, requirement});
    order_.emplace(finish, job);
}

void PsQueue::remove(JobId job, Rng&) {
    auto it = finish_.find(job);
    if (it == finish_.end()) return;
    order_.erase({it->second.finish, job});
    finish_.erase(it);
    if (finish_.empty()) virtual_time_ = 0.0;
}

void PsQueue::advance(double dt) {
    if (finish_.empty()) return;
    virtual_time_ += dt * speed_ / static_cast<double>(finish_.size());
}

std::optional<PendingCompletion> PsQueue::next_completion() const {
    if (order_.empty()) return std::nullopt;
    const auto& [finish, job] = *order_.begin();
    const double delay = (finish - virtual_time_) * static_cast<double>(finish_.size()) / speed_;
    return PendingCompletion{job, clamp_delay(delay)};
}

std::vector<CopyRate> PsQueue::service_rates() const {
    std::vector<CopyRate> rates;
    if (order_.empty()) return rates;
    const double share = speed_ / static_cast<double>(order_.size());
    rates.reserve(order_.size());
    for (const auto& [finish, job] : order_) rates.push_back({job, share});
    std::sort(rates.begin(), rates.end(), [](const CopyRate& a, const CopyRate& b) { return a.job < b.job; });
    return rates;
}

double PsQueue::attained(JobId job) const {
    auto it = finish_.find(job);
    if (it == finish_.end()) return 0.0;
    return std::clamp(virtual_time_ - (it->second.finish - it->second.requirement), 0.0, it->second.requirement);
}

// ROS

bool RosQueue::contains(JobId job) const {
    return (current_ && current_->job == job) || slot_.count(job) != 0;
}

void RosQueue::enqueue(JobId job, TypeId, double requirement, Rng&) {
    if (!current_) {
        current_ = Current{job, requirement, 0.0};
        return;
    }
    slot_[job] = waiting_.size();
    waiting_.push_back({job, requirement});
}

void RosQueue::select(Rng& rng) {
    if (waiting_.empty()) return;
    const std::size_t pick = waiting_.size() == 1 ? 0 : static_cast<std::size_t>(rng.below(waiting_.size()));
    const Waiting chosen = waiting_[pick];
    slot_.erase(chosen.job);
    if (pick + 1 != waiting_.size()) {
        waiting_[pick] = waiting_.back();
        slot_[waiting_[pick].job] = pick;
    }
    waiting_.pop_back();
    current_ = Current{chosen.job, chosen.requirement, 0.0};
}

void RosQueue::remove(JobId job, Rng& rng) {
    if (current_ && current_->job == job) {
        current_.reset();
        select(rng);
        return;
    }
    auto it = slot_.find(job);
    if (it == slot_.end()) return;
    const std::size_t pos = it->second;
    slot_.erase(it);
    if (pos + 1 != waiting_.size()) {
        waiting_[pos] = waiting_.back();
        slot_[waiting_[pos].job] = pos;
    }
    waiting_.pop_back();
}

void RosQueue::advance(double dt) {
    if (current_) current_->attained = std::min(current_->requirement, current_->attained + dt * speed_);
}

std::optional<PendingCompletion> RosQueue::next_completion() const {
    if (!current_) return std::nullopt;
    return PendingCompletion{current_->job, clamp_delay((current_->requirement - current_->attained) / speed_)};
}

std::vector<CopyRate> RosQueue::service_rates() const {
    if (!current_) return {};
    return {CopyRate{current_->job, speed_}};
}

double RosQueue::attained(JobId job) const {
    return current_ && current_->job == job ? current_->attained : 0.0;
}

// Priority

PriorityQueue::PriorityQueue(double speed, std::vector<TypeId> high_types)
    : ServerQueue(speed), high_types_(std::move(high_types)) {}

void PriorityQueue::enqueue(JobId job, TypeId type, double requirement, Rng&) {
    const bool high = std::find(high_types_.begin(), high_types_.end(), type) != high_types_.end();
    (high ? high_ : low_).emplace(job, Copy{requirement, 0.0});
}

void PriorityQueue::remove(JobId job, Rng&) {
    if (high_.erase(job) == 0) low_.erase(job);
}

std::map<JobId, PriorityQueue::Copy>* PriorityQueue::active() {
    if (!high_.empty()) return &high_;
    if (!low_.empty()) return &low_;
    return nullptr;
}

const std::map<JobId, PriorityQueue::Copy>* PriorityQueue::active() const {
    return const_cast<PriorityQueue*>(this)->active();
}

void PriorityQueue::advance(double dt) {
    if (auto* q = active()) {
        Copy& head = q->begin()->second;
        head.attained = std::min(head.requirement, head.attained + dt * speed_);
    }
}

std::optional<PendingCompletion> PriorityQueue::next_completion() const {
    const auto* q = active();
    if (!q) return std::nullopt;
    const auto& [job, head] = *q->begin();
    return PendingCompletion{job, clamp_delay((head.requirement - head.attained) / speed_)};
}

std::vector<CopyRate> PriorityQueue::service_rates() const {
    const auto* q = active();
    if (!q) return {};
    return {CopyRate{q->begin()->first, speed_}};
}

double PriorityQueue::attained(JobId job) const {
    if (auto it = high_.find(job); it != high_.end()) return it->second.attained;
    if (auto it = low_.find(job); it != low_.end()) return it->second.attained;
    return 0.0;
}

double priority_drift(double lambda, double mu) {
    if (!(lambda > 0.0) || !(mu > 0.0)) throw DomainError("lambda and mu must be positive");
    const double a = lambda / 3.0;
    if (!(a / mu < 1.5)) throw DomainError("M-model {1,2}/{1,3} must be stable: lambda/(3 mu) < 3/2");
    const double both_empty = (2 * mu - a) * (2 * mu - a) * (3 * mu - 2 * a) /
                              (4 * mu * mu * (3 * mu - 2 * a) + a * a * mu);
    return a - 2 * mu * both_empty * (2 * mu / (2 * mu - a));
}

}  // namespace redlab

namespace redlab {
namespace {

template <typename Map>
std::vector<JobId> keys_of(const Map& m) {
    std::vector<JobId> out;
    out.reserve(m.size());
    for (const auto& kv : m) out.push_back(kv.first);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::vector<JobId> FcfsQueue::jobs() const { return keys_of(copies_); }
std::vector<JobId> PsQueue::jobs() const { return keys_of(finish_); }

std::vector<JobId> RosQueue::jobs() const {
    std::vector<JobId> out = keys_of(slot_);
    if (current_) out.insert(std::lower_bound(out.begin(), out.end(), current_->job), current_->job);
    return out;
}

std::vector<JobId> PriorityQueue::jobs() const {
    std::vector<JobId> out = keys_of(high_);
    const auto low = keys_of(low_);
    out.insert(out.end(), low.begin(), low.end());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace redlab
