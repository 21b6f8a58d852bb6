#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <unordered_map>
#include <utility>
#include <vector>

#include "redlab/model.hpp"
#include "redlab/rng.hpp"

namespace redlab {

using JobId = std::uint64_t;

struct CopyRate {
    JobId job;
    double rate;
    bool operator==(const CopyRate&) const = default;
};

/// Time until the next copy completion at one server under current rates.
struct PendingCompletion {
    JobId job;
    double delay;
};

/// Per-server queue discipline. Copies move along piecewise-linear attained
/// service; rates change only when the queue content changes.
class ServerQueue {
public:
    explicit ServerQueue(double speed) : speed_(speed) {}
    virtual ~ServerQueue() = default;

    ServerQueue(const ServerQueue&) = delete;
    ServerQueue& operator=(const ServerQueue&) = delete;

    virtual void enqueue(JobId job, TypeId type, double requirement, Rng& rng) = 0;
    /// Removes a copy (completed or cancelled). Unknown ids are ignored.
    virtual void remove(JobId job, Rng& rng) = 0;
    virtual bool contains(JobId job) const = 0;
    virtual std::size_t size() const = 0;
    bool empty() const { return size() == 0; }

    /// Adds dt of wall time of service under the current rates.
    virtual void advance(double dt) = 0;
    virtual std::optional<PendingCompletion> next_completion() const = 0;
    /// Instantaneous per-copy service rates; copies with rate 0 are omitted.
    virtual std::vector<CopyRate> service_rates() const = 0;
    virtual double attained(JobId job) const = 0;
    /// Every queued copy's job id, ascending.
    virtual std::vector<JobId> jobs() const = 0;

    double speed() const { return speed_; }

protected:
    double speed_;
};

/// Builds the discipline used at server `s`; PriorityExample needs the type table.
std::unique_ptr<ServerQueue> make_server_queue(PolicyId policy, ServerId s, double speed,
                                               const TypeTable& types);

/// Head-of-line service, oldest job id first.
class FcfsQueue final : public ServerQueue {
public:
    using ServerQueue::ServerQueue;
    void enqueue(JobId job, TypeId type, double requirement, Rng& rng) override;
    void remove(JobId job, Rng& rng) override;
    bool contains(JobId job) const override { return copies_.count(job) != 0; }
    std::size_t size() const override { return copies_.size(); }
    void advance(double dt) override;
    std::optional<PendingCompletion> next_completion() const override;
    std::vector<CopyRate> service_rates() const override;
    double attained(JobId job) const override;
    std::vector<JobId> jobs() const override;

private:
    struct Copy {
        double requirement;
        double attained;
    };
    std::map<JobId, Copy> copies_;
};

/// Egalitarian sharing: every copy is served at speed / M_s. A virtual clock
/// per server makes every event O(log M_s).
class PsQueue final : public ServerQueue {
public:
    using ServerQueue::ServerQueue;
    void enqueue(JobId job, TypeId type, double requirement, Rng& rng) override;
    void remove(JobId job, Rng& rng) override;
    bool contains(JobId job) const override { return finish_.count(job) != 0; }
    std::size_t size() const override { return finish_.size(); }
    void advance(double dt) override;
    std::optional<PendingCompletion> next_completion() const override;
    std::vector<CopyRate> service_rates() const override;
    double attained(JobId job) const override;
    std::vector<JobId> jobs() const override;

private:
    struct Entry {
        double finish;  // virtual time at which the copy completes
        double requirement;
    };
    double virtual_time_ = 0.0;
    std::unordered_map<JobId, Entry> finish_;
    std::set<std::pair<double, JobId>> order_;
};

/// An idle server picks a waiting copy uniformly at random and serves it
/// until it completes or is cancelled.
class RosQueue final : public ServerQueue {
public:
    using ServerQueue::ServerQueue;
    void enqueue(JobId job, TypeId type, double requirement, Rng& rng) override;
    void remove(JobId job, Rng& rng) override;
    bool contains(JobId job) const override;
    std::size_t size() const override { return waiting_.size() + (current_ ? 1 : 0); }
    void advance(double dt) override;
    std::optional<PendingCompletion> next_completion() const override;
    std::vector<CopyRate> service_rates() const override;
    double attained(JobId job) const override;
    std::vector<JobId> jobs() const override;

private:
    struct Waiting {
        JobId job;
        double requirement;
    };
    struct Current {
        JobId job;
        double requirement;
        double attained;
    };
    void select(Rng& rng);

    std::optional<Current> current_;
    std::vector<Waiting> waiting_;
    std::unordered_map<JobId, std::size_t> slot_;
};

/// Two-class preemptive-resume priority, FIFO within each class.
class PriorityQueue final : public ServerQueue {
public:
    PriorityQueue(double speed, std::vector<TypeId> high_types);
    void enqueue(JobId job, TypeId type, double requirement, Rng& rng) override;
    void remove(JobId job, Rng& rng) override;
    bool contains(JobId job) const override { return high_.count(job) || low_.count(job); }
    std::size_t size() const override { return high_.size() + low_.size(); }
    void advance(double dt) override;
    std::optional<PendingCompletion> next_completion() const override;
    std::vector<CopyRate> service_rates() const override;
    double attained(JobId job) const override;
    std::vector<JobId> jobs() const override;

private:
    struct Copy {
        double requirement;
        double attained;
    };
    std::map<JobId, Copy>* active();
    const std::map<JobId, Copy>* active() const;

    std::vector<TypeId> high_types_;
    std::map<JobId, Copy> high_;
    std::map<JobId, Copy> low_;
};

/// Drift of N_{2,3} in the K=3, d=2 priority example with the {1,2}/{1,3}
/// M-model in steady state. Requires lambda/(3 mu) < 3/2.
double priority_drift(double lambda, double mu);

}  // namespace redlab
