#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "redlab/model.hpp"
#include "redlab/policies.hpp"
#include "redlab/rng.hpp"
#include "redlab/stats.hpp"

namespace redlab {

/// Exact dynamics, or one of the two PS identical-copies bounding systems.
enum class BoundingMode {
    Exact,
    PsLowerBound,  // type c departs at rate mu N_c / M_{smin(c)}
    PsUpperBound,  // a job leaves only after every copy is fully served
};

enum class Verdict { StableLike, Diverging, Inconclusive };

enum class EventKind { Arrival, Departure, CopyDone };

/// Stop after `busy_periods` regeneration cycles (if nonzero) or at `horizon`,
/// whichever comes first.
struct StopRule {
    std::uint64_t busy_periods = 0;
    double horizon = std::numeric_limits<double>::infinity();
    std::uint64_t max_events = std::numeric_limits<std::uint64_t>::max();

    static StopRule cycles(std::uint64_t n, double horizon_cap) { return {n, horizon_cap}; }
    static StopRule until(double t) { return {0, t}; }
};

struct EventRecord {
    double time = 0.0;
    EventKind kind = EventKind::Arrival;
    std::int64_t job_id = -1;  // -1 for lower-bound departures, which carry no identity
    TypeId type = -1;
    ServerId server = -1;      // completing server; -1 for arrivals
    int n_total = 0;
    std::vector<int> n_per_type;
};

struct RunMetrics {
    double time_avg_jobs = 0.0;
    double ci_halfwidth = std::numeric_limits<double>::infinity();
    std::uint64_t busy_periods_completed = 0;
    double divergence_slope = 0.0;
    Verdict verdict = Verdict::Inconclusive;
    bool never_regenerated = false;

    double mean_copies_per_server = 0.0;
    double copies_ci_halfwidth = std::numeric_limits<double>::infinity();
    double sim_time = 0.0;
    std::uint64_t events = 0;
    std::uint64_t jobs_arrived = 0;
    std::uint64_t jobs_departed = 0;
    std::uint64_t jobs_in_system = 0;
};

struct SimOptions {
    StopRule stop = StopRule::cycles(10000, 1e7);
    BoundingMode mode = BoundingMode::Exact;
    bool record_trace = false;
    /// Assert model invariants at every event (slow; for tests).
    bool check_invariants = false;
    /// Warm start: jobs per type present at time 0, interleaved by type.
    std::vector<int> initial_counts;
    /// Diverging if slope > factor * lambda (and the final count grew tenfold).
    double slope_factor = 0.01;
};

struct RunResult {
    RunMetrics metrics;
    CycleAccumulator cycles;
    std::vector<EventRecord> trace;
    std::vector<std::pair<double, double>> samples;  // (t, |N|) on a coarsening grid
};

/// Throws ValidationError when the mode/config pair is unsupported.
void validate_mode(const SystemConfig& config, BoundingMode mode);

/// Event-driven redundancy-d system. Rates are piecewise constant between
/// events, so completion times are exact for every policy and distribution.
class Simulator {
public:
    Simulator(SystemConfig config, RngSpec rng, BoundingMode mode = BoundingMode::Exact);

    /// Admits a job of type c now. `requirements` overrides sampling: one value
    /// (identical) or d values in server order (i.i.d.). Returns the job id.
    JobId inject_workload(TypeId c, std::span<const double> requirements = {});

    /// Time of the next event under the current state, drawing and caching
    /// pending clocks as needed.
    double next_event_time();
    /// Processes the next event and returns it.
    EventRecord advance_to_next_event();
    /// Lets time pass without processing an event; t must not exceed next_event_time().
    void advance_clock_to(double t);

    /// Runs until the stop rule fires.
    RunResult run(const SimOptions& options);

    double clock() const { return clock_; }
    const SystemConfig& config() const { return config_; }
    const TypeTable& types() const { return types_; }
    std::uint64_t jobs_in_system() const { return in_system_; }
    std::span<const int> jobs_per_type() const { return n_; }
    /// Copies present at server s (incomplete copies under the upper bound).
    int copies_at(ServerId s) const;
    const ServerQueue& queue(ServerId s) const { return *queues_[static_cast<std::size_t>(s)]; }
    std::vector<CopyRate> service_rates(ServerId s) const;
    bool has_job(JobId id) const { return jobs_.count(id) != 0; }
    std::uint64_t arrived() const { return arrived_; }
    std::uint64_t departed() const { return departed_; }

    /// Throws std::logic_error if a model invariant is broken.
    void check_invariants() const;

    /// Departure rate of type c in the lower-bound chain in the current state.
    double lower_bound_rate(TypeId c) const;

private:
    struct JobRecord {
        TypeId type;
        double arrival;
        int copies_left;
    };
    struct Pending {
        double time;
        EventKind kind;
        JobId job;
        TypeId type;
        ServerId server;
    };

    Pending pending();
    void pass_time(double t);
    EventRecord process(const Pending& event);
    TypeId arrive();
    void depart(JobId job, ServerId server);
    EventRecord record(double time, EventKind kind, std::int64_t job, TypeId type, ServerId server) const;
    ServerId min_copy_server(TypeId c) const;

    SystemConfig config_;
    TypeTable types_;
    BoundingMode mode_;
    Rng rng_;
    std::uint64_t stream_id_;

    double clock_ = 0.0;
    double next_arrival_ = 0.0;
    std::optional<Pending> cached_;
    JobId next_id_ = 0;

    std::vector<std::unique_ptr<ServerQueue>> queues_;
    std::unordered_map<JobId, JobRecord> jobs_;
    std::vector<int> n_;
    std::vector<int> m_;  // lower-bound copy counts
    std::uint64_t in_system_ = 0;
    std::uint64_t arrived_ = 0;
    std::uint64_t departed_ = 0;

    // Regeneration bookkeeping.
    bool cycle_open_ = false;
    double cycle_start_ = 0.0;
    Cycle current_cycle_;
    CycleAccumulator cycles_;
    double total_area_ = 0.0;
    double total_copy_area_ = 0.0;
};

/// Single replication.
RunResult simulate(const SystemConfig& config, const RngSpec& rng, const SimOptions& options);

struct ReplicatedRun {
    std::vector<RunResult> replications;  // ordered by stream id
    RunMetrics aggregate;
};

/// Replications use streams 0..n-1 of `master_seed`; aggregation is a fold in
/// stream order (merged regenerative cycles, mean slope, majority verdict).
ReplicatedRun simulate_replications(const SystemConfig& config, std::uint64_t master_seed, int replications,
                                    const SimOptions& options, unsigned jobs = 1);

/// Majority vote; ties and empty input give Inconclusive.
Verdict majority_verdict(std::span<const Verdict> verdicts);

std::string to_string(Verdict v);
std::string to_string(BoundingMode m);
std::string to_string(EventKind k);

}  // namespace redlab
