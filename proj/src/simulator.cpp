#include "redlab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "redlab/errors.hpp"
#include "redlab/parallel.hpp"

namespace redlab {

void validate_mode(const SystemConfig& config, BoundingMode mode) {
    config.validate();
    if (mode == BoundingMode::Exact) return;
    if (config.policy != PolicyId::Ps || config.copy_mode != CopyMode::Identical || !config.service.is_exponential())
        throw ValidationError("bounding modes require policy=ps, copy_mode=identical, service=exp");
    if (mode == BoundingMode::PsLowerBound && !config.homogeneous())
        throw ValidationError("lower-bound mode requires homogeneous speeds");
}

Simulator::Simulator(SystemConfig config, RngSpec rng, BoundingMode mode)
    : config_(std::move(config)),
      types_(config_.K, config_.d),
      mode_(mode),
      rng_(rng),
      stream_id_(rng.stream_id),
      n_(static_cast<std::size_t>(types_.size()), 0),
      m_(static_cast<std::size_t>(config_.K), 0) {
    validate_mode(config_, mode_);
    if (mode_ != BoundingMode::PsLowerBound) {
        for (ServerId s = 0; s < config_.K; ++s)
            queues_.push_back(make_server_queue(config_.policy, s, config_.speed(s), types_));
    }
    next_arrival_ = rng_.exponential(config_.lambda);
}

int Simulator::copies_at(ServerId s) const {
    if (mode_ == BoundingMode::PsLowerBound) return m_[static_cast<std::size_t>(s)];
    return static_cast<int>(queues_[static_cast<std::size_t>(s)]->size());
}

std::vector<CopyRate> Simulator::service_rates(ServerId s) const {
    if (mode_ == BoundingMode::PsLowerBound) return {};
    return queues_[static_cast<std::size_t>(s)]->service_rates();
}

ServerId Simulator::min_copy_server(TypeId c) const {
    ServerId best = -1;
    for (ServerId s : types_.servers_of(c))
        if (best < 0 || m_[static_cast<std::size_t>(s)] < m_[static_cast<std::size_t>(best)]) best = s;
    return best;
}

double Simulator::lower_bound_rate(TypeId c) const {
    const int count = n_[static_cast<std::size_t>(c)];
    if (count == 0) return 0.0;
    const ServerId s = min_copy_server(c);
    return config_.mu() * config_.speed(s) * count / m_[static_cast<std::size_t>(s)];
}

JobId Simulator::inject_workload(TypeId c, std::span<const double> requirements) {
    if (c < 0 || c >= types_.size()) throw DimensionError("job type out of range");
    if (in_system_ == 0) {
        if (cycle_open_) {
            current_cycle_.duration = clock_ - cycle_start_;
            cycles_.add(stream_id_, current_cycle_);
        }
        cycle_open_ = true;
        cycle_start_ = clock_;
        current_cycle_ = Cycle{};
    }

    const JobId id = next_id_++;
    const auto servers = types_.servers_of(c);
    if (mode_ == BoundingMode::PsLowerBound) {
        for (ServerId s : servers) ++m_[static_cast<std::size_t>(s)];
    } else {
        std::vector<double> req(servers.size());
        if (!requirements.empty()) {
            if (requirements.size() == 1) {
                std::fill(req.begin(), req.end(), requirements[0]);
            } else if (requirements.size() == servers.size() && config_.copy_mode == CopyMode::Iid) {
                std::copy(requirements.begin(), requirements.end(), req.begin());
            } else {
                throw DimensionError("requirements: one value, or d values for i.i.d. copies");
            }
        } else if (config_.copy_mode == CopyMode::Identical) {
            std::fill(req.begin(), req.end(), sample_service(config_.service, rng_));
        } else {
            for (double& r : req) r = sample_service(config_.service, rng_);
        }
        for (std::size_t i = 0; i < servers.size(); ++i)
            queues_[static_cast<std::size_t>(servers[i])]->enqueue(id, c, req[i], rng_);
        jobs_.emplace(id, JobRecord{c, clock_, static_cast<int>(servers.size())});
    }
    ++n_[static_cast<std::size_t>(c)];
    ++in_system_;
    ++arrived_;
    cached_.reset();
    return id;
}

Simulator::Pending Simulator::pending() {
    if (cached_) return *cached_;
    Pending best{next_arrival_, EventKind::Arrival, 0, -1, -1};

    if (mode_ == BoundingMode::PsLowerBound) {
        double total = 0.0;
        for (TypeId c = 0; c < types_.size(); ++c) total += lower_bound_rate(c);
        if (total > 0.0) {
            const double t = clock_ + rng_.exponential(total);
            if (t <= best.time) {
                double u = rng_.uniform() * total;
                TypeId chosen = -1;
                for (TypeId c = 0; c < types_.size(); ++c) {
                    const double r = lower_bound_rate(c);
                    if (r <= 0.0) continue;
                    chosen = c;
                    if (u < r) break;
                    u -= r;
                }
                best = Pending{t, EventKind::Departure, 0, chosen, min_copy_server(chosen)};
            }
        }
        cached_ = best;
        return best;
    }

    std::optional<Pending> completion;
    for (ServerId s = 0; s < config_.K; ++s) {
        const auto next = queues_[static_cast<std::size_t>(s)]->next_completion();
        if (!next) continue;
        const double t = clock_ + next->delay;
        // Ties: earliest time, then smallest job id, then smallest server.
        if (!completion || t < completion->time ||
            (t == completion->time && (next->job < completion->job ||
                                       (next->job == completion->job && s < completion->server)))) {
            const auto& job = jobs_.at(next->job);
            const EventKind kind = mode_ == BoundingMode::PsUpperBound ? EventKind::CopyDone : EventKind::Departure;
            completion = Pending{t, kind, next->job, job.type, s};
        }
    }
    if (completion && completion->time <= best.time) best = *completion;
    cached_ = best;
    return best;
}

double Simulator::next_event_time() { return pending().time; }

void Simulator::pass_time(double t) {
    const double dt = t - clock_;
    if (dt < 0.0) throw std::logic_error("event precedes clock");
    if (dt == 0.0) return;
    for (auto& q : queues_) q->advance(dt);
    double copies = 0.0;
    for (ServerId s = 0; s < config_.K; ++s) copies += copies_at(s);
    const double jobs = static_cast<double>(in_system_);
    total_area_ += jobs * dt;
    total_copy_area_ += copies * dt;
    if (cycle_open_) {
        current_cycle_.area += jobs * dt;
        current_cycle_.copy_area += copies * dt;
    }
    clock_ = t;
}

void Simulator::advance_clock_to(double t) {
    if (t > next_event_time()) throw std::logic_error("advance_clock_to would skip an event");
    const bool keep = mode_ == BoundingMode::PsLowerBound;
    pass_time(t);
    if (!keep) cached_.reset();
}

TypeId Simulator::arrive() {
    const auto c = static_cast<TypeId>(rng_.below(static_cast<std::uint64_t>(types_.size())));
    inject_workload(c);
    next_arrival_ = clock_ + rng_.exponential(config_.lambda);
    return c;
}

void Simulator::depart(JobId job, ServerId) {
    const JobRecord rec = jobs_.at(job);
    for (ServerId s : types_.servers_of(rec.type)) queues_[static_cast<std::size_t>(s)]->remove(job, rng_);
    jobs_.erase(job);
    --n_[static_cast<std::size_t>(rec.type)];
    --in_system_;
    ++departed_;
}

EventRecord Simulator::record(double time, EventKind kind, std::int64_t job, TypeId type, ServerId server) const {
    return EventRecord{time, kind, job, type, server, static_cast<int>(in_system_), n_};
}

EventRecord Simulator::process(const Pending& ev) {
    pass_time(ev.time);
    cached_.reset();
    switch (ev.kind) {
        case EventKind::Arrival: {
            const JobId id = next_id_;
            const TypeId c = arrive();
            const std::int64_t shown = mode_ == BoundingMode::PsLowerBound ? -1 : static_cast<std::int64_t>(id);
            return record(clock_, EventKind::Arrival, shown, c, -1);
        }
        case EventKind::Departure: {
            if (mode_ == BoundingMode::PsLowerBound) {
                for (ServerId s : types_.servers_of(ev.type)) --m_[static_cast<std::size_t>(s)];
                --n_[static_cast<std::size_t>(ev.type)];
                --in_system_;
                ++departed_;
                return record(clock_, EventKind::Departure, -1, ev.type, ev.server);
            }
            depart(ev.job, ev.server);
            return record(clock_, EventKind::Departure, static_cast<std::int64_t>(ev.job), ev.type, ev.server);
        }
        case EventKind::CopyDone: {
            queues_[static_cast<std::size_t>(ev.server)]->remove(ev.job, rng_);
            auto& job = jobs_.at(ev.job);
            if (--job.copies_left == 0) {
                jobs_.erase(ev.job);
                --n_[static_cast<std::size_t>(ev.type)];
                --in_system_;
                ++departed_;
                return record(clock_, EventKind::Departure, static_cast<std::int64_t>(ev.job), ev.type, ev.server);
            }
            return record(clock_, EventKind::CopyDone, static_cast<std::int64_t>(ev.job), ev.type, ev.server);
        }
    }
    throw std::logic_error("unknown event");
}

EventRecord Simulator::advance_to_next_event() { return process(pending()); }

void Simulator::check_invariants() const {
    auto fail = [](const std::string& what) { throw std::logic_error("invariant violated: " + what); };
    if (arrived_ != departed_ + in_system_) fail("arrived = departed + in system");
    std::uint64_t total = 0;
    for (int v : n_) {
        if (v < 0) fail("N_c >= 0");
        total += static_cast<std::uint64_t>(v);
    }
    if (total != in_system_) fail("sum N_c = jobs in system");

    for (ServerId s = 0; s < config_.K; ++s) {
        int expected = 0;
        for (TypeId c : types_.types_at(s)) expected += n_[static_cast<std::size_t>(c)];
        const int present = copies_at(s);
        const bool ok = mode_ == BoundingMode::PsUpperBound ? present <= expected : present == expected;
        if (!ok) fail("M_s = sum of N_c over types at s");
        if (mode_ == BoundingMode::PsLowerBound) continue;

        const auto& q = *queues_[static_cast<std::size_t>(s)];
        for (JobId id : q.jobs()) {
            auto it = jobs_.find(id);
            if (it == jobs_.end()) fail("no copy of a departed job remains queued");
            if (!types_.contains(it->second.type, s)) fail("copy queued at a server outside its type");
            if (q.attained(id) < 0.0) fail("attained service >= 0");
        }
        double rate_sum = 0.0;
        for (const auto& r : q.service_rates()) rate_sum += r.rate;
        const double want = q.empty() ? 0.0 : q.speed();
        if (std::abs(rate_sum - want) > 1e-9 * (1.0 + want)) fail("work conservation");
    }
    if (mode_ == BoundingMode::Exact) {
        for (const auto& [id, job] : jobs_)
            for (ServerId s : types_.servers_of(job.type))
                if (!queues_[static_cast<std::size_t>(s)]->contains(id)) fail("job has a copy at every server of its type");
    }
}

namespace {

Verdict classify(double slope, double lambda, std::uint64_t n_final, std::uint64_t n_initial, double factor,
                 bool enough_samples) {
    if (!enough_samples) return Verdict::Inconclusive;
    const double threshold = factor * lambda;
    if (slope <= threshold) return Verdict::StableLike;
    const double floor = 10.0 * static_cast<double>(std::max<std::uint64_t>(n_initial, 1));
    if (static_cast<double>(n_final) > floor) return Verdict::Diverging;
    return Verdict::Inconclusive;
}

}  // namespace

RunResult Simulator::run(const SimOptions& options) {
    if (!options.initial_counts.empty()) {
        if (static_cast<int>(options.initial_counts.size()) != types_.size())
            throw DimensionError("initial_counts needs one entry per type");
        std::vector<int> left = options.initial_counts;
        bool any = true;
        while (any) {
            any = false;
            for (TypeId c = 0; c < types_.size(); ++c) {
                if (left[static_cast<std::size_t>(c)] <= 0) continue;
                --left[static_cast<std::size_t>(c)];
                inject_workload(c);
                any = true;
            }
        }
        // Time 0 with a warm state is not a regeneration point.
        cycle_open_ = false;
        current_cycle_ = Cycle{};
    }
    const std::uint64_t n_initial = in_system_;
    const StopRule& stop = options.stop;
    if (stop.busy_periods == 0 && !std::isfinite(stop.horizon))
        throw ValidationError("stop rule needs busy_periods > 0 or a finite horizon");

    const double spacing =
        stop.busy_periods == 0 && std::isfinite(stop.horizon) ? stop.horizon / 2048.0 : 10.0 / config_.lambda;
    GridSampler sampler(spacing);
    RunResult result;
    std::uint64_t events = 0;

    while (events < stop.max_events) {
        const double t = next_event_time();
        if (t > stop.horizon) {
            sampler.advance(stop.horizon, static_cast<double>(in_system_));
            advance_clock_to(stop.horizon);
            break;
        }
        sampler.advance(t, static_cast<double>(in_system_));
        EventRecord ev = advance_to_next_event();
        ++events;
        if (options.check_invariants) check_invariants();
        if (options.record_trace) result.trace.push_back(std::move(ev));
        if (stop.busy_periods > 0 && cycles_.size() >= stop.busy_periods) break;
    }

    RunMetrics& m = result.metrics;
    m.sim_time = clock_;
    m.events = events;
    m.jobs_arrived = arrived_;
    m.jobs_departed = departed_;
    m.jobs_in_system = in_system_;
    m.busy_periods_completed = cycles_.size();
    m.never_regenerated = stop.busy_periods > 0 && cycles_.size() == 0;

    const auto cycles = cycles_.cycles();
    const double K = static_cast<double>(config_.K);
    if (cycles.size() >= kMinRegenerativeCycles) {
        const Estimate jobs = regenerative_mean(cycles);
        const Estimate copies = regenerative_copy_mean(cycles);
        m.time_avg_jobs = jobs.mean;
        m.ci_halfwidth = jobs.ci_halfwidth;
        m.mean_copies_per_server = copies.mean / K;
        m.copies_ci_halfwidth = copies.ci_halfwidth / K;
    } else if (clock_ > 0.0) {
        m.time_avg_jobs = total_area_ / clock_;
        m.mean_copies_per_server = total_copy_area_ / clock_ / K;
    }

    const auto tail = sampler.tail(clock_ / 2.0);
    m.divergence_slope = tail.size() >= 20 ? divergence_slope(tail) : 0.0;
    m.verdict = classify(m.divergence_slope, config_.lambda, in_system_, n_initial, options.slope_factor,
                         tail.size() >= 20);

    result.cycles = cycles_;
    result.samples = sampler.samples();
    return result;
}

RunResult simulate(const SystemConfig& config, const RngSpec& rng, const SimOptions& options) {
    Simulator sim(config, rng, options.mode);
    return sim.run(options);
}

Verdict majority_verdict(std::span<const Verdict> verdicts) {
    int counts[3] = {0, 0, 0};
    for (Verdict v : verdicts) ++counts[static_cast<int>(v)];
    for (int i = 0; i < 3; ++i)
        if (2 * counts[i] > static_cast<int>(verdicts.size())) return static_cast<Verdict>(i);
    return Verdict::Inconclusive;
}

ReplicatedRun simulate_replications(const SystemConfig& config, std::uint64_t master_seed, int replications,
                                    const SimOptions& options, unsigned jobs) {
    if (replications < 1) throw ValidationError("replications >= 1");
    ReplicatedRun out;
    out.replications.resize(static_cast<std::size_t>(replications));
    parallel_for(out.replications.size(), jobs, [&](std::size_t r) {
        out.replications[r] = simulate(config, RngSpec{master_seed, r}, options);
    });

    CycleAccumulator merged;
    RunMetrics& agg = out.aggregate;
    double area = 0.0;
    double copy_area = 0.0;
    std::vector<Verdict> verdicts;
    agg.never_regenerated = true;
    for (const auto& rep : out.replications) {
        const RunMetrics& m = rep.metrics;
        merged.merge(rep.cycles);
        agg.sim_time += m.sim_time;
        agg.events += m.events;
        agg.jobs_arrived += m.jobs_arrived;
        agg.jobs_departed += m.jobs_departed;
        agg.jobs_in_system += m.jobs_in_system;
        agg.divergence_slope += m.divergence_slope;
        agg.never_regenerated = agg.never_regenerated && m.never_regenerated;
        area += m.time_avg_jobs * m.sim_time;
        copy_area += m.mean_copies_per_server * m.sim_time;
        verdicts.push_back(m.verdict);
    }
    agg.divergence_slope /= replications;
    agg.busy_periods_completed = merged.size();
    agg.verdict = majority_verdict(verdicts);
    const auto cycles = merged.cycles();
    if (cycles.size() >= kMinRegenerativeCycles) {
        const Estimate e = regenerative_mean(cycles);
        const Estimate c = regenerative_copy_mean(cycles);
        agg.time_avg_jobs = e.mean;
        agg.ci_halfwidth = e.ci_halfwidth;
        agg.mean_copies_per_server = c.mean / config.K;
        agg.copies_ci_halfwidth = c.ci_halfwidth / config.K;
    } else if (agg.sim_time > 0.0) {
        agg.time_avg_jobs = area / agg.sim_time;
        agg.mean_copies_per_server = copy_area / agg.sim_time;
    }
    return out;
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::StableLike: return "stable";
        case Verdict::Diverging: return "diverging";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

std::string to_string(BoundingMode m) {
    switch (m) {
        case BoundingMode::Exact: return "exact";
        case BoundingMode::PsLowerBound: return "lb";
        case BoundingMode::PsUpperBound: return "ub";
    }
    return "?";
}

std::string to_string(EventKind k) {
    switch (k) {
        case EventKind::Arrival: return "arrival";
        case EventKind::Departure: return "departure";
        case EventKind::CopyDone: return "copy_done";
    }
    return "?";
}

}  // namespace redlab
