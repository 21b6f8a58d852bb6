#include "redlab/saturated.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <map>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "redlab/errors.hpp"
#include "redlab/model.hpp"
#include "redlab/stats.hpp"

namespace redlab {
namespace {

void check_dims(int K, int d) {
    if (K < 1 || d < 1 || d > K) throw DimensionError("saturated system needs 1 <= d <= K");
    if (K > kMaxServers) throw DimensionError("saturated system capped at K <= 20");
}

std::vector<std::uint32_t> subset_masks(int K, int d) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t m = 0; m < (1U << K); ++m)
        if (std::popcount(m) == d) out.push_back(m);
    return out;
}

// In-service jobs O_1..O_n (oldest first) and blocked counts between them.
struct SatState {
    std::vector<std::uint32_t> in_service;
    std::vector<int> blocked;  // blocked[j] sits after in_service[j]; size n-1
};

// Servers are exchangeable, so two states that differ by a relabelling are
// lumped. Each server's membership pattern across O_1..O_n is a bit code; the
// sorted codes plus the counters identify the orbit.
std::vector<std::int64_t> canonical_key(int K, SatState& st) {
    const std::size_t n = st.in_service.size();
    std::vector<std::uint32_t> codes(static_cast<std::size_t>(K), 0);
    for (std::size_t j = 0; j < n; ++j)
        for (int s = 0; s < K; ++s)
            if ((st.in_service[j] >> s) & 1U) codes[static_cast<std::size_t>(s)] |= 1U << j;
    std::sort(codes.begin(), codes.end());
    for (std::size_t j = 0; j < n; ++j) {
        std::uint32_t m = 0;
        for (int s = 0; s < K; ++s)
            if ((codes[static_cast<std::size_t>(s)] >> j) & 1U) m |= 1U << s;
        st.in_service[j] = m;
    }
    std::vector<std::int64_t> key;
    key.reserve(1 + codes.size() + st.blocked.size());
    key.push_back(static_cast<std::int64_t>(n));
    for (auto c : codes) key.push_back(c);
    for (int l : st.blocked) key.push_back(l);
    return key;
}

class SaturatedChain {
public:
    SaturatedChain(int K, int d, int l_max, std::size_t max_states)
        : K_(K), d_(d), l_max_(l_max), max_states_(max_states), full_((1U << K) - 1U),
          masks_(subset_masks(K, d)) {}

    void build() {
        std::map<std::size_t, double> initial;
        Frontier start;
        start[Partial{}] = 1.0;
        finish(start, initial);
        for (std::size_t i = 0; i < states_.size(); ++i) {
            std::map<std::size_t, double> out;
            const SatState st = states_[i];
            for (std::size_t k = 0; k < st.in_service.size(); ++k) successors(st, k, out);
            transitions_.emplace_back(out.begin(), out.end());
        }
    }

    std::size_t size() const { return states_.size(); }

    double solve(double residual_target) const {
        const std::size_t n = states_.size();
        std::vector<double> out_rate(n, 0.0);
        std::vector<std::vector<std::pair<std::size_t, double>>> in(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (const auto& [j, r] : transitions_[i]) {
                if (j == i) continue;
                out_rate[i] += r;
                in[j].emplace_back(i, r);
            }
            if (!(out_rate[i] > 0.0)) throw SingularSystem("saturated chain has an absorbing state");
        }
        std::vector<double> pi(n, 1.0 / static_cast<double>(n));
        for (int sweep = 0; sweep < 1000000; ++sweep) {
            for (std::size_t j = 0; j < n; ++j) {
                double inflow = 0.0;
                for (const auto& [i, r] : in[j]) inflow += pi[i] * r;
                pi[j] = inflow / out_rate[j];
            }
            double total = 0.0;
            for (double v : pi) total += v;
            if (!(total > 0.0)) throw SingularSystem("stationary vector vanished");
            for (double& v : pi) v /= total;
            if (sweep % 10 != 9) continue;
            double residual = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                double inflow = 0.0;
                for (const auto& [i, r] : in[j]) inflow += pi[i] * r;
                residual = std::max(residual, std::abs(inflow - pi[j] * out_rate[j]));
            }
            if (residual < residual_target) {
                double ell = 0.0;
                for (std::size_t j = 0; j < n; ++j)
                    ell += pi[j] * static_cast<double>(states_[j].in_service.size());
                return ell;
            }
        }
        throw SingularSystem("Gauss-Seidel did not converge");
    }

private:
    // A scan in progress: jobs confirmed in service so far, blocked counts
    // after each of them, and the union of their servers.
    struct Partial {
        std::vector<std::uint32_t> in_service;
        std::vector<int> blocked;  // one slot per in-service job; last slot open
        std::uint32_t used = 0;
        bool operator<(const Partial& o) const {
            return std::tie(in_service, blocked) < std::tie(o.in_service, o.blocked);
        }
    };
    // Identical partial scans reached along different paths are merged.
    using Frontier = std::map<Partial, double>;

    double choose(std::uint32_t m) const { return static_cast<double>(binomial(std::popcount(m), d_)); }

    // Types inside `within` that are not inside `used`.
    std::vector<std::uint32_t> promotable(std::uint32_t within, std::uint32_t used) const {
        std::vector<std::uint32_t> out;
        for (auto t : masks_)
            if ((t & ~within) == 0 && (t & ~used) != 0) out.push_back(t);
        return out;
    }

    static Partial promoted(Partial p, std::uint32_t t) {
        p.in_service.push_back(t);
        p.blocked.push_back(0);
        p.used |= t;
        return p;
    }

    Partial with_blocked(Partial p, int extra) const {
        if (!p.blocked.empty()) p.blocked.back() = std::min(p.blocked.back() + extra, l_max_);
        return p;
    }

    std::size_t intern(const Partial& p) {
        SatState st;
        st.in_service = p.in_service;
        st.blocked.assign(p.blocked.begin(), p.blocked.end() - 1);
        auto key = canonical_key(K_, st);
        auto [it, inserted] = index_.emplace(std::move(key), states_.size());
        if (inserted) {
            if (states_.size() >= max_states_) throw TruncationNotConverged("saturated chain exceeds the state cap");
            states_.push_back(std::move(st));
        }
        return it->second;
    }

    // One already-queued blocked job of a slot bounded by `within` is rescanned.
    Frontier rescan_blocked(const Frontier& in, std::uint32_t within) const {
        Frontier out;
        for (const auto& [p, w] : in) {
            const double q = choose(p.used) / choose(within);
            if (q > 0.0) out[with_blocked(p, 1)] += w * q;
            if (q >= 1.0) continue;
            const auto types = promotable(within, p.used);
            const double each = w * (1.0 - q) / static_cast<double>(types.size());
            for (auto t : types) out[promoted(p, t)] += each;
        }
        return out;
    }

    // Draws fresh backlog jobs until every server is busy, then interns.
    void finish(Frontier frontier, std::map<std::size_t, double>& out) {
        while (!frontier.empty()) {
            Frontier next;
            for (const auto& [p, w] : frontier) {
                if (p.used == full_) {
                    out[intern(p)] += w;
                    continue;
                }
                const double q = choose(p.used) / choose(full_);
                const auto types = promotable(full_, p.used);
                const double per_type = 1.0 / static_cast<double>(types.size());
                const int current = p.blocked.empty() ? 0 : p.blocked.back();
                const int span = q > 0.0 ? std::max(0, l_max_ - current) : 0;
                double qi = 1.0;
                for (int i = 0; i <= span; ++i) {
                    // Runs of `span` or more blocked jobs share the capped counter.
                    const double run = i < span ? qi * (1.0 - q) : qi;
                    const Partial base = with_blocked(p, i);
                    for (auto t : types) next[promoted(base, t)] += w * run * per_type;
                    qi *= q;
                }
            }
            frontier.swap(next);
        }
    }

    void successors(const SatState& st, std::size_t k, std::map<std::size_t, double>& out) {
        const std::size_t n = st.in_service.size();
        Frontier frontier;
        frontier[Partial{}] = 1.0;
        std::uint32_t union_so_far = 0;
        for (std::size_t j = 0; j < n; ++j) {
            union_so_far |= st.in_service[j];
            // An older in-service job stays in service: it was not covered by
            // its predecessors, and the rescanned union can only shrink.
            if (j != k) {
                Frontier next;
                for (const auto& [p, w] : frontier) next[promoted(p, st.in_service[j])] += w;
                frontier.swap(next);
            }
            if (j + 1 < n)
                for (int b = 0; b < st.blocked[j]; ++b) frontier = rescan_blocked(frontier, union_so_far);
        }
        finish(std::move(frontier), out);
    }

    int K_;
    int d_;
    int l_max_;
    std::size_t max_states_;
    std::uint32_t full_;
    std::vector<std::uint32_t> masks_;
    std::vector<SatState> states_;
    std::map<std::vector<std::int64_t>, std::size_t> index_;
    std::vector<std::vector<std::pair<std::size_t, double>>> transitions_;
};

}  // namespace

EllBarResult ell_bar_closed_form(int K, int d) {
    check_dims(K, d);
    double ell = 0.0;
    if (d == K) {
        ell = 1.0;
    } else if (d == 1) {
        ell = K;
    } else if (d == K - 1) {
        ell = 2.0;
    } else {
        throw NotClosedForm("closed form needs d in {1, K-1, K}");
    }
    return EllBarResult{ell, ell / K, EllBarMethod::ClosedForm, 0.0, 0, 0};
}

EllBarResult ell_bar_truncated(int K, int d, int l_max, const ExactSolveOptions& options) {
    check_dims(K, d);
    if (l_max < 1) throw DomainError("l_max >= 1");
    SaturatedChain chain(K, d, l_max, options.max_states);
    chain.build();
    const double ell = chain.solve(options.residual);
    return EllBarResult{ell, ell / K, EllBarMethod::TruncatedSolve, 0.0, l_max, chain.size()};
}

EllBarResult ell_bar_exact(int K, int d, const ExactSolveOptions& options) {
    check_dims(K, d);
    if (options.l_max < 1 || options.l_max_cap <= options.l_max) throw DomainError("1 <= l_max < l_max_cap");
    std::map<int, EllBarResult> solved;
    auto at = [&](int l) -> const EllBarResult& {
        auto it = solved.find(l);
        if (it == solved.end()) it = solved.emplace(l, ell_bar_truncated(K, d, l, options)).first;
        return it->second;
    };
    auto gap = [&](int l) { return std::abs(at(l).ell_bar - at(l - 1).ell_bar); };

    // The truncation error decays geometrically in l_max, so after three
    // consecutive levels the level meeting the tolerance can be predicted.
    int l = options.l_max + 1;
    double last = gap(l);
    double before = -1.0;
    while (last >= options.tolerance) {
        int next = l + 1;
        if (before > 0.0 && last > 0.0 && last < before) {
            const double ratio = last / before;
            const double steps = std::ceil(std::log(options.tolerance / last) / std::log(ratio));
            if (std::isfinite(steps) && steps > 1.0) next = l + static_cast<int>(std::min(steps, 1000.0));
        }
        next = std::min(next, options.l_max_cap);
        if (next <= l) throw TruncationNotConverged("truncation did not converge below the l_max cap");
        before = next == l + 1 ? last : -1.0;
        l = next;
        last = gap(l);
    }
    EllBarResult out = at(l);
    out.error_bound = last;
    return out;
}

EllBarResult ell_bar_mc(int K, int d, Rng& rng, const MonteCarloOptions& options) {
    check_dims(K, d);
    if (options.departures < 1000) throw DomainError("departures >= 1000");
    const std::size_t batches = std::max<std::size_t>(options.batches, 2);
    const auto types = subset_masks(K, d);
    const std::uint32_t full = (1U << K) - 1U;

    std::deque<std::uint32_t> backlog;
    std::vector<std::size_t> in_service;
    auto scan = [&] {
        in_service.clear();
        std::uint32_t used = 0;
        for (std::size_t i = 0; used != full; ++i) {
            if (i == backlog.size()) backlog.push_back(types[rng.below(types.size())]);
            if (backlog[i] & ~used) {
                in_service.push_back(i);
                used |= backlog[i];
            }
        }
    };
    auto check = [&] {
        // Each server's oldest compatible job must be in service, and each
        // in-service job must head at least one server.
        std::vector<bool> heads(backlog.size(), false);
        for (int s = 0; s < K; ++s) {
            std::size_t i = 0;
            while (i < backlog.size() && !((backlog[i] >> s) & 1U)) ++i;
            if (i == backlog.size()) throw std::logic_error("saturated server idles");
            heads[i] = true;
        }
        for (std::size_t i = 0; i < backlog.size(); ++i) {
            const bool listed = std::find(in_service.begin(), in_service.end(), i) != in_service.end();
            if (heads[i] != listed) throw std::logic_error("saturated scan disagrees with FCFS heads");
        }
    };

    scan();
    const std::uint64_t warmup = std::min<std::uint64_t>(10000, options.departures / 100);
    for (std::uint64_t i = 0; i < warmup; ++i) {
        backlog.erase(backlog.begin() + static_cast<std::ptrdiff_t>(in_service[rng.below(in_service.size())]));
        scan();
    }

    // Each sojourn in a state with l jobs in service lasts 1/(l mu) on average;
    // using that mean instead of a sampled holding time is unbiased.
    const std::uint64_t per_batch = options.departures / batches;
    std::vector<double> areas(batches, 0.0);
    std::vector<double> times(batches, 0.0);
    for (std::size_t b = 0; b < batches; ++b) {
        for (std::uint64_t i = 0; i < per_batch; ++i) {
            const auto l = static_cast<double>(in_service.size());
            areas[b] += 1.0;
            times[b] += 1.0 / l;
            backlog.erase(backlog.begin() + static_cast<std::ptrdiff_t>(in_service[rng.below(in_service.size())]));
            scan();
            if (options.check_structure) check();
        }
    }
    const Estimate e = batch_means(areas, times);
    return EllBarResult{e.mean, e.mean / K, EllBarMethod::MonteCarlo, e.ci_halfwidth, 0, 0};
}

EllBarResult ell_bar_auto(int K, int d, std::uint64_t departures, std::uint64_t seed) {
    check_dims(K, d);
    if (d == 1 || d == K - 1 || d == K) return ell_bar_closed_form(K, d);
    if (d == K - 2) {
        try {
            return ell_bar_exact(K, d);
        } catch (const TruncationNotConverged&) {
            // Too many states for this K; fall through to simulation.
        }
    }
    Rng rng(RngSpec{seed, 0});
    MonteCarloOptions options;
    options.departures = departures;
    return ell_bar_mc(K, d, rng, options);
}

double stability_threshold_fcfs(int K, int d) { return ell_bar_auto(K, d).ell_bar_over_K; }

std::string to_string(EllBarMethod method) {
    switch (method) {
        case EllBarMethod::ClosedForm: return "closed_form";
        case EllBarMethod::TruncatedSolve: return "exact";
        case EllBarMethod::MonteCarlo: return "mc";
    }
    return "?";
}

}  // namespace redlab
