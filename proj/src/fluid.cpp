#include "redlab/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "redlab/errors.hpp"

namespace redlab {
namespace {

void check_state(const TypeTable& types, const FluidState& state) {
    if (static_cast<int>(state.n.size()) != types.size()) throw DimensionError("fluid state needs one mass per type");
    for (double v : state.n)
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("fluid masses must be finite and >= 0");
}

double arrival_per_server(const SystemConfig& config) {
    return config.lambda * static_cast<double>(config.d) / static_cast<double>(config.K);
}

// Smallest-index server of c with the least mass; masses within `tol` tie.
ServerId min_server(const TypeTable& types, const std::vector<double>& m, TypeId c, double tol = 0.0) {
    ServerId best = -1;
    for (ServerId l : types.servers_of(c))
        if (best < 0 || m[static_cast<std::size_t>(l)] < m[static_cast<std::size_t>(best)] - tol) best = l;
    return best;
}

void require_lb(const SystemConfig& config) {
    if (!config.homogeneous()) throw ValidationError("lower-bound field requires homogeneous speeds");
}

double iid_rate(const SystemConfig& config, const TypeTable& types, const std::vector<double>& m,
                const FluidState& state, TypeId c) {
    const double nc = state.n[static_cast<std::size_t>(c)];
    if (nc == 0.0) return 0.0;
    double r = 0.0;
    for (ServerId l : types.servers_of(c)) r += config.speed(l) * nc / m[static_cast<std::size_t>(l)];
    return config.mu() * r;
}

double lb_rate(const SystemConfig& config, const TypeTable& types, const std::vector<double>& m,
               const FluidState& state, TypeId c, double tol) {
    const double nc = state.n[static_cast<std::size_t>(c)];
    if (nc == 0.0) return 0.0;
    const ServerId l = min_server(types, m, c, tol);
    return config.mu() * config.speed(l) * nc / m[static_cast<std::size_t>(l)];
}

struct Prepared {
    TypeTable types;
    std::vector<double> m;
};

Prepared prepare(const SystemConfig& config, const FluidState& state, ServerId s) {
    config.validate();
    TypeTable types(config.K, config.d);
    check_state(types, state);
    if (s < 0 || s >= config.K) throw DimensionError("server out of range");
    auto m = server_masses(types, state);
    if (m[static_cast<std::size_t>(s)] == 0.0) throw DegenerateState("server mass is zero; the drift is set-valued");
    return {std::move(types), std::move(m)};
}

}  // namespace

std::vector<double> server_masses(const TypeTable& types, const FluidState& state) {
    std::vector<double> m(static_cast<std::size_t>(types.servers()), 0.0);
    for (TypeId c = 0; c < types.size(); ++c)
        for (ServerId s : types.servers_of(c)) m[static_cast<std::size_t>(s)] += state.n[static_cast<std::size_t>(c)];
    return m;
}

double drift_iid_server(const SystemConfig& config, const FluidState& state, ServerId s) {
    const auto [types, m] = prepare(config, state, s);
    double out = 0.0;
    for (TypeId c : types.types_at(s)) out += iid_rate(config, types, m, state, c);
    return arrival_per_server(config) - out;
}

double drift_ros_server(const SystemConfig& config, const FluidState& state, ServerId s) {
    return drift_iid_server(config, state, s);
}

double lb_service_rate_direct(const SystemConfig& config, const FluidState& state, ServerId s) {
    require_lb(config);
    const auto [types, m] = prepare(config, state, s);
    double out = 0.0;
    for (TypeId c : types.types_at(s)) out += lb_rate(config, types, m, state, c, 0.0);
    return out;
}

double lb_service_rate_split(const SystemConfig& config, const FluidState& state, ServerId s) {
    require_lb(config);
    const auto [types, m] = prepare(config, state, s);
    const double ms = m[static_cast<std::size_t>(s)];
    double extra = 0.0;
    for (ServerId l = 0; l < config.K; ++l) {
        const double ml = m[static_cast<std::size_t>(l)];
        if (l == s || ml > ms) continue;
        double mass = 0.0;
        for (TypeId c : types.types_at(s))
            if (min_server(types, m, c) == l) mass += state.n[static_cast<std::size_t>(c)];
        if (mass > 0.0) extra += (ms - ml) * mass / (ms * ml);
    }
    return config.mu() * config.speed(s) * (1.0 + extra);
}

double drift_lb_server(const SystemConfig& config, const FluidState& state, ServerId s) {
    return arrival_per_server(config) - lb_service_rate_split(config, state, s);
}

std::vector<double> fluid_type_rates(const SystemConfig& config, const TypeTable& types, const FluidState& state,
                                     FluidField field) {
    check_state(types, state);
    if (field == FluidField::Lb) require_lb(config);
    const auto m = server_masses(types, state);
    double scale = 0.0;
    for (double v : m) scale = std::max(scale, v);
    const double tol = 1e-12 * (1.0 + scale);
    std::vector<double> rates(state.n.size());
    for (TypeId c = 0; c < types.size(); ++c)
        rates[static_cast<std::size_t>(c)] = field == FluidField::Lb ? lb_rate(config, types, m, state, c, tol)
                                                                   : iid_rate(config, types, m, state, c);
    return rates;
}

FluidTrajectory integrate_fluid(const SystemConfig& config, const FluidState& initial, FluidField field,
                                double t_end, double dt) {
    config.validate();
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dt > 0");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw DomainError("t_end >= 0");
    if (field == FluidField::Lb) require_lb(config);
    const TypeTable types(config.K, config.d);
    check_state(types, initial);

    const double per_type = config.lambda / static_cast<double>(types.size());
    const std::size_t n_types = initial.n.size();
    const auto K = static_cast<std::size_t>(config.K);
    const std::size_t max_splits = 64 * (n_types + K * K);

    FluidTrajectory out;
    FluidState x = initial;
    double t = 0.0;
    out.t.push_back(t);
    out.states.push_back(x);

    std::vector<double> deriv(n_types);
    while (t < t_end) {
        double h = std::min(dt, t_end - t);
        std::size_t splits = 0;
        // A mass that reaches zero stays there until the step ends: its
        // arrivals are served at once (the work-conserving selection at the
        // boundary), which also keeps two masses from trading places forever.
        std::vector<bool> pinned(n_types, false);
        while (h > 0.0) {
            const bool empty = std::all_of(x.n.begin(), x.n.end(), [](double v) { return v == 0.0; });
            if (empty) {
                // Rates depend only on the proportions of the masses, so the
                // empty system stays empty when the uniform mix of arrivals
                // would be drained at least as fast as it comes in.
                const auto drain = fluid_type_rates(config, types, FluidState{std::vector<double>(n_types, 1.0)}, field);
                if (std::all_of(drain.begin(), drain.end(), [&](double r) { return r >= per_type; })) {
                    t += h;
                    h = 0.0;
                    break;
                }
            }
            const auto rates = fluid_type_rates(config, types, x, field);
            for (std::size_t c = 0; c < n_types; ++c) deriv[c] = pinned[c] ? 0.0 : per_type - rates[c];

            // Earliest fraction of the step at which a kink is hit.
            double theta = 1.0;
            std::size_t hits_zero = n_types;
            for (std::size_t c = 0; c < n_types; ++c) {
                if (x.n[c] > 0.0 && deriv[c] < 0.0) {
                    const double f = x.n[c] / (-deriv[c] * h);
                    if (f < theta) {
                        theta = f;
                        hits_zero = c;
                    }
                }
            }
            if (field == FluidField::Lb) {
                const auto m = server_masses(types, x);
                std::vector<double> dm(K, 0.0);
                for (TypeId c = 0; c < types.size(); ++c)
                    for (ServerId s : types.servers_of(c)) dm[static_cast<std::size_t>(s)] += deriv[static_cast<std::size_t>(c)];
                double scale = 0.0;
                for (double v : m) scale = std::max(scale, v);
                const double tie = 1e-9 * (1.0 + scale);
                for (std::size_t a = 0; a < K; ++a) {
                    for (std::size_t b = a + 1; b < K; ++b) {
                        const double gap = m[a] - m[b];
                        const double closing = (dm[a] - dm[b]) * h;
                        if (std::abs(gap) <= tie || gap * closing >= 0.0) continue;
                        const double f = -gap / closing;
                        if (f < theta) {
                            theta = f;
                            hits_zero = n_types;
                        }
                    }
                }
            }
            theta = std::clamp(theta, 0.0, 1.0);
            const double step = theta * h;
            for (std::size_t c = 0; c < n_types; ++c) x.n[c] = std::max(0.0, x.n[c] + step * deriv[c]);
            if (hits_zero < n_types) {
                x.n[hits_zero] = 0.0;
                pinned[hits_zero] = true;
            }
            h -= step;
            t += step;
            if (h > 0.0 && std::all_of(x.n.begin(), x.n.end(), [](double v) { return v == 0.0; })) {
                out.t.push_back(t);
                out.states.push_back(x);
            }
            if (theta < 1.0 && ++splits > max_splits)
                throw StepTooLarge("too many kinks inside one step; reduce dt");
        }
        out.t.push_back(t);
        out.states.push_back(x);
    }
    return out;
}

std::optional<double> first_empty_time(const FluidTrajectory& trajectory) {
    for (std::size_t i = 0; i < trajectory.t.size(); ++i) {
        const auto& n = trajectory.states[i].n;
        if (std::all_of(n.begin(), n.end(), [](double v) { return v == 0.0; })) return trajectory.t[i];
    }
    return std::nullopt;
}

std::string to_string(FluidField field) {
    switch (field) {
        case FluidField::Iid: return "iid";
        case FluidField::Lb: return "lb";
        case FluidField::Ros: return "ros";
    }
    return "?";
}

}  // namespace redlab
