#pragma once

#include <optional>
#include <string>
#include <vector>

#include "redlab/model.hpp"

namespace redlab {

/// Fluid mass per job type, indexed like the TypeTable.
struct FluidState {
    std::vector<double> n;
};

/// m_s = sum of n_c over the types containing s.
std::vector<double> server_masses(const TypeTable& types, const FluidState& state);

enum class FluidField { Iid, Lb, Ros };

// Server drifts. Types with zero mass contribute nothing; a server with zero
// mass has a set-valued drift and raises DegenerateState.

/// lambda d/K - mu sum_{c at s} sum_{l in c} nu_l n_c / m_l.
double drift_iid_server(const SystemConfig& config, const FluidState& state, ServerId s);
/// Same field as the i.i.d. one.
double drift_ros_server(const SystemConfig& config, const FluidState& state, ServerId s);
/// Drift of the lower-bound system, where a type is served at the rate of its
/// least-loaded server (ties to the smallest index). Homogeneous speeds only.
double drift_lb_server(const SystemConfig& config, const FluidState& state, ServerId s);

/// Lower-bound removal rate at s summed type by type: mu sum_{c at s} n_c / m_{smin(c)}.
double lb_service_rate_direct(const SystemConfig& config, const FluidState& state, ServerId s);
/// The same rate split around m_s:
/// mu (1 + sum_{l: m_l <= m_s} (m_s - m_l) / (m_s m_l) sum_{c at s, smin(c) = l} n_c).
double lb_service_rate_split(const SystemConfig& config, const FluidState& state, ServerId s);

/// Per-type departure rates of the chosen field; zero-mass types get 0.
std::vector<double> fluid_type_rates(const SystemConfig& config, const TypeTable& types, const FluidState& state,
                                     FluidField field);

struct FluidTrajectory {
    std::vector<double> t;
    std::vector<FluidState> states;
};

/// Explicit Euler with steps split at kinks: a mass reaching zero, or (lower
/// bound) two server masses crossing. Masses are clamped at zero.
FluidTrajectory integrate_fluid(const SystemConfig& config, const FluidState& initial, FluidField field,
                                double t_end, double dt);

/// First recorded time at which every mass is zero.
std::optional<double> first_empty_time(const FluidTrajectory& trajectory);

std::string to_string(FluidField field);

}  // namespace redlab
