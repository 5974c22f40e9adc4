#pragma once

// Euler-Maruyama schemes for SDEs with Markovian switching.
//
// Both schemes consume a pre-generated chain path and Brownian path; no
// solver draws randomness. Increments are always differences of stored
// Brownian values, so every scheme driven by the same BrownianPath (or any
// aggregation of it) sees bit-identical dB over shared intervals.

#include <hybridem/brownian.hpp>
#include <hybridem/ctmc.hpp>
#include <hybridem/error.hpp>
#include <hybridem/model.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace hybridem {

/// Jump-adapted event set: all uniform gridpoints k*step <= T, every interior
/// switching time, and T, deduplicated.
struct RefinedGrid {
    double step = 0.0;
    double horizon = 0.0;
    std::vector<double> events;
    std::vector<Regime> regimes;                // alpha(J_i)
    std::vector<std::size_t> owner_interval;    // k with J_i in [t_k, t_{k+1})
    std::vector<bool> is_gridpoint;             // J_i == t_k for some k

    std::size_t size() const noexcept { return events.size(); }
};

/// Segment index active at time t, treating switches within `tol` of t as
/// already happened (post-switch convention for coincident events).
inline std::size_t segment_at(const ChainPath& path, double t, double tol) {
    const auto it = std::upper_bound(path.switch_times.begin(), path.switch_times.end(), t + tol);
    return static_cast<std::size_t>(it - path.switch_times.begin()) - 1;
}

inline RefinedGrid build_refined_grid(const ChainPath& path, double step) {
    const double horizon = path.horizon;
    if (!(step > 0.0) || step > horizon * (1.0 + 1e-14)) {
        throw Error(ErrorKind::InvalidArgument, "step must lie in (0, T]");
    }
    const double tol = time_tolerance(horizon);
    const TimeGrid uniform = TimeGrid::uniform(horizon, step);

    RefinedGrid grid;
    grid.step = step;
    grid.horizon = horizon;
    grid.events.reserve(uniform.size() + path.switch_count());

    // Two-pointer merge; a switch within tol of a gridpoint collapses onto it.
    std::size_t u = 0;
    std::size_t s = 1;
    while (u < uniform.size() || s < path.switch_times.size()) {
        const bool take_uniform =
            s >= path.switch_times.size() || (u < uniform.size() && uniform[u] <= path.switch_times[s] + tol);
        if (take_uniform) {
            if (s < path.switch_times.size() && std::abs(path.switch_times[s] - uniform[u]) <= tol) ++s;
            grid.events.push_back(uniform[u]);
            grid.is_gridpoint.push_back(true);
            grid.owner_interval.push_back(u);
            ++u;
        } else {
            grid.events.push_back(path.switch_times[s]);
            grid.is_gridpoint.push_back(false);
            grid.owner_interval.push_back(u - 1);
            ++s;
        }
    }
    grid.regimes.reserve(grid.events.size());
    for (double t : grid.events) grid.regimes.push_back(path.states[segment_at(path, t, tol)]);
    return grid;
}

/// Discrete solution. For scheme output, anchors[i] is the index of the
/// uniform gridpoint whose value is the frozen coefficient argument on
/// [times[i], times[i+1]), and regimes[i] the regime argument there.
struct SolutionPath {
    std::string scheme;
    std::vector<double> times;
    std::vector<Eigen::VectorXd> values;
    std::vector<Regime> regimes;
    std::vector<std::size_t> anchors;

    /// Indices of the times that are uniform gridpoints (anchors' targets).
    std::vector<std::size_t> gridpoint_indices() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < anchors.size(); ++i)
            if (anchors[i] == i) out.push_back(i);
        if (!times.empty() && (out.empty() || out.back() != times.size() - 1)) out.push_back(times.size() - 1);
        return out;
    }
};

namespace detail {

inline Eigen::VectorXd euler_step(const Eigen::VectorXd& base, const Eigen::VectorXd& f, const Eigen::MatrixXd& g,
                                  double dt, const Eigen::VectorXd& db) {
    return base + f * dt + g * db;
}

template <HybridCoefficients M>
void check_noise_dim(const M& model, const BrownianPath& bm) {
    if (bm.dimension() != model.noise_dim()) {
        throw Error(ErrorKind::DimensionMismatch, "Brownian dimension " + std::to_string(bm.dimension()) +
                                                      " does not match model noise dimension " +
                                                      std::to_string(model.noise_dim()));
    }
}

inline std::vector<std::size_t> locate_or_mismatch(const TimeGrid& fine, const std::vector<double>& times) {
    try {
        return locate_points(fine, times);
    } catch (const Error& e) {
        throw Error(ErrorKind::GridMismatch, e.what());
    }
}

}  // namespace detail

/// Jump-adapted EM: within [t_k, t_{k+1}) the state argument of f, g stays at
/// Z_k while the regime argument follows alpha(J_i) at every refined event.
template <HybridCoefficients M>
SolutionPath em_jump_adapted(const M& model, const RefinedGrid& grid, const BrownianPath& bm) {
    detail::check_noise_dim(model, bm);
    const auto idx = detail::locate_or_mismatch(bm.grid(), grid.events);

    SolutionPath out;
    out.scheme = "jump_adapted";
    out.times = grid.events;
    out.regimes = grid.regimes;
    out.values.reserve(grid.size());
    out.anchors.reserve(grid.size());
    out.values.push_back(model.initial_value());

    std::size_t anchor = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid.is_gridpoint[i]) anchor = i;
        out.anchors.push_back(anchor);
        if (i + 1 == grid.size()) break;
        const Eigen::VectorXd& frozen = out.values[anchor];
        const Eigen::VectorXd f = drift_eval(model, frozen, grid.regimes[i]);
        const Eigen::MatrixXd g = diffusion_eval(model, frozen, grid.regimes[i]);
        out.values.push_back(detail::euler_step(out.values[i], f, g, grid.events[i + 1] - grid.events[i],
                                                bm.difference(idx[i], idx[i + 1])));
    }
    return out;
}

/// Classical EM with the regime frozen at the skeleton value alpha(t_k).
template <HybridCoefficients M>
SolutionPath em_classical(const M& model, const std::vector<Regime>& skeleton, double step, const BrownianPath& bm) {
    detail::check_noise_dim(model, bm);
    const double horizon = bm.grid().horizon();
    const TimeGrid uniform = TimeGrid::uniform(horizon, step);
    if (skeleton.size() != whole_steps(horizon, step) + 1) {
        throw Error(ErrorKind::LengthMismatch, "skeleton has " + std::to_string(skeleton.size()) +
                                                   " states, expected " +
                                                   std::to_string(whole_steps(horizon, step) + 1));
    }
    const auto idx = detail::locate_or_mismatch(bm.grid(), uniform.points());

    SolutionPath out;
    out.scheme = "classical";
    out.times = uniform.points();
    out.values.reserve(uniform.size());
    out.values.push_back(model.initial_value());
    for (std::size_t k = 0; k < uniform.size(); ++k) {
        out.anchors.push_back(k);
        out.regimes.push_back(skeleton[std::min(k, skeleton.size() - 1)]);
        if (k + 1 == uniform.size()) break;
        const Regime r = out.regimes[k];
        const Eigen::VectorXd f = drift_eval(model, out.values[k], r);
        const Eigen::MatrixXd g = diffusion_eval(model, out.values[k], r);
        out.values.push_back(
            detail::euler_step(out.values[k], f, g, uniform[k + 1] - uniform[k], bm.difference(idx[k], idx[k + 1])));
    }
    return out;
}

/// Continuous EM at a single time t (which must be a point of bm's grid):
/// Z(t) = Z(J_i) + f(Z_k, r_i)(t - J_i) + g(Z_k, r_i)(B(t) - B(J_i)).
template <HybridCoefficients M>
Eigen::VectorXd interpolant_eval(const SolutionPath& discrete, const M& model, const BrownianPath& bm, double t) {
    const double horizon = bm.grid().horizon();
    const double tol = time_tolerance(horizon);
    if (!(t >= -tol && t <= horizon + tol)) throw Error(ErrorKind::OutOfHorizon, "t=" + std::to_string(t));
    auto it = std::upper_bound(discrete.times.begin(), discrete.times.end(), t + tol);
    const auto i = static_cast<std::size_t>(it - discrete.times.begin()) - 1;
    if (std::abs(discrete.times[i] - t) <= tol) return discrete.values[i];

    const std::size_t jt = bm.grid().find(t);
    if (jt == bm.grid().size()) throw Error(ErrorKind::TimeNotRealized, "B(" + std::to_string(t) + ") not on grid");
    const std::size_t je = bm.grid().find(discrete.times[i]);
    if (je == bm.grid().size()) throw Error(ErrorKind::GridMismatch, "event time missing from Brownian grid");

    const Eigen::VectorXd& frozen = discrete.values[discrete.anchors[i]];
    return detail::euler_step(discrete.values[i], drift_eval(model, frozen, discrete.regimes[i]),
                              diffusion_eval(model, frozen, discrete.regimes[i]), t - discrete.times[i],
                              bm.difference(je, jt));
}

/// Continuous EM at every point of bm's grid. Agrees with interpolant_eval
/// pointwise, and with the discrete values exactly at the discrete times.
template <HybridCoefficients M>
SolutionPath interpolate_on_grid(const SolutionPath& discrete, const M& model, const BrownianPath& bm) {
    const auto idx = detail::locate_or_mismatch(bm.grid(), discrete.times);
    SolutionPath out;
    out.scheme = discrete.scheme;
    out.times = bm.grid().points();
    out.values.reserve(out.times.size());

    std::size_t event = 0;
    Eigen::VectorXd f;
    Eigen::MatrixXd g;
    for (std::size_t j = 0; j < out.times.size(); ++j) {
        if (event < idx.size() && idx[event] == j) {
            out.values.push_back(discrete.values[event]);
            if (event + 1 < idx.size()) {
                const Eigen::VectorXd& frozen = discrete.values[discrete.anchors[event]];
                f = drift_eval(model, frozen, discrete.regimes[event]);
                g = diffusion_eval(model, frozen, discrete.regimes[event]);
            }
            ++event;
            continue;
        }
        const std::size_t e = event - 1;
        out.values.push_back(detail::euler_step(discrete.values[e], f, g, out.times[j] - discrete.times[e],
                                                bm.difference(idx[e], j)));
    }
    return out;
}

/// Regime on each interval of `grid`; every interval must lie inside one
/// chain segment (switches may only fall on grid points).
inline std::vector<Regime> regimes_on_intervals(const ChainPath& path, const TimeGrid& grid) {
    const double tol = grid.tolerance();
    std::vector<Regime> out;
    out.reserve(grid.interval_count());
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
        const std::size_t seg = segment_at(path, grid[j], tol);
        if (seg + 1 < path.switch_times.size() && path.switch_times[seg + 1] < grid[j + 1] - tol) {
            throw Error(ErrorKind::RegimeNotConstant, "switch at " + std::to_string(path.switch_times[seg + 1]) +
                                                          " falls inside [" + std::to_string(grid[j]) + ", " +
                                                          std::to_string(grid[j + 1]) + ")");
        }
        out.push_back(path.states[seg]);
    }
    return out;
}

/// Conditional closed form of the linear model:
/// z(t) = z0 exp(sum_j (a(i_j) - b(i_j)^2/2) dt_j + b(i_j) dB_j).
inline SolutionPath exact_linear_solution(const LinearHybridModel& model, const ChainPath& path,
                                          const BrownianPath& bm) {
    const auto regimes = regimes_on_intervals(path, bm.grid());
    SolutionPath out;
    out.scheme = "exact";
    out.times = bm.grid().points();
    out.values.reserve(out.times.size());
    out.values.push_back(model.initial_value());
    double log_growth = 0.0;
    for (std::size_t j = 0; j < regimes.size(); ++j) {
        const double a = model.a.at(regimes[j]);
        const double b = model.b.at(regimes[j]);
        log_growth += (a - 0.5 * b * b) * (out.times[j + 1] - out.times[j]) + b * bm.difference(j, j + 1)(0);
        out.values.push_back(Eigen::VectorXd::Constant(1, model.z0 * std::exp(log_growth)));
    }
    return out;
}

/// Closed form for a = b = 0 in the trig family: z(t) = z0 + sum_j c(i_j) dt_j.
inline SolutionPath exact_constant_drift_solution(const TrigHybridModel& model, const ChainPath& path,
                                                  const BrownianPath& bm) {
    if (!model.is_constant_drift()) {
        throw Error(ErrorKind::InvalidArgument, "closed form needs a = b = 0");
    }
    const auto regimes = regimes_on_intervals(path, bm.grid());
    SolutionPath out;
    out.scheme = "exact";
    out.times = bm.grid().points();
    out.values.reserve(out.times.size());
    out.values.push_back(model.initial_value());
    double z = model.z0;
    for (std::size_t j = 0; j < regimes.size(); ++j) {
        z += model.c.at(regimes[j]) * (out.times[j + 1] - out.times[j]);
        out.values.push_back(Eigen::VectorXd::Constant(1, z));
    }
    return out;
}

}  // namespace hybridem
