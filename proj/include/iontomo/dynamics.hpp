#pragma once

// Complex mode function eps(t) of the parametrically driven trap,
//   eps'' + omega^2(t) eps = 0,  eps(0) = 1,  eps'(0) = i,
// with omega^2(t) = 1 + kappa^2 sin^2(Omega t) in units hbar = m = omega(0) = 1.
// The pair (eps, eps') carries the Wronskian eps eps'* - eps* eps' = -2i, which is
// what keeps the associated annihilation-type invariant bosonic; every consumer
// downstream leans on that identity.

#include <algorithm>
#include <utility>

#include "common.hpp"

namespace iontomo {

struct TrapConfig {
    double kappa = 0.5;
    double omega_drive = 2.0;

    double omega_sq(double t) const {
        double s = std::sin(omega_drive * t);
        return 1.0 + kappa * kappa * s * s;
    }
    void validate() const {
        if (!(kappa >= 0.0) || !std::isfinite(kappa))
            throw ValidationError("TrapConfig: kappa must be finite and >= 0");
        if (!(omega_drive > 0.0) || !std::isfinite(omega_drive))
            throw ValidationError("TrapConfig: omega_drive must be finite and > 0");
    }
};

// Dense output of one integration run.  Grids are uniform; eps[0] and eps_dot[0]
// hold the initial conditions exactly.
struct EpsilonTrajectory {
    TrapConfig config;
    double step = 0.0;
    std::vector<double> t_grid;
    std::vector<cplx> eps;
    std::vector<cplx> eps_dot;
    double max_abs_eps = 0.0;
    double min_abs_eps = 0.0;
    double max_wronskian_error = 0.0;
    bool resonance_warning = false;

    double t_max() const { return t_grid.empty() ? 0.0 : t_grid.back(); }
};

// Step used when the caller does not pin one: >= 200 samples per fastest
// oscillation (drive period or free period, whichever is shorter).
inline double default_step(const TrapConfig& config) {
    double period = std::min(2.0 * pi / config.omega_drive, 2.0 * pi);
    return period / 200.0;
}

inline int default_n_steps(const TrapConfig& config, double t_max) {
    return std::max(2, static_cast<int>(std::ceil(t_max / default_step(config))));
}

// Fixed-step classical RK4 over [0, t_max] with n_steps intervals.
// Single-threaded and bitwise deterministic for identical inputs.
inline EpsilonTrajectory solve_epsilon(const TrapConfig& config, double t_max, int n_steps) {
    config.validate();
    if (!(t_max > 0.0) || !std::isfinite(t_max))
        throw ValidationError("solve_epsilon: t_max must be finite and > 0");
    if (n_steps < 2) throw ValidationError("solve_epsilon: n_steps must be >= 2");

    EpsilonTrajectory traj;
    traj.config = config;
    traj.step = t_max / n_steps;
    std::size_t n = static_cast<std::size_t>(n_steps) + 1;
    traj.t_grid.resize(n);
    traj.eps.resize(n);
    traj.eps_dot.resize(n);

    cplx e{1.0, 0.0};
    cplx v{0.0, 1.0};
    traj.t_grid[0] = 0.0;
    traj.eps[0] = e;
    traj.eps_dot[0] = v;

    const double h = traj.step;
    for (std::size_t i = 1; i < n; ++i) {
        double t = h * static_cast<double>(i - 1);
        cplx k1e = v;
        cplx k1v = -config.omega_sq(t) * e;
        cplx k2e = v + 0.5 * h * k1v;
        cplx k2v = -config.omega_sq(t + 0.5 * h) * (e + 0.5 * h * k1e);
        cplx k3e = v + 0.5 * h * k2v;
        cplx k3v = -config.omega_sq(t + 0.5 * h) * (e + 0.5 * h * k2e);
        cplx k4e = v + h * k3v;
        cplx k4v = -config.omega_sq(t + h) * (e + h * k3e);
        e += (h / 6.0) * (k1e + 2.0 * k2e + 2.0 * k3e + k4e);
        v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        traj.t_grid[i] = h * static_cast<double>(i);
        traj.eps[i] = e;
        traj.eps_dot[i] = v;
    }

    traj.max_abs_eps = 0.0;
    traj.min_abs_eps = std::abs(traj.eps[0]);
    double max_rel_drift = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double a = std::abs(traj.eps[i]);
        traj.max_abs_eps = std::max(traj.max_abs_eps, a);
        traj.min_abs_eps = std::min(traj.min_abs_eps, a);
        cplx w = traj.eps[i] * std::conj(traj.eps_dot[i]) - std::conj(traj.eps[i]) * traj.eps_dot[i];
        double err = std::abs(w + cplx{0.0, 2.0});
        traj.max_wronskian_error = std::max(traj.max_wronskian_error, err);
        // drift guard scales with the solution: on resonance |eps| grows and the
        // conserved -2i is the tiny difference of large products
        max_rel_drift = std::max(max_rel_drift, err / std::max(1.0, a * std::abs(traj.eps_dot[i])));
    }
    if (max_rel_drift > 1e-6)
        throw NumericalError("solve_epsilon: Wronskian drift exceeds 1e-6; refine the step");
    if (!(traj.min_abs_eps > 0.0))
        throw NumericalError("solve_epsilon: |eps| reached zero");
    traj.resonance_warning = traj.max_abs_eps > 10.0;
    return traj;
}

namespace detail {

inline std::size_t bracket_index(const EpsilonTrajectory& traj, double t) {
    if (traj.t_grid.size() < 2) throw ValidationError("epsilon_at: trajectory is empty");
    if (!(t >= 0.0) || t > traj.t_max() * (1.0 + 1e-12))
        throw ValidationError("epsilon_at: t outside the solved range");
    double ft = t / traj.step;
    auto i = static_cast<std::size_t>(std::max(0.0, std::floor(ft)));
    return std::min(i, traj.t_grid.size() - 2);
}

inline cplx hermite_cubic(cplx p0, cplx m0, cplx p1, cplx m1, double h, double u) {
    double u2 = u * u;
    double u3 = u2 * u;
    double h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    double h10 = u3 - 2.0 * u2 + u;
    double h01 = -2.0 * u3 + 3.0 * u2;
    double h11 = u3 - u2;
    return h00 * p0 + (h10 * h) * m0 + h01 * p1 + (h11 * h) * m1;
}

}  // namespace detail

// (eps, eps') at arbitrary t in the solved range.  Between nodes: cubic Hermite,
// with eps'' = -omega^2 eps supplying the eps' endpoint slopes, so both values
// carry the integrator's O(h^4) accuracy.
inline std::pair<cplx, cplx> epsilon_at(const EpsilonTrajectory& traj, double t) {
    std::size_t i = detail::bracket_index(traj, t);
    if (t <= 0.0) return {traj.eps.front(), traj.eps_dot.front()};
    double u = (t - traj.t_grid[i]) / traj.step;
    if (u <= 0.0) return {traj.eps[i], traj.eps_dot[i]};
    if (u >= 1.0) return {traj.eps[i + 1], traj.eps_dot[i + 1]};
    cplx a0 = -traj.config.omega_sq(traj.t_grid[i]) * traj.eps[i];
    cplx a1 = -traj.config.omega_sq(traj.t_grid[i + 1]) * traj.eps[i + 1];
    cplx e = detail::hermite_cubic(traj.eps[i], traj.eps_dot[i], traj.eps[i + 1], traj.eps_dot[i + 1],
                                   traj.step, u);
    cplx v = detail::hermite_cubic(traj.eps_dot[i], a0, traj.eps_dot[i + 1], a1, traj.step, u);
    return {e, v};
}

// eps eps'* - eps* eps'; exactly -2i for the true flow.
inline cplx wronskian(const EpsilonTrajectory& traj, double t) {
    auto [e, v] = epsilon_at(traj, t);
    return e * std::conj(v) - std::conj(e) * v;
}

}  // namespace iontomo
