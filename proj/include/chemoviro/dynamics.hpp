/*
 * Copyright (C) 2026 The chemoviro authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "chemoviro/errors.hpp"
#include "chemoviro/model.hpp"
#include "chemoviro/parameters.hpp"
#include "chemoviro/state.hpp"

namespace chemoviro {

/// One recorded breach of the attracting region. `excess` is how far past the
/// bound the state was, in the units of that bound.
struct OmegaViolation {
    double time;
    std::string bound;
    double excess;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;  ///< in the variant's own coordinates
    ModelVariant variant;
    double step_size = 0.0;
    std::vector<OmegaViolation> violations;
    /// Static-region bounds the initial state already broke (warning only).
    std::vector<std::string> initial_outside;

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }

    /// Full six-component view of sample k; absent compartments are NaN.
    [[nodiscard]] std::array<double, 6> full_state(std::size_t k) const {
        return embed(variant.tag(), states[k], std::numeric_limits<double>::quiet_NaN());
    }

    [[nodiscard]] const Vector& back() const { return states.back(); }
};

struct IntegrationOptions {
    /// Relative tolerance on each bound's scale before a breach is recorded.
    double omega_tol = 1e-6;
    /// Throw PreconditionError instead of warning when the start is outside the region.
    bool require_initial_in_domain = false;
};

namespace detail {

inline bool all_finite(const Vector& x) { return x.allFinite(); }

inline Vector rk4_step(const ModelParameters& p, const ModelVariant& variant, const Vector& x, double t, double h) {
    const Vector k1 = rhs(p, variant, x, t);
    const Vector k2 = rhs(p, variant, x + 0.5 * h * k1, t + 0.5 * h);
    const Vector k3 = rhs(p, variant, x + 0.5 * h * k2, t + 0.5 * h);
    const Vector k4 = rhs(p, variant, x + h * k3, t + h);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline void check_start(const ModelParameters& p, const ModelVariant& variant, const Vector& x0, double dt) {
    p.validate();
    if (!(dt > 0.0) || !std::isfinite(dt)) throw PreconditionError("step size must be positive and finite");
    if (static_cast<std::size_t>(x0.size()) != variant_dimension(variant.tag())) {
        std::ostringstream os;
        os << "initial state has " << x0.size() << " components, variant " << to_string(variant.tag()) << " needs "
           << variant_dimension(variant.tag());
        throw PreconditionError(os.str());
    }
    if (!x0.allFinite()) throw InvalidState("initial state is not finite");
}

} // namespace detail

/// Classic fixed-step fourth-order Runge-Kutta over [t0, t1].
///
/// Every step is recorded; the last step is shortened so that t1 is hit
/// exactly. The attracting region is checked after every step and breaches
/// are recorded in the trajectory, never corrected.
[[nodiscard]] inline Trajectory integrate_rk4(const ModelVariant& variant, const ModelParameters& p, const Vector& x0,
                                              double t0, double t1, double dt,
                                              const IntegrationOptions& opts = {}) {
    detail::check_start(p, variant, x0, dt);
    if (!(t1 > t0)) throw PreconditionError("integration interval must have t1 > t0");

    Trajectory traj;
    traj.variant = variant;
    traj.step_size = dt;

    const auto start = embed(variant.tag(), x0, std::numeric_limits<double>::quiet_NaN());
    {
        SystemState s = SystemState::from_array(embed(variant.tag(), x0, 0.0));
        traj.initial_outside = in_domain(p, s, opts.omega_tol).violated;
        if (opts.require_initial_in_domain && !traj.initial_outside.empty()) {
            throw PreconditionError("initial state outside the feasible region: " + traj.initial_outside.front());
        }
    }
    const AttractingEnvelope envelope(p, variant.tag(), start);

    const double span = t1 - t0;
    const auto n_steps = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
    traj.times.reserve(n_steps + 1);
    traj.states.reserve(n_steps + 1);
    traj.times.push_back(t0);
    traj.states.push_back(x0);

    Vector x = x0;
    double t = t0;
    for (std::size_t k = 1; k <= n_steps; ++k) {
        const double t_next = (k == n_steps) ? t1 : t0 + static_cast<double>(k) * dt;
        x = detail::rk4_step(p, variant, x, t, t_next - t);
        if (!detail::all_finite(x)) {
            std::ostringstream os;
            os << "non-finite state after step to t = " << t_next;
            throw DivergenceError(os.str(), t);
        }
        t = t_next;
        for (auto& b : envelope.violations(embed(variant.tag(), x, std::numeric_limits<double>::quiet_NaN()),
                                           t - t0, opts.omega_tol)) {
            traj.violations.push_back({t, std::move(b.bound), b.excess});
        }
        traj.times.push_back(t);
        traj.states.push_back(x);
    }
    return traj;
}

/// Full-state convenience overload; projects the start onto the variant.
[[nodiscard]] inline Trajectory integrate_rk4(const ModelVariant& variant, const ModelParameters& p,
                                              const SystemState& initial, double t0, double t1, double dt,
                                              const IntegrationOptions& opts = {}) {
    return integrate_rk4(variant, p, project(variant.tag(), initial), t0, t1, dt, opts);
}

struct SteadyStateResult {
    Vector state;
    bool converged = false;
    double time = 0.0;      ///< simulated time used
    double residual = 0.0;  ///< ||rhs||_inf / (1 + ||x||_inf) at the end
};

[[nodiscard]] inline double scaled_residual(const ModelParameters& p, const ModelVariant& variant, const Vector& x,
                                            double t = 0.0) {
    return rhs(p, variant, x, t).lpNorm<Eigen::Infinity>() / (1.0 + x.lpNorm<Eigen::Infinity>());
}

/// March with RK4 until the scaled residual drops below stall_tol or t_max
/// days have elapsed. The flag reports which of the two happened.
[[nodiscard]] inline SteadyStateResult integrate_to_steady_state(const ModelVariant& variant, const ModelParameters& p,
                                                                 const Vector& x0, double dt = 0.01,
                                                                 double stall_tol = 1e-10, double t_max = 2000.0) {
    detail::check_start(p, variant, x0, dt);
    SteadyStateResult out;
    Vector x = x0;
    double t = 0.0;
    double res = scaled_residual(p, variant, x, t);
    while (res >= stall_tol && t < t_max) {
        const double h = std::min(dt, t_max - t);
        x = detail::rk4_step(p, variant, x, t, h);
        if (!detail::all_finite(x)) {
            std::ostringstream os;
            os << "non-finite state while seeking steady state at t = " << t + h;
            throw DivergenceError(os.str(), t);
        }
        t += h;
        res = scaled_residual(p, variant, x, t);
    }
    out.state = std::move(x);
    out.converged = res < stall_tol;
    out.time = t;
    out.residual = res;
    return out;
}

} // namespace chemoviro
