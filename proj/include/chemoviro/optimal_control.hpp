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
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include "chemoviro/errors.hpp"
#include "chemoviro/model.hpp"
#include "chemoviro/parameters.hpp"
#include "chemoviro/state.hpp"

namespace chemoviro {

using ControlState = std::array<double, 4>; ///< (U, I, V, C)
using Costate = std::array<double, 4>;      ///< (lambda1, lambda2, lambda3, lambda4)

/// Piecewise-linear dose schedule on a uniform mesh over [0, T_f].
struct ControlGrid {
    std::vector<double> mesh;
    std::vector<double> u1;
    std::vector<double> u2;

    [[nodiscard]] std::size_t size() const { return mesh.size(); }

    /// Zero schedule with N intervals.
    [[nodiscard]] static ControlGrid zeros(double T_f, std::size_t N) {
        ControlGrid g;
        g.mesh.resize(N + 1);
        for (std::size_t k = 0; k <= N; ++k) g.mesh[k] = T_f * static_cast<double>(k) / static_cast<double>(N);
        g.u1.assign(N + 1, 0.0);
        g.u2.assign(N + 1, 0.0);
        return g;
    }

    /// True when every node lies in [0, u1_MTD] x [0, u2_MTD].
    [[nodiscard]] bool within_bounds(const ModelParameters& p) const {
        for (std::size_t k = 0; k < size(); ++k) {
            if (!(u1[k] >= 0.0 && u1[k] <= p.u1_MTD && u2[k] >= 0.0 && u2[k] <= p.u2_MTD)) return false;
        }
        return true;
    }
};

/// Costates at every mesh node.
struct AdjointState {
    std::vector<Costate> lambda;
};

struct SweepRecord {
    int iter;
    double delta_u;
    double J;
};

struct OCSolution {
    std::vector<ControlState> states;
    AdjointState adjoint;
    ControlGrid controls;
    double J = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<SweepRecord> history;

    [[nodiscard]] const std::vector<double>& mesh() const { return controls.mesh; }
};

struct SweepOptions {
    std::size_t N = 2000;
    double relaxation = 0.5;
    double tol = 1e-4;
    int max_iters = 500;
};

/// H = U + I + (A_1 u1^2 + A_2 u2^2) / 2 + lambda . f(x, u).
[[nodiscard]] inline double hamiltonian(const ModelParameters& p, const ControlState& x, double u1, double u2,
                                        const Costate& lambda) {
    const auto f = detail::control_field(p, x, u1, u2);
    double h = x[0] + x[1] + 0.5 * (p.A_1 * u1 * u1 + p.A_2 * u2 * u2);
    for (std::size_t i = 0; i < 4; ++i) h += lambda[i] * f[i];
    return h;
}

/// Costate dynamics lambda' = -dH/dx.
///
/// Obtained by differentiating the Hamiltonian. Note the published form of
/// the lambda2 line carries -lambda1 alpha U / K; differentiating gives
/// +lambda1 alpha U / K, which is what is used here.
[[nodiscard]] inline Costate adjoint_rhs(const ModelParameters& p, const ControlState& x, const Costate& lambda,
                                         double /*t*/ = 0.0) {
    const auto [U, I, V, C] = x;
    const auto [l1, l2, l3, l4] = lambda;
    const double g = U / (p.K_u + U);
    const double dg = p.K_u / ((p.K_u + U) * (p.K_u + U));
    const double h = C / (p.K_c + C);
    const double dh = p.K_c / ((p.K_c + C) * (p.K_c + C));

    const double f1_U = p.alpha * (1.0 - (2.0 * U + I) / p.K) - p.beta * V * dg - p.delta_U * h;
    const double f2_U = p.beta * V * dg;
    const double f3_U = -p.beta * V * dg;

    return {
        -1.0 - l1 * f1_U - l2 * f2_U - l3 * f3_U,
        -1.0 + l1 * p.alpha * U / p.K + l2 * (p.delta + p.delta_I * h) - l3 * p.b * p.delta,
        l1 * p.beta * g - l2 * p.beta * g + l3 * (p.beta * g + p.gamma),
        l1 * p.delta_U * U * dh + l2 * p.delta_I * I * dh + l4 * p.psi,
    };
}

namespace detail {

inline double project_control(double lambda, double A, double mtd) {
    if (A == 0.0) return lambda < 0.0 ? mtd : 0.0;
    return std::clamp(-lambda / A, 0.0, mtd);
}

} // namespace detail

/// Pointwise minimiser of H over the control box.
[[nodiscard]] inline std::pair<double, double> optimal_controls_from_adjoint(const ModelParameters& p,
                                                                             const Costate& lambda) {
    return {detail::project_control(lambda[2], p.A_1, p.u1_MTD), detail::project_control(lambda[3], p.A_2, p.u2_MTD)};
}

namespace detail {

/// Composite Simpson on a uniform mesh; the last three intervals use the 3/8 rule when N is odd.
inline double simpson(const std::vector<double>& y, double h) {
    const std::size_t N = y.size() - 1;
    if (N == 0) return 0.0;
    if (N == 1) return 0.5 * h * (y[0] + y[1]);
    std::size_t even_end = (N % 2 == 0) ? N : N - 3;
    double s = 0.0;
    for (std::size_t k = 0; k + 2 <= even_end; k += 2) s += y[k] + 4.0 * y[k + 1] + y[k + 2];
    s *= h / 3.0;
    if (even_end != N) {
        const std::size_t k = even_end;
        s += 3.0 * h / 8.0 * (y[k] + 3.0 * y[k + 1] + 3.0 * y[k + 2] + y[k + 3]);
    }
    return s;
}

inline ControlState axpy(const ControlState& x, double a, const ControlState& k) {
    return {x[0] + a * k[0], x[1] + a * k[1], x[2] + a * k[2], x[3] + a * k[3]};
}

inline bool all_finite(const ControlState& x) {
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

} // namespace detail

/// Objective: integral of U + I + (A_1 u1^2 + A_2 u2^2) / 2 over the mesh.
[[nodiscard]] inline double objective(const ModelParameters& p, const std::vector<ControlState>& states,
                                      const ControlGrid& controls) {
    if (states.size() != controls.size() || states.empty()) {
        throw PreconditionError("objective: state and control grids differ in length");
    }
    std::vector<double> y(states.size());
    for (std::size_t k = 0; k < y.size(); ++k) {
        y[k] = states[k][0] + states[k][1] +
               0.5 * (p.A_1 * controls.u1[k] * controls.u1[k] + p.A_2 * controls.u2[k] * controls.u2[k]);
    }
    const double h = controls.size() > 1 ? controls.mesh[1] - controls.mesh[0] : 0.0;
    return detail::simpson(y, h);
}

/// RK4 of the control system on the grid mesh; controls interpolated linearly.
[[nodiscard]] inline std::vector<ControlState> simulate_controlled(const ModelParameters& p, const ControlState& x0,
                                                                   const ControlGrid& g) {
    std::vector<ControlState> xs(g.size());
    xs[0] = x0;
    for (std::size_t k = 0; k + 1 < g.size(); ++k) {
        const double h = g.mesh[k + 1] - g.mesh[k];
        const double u1m = 0.5 * (g.u1[k] + g.u1[k + 1]);
        const double u2m = 0.5 * (g.u2[k] + g.u2[k + 1]);
        const auto& x = xs[k];
        const auto k1 = detail::control_field(p, x, g.u1[k], g.u2[k]);
        const auto k2 = detail::control_field(p, detail::axpy(x, 0.5 * h, k1), u1m, u2m);
        const auto k3 = detail::control_field(p, detail::axpy(x, 0.5 * h, k2), u1m, u2m);
        const auto k4 = detail::control_field(p, detail::axpy(x, h, k3), g.u1[k + 1], g.u2[k + 1]);
        for (std::size_t i = 0; i < 4; ++i) xs[k + 1][i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (!detail::all_finite(xs[k + 1])) {
            std::ostringstream os;
            os << "control system diverged at t = " << g.mesh[k + 1];
            throw DivergenceError(os.str(), g.mesh[k]);
        }
    }
    return xs;
}

/// Backward RK4 of the costates from lambda(T_f) = 0 along a stored trajectory.
[[nodiscard]] inline AdjointState integrate_adjoint(const ModelParameters& p, const std::vector<ControlState>& xs,
                                                    const std::vector<double>& mesh) {
    const std::size_t n = mesh.size();
    AdjointState a;
    a.lambda.assign(n, Costate{0.0, 0.0, 0.0, 0.0});
    for (std::size_t k = n - 1; k > 0; --k) {
        const double h = mesh[k - 1] - mesh[k];
        ControlState xm;
        for (std::size_t i = 0; i < 4; ++i) xm[i] = 0.5 * (xs[k][i] + xs[k - 1][i]);
        const auto& l = a.lambda[k];
        const auto k1 = adjoint_rhs(p, xs[k], l);
        const auto k2 = adjoint_rhs(p, xm, detail::axpy(l, 0.5 * h, k1));
        const auto k3 = adjoint_rhs(p, xm, detail::axpy(l, 0.5 * h, k2));
        const auto k4 = adjoint_rhs(p, xs[k - 1], detail::axpy(l, h, k3));
        for (std::size_t i = 0; i < 4; ++i) {
            a.lambda[k - 1][i] = l[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if (!detail::all_finite(a.lambda[k - 1])) {
            std::ostringstream os;
            os << "adjoint system diverged at t = " << mesh[k - 1];
            throw DivergenceError(os.str(), mesh[k]);
        }
    }
    return a;
}

namespace detail {

inline double relative_change(const std::vector<double>& now, const std::vector<double>& before) {
    double diff = 0.0;
    double norm = 0.0;
    for (std::size_t k = 0; k < now.size(); ++k) {
        diff = std::max(diff, std::abs(now[k] - before[k]));
        norm = std::max(norm, std::abs(now[k]));
    }
    if (diff == 0.0) return 0.0;
    return norm > 0.0 ? diff / norm : std::numeric_limits<double>::infinity();
}

} // namespace detail

/// Forward-backward sweep for the fixed-horizon dosing problem.
[[nodiscard]] inline OCSolution forward_backward_sweep(const ModelParameters& p, const ControlState& x0,
                                                       const SweepOptions& opt = {}) {
    p.validate();
    if (opt.N < 100) throw PreconditionError("forward_backward_sweep: mesh size N must be >= 100");
    if (!(opt.relaxation > 0.0 && opt.relaxation <= 1.0)) {
        throw PreconditionError("forward_backward_sweep: relaxation must lie in (0, 1]");
    }
    if (!(opt.tol > 0.0)) throw PreconditionError("forward_backward_sweep: tol must be > 0");
    detail::require_valid(x0, "forward_backward_sweep");

    OCSolution sol;
    ControlGrid u = ControlGrid::zeros(p.T_f, opt.N);
    const double w = opt.relaxation;

    for (int it = 1; it <= opt.max_iters; ++it) {
        const auto xs = simulate_controlled(p, x0, u);
        const auto adj = integrate_adjoint(p, xs, u.mesh);
        ControlGrid next = u;
        for (std::size_t k = 0; k < u.size(); ++k) {
            const auto [a, b] = optimal_controls_from_adjoint(p, adj.lambda[k]);
            next.u1[k] = std::clamp(w * a + (1.0 - w) * u.u1[k], 0.0, p.u1_MTD);
            next.u2[k] = std::clamp(w * b + (1.0 - w) * u.u2[k], 0.0, p.u2_MTD);
        }
        const double change =
            std::max(detail::relative_change(next.u1, u.u1), detail::relative_change(next.u2, u.u2));
        u = std::move(next);
        sol.iterations = it;
        const auto xs_next = simulate_controlled(p, x0, u);
        sol.history.push_back({it, change, objective(p, xs_next, u)});
        if (change < opt.tol) {
            sol.converged = true;
            break;
        }
    }

    sol.states = simulate_controlled(p, x0, u);
    sol.adjoint = integrate_adjoint(p, sol.states, u.mesh);
    sol.controls = std::move(u);
    sol.J = objective(p, sol.states, sol.controls);
    return sol;
}

[[nodiscard]] inline OCSolution forward_backward_sweep(const ModelParameters& p, const ControlState& x0,
                                                       std::size_t N, double relaxation, double tol, int max_iters) {
    return forward_backward_sweep(p, x0, SweepOptions{N, relaxation, tol, max_iters});
}

/// Largest |A_i u_i + lambda_{2+i}| / (A_i u_i_MTD) over nodes where u_i lies strictly inside its box.
[[nodiscard]] inline double stationarity_residual(const ModelParameters& p, const OCSolution& s) {
    double worst = 0.0;
    const auto check = [&](double u, double l, double A, double mtd) {
        if (A <= 0.0 || mtd <= 0.0 || !(u > 0.0 && u < mtd)) return;
        worst = std::max(worst, std::abs(A * u + l) / (A * mtd));
    };
    for (std::size_t k = 0; k < s.controls.size(); ++k) {
        check(s.controls.u1[k], s.adjoint.lambda[k][2], p.A_1, p.u1_MTD);
        check(s.controls.u2[k], s.adjoint.lambda[k][3], p.A_2, p.u2_MTD);
    }
    return worst;
}

/// (U, I, V, C) part of the full initial state.
[[nodiscard]] inline ControlState control_initial_state(const SystemState& s) { return {s.U, s.I, s.V, s.C}; }

} // namespace chemoviro
