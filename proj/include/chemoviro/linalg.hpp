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
#include <complex>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "chemoviro/model.hpp"
#include "chemoviro/state.hpp"

namespace chemoviro {

/// Default central-difference step: cube root of machine epsilon.
inline const double kCentralDifferenceStep = std::cbrt(std::numeric_limits<double>::epsilon());

/// Central-difference Jacobian of an arbitrary map, step h * max(1, |x_j|) per column.
[[nodiscard]] inline Matrix finite_difference_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x,
                                                       double h = kCentralDifferenceStep) {
    const Eigen::Index n = x.size();
    Matrix J;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double step = h * std::max(1.0, std::abs(x(j)));
        Vector xp = x;
        Vector xm = x;
        xp(j) += step;
        xm(j) -= step;
        const Vector col = (f(xp) - f(xm)) / (xp(j) - xm(j));
        if (j == 0) J.resize(col.size(), n);
        J.col(j) = col;
    }
    return J;
}

/// Jacobian of a model variant's vector field at `point` (variant coordinates).
[[nodiscard]] inline Matrix jacobian(const ModelVariant& variant, const ModelParameters& p, const Vector& point,
                                     double h = kCentralDifferenceStep, double t = 0.0) {
    return finite_difference_jacobian([&](const Vector& x) { return rhs(p, variant, x, t); }, point, h);
}

/// Eigenvalues of a real square matrix, sorted by decreasing real part.
[[nodiscard]] inline std::vector<std::complex<double>> eigenvalues(const Matrix& A) {
    if (A.rows() != A.cols()) throw PreconditionError("eigenvalues: matrix must be square");
    std::vector<std::complex<double>> out;
    if (A.rows() == 0) return out;
    Eigen::EigenSolver<Matrix> solver(A, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) throw ConvergenceError("eigenvalue iteration failed", {}, 0.0);
    const auto& ev = solver.eigenvalues();
    out.assign(ev.data(), ev.data() + ev.size());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
    });
    return out;
}

[[nodiscard]] inline double max_real_part(const std::vector<std::complex<double>>& ev) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& z : ev) m = std::max(m, z.real());
    return m;
}

struct NewtonOptions {
    int max_iterations = 100;
    int max_halvings = 8;
    double tolerance = 1e-10;  ///< on ||F||_inf / (1 + ||x||_inf)
    double fd_step = kCentralDifferenceStep;
};

struct NewtonResult {
    Vector x;
    double residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

/// Damped Newton iteration with a finite-difference Jacobian. Each step is
/// halved (up to max_halvings times) until the residual norm decreases.
/// Never throws on non-convergence; callers decide.
[[nodiscard]] inline NewtonResult newton_solve(const std::function<Vector(const Vector&)>& F, Vector x,
                                               const NewtonOptions& opt = {}) {
    auto scaled = [](const Vector& fx, const Vector& at) {
        return fx.lpNorm<Eigen::Infinity>() / (1.0 + at.lpNorm<Eigen::Infinity>());
    };
    NewtonResult out;
    Vector fx = F(x);
    double res = scaled(fx, x);
    out.x = x;
    out.residual = res;
    for (int it = 1; it <= opt.max_iterations && res >= opt.tolerance; ++it) {
        out.iterations = it;
        const Matrix J = finite_difference_jacobian(F, x, opt.fd_step);
        const Vector dx = J.fullPivLu().solve(-fx);
        if (!dx.allFinite()) break;
        double lambda = 1.0;
        Vector trial = x + dx;
        Vector f_trial = F(trial);
        const double norm0 = fx.norm();
        for (int k = 0; k < opt.max_halvings && !(f_trial.allFinite() && f_trial.norm() < norm0); ++k) {
            lambda *= 0.5;
            trial = x + lambda * dx;
            f_trial = F(trial);
        }
        if (!f_trial.allFinite()) break;
        x = std::move(trial);
        fx = std::move(f_trial);
        res = scaled(fx, x);
        if (res < out.residual) {
            out.x = x;
            out.residual = res;
        }
    }
    out.converged = out.residual < opt.tolerance;
    return out;
}

} // namespace chemoviro
