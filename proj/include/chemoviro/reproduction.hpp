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

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "chemoviro/equilibria.hpp"
#include "chemoviro/errors.hpp"
#include "chemoviro/linalg.hpp"
#include "chemoviro/model.hpp"
#include "chemoviro/parameters.hpp"

namespace chemoviro {

/// Basic reproduction ratio together with the next-generation ingredients.
struct R0Report {
    double value = 0.0;
    double U_star = 0.0;
    double E_T_star = 0.0;
    double C_star = 0.0;
    Matrix F;
    Matrix V;
    double spectral_radius = 0.0;        ///< rho(F V^-1), computed independently
    double spectral_radius_check = 0.0;  ///< |rho(F V^-1) - value|
    bool at_tumour_free = false;         ///< no chemo endemic state; evaluated at C_1
};

/// Closed form
///   R0 = b beta delta U (K_c + C) / (gamma [(K_c + C)(nu_I E_T + delta) + delta_I C] (K_u + U)).
[[nodiscard]] inline double r0_closed_form(const ModelParameters& p, double U, double E_T, double C) {
    const double num = p.b * p.beta * p.delta * U * (p.K_c + C);
    const double den = p.gamma * ((p.K_c + C) * (p.nu_I * E_T + p.delta) + p.delta_I * C) * (p.K_u + U);
    return num / den;
}

/// New-infection (F) and transition (V) matrices on the infected block (I, V)
/// at a disease-free point.
[[nodiscard]] inline std::pair<Matrix, Matrix> next_generation_matrices(const ModelParameters& p,
                                                                       const SystemState& point) {
    if (point.I != 0.0 || point.V != 0.0) {
        throw PreconditionError("next-generation matrices need a disease-free point (I = V = 0)");
    }
    Matrix F = Matrix::Zero(2, 2);
    F(0, 1) = p.beta * point.U / (p.K_u + point.U);
    Matrix V = Matrix::Zero(2, 2);
    V(0, 0) = p.delta + p.nu_I * point.E_T + p.delta_I * point.C / (p.K_c + point.C) + p.tau * point.E_V;
    V(1, 0) = -p.b * p.delta;
    V(1, 1) = p.gamma;
    return {std::move(F), std::move(V)};
}

[[nodiscard]] inline double spectral_radius(const Matrix& A) {
    double r = 0.0;
    for (const auto& z : eigenvalues(A)) r = std::max(r, std::abs(z));
    return r;
}

/// R0 at the chemo-only endemic state. When that state does not exist
/// (drug kill L >= alpha) this throws unless `tumour_free_fallback` is set,
/// in which case it is evaluated at the tumour-free point and flagged.
[[nodiscard]] inline R0Report r0(const ModelParameters& p, bool tumour_free_fallback = false) {
    p.validate();
    R0Report r;
    r.C_star = steady_drug(p);
    if (auto U = endemic_tumour_level(p, steady_drug_kill(p))) {
        r.U_star = *U;
        r.E_T_star = immune_tumour_level(p, *U);
    } else if (tumour_free_fallback) {
        r.at_tumour_free = true;
    } else {
        throw PreconditionError("R0: no chemo-only tumour endemic state (drug kill exceeds growth rate)");
    }
    r.value = r0_closed_form(p, r.U_star, r.E_T_star, r.C_star);
    std::tie(r.F, r.V) = next_generation_matrices(p, SystemState{r.U_star, 0.0, 0.0, 0.0, r.E_T_star, r.C_star});
    r.spectral_radius = spectral_radius(r.F * r.V.inverse());
    r.spectral_radius_check = std::abs(r.spectral_radius - r.value);
    return r;
}

/// Infection rate giving R0 = target with everything else fixed (R0 is linear in beta).
[[nodiscard]] inline double calibrate_beta(ModelParameters p, double target_r0) {
    p.beta = 1.0;
    return target_r0 / r0(p).value;
}

// ---------------------------------------------------------------------------
// Sensitivity of R0

enum class SensitivityMethod { CentralDifference, AnalyticSpecialCase };

[[nodiscard]] inline const char* to_string(SensitivityMethod m) {
    return m == SensitivityMethod::CentralDifference ? "central-difference" : "analytic-special-case";
}

struct SensitivityReport {
    std::string parameter;
    double S = 0.0;  ///< dR0/dp
    double e = 0.0;  ///< (dR0/dp) p / R0
    SensitivityMethod method = SensitivityMethod::CentralDifference;
    /// Set for b, beta, gamma where R0 is a pure power of the parameter.
    std::optional<double> analytic_S;
    bool ok = true;
    std::string note;  ///< why ok == false
};

inline constexpr double kRelativeFdStep = 1e-6;
inline constexpr double kAbsoluteFdStep = 1e-9;

[[nodiscard]] inline double fd_step_for(double value) {
    return value == 0.0 ? kAbsoluteFdStep : kRelativeFdStep * std::abs(value);
}

/// Parameters appearing in the chemo-only R0 composition.
inline const std::vector<std::string> kR0Parameters{"b",   "beta",  "gamma", "delta",  "alpha", "delta_U",
                                                    "delta_I", "K_c", "K_u", "psi", "q", "nu_I", "nu_U",
                                                    "beta_T", "delta_T", "kappa", "K"};

/// Elasticities of R0 by central differences through the whole chain
/// p -> (U*, E_T*, C*) -> R0; the chemo equilibrium is recomputed at every
/// perturbed value. A perturbation that loses the equilibrium marks that
/// entry not-ok rather than failing the batch.
[[nodiscard]] inline std::vector<SensitivityReport> r0_elasticities(const ModelParameters& p,
                                                                    const std::vector<std::string>& names) {
    const double R = r0(p).value;
    if (!(R > 0.0)) throw PreconditionError("elasticities need R0 > 0");
    std::vector<SensitivityReport> out;
    out.reserve(names.size());
    for (const auto& name : names) {
        SensitivityReport s;
        s.parameter = name;
        const double v = parameter_value(p, name);
        const double h = fd_step_for(v);
        try {
            const double up = r0(with_parameter(p, name, v + h)).value;
            const double dn = r0(with_parameter(p, name, v - h)).value;
            s.S = (up - dn) / ((v + h) - (v - h));
            s.e = s.S * v / R;
        } catch (const Error& e) {
            s.ok = false;
            s.note = e.what();
        }
        if (name == "b") s.analytic_S = R / p.b;
        if (name == "beta") s.analytic_S = R / p.beta;
        if (name == "gamma") s.analytic_S = -R / p.gamma;
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sensitivity of the endemic equilibrium

struct EndemicSensitivityReport {
    std::string parameter;
    std::vector<double> indices;  ///< Gamma^{x_i*}_p, full-state order
    double combined = 0.0;        ///< Gamma^{U*+I*}_p
    Vector equilibrium;
    double condition = 0.0;       ///< 2-norm condition number of J
    std::optional<double> direct_combined;  ///< by re-solving the equilibrium at p(1 +- 1e-4)
};

inline constexpr double kMaxJacobianCondition = 1e12;

/// Weighted combination (U/(U+I)) Gamma^U + (I/(U+I)) Gamma^I.
[[nodiscard]] inline double combine_tumour_indices(double U, double I, double gamma_U, double gamma_I) {
    const double T = U + I;
    return (U / T) * gamma_U + (I / T) * gamma_I;
}

/// Derivative of the full vector field with respect to a named parameter at fixed state.
[[nodiscard]] inline Vector parameter_derivative(const ModelParameters& p, const Vector& x, std::string_view name) {
    const double v = parameter_value(p, name);
    const double h = fd_step_for(v);
    const auto variant = ModelVariant::full();
    const Vector up = rhs(with_parameter(p, name, v + h), variant, x, 0.0);
    const Vector dn = rhs(with_parameter(p, name, v - h), variant, x, 0.0);
    return (up - dn) / ((v + h) - (v - h));
}

/// Sensitivity indices of the full endemic equilibrium,
/// Gamma = -diag(p / x_i*) J^{-1} df/dp, and the total tumour index.
/// Throws PreconditionError when J is singular or ill-conditioned.
[[nodiscard]] inline EndemicSensitivityReport endemic_sensitivity(const ModelParameters& p, const std::string& name,
                                                                  const SystemState& seed = default_initial_state(),
                                                                  bool cross_check = false) {
    const auto eq = full_endemic_equilibrium(p, seed);
    EndemicSensitivityReport r;
    r.parameter = name;
    r.equilibrium = eq.point;

    Eigen::JacobiSVD<Matrix> svd(eq.jacobian);
    const auto& sv = svd.singularValues();
    r.condition = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
    if (!(r.condition <= kMaxJacobianCondition)) {
        std::ostringstream os;
        os << "Jacobian at equilibrium " << eq.label << " is ill-conditioned (condition " << r.condition << ")";
        throw PreconditionError(os.str());
    }

    const double pv = parameter_value(p, name);
    const Vector dfdp = parameter_derivative(p, eq.point, name);
    const Vector dxdp = eq.jacobian.fullPivLu().solve(-dfdp);
    r.indices.resize(static_cast<std::size_t>(dxdp.size()));
    for (Eigen::Index i = 0; i < dxdp.size(); ++i) {
        r.indices[static_cast<std::size_t>(i)] = dxdp(i) == 0.0 ? 0.0 : dxdp(i) * pv / eq.point(i);
    }
    const double U = eq.point(0), I = eq.point(1);
    r.combined = combine_tumour_indices(U, I, r.indices[0], r.indices[1]);

    if (cross_check) {
        const double h = pv == 0.0 ? kAbsoluteFdStep : 1e-4 * std::abs(pv);
        const SystemState from = SystemState::from_array(embed(VariantTag::Full, eq.point));
        auto tumour_at = [&](double value) {
            const auto q = with_parameter(p, name, value);
            const auto variant = ModelVariant::full();
            auto res = newton_solve([&](const Vector& x) { return rhs(q, variant, x, 0.0); },
                                    project(VariantTag::Full, from));
            if (!res.converged) throw ConvergenceError("direct re-solve failed", {}, res.residual);
            return res.x(0) + res.x(1);
        };
        const double dT = (tumour_at(pv + h) - tumour_at(pv - h)) / (2.0 * h);
        r.direct_combined = dT * pv / (U + I);
    }
    return r;
}

// ---------------------------------------------------------------------------

struct DoseCurve {
    std::vector<std::pair<double, double>> points;  ///< (q, R0)
    bool strictly_decreasing = true;
};

[[nodiscard]] inline DoseCurve r0_vs_dose_curve(const ModelParameters& p, const std::vector<double>& q_grid) {
    DoseCurve c;
    for (double q : q_grid) {
        c.points.emplace_back(q, r0(with_parameter(p, "q", q)).value);
    }
    for (std::size_t i = 1; i < c.points.size(); ++i) {
        if (!(c.points[i].second < c.points[i - 1].second)) c.strictly_decreasing = false;
    }
    return c;
}

} // namespace chemoviro
