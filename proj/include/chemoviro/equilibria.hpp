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
#include <complex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "chemoviro/dynamics.hpp"
#include "chemoviro/errors.hpp"
#include "chemoviro/linalg.hpp"
#include "chemoviro/model.hpp"
#include "chemoviro/parameters.hpp"
#include "chemoviro/state.hpp"

namespace chemoviro {

enum class EquilibriumKind { TumourFree, VirusFree, Endemic };
enum class Verdict { Stable, Unstable, Marginal };

[[nodiscard]] inline const char* to_string(EquilibriumKind k) {
    switch (k) {
    case EquilibriumKind::TumourFree: return "tumour-free";
    case EquilibriumKind::VirusFree: return "virus-free";
    case EquilibriumKind::Endemic: return "endemic";
    }
    return "?";
}

[[nodiscard]] inline const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::Stable: return "stable";
    case Verdict::Unstable: return "unstable";
    case Verdict::Marginal: return "marginal";
    }
    return "?";
}

/// |max Re(lambda)| below this is classified Marginal.
inline constexpr double kMarginalMargin = 1e-9;

[[nodiscard]] inline Verdict classify(const std::vector<std::complex<double>>& ev, double margin = kMarginalMargin) {
    const double m = max_real_part(ev);
    if (m < -margin) return Verdict::Stable;
    if (m > margin) return Verdict::Unstable;
    return Verdict::Marginal;
}

// ---------------------------------------------------------------------------
// Routh-Hurwitz

/// x^2 + P1 x + P0 has both roots in the open left half-plane.
[[nodiscard]] inline bool routh_hurwitz_quadratic(double P1, double P0) { return P1 > 0.0 && P0 > 0.0; }

/// x^3 + a2 x^2 + a1 x + a0 has all roots in the open left half-plane.
[[nodiscard]] inline bool routh_hurwitz_cubic(double a2, double a1, double a0) {
    return a2 > 0.0 && a1 > 0.0 && a0 > 0.0 && a2 * a1 > a0;
}

/// Coefficients c_1..c_n of det(xI - A) = x^n + c_1 x^{n-1} + ... + c_n
/// (Faddeev-LeVerrier).
[[nodiscard]] inline std::vector<double> characteristic_polynomial(const Matrix& A) {
    const Eigen::Index n = A.rows();
    std::vector<double> c(static_cast<std::size_t>(n));
    Matrix Mk = Matrix::Identity(n, n);
    for (Eigen::Index k = 1; k <= n; ++k) {
        const Matrix AM = A * Mk;
        const double ck = -AM.trace() / static_cast<double>(k);
        c[static_cast<std::size_t>(k - 1)] = ck;
        Mk = AM + ck * Matrix::Identity(n, n);
    }
    return c;
}

/// General Hurwitz test on a monic polynomial given by c_1..c_n: all leading
/// principal minors of the Hurwitz matrix positive.
[[nodiscard]] inline bool hurwitz_stable(const std::vector<double>& c) {
    const auto n = static_cast<Eigen::Index>(c.size());
    if (n == 0) return true;
    auto coeff = [&](Eigen::Index i) -> double {
        if (i == 0) return 1.0;
        if (i < 0 || i > n) return 0.0;
        return c[static_cast<std::size_t>(i - 1)];
    };
    Matrix H(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index col = 0; col < n; ++col) H(r, col) = coeff(2 * (col + 1) - (r + 1));
    }
    for (Eigen::Index k = 1; k <= n; ++k) {
        if (!(H.topLeftCorner(k, k).determinant() > 0.0)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Reports

struct NamedValue {
    std::string name;
    double value;
};

struct EquilibriumReport {
    VariantTag variant = VariantTag::Full;
    EquilibriumKind kind = EquilibriumKind::Endemic;
    std::string label;                 ///< X_1, C_2, V_3, ...
    Vector point;                      ///< variant coordinates
    Matrix jacobian;
    std::vector<std::complex<double>> eigenvalues;
    std::vector<NamedValue> routh_hurwitz;  ///< P_1, P_0 or a_2, a_1, a_0, a_2*a_1-a_0
    std::optional<bool> routh_hurwitz_stable;
    std::vector<double> char_poly;     ///< monic coefficients c_1..c_n of the Jacobian
    bool hurwitz_stable = false;       ///< Hurwitz determinants on char_poly
    Verdict verdict = Verdict::Marginal;
    double residual = 0.0;             ///< ||rhs(point)||_inf
};

namespace detail {

inline EquilibriumReport analyse(const ModelParameters& p, VariantTag tag, EquilibriumKind kind, std::string label,
                                 Vector point) {
    const auto variant = ModelVariant::from_tag(tag);
    EquilibriumReport r;
    r.variant = tag;
    r.kind = kind;
    r.label = std::move(label);
    r.point = std::move(point);
    r.jacobian = jacobian(variant, p, r.point);
    r.eigenvalues = eigenvalues(r.jacobian);
    r.char_poly = characteristic_polynomial(r.jacobian);
    r.hurwitz_stable = chemoviro::hurwitz_stable(r.char_poly);
    r.verdict = classify(r.eigenvalues);
    r.residual = rhs(p, variant, r.point, 0.0).lpNorm<Eigen::Infinity>();
    return r;
}

inline Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Closed forms

/// Positive root of (alpha/K) U^2 + (alpha kappa/K + L + M - alpha) U + kappa (L - alpha) = 0
/// with M = nu_U beta_T / delta_T. L is the drug kill at steady drug level
/// (0 without treatment). Returns nullopt when L >= alpha (no positive root).
[[nodiscard]] inline std::optional<double> endemic_tumour_level(const ModelParameters& p, double L) {
    if (!(L < p.alpha)) return std::nullopt;
    const double M = p.nu_U * p.beta_T / p.delta_T;
    const double ak = p.alpha * p.kappa / p.K;
    const double A = p.alpha - (ak + L + M);
    const double d = 4.0 * ak * (p.alpha - L);
    const double s = std::sqrt(A * A + d);
    // Rationalised form avoids cancellation when A < 0.
    if (A < 0.0) return 2.0 * p.kappa * (p.alpha - L) / (s - A);
    return p.K / (2.0 * p.alpha) * (A + s);
}

[[nodiscard]] inline double immune_tumour_level(const ModelParameters& p, double U) {
    return p.beta_T / p.delta_T * (U / (p.kappa + U));
}

/// Steady drug level C* = q / psi under constant infusion.
[[nodiscard]] inline double steady_drug(const ModelParameters& p) { return p.q / p.psi; }

/// Drug kill rate of U at the steady drug level, L = delta_U C*/(K_c + C*).
[[nodiscard]] inline double steady_drug_kill(const ModelParameters& p) {
    const double C = steady_drug(p);
    return p.delta_U * C / (p.K_c + C);
}

/// Routh-Hurwitz coefficients of the untreated endemic state, in the scaled
/// form P_1 = K delta_T (kappa + U*) (-trace J), P_0 = K (kappa + U*)^2 det J.
[[nodiscard]] inline std::pair<double, double> no_treatment_rh_coefficients(const ModelParameters& p, double U) {
    const double K = p.K, a = p.alpha, k = p.kappa, dT = p.delta_T, bT = p.beta_T, nu = p.nu_U;
    const double P00 = K * k * (a * dT * K - bT * nu * K + a * k * dT);
    const double P01 =
        K * (K * (a * dT - bT * nu) * (a * dT - bT * nu) + k * dT * dT * a * a + a * bT * k * nu * dT) / (a * dT);
    const double P10 = K * k * dT * (a + dT);
    const double P11 = K * (a * dT - bT * nu + dT * dT);
    return {P11 * U + P10, P01 * U + P00};
}

/// a_2, a_1, a_0 of the chemo endemic characteristic cubic.
[[nodiscard]] inline std::array<double, 3> chemo_rh_coefficients(const ModelParameters& p, double U, double C) {
    const double K = p.K, a = p.alpha, k = p.kappa, dT = p.delta_T, bT = p.beta_T, nu = p.nu_U, dU = p.delta_U,
                 Kc = p.K_c, psi = p.psi;
    const double drug = C * dU / (C + Kc);
    const double sat = U * bT * nu / (U + k);
    const double sat2 = U * U * bT * nu / ((U + k) * (U + k));
    const double a2 = 2.0 * U * a / K - a + dT + drug + sat / dT + psi;
    const double a1 = 2.0 * U * a * dT / K - a * dT + drug * dT + 2.0 * sat - sat2 + 2.0 * U * a * psi / K - a * psi +
                      dT * psi + drug * psi + sat * psi / dT;
    const double a0 = 2.0 * U * a * dT * psi / K - a * dT * psi + drug * dT * psi + 2.0 * sat * psi - sat2 * psi;
    return {a2, a1, a0};
}

// ---------------------------------------------------------------------------
// Per-variant equilibria

struct NoTreatmentEquilibria {
    EquilibriumReport tumour_free;  ///< X_1
    EquilibriumReport endemic;      ///< X_2
};

[[nodiscard]] inline NoTreatmentEquilibria no_treatment_equilibria(const ModelParameters& p) {
    p.validate();
    const double U = *endemic_tumour_level(p, 0.0);
    const double E = immune_tumour_level(p, U);
    NoTreatmentEquilibria out{
        detail::analyse(p, VariantTag::NoTreatment, EquilibriumKind::TumourFree, "X_1", detail::vec({0.0, 0.0})),
        detail::analyse(p, VariantTag::NoTreatment, EquilibriumKind::Endemic, "X_2", detail::vec({U, E})),
    };
    const auto [P1, P0] = no_treatment_rh_coefficients(p, U);
    out.endemic.routh_hurwitz = {{"P_1", P1}, {"P_0", P0}};
    out.endemic.routh_hurwitz_stable = routh_hurwitz_quadratic(P1, P0);
    return out;
}

struct ChemoEquilibria {
    EquilibriumReport tumour_free;             ///< C_1
    std::optional<EquilibriumReport> endemic;  ///< C_2, absent when L >= alpha
    std::string note;
};

[[nodiscard]] inline ChemoEquilibria chemo_equilibria(const ModelParameters& p) {
    p.validate();
    const double C = steady_drug(p);
    const double L = steady_drug_kill(p);
    ChemoEquilibria out{
        detail::analyse(p, VariantTag::ChemoOnly, EquilibriumKind::TumourFree, "C_1", detail::vec({0.0, 0.0, C})),
        std::nullopt,
        {},
    };
    if (auto U = endemic_tumour_level(p, L)) {
        auto r = detail::analyse(p, VariantTag::ChemoOnly, EquilibriumKind::Endemic, "C_2",
                                 detail::vec({*U, immune_tumour_level(p, *U), C}));
        const auto [a2, a1, a0] = chemo_rh_coefficients(p, *U, C);
        r.routh_hurwitz = {{"a_2", a2}, {"a_1", a1}, {"a_0", a0}, {"a_2*a_1-a_0", a2 * a1 - a0}};
        r.routh_hurwitz_stable = routh_hurwitz_cubic(a2, a1, a0);
        out.endemic = std::move(r);
    } else {
        std::ostringstream os;
        os << "no tumour endemic state: drug kill L = " << L << " >= alpha = " << p.alpha;
        out.note = os.str();
    }
    return out;
}

/// Growth eigenvalue of the chemo tumour-free state, alpha - delta_U C*/(K_c + C*),
/// read off the finite-difference Jacobian spectrum.
[[nodiscard]] inline double chemo_tumour_free_growth_eigenvalue(const ModelParameters& p) {
    const auto r = detail::analyse(p, VariantTag::ChemoOnly, EquilibriumKind::TumourFree, "C_1",
                                   detail::vec({0.0, 0.0, steady_drug(p)}));
    // The Jacobian is triangular there, so the U-direction eigenvalue is J(0,0).
    const double target = r.jacobian(0, 0);
    double best = r.eigenvalues.front().real();
    for (const auto& z : r.eigenvalues) {
        if (std::abs(z.real() - target) < std::abs(best - target)) best = z.real();
    }
    return best;
}

struct DoseThreshold {
    std::optional<double> q_star;  ///< none when delta_U <= alpha
    bool attainable = false;       ///< q* <= u2_MTD
};

/// Infusion rate above which the chemo tumour-free state becomes stable:
/// q* = alpha psi K_c / (delta_U - alpha), where alpha - delta_U C*/(K_c + C*) changes sign.
[[nodiscard]] inline DoseThreshold chemo_dose_threshold(const ModelParameters& p) {
    DoseThreshold out;
    if (p.delta_U > p.alpha) {
        out.q_star = p.alpha * p.psi * p.K_c / (p.delta_U - p.alpha);
        out.attainable = *out.q_star <= p.u2_MTD;
    }
    return out;
}

struct ViroEquilibria {
    EquilibriumReport tumour_free;             ///< V_1
    EquilibriumReport virus_free;              ///< V_2
    std::optional<EquilibriumReport> endemic;  ///< V_3
    std::string note;
};

struct InteriorSearch {
    double dt = 0.01;
    double stall_tol = 1e-10;
    double t_max = 2000.0;
    NewtonOptions newton{};
};

namespace detail {

/// Integrate from `seed`, polish with Newton, and accept the result only if it
/// is an interior point (every component strictly positive).
inline std::optional<NewtonResult> interior_equilibrium(const ModelParameters& p, VariantTag tag, const Vector& seed,
                                                        const InteriorSearch& s, std::string& diagnostic) {
    const auto variant = ModelVariant::from_tag(tag);
    const auto run = integrate_to_steady_state(variant, p, seed, s.dt, s.stall_tol, s.t_max);
    auto res = newton_solve([&](const Vector& x) { return rhs(p, variant, x, 0.0); }, run.state, s.newton);
    if (!res.converged) {
        std::ostringstream os;
        os << "Newton did not converge (scaled residual " << res.residual << " after " << res.iterations
           << " iterations)";
        diagnostic = os.str();
        return std::nullopt;
    }
    if ((res.x.array() <= 0.0).any()) {
        diagnostic = "iteration converged to a boundary equilibrium, not an interior one";
        return std::nullopt;
    }
    return res;
}

} // namespace detail

[[nodiscard]] inline ViroEquilibria viro_equilibria(const ModelParameters& p,
                                                    const SystemState& seed = default_initial_state(),
                                                    const InteriorSearch& search = {}) {
    p.validate();
    const double U = *endemic_tumour_level(p, 0.0);
    ViroEquilibria out{
        detail::analyse(p, VariantTag::ViroOnly, EquilibriumKind::TumourFree, "V_1",
                        detail::vec({0.0, 0.0, 0.0, 0.0, 0.0})),
        detail::analyse(p, VariantTag::ViroOnly, EquilibriumKind::VirusFree, "V_2",
                        detail::vec({U, 0.0, 0.0, 0.0, immune_tumour_level(p, U)})),
        std::nullopt,
        {},
    };
    if (auto res = detail::interior_equilibrium(p, VariantTag::ViroOnly, project(VariantTag::ViroOnly, seed), search,
                                                out.note)) {
        out.endemic = detail::analyse(p, VariantTag::ViroOnly, EquilibriumKind::Endemic, "V_3", res->x);
    }
    return out;
}

/// Interior equilibrium of the full model: long-run integration from `seed`
/// followed by damped Newton. Throws ConvergenceError with the best iterate
/// when Newton stalls.
[[nodiscard]] inline EquilibriumReport full_endemic_equilibrium(const ModelParameters& p,
                                                                const SystemState& seed = default_initial_state(),
                                                                const InteriorSearch& search = {}) {
    p.validate();
    const auto variant = ModelVariant::full();
    const auto run = integrate_to_steady_state(variant, p, project(VariantTag::Full, seed), search.dt,
                                               search.stall_tol, search.t_max);
    auto res = newton_solve([&](const Vector& x) { return rhs(p, variant, x, 0.0); }, run.state, search.newton);
    if (!res.converged) {
        std::ostringstream os;
        os << "full-model equilibrium: Newton stalled at scaled residual " << res.residual;
        throw ConvergenceError(os.str(), std::vector<double>(res.x.data(), res.x.data() + res.x.size()),
                               res.residual);
    }
    // Components that should vanish can land at -1e-20 or so; report them as zero.
    Vector x = res.x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x(i) < 0.0 && std::abs(x(i)) < 1e-12 * (1.0 + x.lpNorm<Eigen::Infinity>())) x(i) = 0.0;
    }
    const bool interior = (x.array() > 0.0).all();
    return detail::analyse(p, VariantTag::Full, interior ? EquilibriumKind::Endemic : EquilibriumKind::VirusFree,
                           interior ? "E*" : "E_0", x);
}

struct FullEquilibria {
    EquilibriumReport tumour_free;             ///< E_0 = (0, 0, 0, 0, 0, q/psi)
    std::optional<EquilibriumReport> endemic;  ///< E*
    std::string note;
};

[[nodiscard]] inline FullEquilibria full_equilibria(const ModelParameters& p,
                                                    const SystemState& seed = default_initial_state(),
                                                    const InteriorSearch& search = {}) {
    p.validate();
    FullEquilibria out{detail::analyse(p, VariantTag::Full, EquilibriumKind::TumourFree, "E_0",
                                       detail::vec({0.0, 0.0, 0.0, 0.0, 0.0, steady_drug(p)})),
                       std::nullopt,
                       {}};
    try {
        auto r = full_endemic_equilibrium(p, seed, search);
        if (r.kind == EquilibriumKind::Endemic) {
            out.endemic = std::move(r);
        } else {
            out.note = "long-run state is not interior";
        }
    } catch (const ConvergenceError& e) {
        out.note = e.what();
    }
    return out;
}

/// Every equilibrium the library can locate for a non-control variant.
[[nodiscard]] inline std::vector<EquilibriumReport> equilibria_of(const ModelParameters& p, VariantTag tag,
                                                                  const SystemState& seed = default_initial_state(),
                                                                  std::string* note = nullptr) {
    std::vector<EquilibriumReport> out;
    std::string msg;
    switch (tag) {
    case VariantTag::NoTreatment: {
        auto e = no_treatment_equilibria(p);
        out = {e.tumour_free, e.endemic};
        break;
    }
    case VariantTag::ChemoOnly: {
        auto e = chemo_equilibria(p);
        out.push_back(e.tumour_free);
        if (e.endemic) out.push_back(*e.endemic);
        msg = e.note;
        break;
    }
    case VariantTag::ViroOnly: {
        auto e = viro_equilibria(p, seed);
        out = {e.tumour_free, e.virus_free};
        if (e.endemic) out.push_back(*e.endemic);
        msg = e.note;
        break;
    }
    case VariantTag::Full: {
        auto e = full_equilibria(p, seed);
        out.push_back(e.tumour_free);
        if (e.endemic) out.push_back(*e.endemic);
        msg = e.note;
        break;
    }
    case VariantTag::ControlReduced: throw PreconditionError("equilibria are not defined for the control system");
    }
    if (note) *note = msg;
    return out;
}

} // namespace chemoviro
