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
#include <sstream>
#include <string>
#include <vector>

#include "chemoviro/errors.hpp"
#include "chemoviro/parameters.hpp"
#include "chemoviro/state.hpp"

namespace chemoviro {

/// Drug infusion schedule g(t). Constant infusion only; the time argument is
/// kept so other schedules slot in without changing any signature.
[[nodiscard]] inline double infusion(const ModelParameters& p, double /*t*/) { return p.q; }

namespace detail {

template <std::size_t N>
inline void require_valid(const std::array<double, N>& x, const char* who) {
    for (std::size_t i = 0; i < N; ++i) {
        if (!std::isfinite(x[i])) {
            std::ostringstream os;
            os << who << ": state component " << i << " is not finite";
            throw InvalidState(os.str());
        }
        if (x[i] < 0.0) {
            std::ostringstream os;
            os << who << ": state component " << i << " = " << x[i] << " is negative";
            throw InvalidState(os.str());
        }
    }
}

inline double saturation(double x, double k) { return x / (k + x); }

// Unchecked vector fields. These accept any real input so that finite
// differences may straddle the boundary of the positive orthant.

inline std::array<double, 6> full_field(const ModelParameters& p, const std::array<double, 6>& x, double t) {
    const auto [U, I, V, E_V, E_T, C] = x;
    const double infection = p.beta * U * V / (p.K_u + U);
    const double drug = C / (p.K_c + C);
    return {
        p.alpha * U * (1.0 - (U + I) / p.K) - infection - p.nu_U * U * E_T - p.delta_U * U * drug,
        infection - p.delta * I - p.nu_I * E_T * I - p.tau * E_V * I - p.delta_I * I * drug,
        p.b * p.delta * I - infection - p.gamma * V,
        p.phi * I - p.delta_V * E_V,
        p.beta_T * (U + I) / (p.kappa + (U + I)) - p.delta_T * E_T,
        infusion(p, t) - p.psi * C,
    };
}

inline std::array<double, 2> no_treatment_field(const ModelParameters& p, const std::array<double, 2>& x) {
    const auto [U, E_T] = x;
    return {
        p.alpha * U * (1.0 - U / p.K) - p.nu_U * U * E_T,
        p.beta_T * U / (p.kappa + U) - p.delta_T * E_T,
    };
}

inline std::array<double, 3> chemo_field(const ModelParameters& p, const std::array<double, 3>& x, double t) {
    const auto [U, E_T, C] = x;
    return {
        p.alpha * U * (1.0 - U / p.K) - p.nu_U * U * E_T - p.delta_U * U * C / (p.K_c + C),
        p.beta_T * U / (p.kappa + U) - p.delta_T * E_T,
        infusion(p, t) - p.psi * C,
    };
}

inline std::array<double, 5> viro_field(const ModelParameters& p, const std::array<double, 5>& x) {
    const auto [U, I, V, E_V, E_T] = x;
    const double infection = p.beta * U * V / (p.K_u + U);
    return {
        p.alpha * U * (1.0 - (U + I) / p.K) - infection - p.nu_U * U * E_T,
        infection - p.delta * I - p.nu_I * E_T * I - p.tau * E_V * I,
        p.b * p.delta * I - infection - p.gamma * V,
        p.phi * I - p.delta_V * E_V,
        p.beta_T * (U + I) / (p.kappa + (U + I)) - p.delta_T * E_T,
    };
}

/// Immune-free control system; u1 feeds the virus pool, u2 replaces the infusion.
inline std::array<double, 4> control_field(const ModelParameters& p, const std::array<double, 4>& x, double u1,
                                           double u2) {
    const auto [U, I, V, C] = x;
    const double infection = p.beta * U * V / (p.K_u + U);
    const double drug = C / (p.K_c + C);
    return {
        p.alpha * U * (1.0 - (U + I) / p.K) - infection - p.delta_U * U * drug,
        infection - p.delta * I - p.delta_I * I * drug,
        p.b * p.delta * I - infection - p.gamma * V + u1,
        u2 - p.psi * C,
    };
}

template <std::size_t N>
inline std::array<double, N> to_array(const Vector& x) {
    std::array<double, N> a;
    for (std::size_t i = 0; i < N; ++i) a[i] = x(static_cast<Eigen::Index>(i));
    return a;
}

template <std::size_t N>
inline Vector to_vector(const std::array<double, N>& a) {
    Vector x(static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i) x(static_cast<Eigen::Index>(i)) = a[i];
    return x;
}

} // namespace detail

/// Time derivative of the full six-compartment model with g(t) = q.
[[nodiscard]] inline SystemState rhs_full(const ModelParameters& p, const SystemState& s, double t = 0.0) {
    const auto x = s.to_array();
    detail::require_valid(x, "rhs_full");
    return SystemState::from_array(detail::full_field(p, x, t));
}

/// Untreated (U, E_T) sub-model.
[[nodiscard]] inline std::array<double, 2> rhs_no_treatment(const ModelParameters& p, const std::array<double, 2>& x) {
    detail::require_valid(x, "rhs_no_treatment");
    return detail::no_treatment_field(p, x);
}

/// Chemotherapy-only (U, E_T, C) sub-model.
[[nodiscard]] inline std::array<double, 3> rhs_chemo_only(const ModelParameters& p, const std::array<double, 3>& x,
                                                          double t = 0.0) {
    detail::require_valid(x, "rhs_chemo_only");
    return detail::chemo_field(p, x, t);
}

/// Virotherapy-only (U, I, V, E_V, E_T) sub-model.
[[nodiscard]] inline std::array<double, 5> rhs_viro_only(const ModelParameters& p, const std::array<double, 5>& x) {
    detail::require_valid(x, "rhs_viro_only");
    return detail::viro_field(p, x);
}

/// Control system on (U, I, V, C). Controls must lie in [0, MTD].
[[nodiscard]] inline std::array<double, 4> rhs_control(const ModelParameters& p, const std::array<double, 4>& x,
                                                       double u1, double u2) {
    detail::require_valid(x, "rhs_control");
    if (!(u1 >= 0.0 && u1 <= p.u1_MTD)) {
        std::ostringstream os;
        os << "u1 = " << u1 << " outside [0, " << p.u1_MTD << "]";
        throw BoundsError(os.str());
    }
    if (!(u2 >= 0.0 && u2 <= p.u2_MTD)) {
        std::ostringstream os;
        os << "u2 = " << u2 << " outside [0, " << p.u2_MTD << "]";
        throw BoundsError(os.str());
    }
    return detail::control_field(p, x, u1, u2);
}

/// Vector field of any variant in its own coordinates. No sign checks, so it
/// can be used by integrators and finite-difference Jacobians.
[[nodiscard]] inline Vector rhs(const ModelParameters& p, const ModelVariant& variant, const Vector& x, double t) {
    using namespace detail;
    switch (variant.tag()) {
    case VariantTag::Full: return to_vector(full_field(p, to_array<6>(x), t));
    case VariantTag::NoTreatment: return to_vector(no_treatment_field(p, to_array<2>(x)));
    case VariantTag::ChemoOnly: return to_vector(chemo_field(p, to_array<3>(x), t));
    case VariantTag::ViroOnly: return to_vector(viro_field(p, to_array<5>(x)));
    case VariantTag::ControlReduced: {
        const auto& sig = *variant.signal();
        return to_vector(control_field(p, to_array<4>(x), sig.u1(t), sig.u2(t)));
    }
    }
    throw PreconditionError("unknown model variant");
}

/// Upper bounds of the attracting region for each bounded quantity.
///
/// U + I <= K and E_T <= beta_T/delta_T follow directly from the equations.
/// For V and E_V the comparison argument gives bounds proportional to the
/// tumour bound: V <= b delta K / gamma and E_V <= phi K / delta_V.
/// Drug is bounded by the steady infusion level q / psi (or u2_MTD / psi
/// under control), and virus under control additionally by u1_MTD / gamma.
struct OmegaBounds {
    double tumour;
    double virus;
    double immune_virus;
    double immune_tumour;
    double drug;
};

[[nodiscard]] inline OmegaBounds omega_bounds(const ModelParameters& p, VariantTag tag = VariantTag::Full) {
    OmegaBounds b{};
    b.tumour = p.K;
    b.virus = p.b * p.delta * p.K / p.gamma;
    b.immune_virus = p.phi * p.K / p.delta_V;
    b.immune_tumour = p.beta_T / p.delta_T;
    b.drug = p.q / p.psi;
    if (tag == VariantTag::ControlReduced) {
        b.virus += p.u1_MTD / p.gamma;
        b.drug = p.u2_MTD / p.psi;
    }
    return b;
}

inline constexpr const char* kBoundTumour = "U+I <= K";
inline constexpr const char* kBoundVirus = "V <= b*delta*K/gamma";
inline constexpr const char* kBoundImmuneVirus = "E_V <= phi*K/delta_V";
inline constexpr const char* kBoundImmuneTumour = "E_T <= beta_T/delta_T";
inline constexpr const char* kBoundDrug = "C <= q/psi";

struct BoundBreach {
    std::string bound;
    double excess;
};

struct DomainCheck {
    bool inside = true;
    std::vector<std::string> violated;
};

namespace detail {

inline bool exceeds(double value, double bound, double tol) {
    return value - bound > tol * std::max(1.0, std::abs(bound));
}

} // namespace detail

/// Membership of a full state in the biologically feasible region, each bound
/// relaxed by tol times its own scale. Negative components are reported too.
[[nodiscard]] inline DomainCheck in_domain(const ModelParameters& p, const SystemState& s, double tol = 1e-9) {
    DomainCheck out;
    auto flag = [&](bool bad, const std::string& name) {
        if (bad) {
            out.inside = false;
            out.violated.push_back(name);
        }
    };
    const auto a = s.to_array();
    for (std::size_t i = 0; i < a.size(); ++i) {
        flag(!std::isfinite(a[i]) || a[i] < -tol, std::string(kCompartmentNames[i]) + " >= 0");
    }
    const auto b = omega_bounds(p);
    flag(detail::exceeds(s.U + s.I, b.tumour, tol), kBoundTumour);
    flag(detail::exceeds(s.V, b.virus, tol), kBoundVirus);
    flag(detail::exceeds(s.E_V, b.immune_virus, tol), kBoundImmuneVirus);
    flag(detail::exceeds(s.E_T, b.immune_tumour, tol), kBoundImmuneTumour);
    flag(detail::exceeds(s.C, b.drug, tol), kBoundDrug);
    return out;
}

/// Time-dependent version of the region seen from a given start state.
///
/// A start above a bound relaxes towards it no slower than the linear
/// comparison solution, so bound_j(t) = B_j + max(0, x_j(0) - B_j) e^{-r_j t}
/// with r_j the linear decay rate of that compartment. Trajectories from
/// inside the region see the plain bounds.
class AttractingEnvelope {
public:
    AttractingEnvelope(const ModelParameters& p, VariantTag tag, const std::array<double, 6>& start)
        : bounds_(omega_bounds(p, tag)), p_(p), start_(start) {
        tumour_ = std::max(bounds_.tumour, start_[0] + start_[1]);
        // Virus and E_V bounds scale with the tumour envelope.
        bounds_.virus *= tumour_ / p.K;
        bounds_.immune_virus *= tumour_ / p.K;
    }

    /// Bounds the (embedded) state breaks at time t; NaN entries are absent compartments.
    [[nodiscard]] std::vector<BoundBreach> violations(const std::array<double, 6>& x, double t, double tol) const {
        std::vector<BoundBreach> out;
        for (std::size_t i = 0; i < 6; ++i) {
            if (!std::isnan(x[i]) && x[i] < -tol) out.push_back({std::string(kCompartmentNames[i]) + " >= 0", -x[i]});
        }
        auto present = [&](std::size_t i) { return !std::isnan(x[i]); };
        auto env = [&](double bound, std::size_t i, double rate) {
            return bound + std::max(0.0, start_[i] - bound) * std::exp(-rate * t);
        };
        const double tumour = (present(0) ? x[0] : 0.0) + (present(1) ? x[1] : 0.0);
        auto check = [&](double value, double bound, const char* name) {
            if (detail::exceeds(value, bound, tol)) out.push_back({name, value - bound});
        };
        check(tumour, tumour_, kBoundTumour);
        if (present(2)) check(x[2], env(bounds_.virus, 2, p_.gamma), kBoundVirus);
        if (present(3)) check(x[3], env(bounds_.immune_virus, 3, p_.delta_V), kBoundImmuneVirus);
        if (present(4)) check(x[4], env(bounds_.immune_tumour, 4, p_.delta_T), kBoundImmuneTumour);
        if (present(5)) check(x[5], env(bounds_.drug, 5, p_.psi), kBoundDrug);
        return out;
    }

private:
    OmegaBounds bounds_;
    ModelParameters p_;
    std::array<double, 6> start_;
    double tumour_;
};

} // namespace chemoviro
