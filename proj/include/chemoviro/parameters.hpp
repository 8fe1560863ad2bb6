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

#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "chemoviro/errors.hpp"

namespace chemoviro {

/// Rates and constants of the tumour / virus / immune / drug model, plus the
/// dosing bounds and cost weights of the optimal-control problem.
///
/// Units follow the model tables verbatim (cells/mm^3, virions/mm^3, mg/l, days);
/// nothing is nondimensionalised internally. Defaults are the baseline set.
struct ModelParameters {
    double K = 1.0e6;       ///< tumour carrying capacity
    double alpha = 0.206;   ///< tumour growth rate
    double beta = 0.1;      ///< infection rate (baseline range 0.001-0.1; upper end used)
    double delta = 0.5115;  ///< infected-cell death rate
    double gamma = 0.01;    ///< virus decay rate
    double b = 500.0;       ///< burst size (baseline range 0-1000; midpoint used)
    double psi = 4.17;      ///< drug decay rate
    double delta_U = 50.0;  ///< drug lysis rate of U
    double delta_I = 60.0;  ///< drug lysis rate of I
    double phi = 0.7;       ///< virus-specific immune production
    double beta_T = 0.5;    ///< tumour-specific immune production
    double delta_V = 0.01;  ///< E_V decay rate
    double delta_T = 0.01;  ///< E_T decay rate
    double K_u = 1.0e5;     ///< Michaelis-Menten constant, infection
    double K_c = 1.0e5;     ///< Michaelis-Menten constant, drug kill
    double kappa = 1.0e5;   ///< Michaelis-Menten constant, immune recruitment
    double nu_U = 0.08;     ///< lysis of U by E_T
    double nu_I = 0.1;      ///< lysis of I by E_T
    double tau = 0.2;       ///< lysis of I by E_V
    double q = 5.0;         ///< constant drug infusion

    // Optimal-control block. Weights, bounds and horizon are not published
    // alongside the model; these are inferred (see README).
    double A_1 = 0.02;
    double A_2 = 2.0;
    double u1_MTD = 1000.0;
    double u2_MTD = 100.0;
    double T_f = 30.0;

    /// Throws InvalidParameters naming the first violated invariant.
    void validate() const;

    [[nodiscard]] bool operator==(const ModelParameters&) const = default;
};

struct ParameterSymbol {
    std::string_view name;
    double ModelParameters::*member;
    bool may_be_zero;
};

/// ASCII symbol names accepted by configs, `--set` overrides and sensitivity requests.
inline constexpr std::array<ParameterSymbol, 25> kParameterSymbols{{
    {"K", &ModelParameters::K, false},
    {"alpha", &ModelParameters::alpha, false},
    {"beta", &ModelParameters::beta, true},
    {"delta", &ModelParameters::delta, false},
    {"gamma", &ModelParameters::gamma, false},
    {"b", &ModelParameters::b, true},
    {"psi", &ModelParameters::psi, false},
    {"delta_U", &ModelParameters::delta_U, false},
    {"delta_I", &ModelParameters::delta_I, false},
    {"phi", &ModelParameters::phi, false},
    {"beta_T", &ModelParameters::beta_T, false},
    {"delta_V", &ModelParameters::delta_V, false},
    {"delta_T", &ModelParameters::delta_T, false},
    {"K_u", &ModelParameters::K_u, false},
    {"K_c", &ModelParameters::K_c, false},
    {"kappa", &ModelParameters::kappa, false},
    {"nu_U", &ModelParameters::nu_U, true},
    {"nu_I", &ModelParameters::nu_I, true},
    {"tau", &ModelParameters::tau, false},
    {"q", &ModelParameters::q, true},
    {"A_1", &ModelParameters::A_1, true},
    {"A_2", &ModelParameters::A_2, true},
    {"u1_MTD", &ModelParameters::u1_MTD, true},
    {"u2_MTD", &ModelParameters::u2_MTD, true},
    {"T_f", &ModelParameters::T_f, false},
}};

[[nodiscard]] inline std::optional<ParameterSymbol> find_symbol(std::string_view name) {
    for (const auto& s : kParameterSymbols) {
        if (s.name == name) return s;
    }
    return std::nullopt;
}

/// Reference to the named field; throws InvalidParameters for unknown names.
[[nodiscard]] inline double& parameter_ref(ModelParameters& p, std::string_view name) {
    auto s = find_symbol(name);
    if (!s) throw InvalidParameters("unknown parameter symbol '" + std::string(name) + "'");
    return p.*(s->member);
}

[[nodiscard]] inline double parameter_value(const ModelParameters& p, std::string_view name) {
    auto s = find_symbol(name);
    if (!s) throw InvalidParameters("unknown parameter symbol '" + std::string(name) + "'");
    return p.*(s->member);
}

[[nodiscard]] inline ModelParameters with_parameter(ModelParameters p, std::string_view name, double value) {
    parameter_ref(p, name) = value;
    return p;
}

inline void ModelParameters::validate() const {
    for (const auto& s : kParameterSymbols) {
        const double v = this->*(s.member);
        if (!std::isfinite(v)) {
            throw InvalidParameters("parameter " + std::string(s.name) + " is not finite");
        }
        if (s.may_be_zero ? v < 0.0 : v <= 0.0) {
            std::ostringstream os;
            os << "parameter " << s.name << " = " << v << " must be "
               << (s.may_be_zero ? ">= 0" : "> 0");
            throw InvalidParameters(os.str());
        }
    }
}

/// Baseline parameter set.
[[nodiscard]] inline ModelParameters baseline_parameters() { return ModelParameters{}; }

/// Infection rate that puts R0 at 51.0476 for the high-growth scenario below
/// (q = 5). Calibrated, not published: the scenario fixes alpha and b only.
inline constexpr double kCalibratedBetaHighGrowth = 0.15222854712070413;

/// High tumour growth / moderate burst scenario used for the endemic
/// sensitivity study: alpha = 0.8, b = 50, beta calibrated.
[[nodiscard]] inline ModelParameters high_growth_parameters() {
    ModelParameters p;
    p.alpha = 0.8;
    p.b = 50.0;
    p.beta = kCalibratedBetaHighGrowth;
    return p;
}

} // namespace chemoviro
