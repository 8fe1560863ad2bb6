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
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chemoviro/errors.hpp"

namespace chemoviro {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Index of each compartment in the full six-dimensional state.
enum class Compartment : std::size_t { U = 0, I = 1, V = 2, E_V = 3, E_T = 4, C = 5 };

inline constexpr std::array<std::string_view, 6> kCompartmentNames{"U", "I", "V", "E_V", "E_T", "C"};

/// Densities of the six compartments (cells/mm^3, virions/mm^3, mg/l).
/// Also used for time derivatives of the same.
struct SystemState {
    double U = 0.0;
    double I = 0.0;
    double V = 0.0;
    double E_V = 0.0;
    double E_T = 0.0;
    double C = 0.0;

    [[nodiscard]] std::array<double, 6> to_array() const { return {U, I, V, E_V, E_T, C}; }

    [[nodiscard]] static SystemState from_array(std::span<const double, 6> a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5]};
    }

    [[nodiscard]] double operator[](Compartment c) const {
        return const_cast<SystemState&>(*this)[c];
    }

    [[nodiscard]] double& operator[](Compartment c) {
        switch (c) {
        case Compartment::U: return U;
        case Compartment::I: return I;
        case Compartment::V: return V;
        case Compartment::E_V: return E_V;
        case Compartment::E_T: return E_T;
        case Compartment::C: return C;
        }
        return U;
    }

    [[nodiscard]] bool operator==(const SystemState&) const = default;
};

/// Initial state used throughout the simulations: a large untreated
/// population with some infection, virus, immune cells and drug on board.
[[nodiscard]] inline SystemState default_initial_state() {
    return {10000.0, 100.0, 500.0, 100.0, 100.0, 100.0};
}

enum class VariantTag { Full, NoTreatment, ChemoOnly, ViroOnly, ControlReduced };

[[nodiscard]] inline std::string_view to_string(VariantTag tag) {
    switch (tag) {
    case VariantTag::Full: return "full";
    case VariantTag::NoTreatment: return "no-treatment";
    case VariantTag::ChemoOnly: return "chemo-only";
    case VariantTag::ViroOnly: return "viro-only";
    case VariantTag::ControlReduced: return "control";
    }
    return "?";
}

[[nodiscard]] inline std::optional<VariantTag> parse_variant(std::string_view s) {
    for (auto t : {VariantTag::Full, VariantTag::NoTreatment, VariantTag::ChemoOnly, VariantTag::ViroOnly,
                   VariantTag::ControlReduced}) {
        if (to_string(t) == s) return t;
    }
    return std::nullopt;
}

/// Time-dependent dosing pair (u1 virions/day, u2 mg/l/day) on [0, t_end].
struct ControlSignal {
    std::function<double(double)> u1;
    std::function<double(double)> u2;
    double t_end = 0.0;

    [[nodiscard]] static ControlSignal constant(double u1, double u2, double t_end) {
        return {[u1](double) { return u1; }, [u2](double) { return u2; }, t_end};
    }
};

/// Which vector field to integrate. Only ControlReduced carries a signal.
class ModelVariant {
public:
    ModelVariant() = default;

    [[nodiscard]] static ModelVariant full() { return ModelVariant(VariantTag::Full); }
    [[nodiscard]] static ModelVariant no_treatment() { return ModelVariant(VariantTag::NoTreatment); }
    [[nodiscard]] static ModelVariant chemo_only() { return ModelVariant(VariantTag::ChemoOnly); }
    [[nodiscard]] static ModelVariant viro_only() { return ModelVariant(VariantTag::ViroOnly); }

    [[nodiscard]] static ModelVariant control(ControlSignal signal) {
        if (!signal.u1 || !signal.u2) throw PreconditionError("control variant needs both u1 and u2 signals");
        ModelVariant v(VariantTag::ControlReduced);
        v.signal_ = std::move(signal);
        return v;
    }

    /// Non-control variants only; the control variant must be built from a signal.
    [[nodiscard]] static ModelVariant from_tag(VariantTag tag) {
        if (tag == VariantTag::ControlReduced) throw PreconditionError("control variant needs a control signal");
        return ModelVariant(tag);
    }

    [[nodiscard]] VariantTag tag() const noexcept { return tag_; }
    [[nodiscard]] const std::optional<ControlSignal>& signal() const noexcept { return signal_; }

private:
    explicit ModelVariant(VariantTag t) : tag_(t) {}

    VariantTag tag_ = VariantTag::Full;
    std::optional<ControlSignal> signal_;
};

/// Full-state indices of the components carried by each variant, in order.
[[nodiscard]] inline std::span<const std::size_t> variant_components(VariantTag tag) {
    static constexpr std::array<std::size_t, 6> full{0, 1, 2, 3, 4, 5};
    static constexpr std::array<std::size_t, 2> none{0, 4};
    static constexpr std::array<std::size_t, 3> chemo{0, 4, 5};
    static constexpr std::array<std::size_t, 5> viro{0, 1, 2, 3, 4};
    static constexpr std::array<std::size_t, 4> control{0, 1, 2, 5};
    switch (tag) {
    case VariantTag::Full: return full;
    case VariantTag::NoTreatment: return none;
    case VariantTag::ChemoOnly: return chemo;
    case VariantTag::ViroOnly: return viro;
    case VariantTag::ControlReduced: return control;
    }
    return full;
}

[[nodiscard]] inline std::size_t variant_dimension(VariantTag tag) { return variant_components(tag).size(); }

/// Sub-model coordinates of a full state.
[[nodiscard]] inline Vector project(VariantTag tag, const SystemState& s) {
    const auto idx = variant_components(tag);
    const auto a = s.to_array();
    Vector x(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) x(static_cast<Eigen::Index>(k)) = a[idx[k]];
    return x;
}

/// Full state with the sub-model coordinates filled in and `fill` elsewhere.
[[nodiscard]] inline std::array<double, 6> embed(VariantTag tag, const Vector& x, double fill = 0.0) {
    const auto idx = variant_components(tag);
    std::array<double, 6> a;
    a.fill(fill);
    for (std::size_t k = 0; k < idx.size(); ++k) a[idx[k]] = x(static_cast<Eigen::Index>(k));
    return a;
}

} // namespace chemoviro
