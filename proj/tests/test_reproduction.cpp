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
#include <cmath>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "chemoviro/reproduction.hpp"

using namespace chemoviro;

namespace {

ModelParameters random_parameters(std::mt19937& rng) {
    std::uniform_real_distribution<double> f(0.5, 2.0);
    auto p = baseline_parameters();
    for (const char* name : {"alpha", "beta", "delta", "gamma", "b", "psi", "delta_I", "beta_T", "delta_T", "K_u",
                             "K_c", "kappa", "nu_U", "nu_I", "q"}) {
        parameter_ref(p, name) *= f(rng);
    }
    return p;
}

/// rho(F V^-1) for the 2x2 block by hand: F V^-1 = [[x, y], [0, 0]] has spectral radius |x|.
double hand_spectral_radius(const ModelParameters& p, double U, double E_T, double C) {
    const double f = p.beta * U / (p.K_u + U);
    const double v11 = p.delta + p.nu_I * E_T + p.delta_I * C / (p.K_c + C);
    const double v21 = -p.b * p.delta, v22 = p.gamma;
    // V^-1 = [[1/v11, 0], [-v21/(v11 v22), 1/v22]]; (F V^-1)(0,0) = f * (-v21/(v11 v22)).
    return std::abs(f * (-v21 / (v11 * v22)));
}

std::map<std::string, double> closed_form_elasticities(const ModelParameters& p) {
    const double K = p.K, Kc = p.K_c, Ku = p.K_u, a = p.alpha, psi = p.psi, q = p.q, dU = p.delta_U, dI = p.delta_I,
                 d = p.delta, g = p.gamma, b = p.b, be = p.beta;
    const double X = K * Kc * a * psi + Kc * Ku * a * psi + K * a * q + Ku * a * q - K * dU * q;
    const double Y = Kc * d * psi + d * q + dI * q;
    const double Z = Kc * a * psi + a * q - dU * q;
    const double W = Kc * psi + q;
    const double G1 = Z * W * W * K * b * be * d / (X * Y * Y * g) - Z * W * K * b * be / (X * Y * g);
    const double G4 = K * Kc * Kc * a * a * dI * psi * psi + Kc * Kc * Ku * a * a * dI * psi * psi +
                      Kc * Kc * Ku * a * d * dU * psi * psi + 2 * K * Kc * a * a * dI * psi * q +
                      2 * Kc * Ku * a * a * dI * psi * q + 2 * Kc * Ku * a * d * dU * psi * q -
                      2 * K * Kc * a * dI * dU * psi * q + K * a * a * dI * q * q + Ku * a * a * dI * q * q +
                      Ku * a * d * dU * q * q - 2 * K * a * dI * dU * q * q + K * dI * dU * dU * q * q;
    return {
        {"delta", -G1 * X * Y * g / (Z * W * K * b * be)},
        {"delta_I", -dI * q / Y},
        {"K_u", -W * Ku * a / X},
        {"psi", G4 * Kc * psi * q / (X * Z * Y * W)},
        {"q", -G4 * Kc * psi * q / (X * Z * Y * W)},
    };
}

const SensitivityReport& row(const std::vector<SensitivityReport>& rows, const std::string& name) {
    for (const auto& r : rows) {
        if (r.parameter == name) return r;
    }
    throw std::runtime_error("missing row " + name);
}

} // namespace

TEST(R0, ClosedFormAgreesWithNextGenerationMatrix) {
    const auto r = r0(baseline_parameters());
    EXPECT_GT(r.value, 1.0);
    EXPECT_LT(r.spectral_radius_check, 1e-10 * r.value);
    EXPECT_FALSE(r.at_tumour_free);
}

TEST(R0, SpectralRadiusMatchesHandFormulaOnRandomDraws) {
    std::mt19937 rng(42);
    for (int n = 0; n < 100; ++n) {
        const auto p = random_parameters(rng);
        const auto r = r0(p);
        EXPECT_NEAR(r.spectral_radius, r.value, 1e-10 * r.value);
        EXPECT_NEAR(hand_spectral_radius(p, r.U_star, r.E_T_star, r.C_star), r.value, 1e-10 * r.value);
    }
}

TEST(R0, NextGenerationStructure) {
    const auto p = baseline_parameters();
    const auto [F, V] = next_generation_matrices(p, SystemState{5000, 0, 0, 0, 10, 1});
    EXPECT_EQ(F(0, 0), 0.0);
    EXPECT_EQ(F(1, 0), 0.0);
    EXPECT_EQ(F(1, 1), 0.0);
    EXPECT_EQ(V(0, 1), 0.0);
    const auto ev = eigenvalues(V);
    EXPECT_NEAR(ev[0].real(), std::max(V(0, 0), V(1, 1)), 1e-12);
    EXPECT_NEAR(ev[1].real(), std::min(V(0, 0), V(1, 1)), 1e-12);
}

TEST(R0, ZeroTumourGivesZeroSpectralRadius) {
    const auto [F, V] = next_generation_matrices(baseline_parameters(), SystemState{});
    EXPECT_TRUE(F.isZero());
    EXPECT_EQ(spectral_radius(F * V.inverse()), 0.0);
}

TEST(R0, InfectedPointRejected) {
    EXPECT_THROW((void)next_generation_matrices(baseline_parameters(), SystemState{1, 1, 0, 0, 0, 0}),
                 PreconditionError);
}

TEST(R0, HomogeneousInBurstAndClearance) {
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> s(0.1, 10.0);
    const auto p = baseline_parameters();
    const double R = r0(p).value;
    for (int n = 0; n < 50; ++n) {
        const double k = s(rng);
        auto q = p;
        q.b *= k;
        q.gamma *= k;
        EXPECT_NEAR(r0(q).value, R, 1e-12 * R);
    }
}

TEST(R0, FallbackAtTumourFreePoint) {
    auto p = baseline_parameters();
    p.q = 1e4;
    EXPECT_THROW((void)r0(p), PreconditionError);
    const auto r = r0(p, true);
    EXPECT_TRUE(r.at_tumour_free);
    EXPECT_EQ(r.value, 0.0);
}

TEST(R0, CalibratedBetaHitsTarget) {
    auto p = high_growth_parameters();
    EXPECT_NEAR(r0(p).value, 51.0476, 1e-9);
    p.beta = calibrate_beta(p, 20.0);
    EXPECT_NEAR(r0(p).value, 20.0, 1e-9);
}

TEST(DoseCurve, SinglePoint) {
    const auto c = r0_vs_dose_curve(baseline_parameters(), {5.0});
    ASSERT_EQ(c.points.size(), 1u);
    EXPECT_EQ(c.points[0].second, r0(baseline_parameters()).value);
}

TEST(DoseCurve, DoublingClearanceHalvesEveryEntry) {
    const std::vector<double> grid{5, 10, 15, 35, 50, 100};
    const auto p = baseline_parameters();
    const auto a = r0_vs_dose_curve(p, grid);
    const auto b = r0_vs_dose_curve(with_parameter(p, "gamma", 2 * p.gamma), grid);
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(b.points[i].second, a.points[i].second / 2, 1e-12 * a.points[i].second);
    EXPECT_TRUE(a.strictly_decreasing);
}

TEST(Elasticity, ExactUnitElasticitiesAtBaseline) {
    const auto rows = r0_elasticities(baseline_parameters(), kR0Parameters);
    EXPECT_NEAR(row(rows, "b").e, 1.0, 1e-6);
    EXPECT_NEAR(row(rows, "beta").e, 1.0, 1e-6);
    EXPECT_NEAR(row(rows, "gamma").e, -1.0, 1e-6);
    for (const char* n : {"b", "beta", "gamma"}) {
        const auto& r = row(rows, n);
        ASSERT_TRUE(r.analytic_S.has_value());
        EXPECT_NEAR(r.S, *r.analytic_S, 1e-6 * std::abs(*r.analytic_S));
    }
}

TEST(Elasticity, ExactUnitElasticitiesOnRandomDraws) {
    std::mt19937 rng(77);
    for (int n = 0; n < 50; ++n) {
        const auto rows = r0_elasticities(random_parameters(rng), {"b", "beta", "gamma"});
        EXPECT_NEAR(rows[0].e, 1.0, 1e-6);
        EXPECT_NEAR(rows[1].e, 1.0, 1e-6);
        EXPECT_NEAR(rows[2].e, -1.0, 1e-6);
    }
}

TEST(Elasticity, SignPatternAtBaseline) {
    const auto rows = r0_elasticities(baseline_parameters(), kR0Parameters);
    EXPECT_GT(row(rows, "delta").e, 0.0);
    EXPECT_LT(row(rows, "delta_I").e, 0.0);
    EXPECT_LT(row(rows, "q").e, 0.0);
    EXPECT_LT(row(rows, "K_u").e, 0.0);
    for (const auto& r : rows) EXPECT_TRUE(r.ok) << r.parameter;
}

TEST(Elasticity, MatchesClosedFormsWithoutImmuneKilling) {
    auto p = baseline_parameters();
    p.nu_U = 0.0;
    p.nu_I = 0.0;
    const auto oracle = closed_form_elasticities(p);
    std::vector<std::string> names;
    for (const auto& [k, v] : oracle) names.push_back(k);
    const auto rows = r0_elasticities(p, names);
    for (const auto& r : rows) {
        const double e = oracle.at(r.parameter);
        EXPECT_NEAR(r.e, e, 1e-4 * std::abs(e)) << r.parameter;
    }
    EXPECT_NEAR(row(rows, "delta").e, -row(rows, "delta_I").e, 1e-4 * std::abs(row(rows, "delta").e));
    EXPECT_NEAR(row(rows, "psi").e, -row(rows, "q").e, 1e-4 * std::abs(row(rows, "q").e));
}

TEST(Elasticity, LostEquilibriumIsReportedPerParameter) {
    auto p = baseline_parameters();
    // Put q just below the threshold so q + h removes the endemic state.
    p.q = *chemo_dose_threshold(p).q_star * (1.0 - 1e-7);
    const auto rows = r0_elasticities(p, {"q", "b"});
    EXPECT_FALSE(rows[0].ok);
    EXPECT_FALSE(rows[0].note.empty());
    EXPECT_TRUE(rows[1].ok);
}

TEST(EndemicSensitivity, AbsentParameterGivesZero) {
    const auto r = endemic_sensitivity(high_growth_parameters(), "A_1");
    for (double g : r.indices) EXPECT_EQ(g, 0.0);
    EXPECT_EQ(r.combined, 0.0);
}

TEST(EndemicSensitivity, CombinedIndexReconstructs) {
    const auto r = endemic_sensitivity(high_growth_parameters(), "q");
    const double U = r.equilibrium(0), I = r.equilibrium(1);
    EXPECT_DOUBLE_EQ(r.combined, U / (U + I) * r.indices[0] + I / (U + I) * r.indices[1]);
    EXPECT_LT(r.condition, kMaxJacobianCondition);
}

TEST(EndemicSensitivity, LinearSolveAgreesWithReSolve) {
    for (const char* name : {"q", "alpha", "delta_U", "b"}) {
        const auto r = endemic_sensitivity(high_growth_parameters(), name, default_initial_state(), true);
        ASSERT_TRUE(r.direct_combined.has_value());
        EXPECT_NEAR(r.combined, *r.direct_combined, 0.01 * std::abs(*r.direct_combined)) << name;
    }
}

TEST(EndemicSensitivity, DrugLowersTotalTumour) {
    for (double q : {5.0, 50.0, 100.0}) {
        const auto r = endemic_sensitivity(with_parameter(high_growth_parameters(), "q", q), "q");
        EXPECT_LT(r.combined, 0.0) << q;
    }
}
