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
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "chemoviro/dynamics.hpp"
#include "chemoviro/equilibria.hpp"
#include "chemoviro/optimal_control.hpp"
#include "chemoviro/reproduction.hpp"

namespace chemoviro::io {

/// 17 significant digits; NaN (absent compartment) prints as an empty field.
[[nodiscard]] inline std::string fmt(double v) {
    if (std::isnan(v)) return {};
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_trajectory(std::ostream& os, const Trajectory& traj, std::size_t every = 1) {
    os << "t,U,I,V,E_V,E_T,C\n";
    if (every == 0) every = 1;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (k % every != 0 && k + 1 != traj.size()) continue;
        os << fmt(traj.times[k]);
        for (double x : traj.full_state(k)) os << ',' << fmt(x);
        os << '\n';
    }
}

inline void write_equilibria(std::ostream& os, const std::vector<EquilibriumReport>& reports) {
    os << "variant,label,kind,U,I,V,E_V,E_T,C,max_real_eig,verdict,routh_hurwitz_stable,hurwitz_stable,residual\n";
    for (const auto& r : reports) {
        const auto x = embed(r.variant, r.point, std::nan(""));
        os << to_string(r.variant) << ',' << r.label << ',' << to_string(r.kind);
        for (double v : x) os << ',' << fmt(v);
        os << ',' << fmt(r.eigenvalues.front().real()) << ',' << to_string(r.verdict) << ','
           << (r.routh_hurwitz_stable ? (*r.routh_hurwitz_stable ? "true" : "false") : "") << ','
           << (r.hurwitz_stable ? "true" : "false") << ',' << fmt(r.residual) << '\n';
    }
}

/// Long form: one row per (label, quantity) for eigenvalues and Routh-Hurwitz coefficients.
inline void write_equilibrium_details(std::ostream& os, const std::vector<EquilibriumReport>& reports) {
    os << "label,quantity,real,imag\n";
    for (const auto& r : reports) {
        for (std::size_t i = 0; i < r.eigenvalues.size(); ++i) {
            os << r.label << ",eigenvalue_" << i + 1 << ',' << fmt(r.eigenvalues[i].real()) << ','
               << fmt(r.eigenvalues[i].imag()) << '\n';
        }
        for (const auto& nv : r.routh_hurwitz) os << r.label << ',' << nv.name << ',' << fmt(nv.value) << ",0\n";
    }
}

inline void write_sensitivity(std::ostream& os, const std::vector<SensitivityReport>& rows) {
    os << "parameter,S_p,e_p,method\n";
    for (const auto& r : rows) {
        if (r.ok) {
            os << r.parameter << ',' << fmt(r.S) << ',' << fmt(r.e) << ',' << to_string(r.method) << '\n';
        } else {
            os << r.parameter << ",,,failed\n";
        }
    }
}

inline void write_r0_curve(std::ostream& os, const DoseCurve& curve) {
    os << "q,R0\n";
    for (const auto& [q, r] : curve.points) os << fmt(q) << ',' << fmt(r) << '\n';
}

inline void write_r0_report(std::ostream& os, const R0Report& r) {
    os << "quantity,value\n"
       << "R0," << fmt(r.value) << '\n'
       << "spectral_radius," << fmt(r.spectral_radius) << '\n'
       << "U_star," << fmt(r.U_star) << '\n'
       << "E_T_star," << fmt(r.E_T_star) << '\n'
       << "C_star," << fmt(r.C_star) << '\n'
       << "at_tumour_free," << (r.at_tumour_free ? 1 : 0) << '\n';
}

inline void write_endemic_sensitivity_header(std::ostream& os) {
    os << "q,parameter,Gamma_U,Gamma_I,Gamma_V,Gamma_E_V,Gamma_E_T,Gamma_C,Gamma_U_plus_I,direct_U_plus_I,condition\n";
}

inline void write_endemic_sensitivity_row(std::ostream& os, double q, const EndemicSensitivityReport& r) {
    os << fmt(q) << ',' << r.parameter;
    for (double g : r.indices) os << ',' << fmt(g);
    os << ',' << fmt(r.combined) << ',' << (r.direct_combined ? fmt(*r.direct_combined) : std::string{}) << ','
       << fmt(r.condition) << '\n';
}

inline void write_oc_solution(std::ostream& os, const OCSolution& s) {
    os << "t,U,I,V,C,lambda1,lambda2,lambda3,lambda4,u1,u2\n";
    for (std::size_t k = 0; k < s.controls.size(); ++k) {
        os << fmt(s.controls.mesh[k]);
        for (double x : s.states[k]) os << ',' << fmt(x);
        for (double l : s.adjoint.lambda[k]) os << ',' << fmt(l);
        os << ',' << fmt(s.controls.u1[k]) << ',' << fmt(s.controls.u2[k]) << '\n';
    }
}

inline void write_convergence_log(std::ostream& os, const OCSolution& s) {
    os << "iter,delta_u,J\n";
    for (const auto& h : s.history) os << h.iter << ',' << fmt(h.delta_u) << ',' << fmt(h.J) << '\n';
}

} // namespace chemoviro::io
