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
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "chemoviro/chemoviro.hpp"
#include "chemoviro/io/config.hpp"
#include "chemoviro/io/csv.hpp"
#include "chemoviro/io/svg_plot.hpp"

namespace chemoviro::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

inline const std::vector<std::string> kSubcommands{"simulate",   "equilibria",          "stability", "r0",
                                                   "elasticity", "endemic-sensitivity", "optimize",  "sweep"};

struct RunRequest {
    std::string subcommand;
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::string> out_dir;  ///< falls back to CHEMOVIRO_OUT, then [output] dir, then ./chemoviro-out
    bool plots = false;
    std::optional<unsigned> workers;
};

/// Raised inside a subcommand when it finished its outputs but must report a numerical failure.
class NumericalFailure : public Error {
public:
    NumericalFailure(const std::string& what, nlohmann::json details) : Error(what), details_(std::move(details)) {}

    [[nodiscard]] const nlohmann::json& details() const noexcept { return details_; }

private:
    nlohmann::json details_;
};

namespace detail {

namespace fs = std::filesystem;

struct Context {
    io::ScenarioConfig cfg;
    fs::path out;
    bool plots = false;
    unsigned workers = 1;
    std::ostream& log;
};

inline std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write '" + path.string() + "'");
    return os;
}

inline io::Series series_of(std::string label, const std::vector<double>& x, const std::vector<double>& y) {
    return {std::move(label), x, y};
}

inline void cmd_simulate(Context& c) {
    const auto& s = c.cfg.simulate;
    IntegrationOptions opt;
    opt.omega_tol = s.omega_tol;
    const auto traj = integrate_rk4(ModelVariant::from_tag(s.variant), c.cfg.params, c.cfg.initial, 0.0, s.t_end,
                                    s.dt, opt);
    {
        auto os = open_out(c.out / "trajectory.csv");
        io::write_trajectory(os, traj, static_cast<std::size_t>(s.record_every));
    }
    {
        auto os = open_out(c.out / "violations.csv");
        os << "time,bound,excess\n";
        for (const auto& v : traj.violations) os << io::fmt(v.time) << ',' << v.bound << ',' << io::fmt(v.excess) << '\n';
    }
    for (const auto& b : traj.initial_outside) c.log << "warning: initial state outside region bound " << b << '\n';
    const auto last = traj.full_state(traj.size() - 1);
    c.log << "simulate " << to_string(s.variant) << ": t = " << traj.times.back() << ", U = " << last[0]
          << ", region violations = " << traj.violations.size() << '\n';
    if (c.plots) {
        std::vector<io::Series> series;
        const auto comps = variant_components(s.variant);
        for (std::size_t i : comps) {
            std::vector<double> x, y;
            for (std::size_t k = 0; k < traj.size(); k += static_cast<std::size_t>(s.record_every)) {
                x.push_back(traj.times[k]);
                y.push_back(traj.full_state(k)[i]);
            }
            series.push_back(series_of(std::string(kCompartmentNames[i]), x, y));
        }
        io::emit_plot(series, {"Trajectory (" + std::string(to_string(s.variant)) + ")", "time (days)",
                               "density (cells or virions per mm^3, drug mg/l)", true},
                      (c.out / "trajectory.svg").string());
    }
}

inline void cmd_equilibria(Context& c) {
    std::string note;
    const auto reports = equilibria_of(c.cfg.params, c.cfg.equilibria.variant, c.cfg.initial, &note);
    {
        auto os = open_out(c.out / "equilibria.csv");
        io::write_equilibria(os, reports);
    }
    {
        auto os = open_out(c.out / "equilibria_details.csv");
        io::write_equilibrium_details(os, reports);
    }
    for (const auto& r : reports) c.log << r.label << ": " << to_string(r.kind) << ", " << to_string(r.verdict) << '\n';
    if (!note.empty()) c.log << "note: " << note << '\n';
}

inline void cmd_stability(Context& c) {
    const auto& s = c.cfg.stability;
    const bool mark = s.variant == VariantTag::ChemoOnly && s.parameter == "q";
    std::optional<double> q_star;
    if (mark) q_star = chemo_dose_threshold(c.cfg.params).q_star;
    auto os = open_out(c.out / "stability.csv");
    os << s.parameter << ",label,kind,max_real_eig,verdict,routh_hurwitz_stable,hurwitz_stable,threshold\n";
    for (double v : s.grid) {
        const auto p = with_parameter(c.cfg.params, s.parameter, v);
        for (const auto& r : equilibria_of(p, s.variant, c.cfg.initial)) {
            std::string side;
            if (q_star) side = v > *q_star ? "above_q_star" : (v < *q_star ? "below_q_star" : "at_q_star");
            os << io::fmt(v) << ',' << r.label << ',' << to_string(r.kind) << ',' << io::fmt(r.eigenvalues.front().real())
               << ',' << to_string(r.verdict) << ','
               << (r.routh_hurwitz_stable ? (*r.routh_hurwitz_stable ? "true" : "false") : "") << ','
               << (r.hurwitz_stable ? "true" : "false") << ',' << side << '\n';
        }
    }
    if (mark) {
        const auto th = chemo_dose_threshold(c.cfg.params);
        auto ts = open_out(c.out / "threshold.csv");
        ts << "quantity,value\nq_star," << (th.q_star ? io::fmt(*th.q_star) : std::string{}) << "\nattainable,"
           << (th.attainable ? "true" : "false") << '\n';
        if (th.q_star) c.log << "dose threshold q* = " << *th.q_star << (th.attainable ? "" : " (above u2_MTD)") << '\n';
    }
}

inline void cmd_r0(Context& c) {
    const auto rep = r0(c.cfg.params, true);
    {
        auto os = open_out(c.out / "r0.csv");
        io::write_r0_report(os, rep);
    }
    const auto curve = r0_vs_dose_curve(c.cfg.params, c.cfg.r0.q_grid);
    {
        auto os = open_out(c.out / "r0_curve.csv");
        io::write_r0_curve(os, curve);
    }
    c.log << "R0 = " << rep.value << "; dose curve strictly decreasing: " << (curve.strictly_decreasing ? "yes" : "no")
          << '\n';
    if (c.plots) {
        std::vector<double> x, y;
        for (const auto& [q, r] : curve.points) {
            x.push_back(q);
            y.push_back(r);
        }
        io::emit_plot({series_of("R0", x, y)}, {"R0 against drug infusion", "q (mg/l/day)", "R0 (dimensionless)", false},
                      (c.out / "r0_curve.svg").string());
    }
}

inline void cmd_elasticity(Context& c) {
    const auto rows = r0_elasticities(c.cfg.params, c.cfg.elasticity.parameters);
    auto os = open_out(c.out / "elasticity.csv");
    io::write_sensitivity(os, rows);
    for (const auto& r : rows) {
        if (!r.ok) c.log << "warning: " << r.parameter << ": " << r.note << '\n';
    }
}

inline void cmd_endemic(Context& c) {
    const auto& s = c.cfg.endemic;
    std::vector<double> grid = s.q_grid.empty() ? std::vector<double>{c.cfg.params.q} : s.q_grid;
    auto os = open_out(c.out / "endemic_sensitivity.csv");
    io::write_endemic_sensitivity_header(os);
    nlohmann::json failures = nlohmann::json::array();
    std::vector<double> xq, yg;
    for (double q : grid) {
        const auto p = with_parameter(c.cfg.params, "q", q);
        for (const auto& name : s.parameters) {
            try {
                const auto r = endemic_sensitivity(p, name, c.cfg.initial, true);
                io::write_endemic_sensitivity_row(os, q, r);
                if (name == "q") {
                    xq.push_back(q);
                    yg.push_back(r.combined);
                }
            } catch (const Error& e) {
                failures.push_back({{"q", q}, {"parameter", name}, {"message", e.what()}});
            }
        }
    }
    if (c.plots && xq.size() > 1) {
        io::emit_plot({series_of("Gamma_q (U+I)", xq, yg)},
                      {"Total tumour sensitivity to q", "q (mg/l/day)", "sensitivity index (dimensionless)", false},
                      (c.out / "endemic_sensitivity.svg").string());
    }
    if (!failures.empty()) {
        throw NumericalFailure(std::to_string(failures.size()) + " sensitivity evaluations failed",
                               {{"failures", failures}});
    }
}

inline void cmd_optimize(Context& c) {
    const auto sol = forward_backward_sweep(c.cfg.params, control_initial_state(c.cfg.initial), c.cfg.optimize);
    {
        auto os = open_out(c.out / "oc_solution.csv");
        io::write_oc_solution(os, sol);
    }
    {
        auto os = open_out(c.out / "oc_convergence.csv");
        io::write_convergence_log(os, sol);
    }
    c.log << "optimize: iterations = " << sol.iterations << ", converged = " << (sol.converged ? "yes" : "no")
          << ", J = " << sol.J << '\n';
    if (c.plots) {
        const auto& t = sol.controls.mesh;
        std::vector<double> u1(t.size()), u2(t.size()), tot(t.size()), U(t.size()), I(t.size());
        const auto& p = c.cfg.params;
        for (std::size_t k = 0; k < t.size(); ++k) {
            u1[k] = p.u1_MTD > 0.0 ? sol.controls.u1[k] / p.u1_MTD : 0.0;
            u2[k] = p.u2_MTD > 0.0 ? sol.controls.u2[k] / p.u2_MTD : 0.0;
            U[k] = sol.states[k][0];
            I[k] = sol.states[k][1];
            tot[k] = U[k] + I[k];
        }
        io::emit_plot({series_of("u1 / u1_MTD", t, u1), series_of("u2 / u2_MTD", t, u2)},
                      {"Optimal doses", "time (days)", "dose as fraction of MTD", false},
                      (c.out / "controls.svg").string());
        io::emit_plot({series_of("U + I", t, tot), series_of("U", t, U), series_of("I", t, I)},
                      {"Tumour under optimal treatment", "time (days)", "cells per mm^3", true},
                      (c.out / "tumour.svg").string());
    }
    if (!sol.converged) {
        throw NumericalFailure("forward-backward sweep did not converge",
                               {{"iterations", sol.iterations},
                                {"last_delta_u", sol.history.empty() ? 0.0 : sol.history.back().delta_u}});
    }
}

struct CellResult {
    bool ok = false;
    std::vector<double> values;
    std::string verdict;
    std::string error;
};

inline std::vector<std::string> metric_columns(const std::string& metric) {
    if (metric == "r0") return {"R0", "U_star", "E_T_star", "C_star"};
    if (metric == "simulate") return {"U", "I", "V", "E_V", "E_T", "C", "omega_violations"};
    return {"U", "I", "V", "E_V", "E_T", "C", "max_real_eig", "verdict"};
}

inline CellResult evaluate_cell(const io::ScenarioConfig& cfg, const ModelParameters& p) {
    CellResult r;
    try {
        p.validate();
        if (cfg.sweep.metric == "r0") {
            const auto rep = r0(p, true);
            r.values = {rep.value, rep.U_star, rep.E_T_star, rep.C_star};
        } else if (cfg.sweep.metric == "simulate") {
            IntegrationOptions opt;
            opt.omega_tol = cfg.simulate.omega_tol;
            const auto traj = integrate_rk4(ModelVariant::from_tag(cfg.simulate.variant), p, cfg.initial, 0.0,
                                            cfg.simulate.t_end, cfg.simulate.dt, opt);
            const auto last = traj.full_state(traj.size() - 1);
            r.values.assign(last.begin(), last.end());
            r.values.push_back(static_cast<double>(traj.violations.size()));
        } else {
            const auto e = full_endemic_equilibrium(p, cfg.initial);
            for (Eigen::Index i = 0; i < e.point.size(); ++i) r.values.push_back(e.point(i));
            r.values.push_back(e.eigenvalues.front().real());
            r.verdict = to_string(e.verdict);
        }
        r.ok = true;
    } catch (const std::exception& e) {
        r.error = e.what();
    }
    return r;
}

inline std::string cell_row(const std::vector<double>& axis_values, const CellResult& r) {
    std::ostringstream os;
    for (std::size_t i = 0; i < axis_values.size(); ++i) os << (i ? "," : "") << io::fmt(axis_values[i]);
    for (double v : r.values) os << ',' << io::fmt(v);
    if (!r.verdict.empty()) os << ',' << r.verdict;
    return os.str();
}

inline void cmd_sweep(Context& c) {
    const auto& axes = c.cfg.sweep.axes;
    if (axes.empty()) throw ConfigError("[sweep-axes] must declare at least one parameter grid");
    std::size_t cells = 1;
    for (const auto& a : axes) cells *= a.values.size();

    std::vector<std::vector<double>> coords(cells);
    for (std::size_t k = 0; k < cells; ++k) {
        std::size_t rem = k;
        coords[k].resize(axes.size());
        for (std::size_t j = axes.size(); j-- > 0;) {
            coords[k][j] = axes[j].values[rem % axes[j].values.size()];
            rem /= axes[j].values.size();
        }
    }

    std::string header;
    for (std::size_t j = 0; j < axes.size(); ++j) header += (j ? "," : "") + axes[j].parameter;
    for (const auto& col : metric_columns(c.cfg.sweep.metric)) header += "," + col;

    const fs::path cell_dir = c.out / "cells";
    fs::create_directories(cell_dir);

    std::vector<CellResult> results(cells);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t k = next++; k < cells; k = next++) {
            ModelParameters p = c.cfg.params;
            for (std::size_t j = 0; j < axes.size(); ++j) parameter_ref(p, axes[j].parameter) = coords[k][j];
            results[k] = evaluate_cell(c.cfg, p);
            if (results[k].ok) {
                char name[32];
                std::snprintf(name, sizeof name, "cell_%05zu.csv", k);
                std::ofstream os(cell_dir / name, std::ios::binary);
                os << header << '\n' << cell_row(coords[k], results[k]) << '\n';
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(c.workers, static_cast<unsigned>(cells)));
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    auto os = open_out(c.out / "sweep.csv");
    os << header << '\n';
    auto fail = open_out(c.out / "failures.csv");
    fail << "cell";
    for (const auto& a : axes) fail << ',' << a.parameter;
    fail << ",error\n";
    std::size_t failed = 0;
    for (std::size_t k = 0; k < cells; ++k) {
        if (results[k].ok) {
            os << cell_row(coords[k], results[k]) << '\n';
        } else {
            ++failed;
            fail << k;
            for (double v : coords[k]) fail << ',' << io::fmt(v);
            std::string msg = results[k].error;
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            fail << ',' << msg << '\n';
        }
    }
    c.log << "sweep: " << cells << " cells, " << failed << " failed, " << n << " workers\n";
    if (failed > 0) {
        throw NumericalFailure(std::to_string(failed) + " of " + std::to_string(cells) + " sweep cells failed",
                               {{"failed_cells", failed}, {"manifest", "failures.csv"}});
    }
}

inline fs::path resolve_out(const RunRequest& req, const io::ScenarioConfig& cfg) {
    if (req.out_dir && !req.out_dir->empty()) return *req.out_dir;
    if (const char* env = std::getenv("CHEMOVIRO_OUT"); env && *env) return env;
    if (!cfg.out_dir.empty()) return cfg.out_dir;
    return "chemoviro-out";
}

inline void write_error_file(const fs::path& out, const std::string& subcommand, const std::string& kind,
                             const std::string& message, nlohmann::json details = nlohmann::json::object()) {
    nlohmann::json j{{"subcommand", subcommand}, {"error", kind}, {"message", message}, {"details", std::move(details)}};
    std::ofstream os(out / "errors.json", std::ios::binary);
    os << j.dump(2) << '\n';
}

} // namespace detail

/// Executes one subcommand and returns the process exit code.
inline int run(const RunRequest& req, std::ostream& log, std::ostream& err) {
    namespace fs = std::filesystem;
    if (std::find(kSubcommands.begin(), kSubcommands.end(), req.subcommand) == kSubcommands.end()) {
        err << "error: unknown subcommand '" << req.subcommand << "'\n";
        return kExitConfig;
    }
    io::ScenarioConfig cfg;
    fs::path out;
    try {
        cfg = io::load_config(req.config_path, req.overrides);
        out = detail::resolve_out(req, cfg);
        fs::create_directories(out);
        fs::remove(out / "errors.json");
    } catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const fs::filesystem_error& e) {
        err << "config error: output directory: " << e.what() << '\n';
        return kExitConfig;
    }

    detail::Context ctx{cfg, out, req.plots || cfg.plots,
                        req.workers.value_or(std::max(1u, std::thread::hardware_concurrency())), log};
    const auto& sub = req.subcommand;
    try {
        if (sub == "simulate") {
            detail::cmd_simulate(ctx);
        } else if (sub == "equilibria") {
            detail::cmd_equilibria(ctx);
        } else if (sub == "stability") {
            detail::cmd_stability(ctx);
        } else if (sub == "r0") {
            detail::cmd_r0(ctx);
        } else if (sub == "elasticity") {
            detail::cmd_elasticity(ctx);
        } else if (sub == "endemic-sensitivity") {
            detail::cmd_endemic(ctx);
        } else if (sub == "optimize") {
            detail::cmd_optimize(ctx);
        } else {
            detail::cmd_sweep(ctx);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidParameters& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalFailure& e) {
        detail::write_error_file(out, sub, "numerical-failure", e.what(), e.details());
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const DivergenceError& e) {
        detail::write_error_file(out, sub, "divergence", e.what(), {{"last_valid_time", e.last_valid_time()}});
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const ConvergenceError& e) {
        detail::write_error_file(out, sub, "non-convergence", e.what(),
                                 {{"residual", e.residual()}, {"best_iterate", e.best_iterate()}});
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Error& e) {
        detail::write_error_file(out, sub, "numerical-failure", e.what());
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitOk;
}

} // namespace chemoviro::cli
