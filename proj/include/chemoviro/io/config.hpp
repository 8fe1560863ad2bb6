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
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "chemoviro/errors.hpp"
#include "chemoviro/optimal_control.hpp"
#include "chemoviro/parameters.hpp"
#include "chemoviro/reproduction.hpp"
#include "chemoviro/state.hpp"

namespace chemoviro::io {

struct SimulateSettings {
    VariantTag variant = VariantTag::Full;
    double t_end = 200.0;
    double dt = 0.01;
    double omega_tol = 1e-6;
    int record_every = 10;
};

struct EquilibriaSettings {
    VariantTag variant = VariantTag::Full;
};

struct StabilitySettings {
    VariantTag variant = VariantTag::ChemoOnly;
    std::string parameter = "q";
    std::vector<double> grid{0.0, 500.0, 1000.0, 1500.0, 2000.0, 2500.0, 3000.0, 3500.0, 4000.0};
};

struct R0Settings {
    std::vector<double> q_grid{5.0, 10.0, 15.0, 35.0, 50.0, 100.0};
};

struct ElasticitySettings {
    std::vector<std::string> parameters = kR0Parameters;
};

struct EndemicSettings {
    std::vector<std::string> parameters{"q"};
    std::vector<double> q_grid;  ///< empty: evaluate at the configured q only
};

struct SweepAxis {
    std::string parameter;
    std::vector<double> values;
};

struct SweepSettings {
    std::string metric = "r0";  ///< r0 | simulate | endemic
    std::vector<SweepAxis> axes;
};

/// Everything one invocation needs. Sections absent from the file keep their defaults.
struct ScenarioConfig {
    ModelParameters params;
    SystemState initial = default_initial_state();
    SimulateSettings simulate;
    EquilibriaSettings equilibria;
    StabilitySettings stability;
    R0Settings r0;
    ElasticitySettings elasticity;
    EndemicSettings endemic;
    SweepOptions optimize;
    SweepSettings sweep;
    std::string out_dir;
    bool plots = false;
};

inline const std::vector<std::string> kSections{
    "parameters", "initial", "output", "simulate", "equilibria", "stability", "r0", "elasticity",
    "endemic-sensitivity", "optimize", "sweep", "sweep-axes"};

inline const std::vector<std::string> kSweepMetrics{"r0", "simulate", "endemic"};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string where(const std::string& section, const std::string& key) { return "[" + section + "] " + key; }

inline double parse_number(const std::string& text, const std::string& ctx) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
        throw ConfigError(ctx + ": '" + t + "' is not a finite number");
    }
    return v;
}

inline int parse_int(const std::string& text, const std::string& ctx) {
    const std::string t = trim(text);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw ConfigError(ctx + ": '" + t + "' is not an integer");
    }
    return v;
}

inline bool parse_bool(const std::string& text, const std::string& ctx) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError(ctx + ": '" + t + "' is not a boolean");
}

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

/// Comma list of numbers, or `start:stop:count` for an evenly spaced grid.
inline std::vector<double> parse_grid(const std::string& text, const std::string& ctx) {
    const std::string t = trim(text);
    if (t.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(t);
        std::string item;
        while (std::getline(ss, item, ':')) parts.push_back(item);
        if (parts.size() != 3) throw ConfigError(ctx + ": range must read start:stop:count");
        const double a = parse_number(parts[0], ctx);
        const double b = parse_number(parts[1], ctx);
        const int n = parse_int(parts[2], ctx);
        if (n < 1) throw ConfigError(ctx + ": range count must be >= 1");
        std::vector<double> g(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) g[static_cast<std::size_t>(k)] = n == 1 ? a : a + (b - a) * k / (n - 1);
        return g;
    }
    std::vector<double> g;
    for (const auto& item : split_list(t)) g.push_back(parse_number(item, ctx));
    if (g.empty()) throw ConfigError(ctx + ": empty list");
    return g;
}

inline VariantTag parse_variant_or_throw(const std::string& text, const std::string& ctx) {
    auto tag = parse_variant(trim(text));
    if (!tag || *tag == VariantTag::ControlReduced) {
        throw ConfigError(ctx + ": unknown variant '" + trim(text) +
                          "' (expected full, no-treatment, chemo-only or viro-only)");
    }
    return *tag;
}

inline void require_parameter(const std::string& name, const std::string& ctx) {
    if (!find_symbol(name)) throw ConfigError(ctx + ": unknown parameter '" + name + "'");
}

/// Key/value pairs grouped by section, in file order.
using RawConfig = std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>;

inline RawConfig::value_type::second_type& section_of(RawConfig& raw, const std::string& name) {
    for (auto& s : raw) {
        if (s.first == name) return s.second;
    }
    raw.push_back({name, {}});
    return raw.back().second;
}

inline void apply_entry(ScenarioConfig& c, const std::string& section, const std::string& key,
                        const std::string& value) {
    const auto ctx = where(section, key);
    if (section == "parameters") {
        auto sym = find_symbol(key);
        if (!sym) throw ConfigError(ctx + ": unknown parameter");
        c.params.*(sym->member) = parse_number(value, ctx);
    } else if (section == "initial") {
        for (std::size_t i = 0; i < kCompartmentNames.size(); ++i) {
            if (kCompartmentNames[i] == key) {
                c.initial[static_cast<Compartment>(i)] = parse_number(value, ctx);
                return;
            }
        }
        throw ConfigError(ctx + ": unknown compartment");
    } else if (section == "output") {
        if (key == "dir") {
            c.out_dir = trim(value);
        } else if (key == "plots") {
            c.plots = parse_bool(value, ctx);
        } else {
            throw ConfigError(ctx + ": unknown key");
        }
    } else if (section == "simulate") {
        if (key == "variant") {
            c.simulate.variant = parse_variant_or_throw(value, ctx);
        } else if (key == "t_end") {
            c.simulate.t_end = parse_number(value, ctx);
        } else if (key == "dt") {
            c.simulate.dt = parse_number(value, ctx);
        } else if (key == "omega_tol") {
            c.simulate.omega_tol = parse_number(value, ctx);
        } else if (key == "record_every") {
            c.simulate.record_every = parse_int(value, ctx);
        } else {
            throw ConfigError(ctx + ": unknown key");
        }
    } else if (section == "equilibria") {
        if (key != "variant") throw ConfigError(ctx + ": unknown key");
        c.equilibria.variant = parse_variant_or_throw(value, ctx);
    } else if (section == "stability") {
        if (key == "variant") {
            c.stability.variant = parse_variant_or_throw(value, ctx);
        } else if (key == "parameter") {
            c.stability.parameter = trim(value);
            require_parameter(c.stability.parameter, ctx);
        } else if (key == "grid") {
            c.stability.grid = parse_grid(value, ctx);
        } else {
            throw ConfigError(ctx + ": unknown key");
        }
    } else if (section == "r0") {
        if (key != "q_grid") throw ConfigError(ctx + ": unknown key");
        c.r0.q_grid = parse_grid(value, ctx);
    } else if (section == "elasticity") {
        if (key != "parameters") throw ConfigError(ctx + ": unknown key");
        c.elasticity.parameters = split_list(value);
        for (const auto& n : c.elasticity.parameters) require_parameter(n, ctx);
    } else if (section == "endemic-sensitivity") {
        if (key == "parameters") {
            c.endemic.parameters = split_list(value);
            for (const auto& n : c.endemic.parameters) require_parameter(n, ctx);
        } else if (key == "q_grid") {
            c.endemic.q_grid = trim(value).empty() ? std::vector<double>{} : parse_grid(value, ctx);
        } else {
            throw ConfigError(ctx + ": unknown key");
        }
    } else if (section == "optimize") {
        if (key == "N") {
            const int n = parse_int(value, ctx);
            if (n < 100) throw ConfigError(ctx + ": N must be >= 100");
            c.optimize.N = static_cast<std::size_t>(n);
        } else if (key == "relaxation") {
            c.optimize.relaxation = parse_number(value, ctx);
        } else if (key == "tol") {
            c.optimize.tol = parse_number(value, ctx);
        } else if (key == "max_iters") {
            c.optimize.max_iters = parse_int(value, ctx);
        } else {
            throw ConfigError(ctx + ": unknown key");
        }
    } else if (section == "sweep") {
        if (key != "metric") throw ConfigError(ctx + ": unknown key");
        const auto m = trim(value);
        if (std::find(kSweepMetrics.begin(), kSweepMetrics.end(), m) == kSweepMetrics.end()) {
            throw ConfigError(ctx + ": unknown metric '" + m + "' (expected r0, simulate or endemic)");
        }
        c.sweep.metric = m;
    } else if (section == "sweep-axes") {
        require_parameter(key, ctx);
        auto grid = parse_grid(value, ctx);
        for (auto& a : c.sweep.axes) {
            if (a.parameter == key) {
                a.values = std::move(grid);
                return;
            }
        }
        c.sweep.axes.push_back({key, std::move(grid)});
    } else {
        throw ConfigError("unknown section [" + section + "]");
    }
}

} // namespace detail

/// Parses the INI text into raw sections; comments start with ';' or '#'.
[[nodiscard]] inline detail::RawConfig parse_ini(std::istream& in, const std::string& origin) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    detail::RawConfig raw;
    for (const auto& [section, body] : tree) {
        if (std::find(kSections.begin(), kSections.end(), section) == kSections.end()) {
            throw ConfigError(origin + ": '" + section + "' is not a known section");
        }
        if (body.empty() && !body.data().empty()) {
            throw ConfigError(origin + ": key '" + section + "' outside any section");
        }
        auto& entries = detail::section_of(raw, section);
        for (const auto& [key, leaf] : body) entries.push_back({key, leaf.get_value<std::string>()});
    }
    return raw;
}

/// Applies `section.key=value` overrides; a bare key addresses [parameters].
inline void apply_override(ScenarioConfig& c, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' must read key=value");
    const std::string lhs = detail::trim(assignment.substr(0, eq));
    const std::string value = assignment.substr(eq + 1);
    const auto dot = lhs.find('.');
    if (dot == std::string::npos) {
        detail::apply_entry(c, "parameters", lhs, value);
    } else {
        detail::apply_entry(c, lhs.substr(0, dot), lhs.substr(dot + 1), value);
    }
}

inline void validate(const ScenarioConfig& c) {
    try {
        c.params.validate();
    } catch (const InvalidParameters& e) {
        throw ConfigError(e.what());
    }
    for (std::size_t i = 0; i < 6; ++i) {
        const double v = c.initial[static_cast<Compartment>(i)];
        if (v < 0.0) throw ConfigError("[initial] " + std::string(kCompartmentNames[i]) + " must be >= 0");
    }
    if (!(c.simulate.t_end > 0.0)) throw ConfigError("[simulate] t_end must be > 0");
    if (!(c.simulate.dt > 0.0)) throw ConfigError("[simulate] dt must be > 0");
    if (c.simulate.record_every < 1) throw ConfigError("[simulate] record_every must be >= 1");
    if (!(c.optimize.relaxation > 0.0 && c.optimize.relaxation <= 1.0)) {
        throw ConfigError("[optimize] relaxation must lie in (0, 1]");
    }
    if (!(c.optimize.tol > 0.0)) throw ConfigError("[optimize] tol must be > 0");
    if (c.optimize.max_iters < 1) throw ConfigError("[optimize] max_iters must be >= 1");
    for (double q : c.r0.q_grid) {
        if (q < 0.0) throw ConfigError("[r0] q_grid entries must be >= 0");
    }
}

[[nodiscard]] inline ScenarioConfig load_config(std::istream& in, const std::string& origin,
                                                const std::vector<std::string>& overrides = {}) {
    ScenarioConfig c;
    for (const auto& [section, entries] : parse_ini(in, origin)) {
        for (const auto& [key, value] : entries) detail::apply_entry(c, section, key, value);
    }
    for (const auto& o : overrides) apply_override(c, o);
    validate(c);
    return c;
}

[[nodiscard]] inline ScenarioConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    return load_config(in, path, overrides);
}

namespace detail {

inline std::string shortest(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::string join(const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + shortest(xs[i]);
    return s;
}

inline std::string join(const std::vector<std::string>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + xs[i];
    return s;
}

} // namespace detail

/// Text of configs/default.ini: baseline parameters, default initial state and
/// every subcommand block at its default.
[[nodiscard]] inline std::string default_config_text() {
    using detail::join;
    using detail::shortest;
    const ScenarioConfig c;
    std::ostringstream os;
    os << "; chemoviro default scenario\n\n[parameters]\n";
    for (const auto& s : kParameterSymbols) os << s.name << " = " << shortest(c.params.*(s.member)) << "\n";
    os << "\n[initial]\n";
    for (std::size_t i = 0; i < 6; ++i) {
        os << kCompartmentNames[i] << " = " << shortest(c.initial[static_cast<Compartment>(i)]) << "\n";
    }
    os << "\n[simulate]\nvariant = " << to_string(c.simulate.variant) << "\nt_end = " << shortest(c.simulate.t_end)
       << "\ndt = " << shortest(c.simulate.dt) << "\nomega_tol = " << shortest(c.simulate.omega_tol)
       << "\nrecord_every = " << c.simulate.record_every << "\n";
    os << "\n[equilibria]\nvariant = " << to_string(c.equilibria.variant) << "\n";
    os << "\n[stability]\nvariant = " << to_string(c.stability.variant) << "\nparameter = " << c.stability.parameter
       << "\ngrid = " << join(c.stability.grid) << "\n";
    os << "\n[r0]\nq_grid = " << join(c.r0.q_grid) << "\n";
    os << "\n[elasticity]\nparameters = " << join(c.elasticity.parameters) << "\n";
    os << "\n[endemic-sensitivity]\nparameters = " << join(c.endemic.parameters) << "\n";
    os << "\n[optimize]\nN = " << c.optimize.N << "\nrelaxation = " << shortest(c.optimize.relaxation)
       << "\ntol = " << shortest(c.optimize.tol) << "\nmax_iters = " << c.optimize.max_iters << "\n";
    os << "\n[sweep]\nmetric = " << c.sweep.metric << "\n";
    os << "\n[sweep-axes]\nbeta = 0.01, 0.05, 0.1\nb = 100, 500, 1000\n";
    return os.str();
}

} // namespace chemoviro::io
