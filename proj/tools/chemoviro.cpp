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
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "chemoviro/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"chemoviro: tumour, oncolytic virus and chemotherapy model toolkit"};
    app.require_subcommand(1, 1);

    chemoviro::cli::RunRequest req;
    std::string out;
    unsigned workers = 0;

    for (const auto& name : chemoviro::cli::kSubcommands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", req.config_path, "scenario file (INI)")->required();
        sub->add_option("--set", req.overrides, "override, key=value or section.key=value")->take_all();
        sub->add_option("--out", out, "output directory (default: $CHEMOVIRO_OUT)");
        sub->add_flag("--plots", req.plots, "also write SVG plots");
        sub->add_option("--workers", workers, "parallel sweep workers (default: available cores)")
            ->check(CLI::PositiveNumber);
        sub->callback([&req, name] { req.subcommand = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : chemoviro::cli::kExitConfig;
    }
    if (!out.empty()) req.out_dir = out;
    if (workers > 0) req.workers = workers;
    return chemoviro::cli::run(req, std::cout, std::cerr);
}
