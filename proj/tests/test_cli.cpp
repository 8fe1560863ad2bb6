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
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "chemoviro/cli.hpp"

using namespace chemoviro;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("chemoviro_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string write_config(const std::string& text, const std::string& name = "scenario.ini") {
        const auto path = dir_ / name;
        std::ofstream(path) << text;
        return path.string();
    }

    int run(const std::string& sub, const std::string& config, std::vector<std::string> sets = {},
            const std::string& out = "out", unsigned workers = 2) {
        cli::RunRequest req;
        req.subcommand = sub;
        req.config_path = config;
        req.overrides = std::move(sets);
        if (!out.empty()) req.out_dir = (dir_ / out).string();
        req.workers = workers;
        std::ostringstream log, err;
        const int code = cli::run(req, log, err);
        last_err_ = err.str();
        return code;
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
    }

    static std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
        std::vector<std::vector<std::string>> rows;
        std::istringstream in(slurp(p));
        std::string line;
        while (std::getline(in, line)) {
            std::vector<std::string> cells;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) cells.push_back(cell);
            if (!line.empty() && line.back() == ',') cells.emplace_back();
            rows.push_back(cells);
        }
        return rows;
    }

    fs::path dir_;
    std::string last_err_;
};

double untreated_tumour_by_bisection(const ModelParameters& p) {
    const double M = p.nu_U * p.beta_T / p.delta_T;
    auto f = [&](double U) { return p.alpha * (1.0 - U / p.K) * (p.kappa + U) - M * U; };
    double lo = 0.0, hi = p.K;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST_F(CliTest, SimulateUntreatedReachesClosedForm) {
    const auto cfg = write_config("[parameters]\nb = 0\nq = 0\n[initial]\nE_T = 0\n"
                                  "[simulate]\nt_end = 3000\ndt = 0.05\nrecord_every = 100\n");
    ASSERT_EQ(run("simulate", cfg, {}, "out"), cli::kExitOk) << last_err_;
    const auto rows = read_csv(dir_ / "out" / "trajectory.csv");
    ASSERT_GT(rows.size(), 2u);
    EXPECT_EQ(rows.front(), (std::vector<std::string>{"t", "U", "I", "V", "E_V", "E_T", "C"}));
    EXPECT_EQ(rows.back()[0], "3000");
    auto p = baseline_parameters();
    p.b = 0.0;
    p.q = 0.0;
    const double U = untreated_tumour_by_bisection(p);
    EXPECT_NEAR(std::stod(rows.back()[1]), U, 1e-3 * U);
    EXPECT_TRUE(fs::exists(dir_ / "out" / "violations.csv"));
}

TEST_F(CliTest, SimulateWritesPlotOnRequest) {
    const auto cfg = write_config("[simulate]\nt_end = 5\n[output]\nplots = true\n");
    ASSERT_EQ(run("simulate", cfg), cli::kExitOk) << last_err_;
    EXPECT_TRUE(fs::exists(dir_ / "out" / "trajectory.svg"));
}

TEST_F(CliTest, ElasticityUnitRows) {
    const auto cfg = write_config("");
    ASSERT_EQ(run("elasticity", cfg), cli::kExitOk) << last_err_;
    const auto rows = read_csv(dir_ / "out" / "elasticity.csv");
    EXPECT_EQ(rows.front(), (std::vector<std::string>{"parameter", "S_p", "e_p", "method"}));
    std::map<std::string, double> e;
    for (std::size_t i = 1; i < rows.size(); ++i) e[rows[i][0]] = std::stod(rows[i][2]);
    EXPECT_NEAR(e.at("b"), 1.0, 1e-6);
    EXPECT_NEAR(e.at("beta"), 1.0, 1e-6);
    EXPECT_NEAR(e.at("gamma"), -1.0, 1e-6);
}

TEST_F(CliTest, R0CurveStrictlyDecreasing) {
    const auto cfg = write_config("[r0]\nq_grid = 5, 10, 15, 35, 50, 100\n");
    ASSERT_EQ(run("r0", cfg), cli::kExitOk) << last_err_;
    const auto rows = read_csv(dir_ / "out" / "r0_curve.csv");
    ASSERT_EQ(rows.size(), 7u);
    for (std::size_t i = 2; i < rows.size(); ++i) EXPECT_LT(std::stod(rows[i][1]), std::stod(rows[i - 1][1]));
}

TEST_F(CliTest, ReRunIsByteIdentical) {
    const auto cfg = write_config("[simulate]\nt_end = 20\n");
    ASSERT_EQ(run("simulate", cfg, {}, "a"), cli::kExitOk);
    ASSERT_EQ(run("simulate", cfg, {}, "b"), cli::kExitOk);
    EXPECT_EQ(slurp(dir_ / "a" / "trajectory.csv"), slurp(dir_ / "b" / "trajectory.csv"));
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
    EXPECT_EQ(run("simulate", write_config("[parameters]\nfoo = 1\n")), cli::kExitConfig);
    EXPECT_EQ(run("simulate", (dir_ / "missing.ini").string()), cli::kExitConfig);
    EXPECT_EQ(run("simulate", write_config(""), {"alpha=-2"}), cli::kExitConfig);
    EXPECT_EQ(run("teleport", write_config("")), cli::kExitConfig);
    EXPECT_EQ(run("sweep", write_config("")), cli::kExitConfig);
}

TEST_F(CliTest, DivergenceExitsThreeWithErrorFile) {
    const auto cfg = write_config("[simulate]\nt_end = 5000\ndt = 50\n");
    EXPECT_EQ(run("simulate", cfg), cli::kExitNumerical);
    const auto text = slurp(dir_ / "out" / "errors.json");
    const auto j = nlohmann::json::parse(text);
    EXPECT_EQ(j["error"], "divergence");
    EXPECT_EQ(j["subcommand"], "simulate");
    EXPECT_TRUE(j["details"].contains("last_valid_time"));
}

TEST_F(CliTest, SweepIsolatesFailingCell) {
    const auto cfg = write_config("[sweep]\nmetric = r0\n[sweep-axes]\nalpha = 0.1, -1, 0.3\nb = 100, 200\n");
    EXPECT_EQ(run("sweep", cfg, {}, "out", 3), cli::kExitNumerical);
    const auto rows = read_csv(dir_ / "out" / "sweep.csv");
    EXPECT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"alpha", "b", "R0", "U_star", "E_T_star", "C_star"}));
    const auto fails = read_csv(dir_ / "out" / "failures.csv");
    ASSERT_EQ(fails.size(), 3u);
    EXPECT_EQ(fails[1][1], "-1");
    EXPECT_TRUE(fs::exists(dir_ / "out" / "errors.json"));
    std::size_t cell_files = 0;
    for (const auto& e : fs::directory_iterator(dir_ / "out" / "cells")) cell_files += e.is_regular_file();
    EXPECT_EQ(cell_files, 4u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        auto p = baseline_parameters();
        p.alpha = std::stod(rows[i][0]);
        p.b = std::stod(rows[i][1]);
        EXPECT_NEAR(std::stod(rows[i][2]), r0(p).value, 1e-12 * r0(p).value);
    }
}

TEST_F(CliTest, SweepOutputIndependentOfWorkerCount) {
    const auto cfg = write_config("[sweep]\nmetric = r0\n[sweep-axes]\nbeta = 0.01:0.1:4\nq = 5, 50\n");
    ASSERT_EQ(run("sweep", cfg, {}, "one", 1), cli::kExitOk);
    ASSERT_EQ(run("sweep", cfg, {}, "four", 4), cli::kExitOk);
    EXPECT_EQ(slurp(dir_ / "one" / "sweep.csv"), slurp(dir_ / "four" / "sweep.csv"));
}

TEST_F(CliTest, OutputDirectoryFromEnvironment) {
    const auto cfg = write_config("");
    const auto target = dir_ / "from_env";
    ::setenv("CHEMOVIRO_OUT", target.c_str(), 1);
    const int code = run("r0", cfg, {}, "");
    ::unsetenv("CHEMOVIRO_OUT");
    ASSERT_EQ(code, cli::kExitOk);
    EXPECT_TRUE(fs::exists(target / "r0.csv"));
}

TEST_F(CliTest, OptimizeWritesSolutionAndLog) {
    const auto cfg = write_config("[optimize]\nN = 400\n");
    ASSERT_EQ(run("optimize", cfg, {"optimize.tol=1e-3"}), cli::kExitOk) << last_err_;
    const auto sol = read_csv(dir_ / "out" / "oc_solution.csv");
    EXPECT_EQ(sol.front(), (std::vector<std::string>{"t", "U", "I", "V", "C", "lambda1", "lambda2", "lambda3",
                                                     "lambda4", "u1", "u2"}));
    EXPECT_EQ(sol.size(), 402u);
    const auto log = read_csv(dir_ / "out" / "oc_convergence.csv");
    EXPECT_EQ(log.front(), (std::vector<std::string>{"iter", "delta_u", "J"}));
}

TEST_F(CliTest, OptimizeNonConvergenceExitsThree) {
    const auto cfg = write_config("[optimize]\nN = 200\nmax_iters = 1\ntol = 1e-12\n");
    EXPECT_EQ(run("optimize", cfg), cli::kExitNumerical);
    EXPECT_TRUE(fs::exists(dir_ / "out" / "oc_solution.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "out" / "errors.json"));
}

TEST_F(CliTest, StabilityMarksThreshold) {
    const auto cfg = write_config("[stability]\nvariant = chemo-only\nparameter = q\ngrid = 1000, 2000\n");
    ASSERT_EQ(run("stability", cfg), cli::kExitOk) << last_err_;
    const auto rows = read_csv(dir_ / "out" / "stability.csv");
    bool below_unstable = false, above_stable = false;
    for (const auto& r : rows) {
        if (r.size() < 8 || r[1] != "C_1") continue;
        if (r[7] == "below_q_star") below_unstable = r[4] == "unstable";
        if (r[7] == "above_q_star") above_stable = r[4] == "stable";
    }
    EXPECT_TRUE(below_unstable);
    EXPECT_TRUE(above_stable);
    EXPECT_TRUE(fs::exists(dir_ / "out" / "threshold.csv"));
}

TEST_F(CliTest, EquilibriaAndEndemicSensitivity) {
    const auto cfg = write_config("[parameters]\nalpha = 0.8\nb = 50\nbeta = 0.15222854712070413\n"
                                  "[equilibria]\nvariant = full\n[endemic-sensitivity]\nq_grid = 5, 50\n");
    ASSERT_EQ(run("equilibria", cfg), cli::kExitOk) << last_err_;
    const auto eq = read_csv(dir_ / "out" / "equilibria.csv");
    ASSERT_EQ(eq.size(), 3u);
    EXPECT_EQ(eq[2][1], "E*");
    ASSERT_EQ(run("endemic-sensitivity", cfg), cli::kExitOk) << last_err_;
    const auto es = read_csv(dir_ / "out" / "endemic_sensitivity.csv");
    ASSERT_EQ(es.size(), 3u);
    EXPECT_LT(std::stod(es[1][8]), 0.0);
}

TEST_F(CliTest, BinaryReportsUsageErrorsAsConfigErrors) {
    const std::string cmd = std::string(CHEMOVIRO_CLI_PATH) + " simulate > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    ASSERT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), cli::kExitConfig);
}
