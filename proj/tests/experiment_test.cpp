// Copyright 2026 The montraj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "montraj/experiment.hpp"

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "gtest/gtest.h"

using namespace montraj;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("montraj_exp_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string config_error(const std::string& toml) {
    try {
        parse_plan(toml);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

ExperimentPlan small_plan(const std::filesystem::path& out) {
    ExperimentPlan p;
    p.L = {6};
    p.U = {0.0};
    p.gamma = {0.5};
    p.observables = {Observable::Occupation};
    p.trajectories = 12;
    p.backend = BackendChoice::Dense;
    p.n_steps = 60;
    p.sample_interval = 0.5;
    p.master_seed = 77;
    p.output = out;
    return p;
}

}  // namespace

TEST(experiment, minimal_plan_gets_defaults) {
    const ExperimentPlan p = parse_plan("trajectories = 3\n[grid]\nL = 6\ngamma = [0.1, 0.5]\n", "/base");
    EXPECT_EQ(p.trajectories, 3);
    EXPECT_EQ(p.L, std::vector<int>{6});
    EXPECT_EQ(p.gamma.size(), 2u);
    EXPECT_EQ(p.dt, 0.05);
    EXPECT_EQ(p.n_steps, 400);
    EXPECT_EQ(p.burn_in, 0.5);
    EXPECT_EQ(p.sample_interval, 1.0);
    EXPECT_EQ(p.policy.chi_max, 256);
    EXPECT_EQ(p.policy.svd_cutoff, 1e-10);
    EXPECT_EQ(p.output, std::filesystem::path("/base/results"));
    EXPECT_EQ(p.points().size(), 2u);
    // The echo parses back to the same plan.
    const ExperimentPlan again = parse_plan(plan_to_toml(p));
    EXPECT_EQ(plan_to_toml(again), plan_to_toml(p));
}

TEST(experiment, plan_rejections_name_the_field) {
    EXPECT_NE(config_error("[grid]\ngamma = 30.0\n").find("gamma"), std::string::npos);
    EXPECT_NE(config_error("backend = \"gaussian\"\n[grid]\nobservable = \"current\"\n").find("gaussian"),
              std::string::npos);
    EXPECT_NE(config_error("trajectorys = 5\n").find("trajectorys"), std::string::npos);
    EXPECT_NE(config_error("[grid]\nLL = 5\n").find("LL"), std::string::npos);
    EXPECT_NE(config_error("[time]\nn_steps = 1.5\n").find("n_steps"), std::string::npos);
    EXPECT_NE(config_error("trajectories = 0\n").find("trajectories"), std::string::npos);
    EXPECT_NE(config_error("[truncation]\nchi_max = 0\n").find("chi_max"), std::string::npos);
    EXPECT_NE(config_error("[grid\n").find("TOML"), std::string::npos);
    EXPECT_THROW(load_plan("/nonexistent/plan.toml"), ConfigError);
}

TEST(experiment, backend_resolution) {
    ChainSpec s;
    s.L = 8;
    EXPECT_EQ(resolve_backend(BackendChoice::Auto, s), BackendKind::Gaussian);
    s.U = 1.0;
    EXPECT_EQ(resolve_backend(BackendChoice::Auto, s), BackendKind::Dense);
    s.L = 20;
    EXPECT_EQ(resolve_backend(BackendChoice::Auto, s), BackendKind::Mps);
    EXPECT_EQ(resolve_backend(BackendChoice::Dense, s), BackendKind::Dense);
}

TEST(experiment, accumulator_merge_matches_sequential) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(1.5, 2.0);
    Accumulator all(3), a(3), b(3);
    for (int k = 0; k < 137; ++k) {
        const double x[3] = {g(rng), g(rng), 10.0 + g(rng)};
        all.add(x);
        (k < 50 ? a : b).add(x);
    }
    Accumulator ab = a, ba = b;
    ab.merge(b);
    ba.merge(a);
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(ab.mean()[i], all.mean()[i], 1e-12 * std::max(1.0, std::abs(all.mean()[i])));
        EXPECT_NEAR(ba.mean()[i], all.mean()[i], 1e-12 * std::max(1.0, std::abs(all.mean()[i])));
        EXPECT_NEAR(ab.variance()[i], all.variance()[i], 1e-12);
        EXPECT_NEAR(ab.stderr_of_mean()[i], std::sqrt(all.variance()[i] / 137), 1e-12);
    }
    EXPECT_EQ(ab.count(), 137);
    Accumulator empty;
    empty.merge(a);
    EXPECT_EQ(empty.mean(), a.mean());
}

TEST(experiment, ensemble_outputs_are_reproducible_and_resumable) {
    const auto dir = scratch_dir("ensemble");
    ExperimentPlan p = small_plan(dir / "first");
    const auto first = run_ensemble(p, RunOptions{1, nullptr});
    ASSERT_EQ(first.size(), 1u);
    EXPECT_EQ(first[0].n_traj, 12);
    EXPECT_EQ(first[0].n_failed, 0);
    const std::string csv = slurp(dir / "first" / "aggregates.csv");
    // Header plus (L-1) entropies, L spectrum entries and four scalars.
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 5 + 6 + 4);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), kCsvHeader);

    // Same seed, more workers: identical bytes.
    p.output = dir / "second";
    run_ensemble(p, RunOptions{3, nullptr});
    EXPECT_EQ(slurp(dir / "second" / "aggregates.csv"), csv);

    // Interrupted run: keep the header and five summaries, tear the last line.
    const auto store = dir / "second" / "trajectories" / "point_0.ndjson";
    std::istringstream lines(slurp(store));
    std::string line, kept;
    for (int k = 0; k < 6 && std::getline(lines, line); ++k) kept += line + "\n";
    std::getline(lines, line);
    kept += line.substr(0, line.size() / 2);
    std::ofstream(store, std::ios::trunc) << kept;
    EXPECT_EQ(read_store(store).size(), 5u);
    std::filesystem::remove(dir / "second" / "aggregates.csv");
    run_ensemble(p, RunOptions{2, nullptr});
    EXPECT_EQ(slurp(dir / "second" / "aggregates.csv"), csv);

    // A store from other settings is refused.
    ExperimentPlan other = p;
    other.master_seed = 78;
    EXPECT_THROW(run_ensemble(other, RunOptions{1, nullptr}), ConfigError);
}

TEST(experiment, results_round_trip) {
    const auto dir = scratch_dir("roundtrip");
    ExperimentPlan p = small_plan(dir);
    p.L = {4, 6};
    const auto aggs = run_ensemble(p, RunOptions{1, nullptr});
    const ResultSet back = load_results(dir);
    EXPECT_EQ(plan_to_toml(back.plan), plan_to_toml(p));
    ASSERT_EQ(back.aggregates.size(), aggs.size());
    std::ostringstream a, b;
    write_csv(a, aggs);
    write_csv(b, back.aggregates);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(back.aggregates[1].C_mean, aggs[1].C_mean);
}

TEST(experiment, empty_grid_writes_header_only) {
    std::ostringstream out;
    write_csv(out, {});
    EXPECT_EQ(out.str(), std::string(kCsvHeader) + "\n");
}

TEST(experiment, zeno_point_has_zero_entropy) {
    const auto dir = scratch_dir("zeno");
    ExperimentPlan p = small_plan(dir);
    p.U = {1.0};
    p.gamma = {20.0};
    const auto aggs = run_ensemble(p, RunOptions{1, nullptr});
    for (const Estimate& e : aggs[0].S) {
        EXPECT_EQ(e.mean, 0.0);
        EXPECT_EQ(e.stderr, 0.0);
    }
    EXPECT_EQ(aggs[0].delta_nu.mean, 1.0);
    EXPECT_EQ(aggs[0].delta_nu.stderr, 0.0);
}

TEST(experiment, failing_point_is_reported) {
    const auto dir = scratch_dir("failing");
    ExperimentPlan p = small_plan(dir);
    p.backend = BackendChoice::Mps;
    p.U = {1.0};
    p.policy.chi_max = 1;
    p.policy.hard_limit = 1e-12;
    EXPECT_THROW(run_ensemble(p, RunOptions{1, nullptr}), NumericalError);
    const auto store = read_store(dir / "trajectories" / "point_0.ndjson");
    ASSERT_EQ(store.size(), 12u);
    EXPECT_FALSE(store[0].ok);
    EXPECT_FALSE(store[0].error.empty());
}

TEST(experiment, scan_finds_synthetic_crossing) {
    std::vector<GapSample> samples;
    std::vector<double> grid;
    for (double g = 0.03; g < 0.6; g += 0.05) grid.push_back(g);
    for (int L : {8, 12, 16, 24})
        for (double g : grid) samples.push_back({L, g, {std::max(0.0, g - 0.2), 0.0}});
    const ScanResult r = finite_size_scan(samples);
    ASSERT_TRUE(r.crossing.has_value()) << r.diagnostic;
    EXPECT_NEAR(*r.crossing, 0.2, 0.05);
    EXPECT_EQ(r.pairs.size(), 3u);
    ASSERT_EQ(r.rows.size(), grid.size());
    // Exact 1/L form extrapolates exactly.
    EXPECT_NEAR(r.rows.back().extrapolated, grid.back() - 0.2, 1e-12);
    EXPECT_NEAR(r.rows.back().slope[3].mean, 24 * (grid.back() - 0.2), 1e-12);
}

TEST(experiment, scan_reports_undetermined_crossings) {
    std::vector<GapSample> one = {{8, 0.1, {0.1, 0.0}}, {8, 0.3, {0.2, 0.0}}};
    EXPECT_THROW(finite_size_scan(one), ConfigError);
    // Zig-zag difference: two sign changes.
    std::vector<GapSample> zig;
    const double d8[4] = {0.1, 0.1, 0.1, 0.1};
    const double d12[4] = {0.0, 0.2, 0.0, 0.2};
    for (int k = 0; k < 4; ++k) {
        zig.push_back({8, 0.1 * (k + 1), {d8[k], 0.0}});
        zig.push_back({12, 0.1 * (k + 1), {d12[k], 0.0}});
    }
    const ScanResult r = finite_size_scan(zig);
    EXPECT_FALSE(r.crossing.has_value());
    EXPECT_NE(r.pairs[0].diagnostic.find("changes sign"), std::string::npos);
}

TEST(experiment, worker_count_from_environment) {
    setenv(kWorkersEnv, "3", 1);
    EXPECT_EQ(worker_count(), 3);
    setenv(kWorkersEnv, "zero", 1);
    EXPECT_THROW(worker_count(), ConfigError);
    setenv(kWorkersEnv, "0", 1);
    EXPECT_THROW(worker_count(), ConfigError);
    unsetenv(kWorkersEnv);
    EXPECT_GE(worker_count(), 1);
}
