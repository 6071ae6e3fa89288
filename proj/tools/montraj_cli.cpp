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

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <vector>

#include "montraj/experiment.hpp"
#include "montraj/validation.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

int cmd_run(const std::string& plan_path) {
    const montraj::ExperimentPlan plan = montraj::load_plan(plan_path);
    const auto aggs = montraj::run_ensemble(plan, {montraj::worker_count(), &std::cerr});
    std::cout << "wrote " << aggs.size() << " points to " << plan.output.string() << "\n";
    return 0;
}

int cmd_validate(bool full_scale, const std::vector<int>& ids, const std::string& work_dir) {
    montraj::ValidationOptions o;
    o.scale = full_scale ? montraj::ValidationScale::Full : montraj::ValidationScale::Quick;
    o.workers = montraj::worker_count();
    o.work_dir = work_dir;
    o.log = &std::cerr;
    bool all = true;
    for (const auto& r : montraj::run_validation(o, ids)) {
        std::cout << montraj::format_result(r) << std::endl;
        all = all && r.pass;
    }
    // A failed criterion is a numerical outcome, not a crash.
    return all ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum trajectories for monitored fermion chains"};
    app.set_version_flag("--version", montraj::version_string());
    app.require_subcommand(1);

    std::string plan_path;
    auto* run = app.add_subcommand("run", "Run the ensemble described by a TOML plan");
    run->add_option("plan", plan_path, "Plan file")->required();

    bool full_scale = false;
    std::vector<int> ids;
    std::string work_dir = "validation";
    auto* validate = app.add_subcommand("validate", "Cross-check backends and observables against oracles");
    validate->add_flag("--full", full_scale, "Acceptance-scale sizes and ensemble counts");
    validate->add_option("--only", ids, "Criteria to run (1-9)")->check(CLI::Range(1, montraj::kNumCriteria));
    validate->add_option("--work-dir", work_dir, "Directory for ensemble stores");

    std::string results_dir;
    auto* scan = app.add_subcommand("scan", "Finite-size crossing of the gap slope");
    scan->add_option("results", results_dir, "Output directory of a run")->required();
    int ell_min = -1, ell_max = -1;
    auto* fit = app.add_subcommand("fit", "Chord-length fit of the entropy profiles");
    fit->add_option("results", results_dir, "Output directory of a run")->required();
    fit->add_option("--ell-min", ell_min, "First cut in the fit window");
    fit->add_option("--ell-max", ell_max, "Last cut in the fit window");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) return cmd_run(plan_path);
        if (*validate) return cmd_validate(full_scale, ids, work_dir);
        if (*scan) {
            const auto scans = montraj::scan_results(montraj::load_results(results_dir));
            montraj::print_scan(std::cout, scans);
            return 0;
        }
        if (*fit) {
            const auto fits = montraj::fit_results(montraj::load_results(results_dir), ell_min, ell_max);
            montraj::print_fits(std::cout, fits);
            return 0;
        }
    } catch (const montraj::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const montraj::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
