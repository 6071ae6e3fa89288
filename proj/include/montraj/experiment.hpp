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

#pragma once

// Ensemble orchestration: plan files, concurrent trajectories with resumable
// per-trajectory results, late-time aggregation, finite-size gap scans and
// the CSV / JSON outputs.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "montraj/backend.hpp"
#include "montraj/trajectory.hpp"

namespace montraj {

/// Backend choice in a plan. Auto picks the Gaussian backend when the point
/// allows it, the dense one up to kAutoDenseSites and the MPS otherwise.
enum class BackendChoice { Auto, Dense, Gaussian, Mps };
constexpr int kAutoDenseSites = 12;

BackendKind resolve_backend(BackendChoice choice, const ChainSpec& spec);

struct GridPoint {
    int L = 8;
    double U = 0.0;
    double gamma = 0.0;
    Observable observable = Observable::Occupation;
};

struct ExperimentPlan {
    std::vector<int> L = {8};
    std::vector<double> U = {0.0};
    std::vector<double> gamma = {0.5};
    std::vector<Observable> observables = {Observable::Occupation};
    int trajectories = 100;
    BackendChoice backend = BackendChoice::Auto;
    TruncationPolicy policy;
    double dt = 0.05;
    int n_steps = 400;
    /// Fraction of the run discarded before late-time averaging.
    double burn_in = 0.5;
    double sample_interval = 1.0;
    std::uint64_t master_seed = 1;
    std::filesystem::path output = "results";

    /// Cartesian product in the order L, U, gamma, observable (last fastest).
    std::vector<GridPoint> points() const;
    ChainSpec spec_for(const GridPoint& point) const;
    SamplingOptions sampling() const { return {sample_interval, burn_in * n_steps * dt}; }
    /// Checks every field and every grid point against its backend.
    void validate() const;
};

/// Reads a TOML plan. Unknown keys are rejected. A relative `output` is taken
/// relative to the plan file's directory.
ExperimentPlan load_plan(const std::filesystem::path& path);
ExperimentPlan parse_plan(const std::string& toml_text, const std::filesystem::path& base_dir = ".");
std::string plan_to_toml(const ExperimentPlan& plan);

/// Component-wise running mean and variance (Welford), mergeable (Chan et al.).
class Accumulator {
   public:
    Accumulator() = default;
    explicit Accumulator(std::size_t size);
    void add(std::span<const double> x);
    void merge(const Accumulator& other);
    std::size_t size() const { return mean_.size(); }
    std::int64_t count() const { return n_; }
    const std::vector<double>& mean() const { return mean_; }
    /// Sample variance (n - 1 in the denominator); 0 for n < 2.
    std::vector<double> variance() const;
    /// sqrt(variance / n).
    std::vector<double> stderr_of_mean() const;

   private:
    std::int64_t n_ = 0;
    std::vector<double> mean_;
    std::vector<double> m2_;
};

/// Late-time averages of one trajectory, the unit of persistence and
/// aggregation. Entropies are indexed by ell = 1..L-1, the spectrum by
/// alpha = 1..L in descending order, C row-major.
struct TrajectorySummary {
    int index = 0;
    bool ok = true;
    std::string error;
    int samples = 0;
    int events = 0;
    double truncation_error = 0.0;
    std::vector<double> S;
    std::vector<double> nu;
    double ng = 0.0;
    double ng_per_particle = 0.0;
    double delta_nu = 0.0;
    double slope = 0.0;
    std::vector<Complex> C;
};

/// Time average over the snapshots at or after record.sampling.record_from.
/// Throws NumericalError when there are none.
TrajectorySummary summarize(const TrajectoryRecord& record, int index);

struct Estimate {
    double mean = 0.0;
    double stderr = 0.0;
};

struct EnsembleAggregate {
    GridPoint point;
    BackendKind backend = BackendKind::Dense;
    int n_traj = 0;
    int n_failed = 0;
    std::vector<Estimate> S;   // ell = 1..L-1
    std::vector<Estimate> nu;  // alpha = 1..L
    Estimate ng;
    Estimate ng_per_particle;
    Estimate delta_nu;
    Estimate slope;
    Matrix C_mean;
    Matrix C_stderr;  // component-wise, real and imaginary parts separately
};

/// Aggregates summaries in index order so the result does not depend on
/// completion order. Failed summaries are counted and skipped.
EnsembleAggregate aggregate(const GridPoint& point, BackendKind backend, std::span<const TrajectorySummary> runs);

/// Number of workers: MONTRAJ_WORKERS if set (>= 1), else the OpenMP default.
int worker_count();
constexpr const char* kWorkersEnv = "MONTRAJ_WORKERS";

struct RunOptions {
    int workers = 1;
    std::ostream* log = nullptr;
};

/// Runs all trajectories of one point. Per-trajectory summaries are appended to
/// `store` as they finish; indices already present there are skipped, so an
/// interrupted run resumes. Throws NumericalError if more than 5% fail.
EnsembleAggregate run_point(const ExperimentPlan& plan, const GridPoint& point, std::size_t point_index,
                            const std::filesystem::path& store, const RunOptions& options);

/// Runs every grid point and writes the outputs into plan.output.
std::vector<EnsembleAggregate> run_ensemble(const ExperimentPlan& plan, const RunOptions& options);

/// Reads a per-trajectory store; a torn last line is ignored.
std::vector<TrajectorySummary> read_store(const std::filesystem::path& store);
void append_store(const std::filesystem::path& store, const TrajectorySummary& summary);

// ---------------------------------------------------------------------------
// Finite-size scan

struct GapSample {
    int L = 0;
    double gamma = 0.0;
    Estimate delta_nu;
};

struct ScanRow {
    double gamma = 0.0;
    std::vector<int> L;
    std::vector<Estimate> delta_nu;
    std::vector<Estimate> slope;
    /// delta_nu ~ a + b / L by least squares (a is the 1/L -> 0 limit).
    double extrapolated = 0.0;
    double inverse_L_coefficient = 0.0;
};

struct PairCrossing {
    int L1 = 0;
    int L2 = 0;
    std::optional<double> gamma;
    std::string diagnostic;
};

struct ScanResult {
    std::vector<ScanRow> rows;  // ascending gamma
    std::vector<PairCrossing> pairs;
    std::optional<double> crossing;  // mean over determined pairs
    std::string diagnostic;
};

/// Needs at least two system sizes (ConfigError otherwise) and the same gamma
/// grid for every size.
ScanResult finite_size_scan(std::span<const GapSample> samples);

// ---------------------------------------------------------------------------
// Outputs

constexpr const char* kCsvHeader = "gamma,L,U,observable,ell_or_alpha,quantity,mean,stderr,n_traj";

void write_csv(std::ostream& out, std::span<const EnsembleAggregate> aggregates);

struct ResultSet {
    ExperimentPlan plan;
    std::vector<EnsembleAggregate> aggregates;
};

/// aggregates.csv and summary.json in `dir`. The JSON carries the plan echo,
/// the version, the seeds, every aggregate, the gap table and the CFT fits.
void emit_outputs(const ExperimentPlan& plan, std::span<const EnsembleAggregate> aggregates,
                  const std::filesystem::path& dir);
ResultSet load_results(const std::filesystem::path& dir);

struct GapGroup {
    double U = 0.0;
    Observable observable = Observable::Occupation;
    std::vector<GapSample> samples;
    int sizes() const;
};

/// Gap samples of every (U, observable) group, for finite_size_scan.
std::vector<GapGroup> gap_groups(std::span<const EnsembleAggregate> aggregates);

struct GroupScan {
    double U = 0.0;
    Observable observable = Observable::Occupation;
    ScanResult result;
};

/// finite_size_scan of every group with at least two sizes. ConfigError if
/// there is none.
std::vector<GroupScan> scan_results(const ResultSet& results);
void print_scan(std::ostream& out, std::span<const GroupScan> scans);

struct PointFit {
    GridPoint point;
    std::optional<CftFit> fit;
    std::string note;
};

/// CFT fit of the late-time entropy profile of every point.
std::vector<PointFit> fit_results(const ResultSet& results, int ell_min = -1, int ell_max = -1);
void print_fits(std::ostream& out, std::span<const PointFit> fits);

std::string version_string();

}  // namespace montraj
