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

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "montraj/backend.hpp"

namespace montraj {

/// Per-trajectory random stream. The engine is keyed by (master_seed,
/// stream_index) through std::seed_seq, so every trajectory of an ensemble
/// gets an independent, reproducible stream regardless of scheduling.
class Rng {
   public:
    Rng(std::uint64_t master_seed, std::uint64_t stream_index);

    /// Uniform double in [0, 1) built from the top 53 bits.
    double uniform();
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

   private:
    std::mt19937_64 engine_;
};

struct MeasurementEvent {
    int step = 0;
    int location = 0;
    Observable observable = Observable::Occupation;
    int outcome = 0;
    double born_prob = 0.0;
};

struct ObservableSnapshot {
    int step = 0;
    double time = 0.0;
    EntropyProfile entropy;
    Matrix C;
};

struct SamplingOptions {
    /// Time between snapshots; rounded to a whole number of steps (at least 1).
    double interval = 1.0;
    /// No snapshots before this time except the initial one.
    double record_from = 0.0;

    int stride(double dt) const;
};

struct TrajectoryRecord {
    ChainSpec spec;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    BackendKind backend = BackendKind::Dense;
    SamplingOptions sampling;
    std::vector<MeasurementEvent> events;
    std::vector<ObservableSnapshot> samples;
    /// Largest |p_recomputed - p_logged| seen during replay (0 for fresh runs).
    double max_prob_deviation = 0.0;
    double truncation_error = 0.0;
};

/// Locations triggered in one step: each with probability gamma*dt from its
/// own uniform draw, then put in uniformly random order.
std::vector<int> schedule_step(Rng& rng, const ChainSpec& spec);

/// Runs spec.n_steps steps of (Trotter step; schedule; measure in order).
/// Snapshots are taken at step 0 and every sampling stride.
TrajectoryRecord run_trajectory(Backend& backend, std::uint64_t seed, std::uint64_t stream,
                                const SamplingOptions& sampling = {});

/// Re-applies the logged outcomes without sampling. Throws
/// BackendInconsistencyError if a recomputed Born probability differs from
/// the logged one by more than 1e-6.
TrajectoryRecord replay(const TrajectoryRecord& record, Backend& backend);

class BackendInconsistencyError : public NumericalError {
   public:
    using NumericalError::NumericalError;
};

/// Newline-delimited JSON: a header line followed by one line per event.
/// Snapshots go to a separate little-endian binary file named in the header.
void write_record(const TrajectoryRecord& record, const std::filesystem::path& events_path,
                  const std::filesystem::path& snapshot_path);
TrajectoryRecord read_record(const std::filesystem::path& events_path);

constexpr int kRecordFormatVersion = 1;

}  // namespace montraj
