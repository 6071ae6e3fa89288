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

#include "montraj/trajectory.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

#include <nlohmann/json.hpp>

namespace montraj {

using nlohmann::json;

namespace {

constexpr double kNumberTolerance = 1e-8;

void check_number(const ObservableSnapshot& snap, double expected) {
    const double n = snap.C.trace().real();
    if (std::abs(n - expected) > kNumberTolerance) {
        throw NumericalError("particle number drifted to " + std::to_string(n) + " at step " +
                             std::to_string(snap.step));
    }
}

ObservableSnapshot take_snapshot(Backend& backend, int step) {
    ObservableSnapshot snap;
    snap.step = step;
    snap.time = step * backend.spec().dt;
    snap.entropy = backend.entropy_profile();
    snap.C = backend.one_body_matrix();
    return snap;
}

double initial_particle_number(const ChainSpec& spec) {
    const std::vector<int> occ = neel_pattern(spec.L);
    return std::accumulate(occ.begin(), occ.end(), 0.0);
}

bool should_sample(int step, int stride, const SamplingOptions& sampling, double dt) {
    if (step == 0) return true;
    if (step % stride != 0) return false;
    return step * dt >= sampling.record_from - 1e-12;
}

double truncation_error_of(Backend& backend) {
    if (auto* mps = dynamic_cast<MpsBackend*>(&backend)) return mps->state().truncation_error();
    return 0.0;
}

[[noreturn]] void rethrow_annotated(const std::exception& e, int step, int location) {
    const std::string where = "step " + std::to_string(step) + ", location " + std::to_string(location) + ": ";
    if (dynamic_cast<const BackendInconsistencyError*>(&e)) throw BackendInconsistencyError(where + e.what());
    throw NumericalError(where + e.what());
}

}  // namespace

Rng::Rng(std::uint64_t master_seed, std::uint64_t stream_index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(stream_index), static_cast<std::uint32_t>(stream_index >> 32)};
    engine_.seed(seq);
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
    // Rejection sampling keeps the result exactly uniform.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

int SamplingOptions::stride(double dt) const { return std::max(1, static_cast<int>(std::lround(interval / dt))); }

std::vector<int> schedule_step(Rng& rng, const ChainSpec& spec) {
    const double p = spec.trigger_probability();
    std::vector<int> triggered;
    for (int loc = 0; loc < spec.num_locations(); ++loc) {
        if (rng.uniform() < p) triggered.push_back(loc);
    }
    for (std::size_t i = triggered.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(triggered[i - 1], triggered[j]);
    }
    return triggered;
}

TrajectoryRecord run_trajectory(Backend& backend, std::uint64_t seed, std::uint64_t stream,
                                const SamplingOptions& sampling) {
    const ChainSpec& spec = backend.spec();
    spec.validate();
    TrajectoryRecord rec;
    rec.spec = spec;
    rec.seed = seed;
    rec.stream = stream;
    rec.backend = backend.kind();
    rec.sampling = sampling;

    backend.reset();
    Rng rng(seed, stream);
    const int stride = sampling.stride(spec.dt);
    const double n0 = initial_particle_number(spec);

    for (int step = 0; step <= spec.n_steps; ++step) {
        int location = -1;
        try {
            if (step > 0) {
                backend.unitary_step();
                for (int loc : schedule_step(rng, spec)) {
                    location = loc;
                    const std::vector<double> probs = backend.born_probabilities(loc);
                    const int q = select_outcome(probs, rng.uniform());
                    backend.project(loc, q);
                    rec.events.push_back({step, loc, spec.observable, q, probs[q]});
                }
                location = -1;
            }
            if (should_sample(step, stride, sampling, spec.dt)) {
                rec.samples.push_back(take_snapshot(backend, step));
                check_number(rec.samples.back(), n0);
            }
        } catch (const NumericalError& e) {
            rethrow_annotated(e, step, location);
        }
    }
    rec.truncation_error = truncation_error_of(backend);
    return rec;
}

TrajectoryRecord replay(const TrajectoryRecord& record, Backend& backend) {
    const ChainSpec& spec = backend.spec();
    if (spec.L != record.spec.L || spec.observable != record.spec.observable || spec.n_steps != record.spec.n_steps) {
        throw ConfigError("backend spec does not match the record");
    }
    TrajectoryRecord out = record;
    out.backend = backend.kind();
    out.samples.clear();
    out.max_prob_deviation = 0.0;

    backend.reset();
    const int stride = record.sampling.stride(spec.dt);
    const double n0 = initial_particle_number(spec);
    std::size_t next = 0;
    for (int step = 0; step <= spec.n_steps; ++step) {
        int location = -1;
        try {
            if (step > 0) {
                backend.unitary_step();
                while (next < record.events.size() && record.events[next].step == step) {
                    const MeasurementEvent& ev = record.events[next++];
                    location = ev.location;
                    const std::vector<double> probs = backend.born_probabilities(ev.location);
                    const double dev = std::abs(probs.at(static_cast<std::size_t>(ev.outcome)) - ev.born_prob);
                    out.max_prob_deviation = std::max(out.max_prob_deviation, dev);
                    if (dev > 1e-6) {
                        throw BackendInconsistencyError("Born probability " + std::to_string(probs[ev.outcome]) +
                                                        " differs from logged " + std::to_string(ev.born_prob));
                    }
                    backend.project(ev.location, ev.outcome);
                }
                location = -1;
            }
            if (should_sample(step, stride, record.sampling, spec.dt)) {
                out.samples.push_back(take_snapshot(backend, step));
                check_number(out.samples.back(), n0);
            }
        } catch (const NumericalError& e) {
            rethrow_annotated(e, step, location);
        }
    }
    if (next != record.events.size()) throw ConfigError("record contains events beyond n_steps");
    out.truncation_error = truncation_error_of(backend);
    return out;
}

namespace {

json spec_to_json(const ChainSpec& s) {
    return {{"L", s.L},         {"U", s.U},   {"gamma", s.gamma},         {"observable", to_string(s.observable)},
            {"dt", s.dt},       {"n_steps", s.n_steps}, {"initial_state", "neel"}};
}

ChainSpec spec_from_json(const json& j) {
    ChainSpec s;
    s.L = j.at("L").get<int>();
    s.U = j.at("U").get<double>();
    s.gamma = j.at("gamma").get<double>();
    s.observable = observable_from_string(j.at("observable").get<std::string>());
    s.dt = j.at("dt").get<double>();
    s.n_steps = j.at("n_steps").get<int>();
    return s;
}

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ConfigError("truncated snapshot file");
    return v;
}

}  // namespace

void write_record(const TrajectoryRecord& record, const std::filesystem::path& events_path,
                  const std::filesystem::path& snapshot_path) {
    std::ofstream ev(events_path, std::ios::binary);
    if (!ev) throw ConfigError("cannot write " + events_path.string());
    json header = {{"format", "montraj-trajectory"},
                   {"version", kRecordFormatVersion},
                   {"spec", spec_to_json(record.spec)},
                   {"seed", record.seed},
                   {"stream", record.stream},
                   {"backend", to_string(record.backend)},
                   {"sampling_interval", record.sampling.interval},
                   {"record_from", record.sampling.record_from},
                   {"truncation_error", record.truncation_error},
                   {"snapshots", snapshot_path.filename().string()},
                   {"num_snapshots", record.samples.size()}};
    ev << header.dump() << '\n';
    const ProjectorSet set = projectors_for(record.spec.observable);
    for (const MeasurementEvent& e : record.events) {
        json line = {{"step", e.step},
                     {"location", e.location},
                     {"observable", to_string(e.observable)},
                     {"outcome", e.outcome},
                     {"label", set.outcomes.at(static_cast<std::size_t>(e.outcome)).label},
                     {"born_prob", e.born_prob}};
        ev << line.dump() << '\n';
    }

    std::ofstream snap(snapshot_path, std::ios::binary);
    if (!snap) throw ConfigError("cannot write " + snapshot_path.string());
    put<std::uint8_t>(snap, static_cast<std::uint8_t>(kRecordFormatVersion));
    put<std::int32_t>(snap, static_cast<std::int32_t>(record.samples.size()));
    for (const ObservableSnapshot& s : record.samples) {
        const int L = static_cast<int>(s.C.rows());
        put<std::int32_t>(snap, s.step);
        put<double>(snap, s.time);
        put<std::int32_t>(snap, L);
        for (Eigen::Index k = 0; k < s.entropy.S.size(); ++k) put<double>(snap, s.entropy.S(k));
        for (int r = 0; r < L; ++r)
            for (int c = 0; c < L; ++c) {
                put<double>(snap, s.C(r, c).real());
                put<double>(snap, s.C(r, c).imag());
            }
    }
}

TrajectoryRecord read_record(const std::filesystem::path& events_path) {
    std::ifstream ev(events_path);
    if (!ev) throw ConfigError("cannot read " + events_path.string());
    std::string line;
    if (!std::getline(ev, line)) throw ConfigError("empty trajectory record");
    const json header = json::parse(line);
    if (header.value("format", "") != "montraj-trajectory" || header.value("version", 0) != kRecordFormatVersion) {
        throw ConfigError("unsupported trajectory record format");
    }
    TrajectoryRecord rec;
    rec.spec = spec_from_json(header.at("spec"));
    rec.seed = header.at("seed").get<std::uint64_t>();
    rec.stream = header.at("stream").get<std::uint64_t>();
    rec.backend = backend_from_string(header.at("backend").get<std::string>());
    rec.sampling.interval = header.at("sampling_interval").get<double>();
    rec.sampling.record_from = header.at("record_from").get<double>();
    rec.truncation_error = header.at("truncation_error").get<double>();
    while (std::getline(ev, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        rec.events.push_back({j.at("step").get<int>(), j.at("location").get<int>(),
                              observable_from_string(j.at("observable").get<std::string>()),
                              j.at("outcome").get<int>(), j.at("born_prob").get<double>()});
    }

    const auto snap_path = events_path.parent_path() / header.at("snapshots").get<std::string>();
    std::ifstream snap(snap_path, std::ios::binary);
    if (!snap) throw ConfigError("cannot read " + snap_path.string());
    if (get<std::uint8_t>(snap) != kRecordFormatVersion) throw ConfigError("unsupported snapshot version");
    const int count = get<std::int32_t>(snap);
    for (int i = 0; i < count; ++i) {
        ObservableSnapshot s;
        s.step = get<std::int32_t>(snap);
        s.time = get<double>(snap);
        const int L = get<std::int32_t>(snap);
        s.entropy.S.resize(L - 1);
        for (int k = 0; k + 1 < L; ++k) s.entropy.S(k) = get<double>(snap);
        s.C.resize(L, L);
        for (int r = 0; r < L; ++r)
            for (int c = 0; c < L; ++c) {
                const double re = get<double>(snap);
                const double im = get<double>(snap);
                s.C(r, c) = Complex(re, im);
            }
        rec.samples.push_back(std::move(s));
    }
    return rec;
}

}  // namespace montraj
