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

#include <memory>
#include <string_view>
#include <vector>

#include "montraj/dense.hpp"
#include "montraj/gaussian.hpp"
#include "montraj/mps.hpp"
#include "montraj/observables.hpp"

namespace montraj {

enum class BackendKind { Dense, Gaussian, Mps };

std::string_view to_string(BackendKind kind);
BackendKind backend_from_string(std::string_view name);

/// Throws UnsupportedError / ConfigError if `kind` cannot simulate `spec`.
void check_compatible(BackendKind kind, const ChainSpec& spec);

/// Uniform interface the trajectory engine drives. One instance owns one
/// trajectory state and is not shared between threads.
class Backend {
   public:
    virtual ~Backend() = default;

    virtual BackendKind kind() const = 0;
    const ChainSpec& spec() const { return spec_; }

    /// Back to the initial product state.
    virtual void reset() = 0;
    /// One Trotter step exp(-i H dt).
    virtual void unitary_step() = 0;
    virtual std::vector<double> born_probabilities(int location) = 0;
    /// Projects on outcome q of the spec's observable; returns <Pi_q>.
    virtual double project(int location, int outcome) = 0;

    virtual EntropyProfile entropy_profile() = 0;
    virtual Matrix one_body_matrix() = 0;

   protected:
    explicit Backend(const ChainSpec& spec);

    ChainSpec spec_;
    ProjectorSet projectors_;
};

class DenseBackend final : public Backend {
   public:
    explicit DenseBackend(const ChainSpec& spec);

    BackendKind kind() const override { return BackendKind::Dense; }
    void reset() override;
    void unitary_step() override;
    std::vector<double> born_probabilities(int location) override;
    double project(int location, int outcome) override;
    EntropyProfile entropy_profile() override;
    Matrix one_body_matrix() override;

    const DenseState& state() const { return state_; }

   private:
    TrotterSchedule trotter_;
    DenseState state_;
};

/// Free fermions with occupation measurements only. The unitary step is the
/// same second-order splitting as the other backends, carried out in the
/// single-particle space, so records agree with them bond for bond.
class GaussianBackend final : public Backend {
   public:
    explicit GaussianBackend(const ChainSpec& spec);

    BackendKind kind() const override { return BackendKind::Gaussian; }
    void reset() override;
    void unitary_step() override;
    std::vector<double> born_probabilities(int location) override;
    double project(int location, int outcome) override;
    EntropyProfile entropy_profile() override;
    Matrix one_body_matrix() override { return state_.C; }

    const GaussianPureState& state() const { return state_; }

   private:
    Matrix step_;  // single-particle propagator of one Trotter step
    GaussianPureState state_;
};

class MpsBackend final : public Backend {
   public:
    MpsBackend(const ChainSpec& spec, const TruncationPolicy& policy);

    BackendKind kind() const override { return BackendKind::Mps; }
    void reset() override;
    void unitary_step() override;
    std::vector<double> born_probabilities(int location) override;
    double project(int location, int outcome) override;
    EntropyProfile entropy_profile() override;
    Matrix one_body_matrix() override { return state_.one_body_matrix(); }

    MpsState& state() { return state_; }
    const TruncationPolicy& policy() const { return policy_; }

   private:
    TrotterSchedule trotter_;
    TruncationPolicy policy_;
    MpsState state_;
};

std::unique_ptr<Backend> make_backend(BackendKind kind, const ChainSpec& spec,
                                      const TruncationPolicy& policy = TruncationPolicy{});

/// Single-particle matrix of one second-order Trotter step for U = 0.
Matrix single_particle_trotter_step(const ChainSpec& spec);

/// Neel occupation pattern 1, 0, 1, 0, ...
std::vector<int> neel_pattern(int L);

}  // namespace montraj
