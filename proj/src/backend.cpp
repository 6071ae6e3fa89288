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

#include "montraj/backend.hpp"

#include <cmath>
#include <string>

namespace montraj {

std::string_view to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::Dense:
            return "dense";
        case BackendKind::Gaussian:
            return "gaussian";
        case BackendKind::Mps:
            return "mps";
    }
    return "unknown";
}

BackendKind backend_from_string(std::string_view name) {
    if (name == "dense") return BackendKind::Dense;
    if (name == "gaussian") return BackendKind::Gaussian;
    if (name == "mps") return BackendKind::Mps;
    throw ConfigError("backend must be 'dense', 'gaussian' or 'mps', got '" + std::string(name) + "'");
}

void check_compatible(BackendKind kind, const ChainSpec& spec) {
    spec.validate();
    switch (kind) {
        case BackendKind::Dense:
            if (spec.L > kMaxDenseSites) {
                throw ConfigError("dense backend supports L <= " + std::to_string(kMaxDenseSites));
            }
            break;
        case BackendKind::Gaussian:
            if (spec.U != 0.0) throw UnsupportedError("gaussian backend requires U = 0");
            if (spec.observable != Observable::Occupation) {
                throw UnsupportedError("gaussian backend cannot represent current measurements");
            }
            break;
        case BackendKind::Mps:
            break;
    }
}

std::vector<int> neel_pattern(int L) {
    std::vector<int> occ(static_cast<std::size_t>(L));
    for (int j = 0; j < L; ++j) occ[j] = (j % 2 == 0) ? 1 : 0;
    return occ;
}

Backend::Backend(const ChainSpec& spec) : spec_(spec), projectors_(projectors_for(spec.observable)) {}

DenseBackend::DenseBackend(const ChainSpec& spec) : Backend(spec), trotter_(trotter_gates(spec)) {
    check_compatible(BackendKind::Dense, spec);
    reset();
}

void DenseBackend::reset() { state_ = DenseState::neel(spec_.L); }

void DenseBackend::unitary_step() { apply_trotter_step(state_, trotter_); }

std::vector<double> DenseBackend::born_probabilities(int location) {
    return montraj::born_probabilities(state_, location, projectors_);
}

double DenseBackend::project(int location, int outcome) {
    return montraj::project(state_, location, projectors_.outcomes.at(static_cast<std::size_t>(outcome)));
}

EntropyProfile DenseBackend::entropy_profile() { return montraj::entropy_profile(state_); }

Matrix DenseBackend::one_body_matrix() { return montraj::one_body_matrix(state_); }

Matrix single_particle_trotter_step(const ChainSpec& spec) {
    const int L = spec.L;
    auto layer = [&](int parity, double tau) {
        // Single-particle exp(-i h_b tau) with h_b = -1/2 sigma^x on sites (b, b+1).
        Matrix W = Matrix::Identity(L, L);
        const Complex c(std::cos(tau / 2), 0.0);
        const Complex s(0.0, std::sin(tau / 2));
        for (int b = parity; b + 1 < L; b += 2) {
            W(b, b) = c;
            W(b + 1, b + 1) = c;
            W(b, b + 1) = s;
            W(b + 1, b) = s;
        }
        return W;
    };
    const Matrix half = layer(1, spec.dt / 2);
    return half * layer(0, spec.dt) * half;
}

GaussianBackend::GaussianBackend(const ChainSpec& spec) : Backend(spec), step_(single_particle_trotter_step(spec)) {
    check_compatible(BackendKind::Gaussian, spec);
    reset();
}

void GaussianBackend::reset() { state_ = GaussianPureState::neel(spec_.L); }

void GaussianBackend::unitary_step() { state_.C = (step_.conjugate() * state_.C * step_.transpose()).eval(); }

std::vector<double> GaussianBackend::born_probabilities(int location) {
    const auto p = occupation_probabilities(state_, location);
    return {p[0], p[1]};
}

double GaussianBackend::project(int location, int outcome) { return project_occupation(state_, location, outcome); }

EntropyProfile GaussianBackend::entropy_profile() { return montraj::entropy_profile(state_); }

MpsBackend::MpsBackend(const ChainSpec& spec, const TruncationPolicy& policy)
    : Backend(spec), trotter_(trotter_gates(spec)), policy_(policy), state_(MpsState::neel(spec.L)) {
    check_compatible(BackendKind::Mps, spec);
    policy_.validate();
}

void MpsBackend::reset() { state_ = MpsState::neel(spec_.L); }

void MpsBackend::unitary_step() {
    for (const TrotterLayer& layer : trotter_.layers) {
        const int n = static_cast<int>(layer.bonds.size());
        if (n == 0) continue;
        // Gates within a layer commute; walk them from whichever end is nearer
        // the orthogonality center.
        const bool forward = state_.center() <= (layer.bonds.front() + layer.bonds.back() + 1) / 2;
        for (int g = 0; g < n; ++g) {
            const int k = forward ? g : n - 1 - g;
            state_.apply_two_site_gate(layer.bonds[k], Matrix4(layer.gates[k].matrix), policy_);
        }
    }
}

std::vector<double> MpsBackend::born_probabilities(int location) {
    return state_.born_probabilities(location, projectors_);
}

double MpsBackend::project(int location, int outcome) {
    return state_.apply_projector(location, projectors_.outcomes.at(static_cast<std::size_t>(outcome)).projector,
                                  policy_);
}

EntropyProfile MpsBackend::entropy_profile() { return montraj::entropy_profile(state_); }

std::unique_ptr<Backend> make_backend(BackendKind kind, const ChainSpec& spec, const TruncationPolicy& policy) {
    switch (kind) {
        case BackendKind::Dense:
            return std::make_unique<DenseBackend>(spec);
        case BackendKind::Gaussian:
            return std::make_unique<GaussianBackend>(spec);
        case BackendKind::Mps:
            return std::make_unique<MpsBackend>(spec, policy);
    }
    throw ConfigError("unknown backend");
}

}  // namespace montraj
