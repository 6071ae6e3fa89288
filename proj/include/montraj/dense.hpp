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

#include <span>
#include <vector>

#include "montraj/model.hpp"
#include "montraj/types.hpp"

namespace montraj {

/// Full statevector on 2^L amplitudes. Site 0 is the most significant bit of
/// the basis index, so |n_0 n_1 ... n_{L-1}> sits at sum_j n_j 2^(L-1-j).
struct DenseState {
    int L = 0;
    Vector amplitudes;

    static DenseState product(std::span<const int> occupations);
    static DenseState neel(int L);

    double norm() const;
    std::span<Complex> span() { return {amplitudes.data(), static_cast<std::size_t>(amplitudes.size())}; }
    std::span<const Complex> span() const {
        return {amplitudes.data(), static_cast<std::size_t>(amplitudes.size())};
    }
};

struct DensityMatrix {
    int L = 0;
    Matrix rho;

    static DensityMatrix pure(const DenseState& psi);
    static DensityMatrix maximally_mixed(int L);

    double trace() const { return rho.trace().real(); }
    double purity() const { return (rho * rho).trace().real(); }
    double min_eigenvalue() const;
};

constexpr int kMaxDenseSites = 20;
constexpr int kMaxLindbladSites = 8;

/// Applies a local operator at a site (support 1) or bond (support 2) in place.
void apply_local(DenseState& state, int location, const LocalOperator& op);

DenseState apply_two_site_unitary(DenseState state, int bond, const LocalOperator& gate);

/// One step of exp(-i H dt) by the second-order splitting.
void apply_trotter_step(DenseState& state, const TrotterSchedule& schedule);

/// Born probabilities <Pi_q> for every outcome of the set at a location.
std::vector<double> born_probabilities(const DenseState& state, int location, const ProjectorSet& set);

/// Pi_q |psi> / sqrt(<Pi_q>); returns <Pi_q>.
double project(DenseState& state, int location, const ProjectorOutcome& outcome);

struct MeasurementResult {
    int outcome = -1;
    DenseState state;
    double prob = 0.0;
};

MeasurementResult projective_measure(DenseState state, int location, const ProjectorSet& set, double random_draw);

/// Right-hand side of the monitored master equation,
/// -i[H, rho] + gamma sum_{j,q} (Pi rho Pi - {Pi, rho}/2).
Matrix lindblad_rhs(const Matrix& rho, const ChainSpec& spec);

/// Fixed-step RK4 integration of the master equation up to time T, with a
/// step no larger than spec.dt. Throws NumericalError on trace drift > 1e-6.
DensityMatrix lindblad_evolve(const DensityMatrix& rho0, const ChainSpec& spec, double T);

/// Reduced state of the leftmost `ell` sites.
DensityMatrix reduced_density_matrix(const DenseState& state, int ell);

/// Traces out the leftmost or rightmost `count` sites of a mixed state.
DensityMatrix trace_out_left(const DensityMatrix& rho, int count);
DensityMatrix trace_out_right(const DensityMatrix& rho, int count);

/// C_kl = tr(rho c+_k c_l).
Matrix one_body_matrix(const DensityMatrix& rho);
Matrix one_body_matrix(const DenseState& state);

/// max_{k<l} |tr(rho c_k c_l)|.
double max_anomalous_correlator(const DensityMatrix& rho);

/// <N> for a pure state.
double particle_number(const DenseState& state);

}  // namespace montraj
