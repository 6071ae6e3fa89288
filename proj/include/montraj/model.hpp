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
#include <string>
#include <vector>

#include "montraj/types.hpp"

namespace montraj {

/// A one- or two-site operator in the occupation basis.
///
/// Single-site basis is {|0>, |1>} with |0> the empty site (spin up under the
/// Jordan-Wigner map). Two-site basis is {|00>, |01>, |10>, |11>} with the
/// left site as the most significant digit.
struct LocalOperator {
    int support = 1;
    Matrix matrix;

    bool is_hermitian(double tol = 1e-12) const;
    bool is_unitary(double tol = 1e-12) const;
};

struct ProjectorOutcome {
    std::string label;
    double eigenvalue = 0.0;
    LocalOperator projector;
};

/// Complete set of orthogonal projectors for a local observable.
struct ProjectorSet {
    Observable observable = Observable::Occupation;
    std::vector<ProjectorOutcome> outcomes;

    int support() const { return outcomes.empty() ? 0 : outcomes.front().projector.support; }
    int size() const { return static_cast<int>(outcomes.size()); }
    int index_of(std::string_view label) const;
};

/// Two-site Hamiltonian term -1/2 (c+_b c_{b+1} + h.c.) + U n_b n_{b+1}.
LocalOperator hamiltonian_bond_matrix(const ChainSpec& spec, int bond);

/// exp(-i h tau) for one bond term.
LocalOperator bond_propagator(const ChainSpec& spec, int bond, double tau);

struct TrotterLayer {
    std::vector<int> bonds;
    std::vector<LocalOperator> gates;
};

/// Second-order even-odd splitting of exp(-i H dt).
///
/// Layers are applied in order: odd bonds for dt/2, even bonds for dt, odd
/// bonds for dt/2. "Even" bonds are b = 0, 2, 4, ... in zero-based indexing.
struct TrotterSchedule {
    std::vector<TrotterLayer> layers;
};

TrotterSchedule trotter_gates(const ChainSpec& spec);

ProjectorSet occupation_projectors();
ProjectorSet current_projectors();
ProjectorSet projectors_for(Observable obs);

/// Clamps Born probabilities in [-1e-12, 0) to zero. Throws NumericalError on
/// anything more negative.
void clamp_probabilities(std::span<double> probs);

/// Picks the first outcome q with draw < sum_{q' <= q} p_q'. A draw beyond the
/// accumulated total (rounding) falls back to the last outcome with non-zero
/// probability. Throws NumericalError if the chosen probability is below 1e-14.
int select_outcome(std::span<const double> probs, double draw);

/// n_b + n_{b+1} on two sites.
Matrix4 two_site_number();

/// Single-site ladder and Pauli matrices in the occupation basis.
namespace ops {
Matrix2 identity();
Matrix2 sigma_z();      // +1 on |0>, -1 on |1>
Matrix2 creation();     // |1><0|, the sigma^- of the spin picture
Matrix2 annihilation(); // |0><1|, the sigma^+ of the spin picture
Matrix2 number();
}  // namespace ops

}  // namespace montraj
