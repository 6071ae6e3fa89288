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

#include <array>
#include <span>

#include "montraj/model.hpp"
#include "montraj/types.hpp"

namespace montraj {

/// Pure fermionic Gaussian state (Slater determinant) held through its
/// correlation matrix C_kl = <c+_k c_l>.
struct GaussianPureState {
    Matrix C;

    static GaussianPureState product(std::span<const int> occupations);
    static GaussianPureState neel(int L);

    int L() const { return static_cast<int>(C.rows()); }
    double particle_number() const { return C.trace().real(); }
};

/// Single-particle hopping matrix h_kl = -1/2 (delta_{k,l+1} + delta_{k+1,l}).
Eigen::MatrixXd hopping_matrix(int L);

/// Free evolution for time t: C -> e^{iht} C e^{-iht}. Requires U = 0.
GaussianPureState propagate(const GaussianPureState& state, const ChainSpec& spec, double t);

/// Precomputed e^{-iht} so repeated steps cost one pair of matrix products.
class GaussianPropagator {
   public:
    GaussianPropagator(const ChainSpec& spec, double t);
    void apply(GaussianPureState& state) const;

   private:
    Matrix forward_;  // e^{-iht}
};

struct GaussianMeasurement {
    int outcome = 0;
    GaussianPureState state;
    double prob = 0.0;
};

/// Born probabilities {1 - C_jj, C_jj} of n_j = 0, 1.
std::array<double, 2> occupation_probabilities(const GaussianPureState& state, int site);

/// Projects site j on occupation `outcome` and returns the Born probability.
double project_occupation(GaussianPureState& state, int site, int outcome);

GaussianMeasurement measure_occupation(GaussianPureState state, int site, double random_draw);

/// ||C^2 - C||_max.
double purity_check(const GaussianPureState& state);

}  // namespace montraj
