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

#include "montraj/dense.hpp"
#include "montraj/gaussian.hpp"
#include "montraj/mps.hpp"
#include "montraj/types.hpp"

namespace montraj {

/// Eigenvalues closer than this to 0 or 1 contribute nothing to entropies.
constexpr double kEntropyClip = 1e-12;

/// -p log p with the clipping above; natural log throughout.
double entropy_term(double p);

/// H2(nu) = -nu log nu - (1 - nu) log(1 - nu).
double binary_entropy(double nu);

/// Von Neumann entropy of a probability vector.
double shannon_entropy(std::span<const double> probs);

double von_neumann_entropy(const DensityMatrix& rho);

/// Entanglement entropies S(ell) of the left blocks ell = 1..L-1.
struct EntropyProfile {
    RealVector S;

    int length() const { return static_cast<int>(S.size()) + 1; }
};

EntropyProfile entropy_profile(const DenseState& state);
EntropyProfile entropy_profile(const GaussianPureState& state);
EntropyProfile entropy_profile(MpsState& state);

Matrix one_body_matrix(MpsState& state);
inline Matrix one_body_matrix(const GaussianPureState& state) { return state.C; }

/// Natural-orbital occupations sorted in descending order.
struct OrbitalSpectrum {
    RealVector nu;
    int N = 0;
};

/// Eigenvalues of a Hermitian one-body matrix; values within kEntropyClip of 0
/// or 1 are set to 0 or 1. Throws
/// NumericalError for an eigenvalue outside [-1e-6, 1 + 1e-6].
OrbitalSpectrum orbital_spectrum(const Matrix& C);

/// sum_alpha H2(nu_alpha).
double total_ng(const OrbitalSpectrum& spectrum);

/// S(rho_G) - S(rho) for a number-conserving dense density matrix.
double ng_mixed(const DensityMatrix& rho);

struct GapStats {
    double delta_nu = 0.0;  // nu_N - nu_{N+1}
    double slope = 0.0;     // delta_nu * L
};

GapStats gap(const OrbitalSpectrum& spectrum);

struct CftFit {
    double alpha = 0.0;
    double s0 = 0.0;
    double residual = 0.0;
    int points = 0;
};

/// Chord length (2L/pi) sin(pi ell / L).
double chord_length(int ell, int L);

/// Least-squares fit of S(ell) = alpha log x(ell) + s0 over ell_min..ell_max.
/// Negative bounds select the default range 2..L-2.
CftFit cft_fit(const EntropyProfile& profile, int L, int ell_min = -1, int ell_max = -1);

}  // namespace montraj
