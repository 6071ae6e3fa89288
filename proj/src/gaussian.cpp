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

#include "montraj/gaussian.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace montraj {

GaussianPureState GaussianPureState::product(std::span<const int> occupations) {
    const int L = static_cast<int>(occupations.size());
    GaussianPureState s{Matrix::Zero(L, L)};
    for (int j = 0; j < L; ++j) {
        if (occupations[j] != 0 && occupations[j] != 1) throw ConfigError("occupations must be 0 or 1");
        s.C(j, j) = occupations[j];
    }
    return s;
}

GaussianPureState GaussianPureState::neel(int L) {
    std::vector<int> occ(static_cast<std::size_t>(L));
    for (int j = 0; j < L; ++j) occ[j] = (j % 2 == 0) ? 1 : 0;
    return product(occ);
}

Eigen::MatrixXd hopping_matrix(int L) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(L, L);
    for (int j = 0; j + 1 < L; ++j) {
        h(j, j + 1) = -0.5;
        h(j + 1, j) = -0.5;
    }
    return h;
}

GaussianPropagator::GaussianPropagator(const ChainSpec& spec, double t) {
    if (spec.U != 0.0) throw UnsupportedError("Gaussian backend requires U = 0");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hopping_matrix(spec.L));
    Vector phases(spec.L);
    for (int k = 0; k < spec.L; ++k) phases(k) = std::exp(Complex(0.0, -es.eigenvalues()(k) * t));
    const Matrix V = es.eigenvectors().cast<Complex>();
    forward_ = V * phases.asDiagonal() * V.adjoint();
}

void GaussianPropagator::apply(GaussianPureState& state) const {
    // c_l(t) = sum_m (e^{-iht})_{lm} c_m, so C(t) = conj(W) C W^T with W = e^{-iht}.
    state.C = (forward_.conjugate() * state.C * forward_.transpose()).eval();
}

GaussianPureState propagate(const GaussianPureState& state, const ChainSpec& spec, double t) {
    GaussianPureState out = state;
    GaussianPropagator(spec, t).apply(out);
    return out;
}

std::array<double, 2> occupation_probabilities(const GaussianPureState& state, int site) {
    const double n = state.C(site, site).real();
    if (n < -1e-10 || n > 1.0 + 1e-10) {
        throw NumericalError("site occupation " + std::to_string(n) + " outside [0, 1]");
    }
    const double p1 = std::clamp(n, 0.0, 1.0);
    return {1.0 - p1, p1};
}

double project_occupation(GaussianPureState& state, int site, int outcome) {
    const int L = state.L();
    if (site < 0 || site >= L) throw ConfigError("site out of range");
    const auto probs = occupation_probabilities(state, site);
    int q = outcome;
    if (probs[q] < 1e-12) q = 1 - q;  // degenerate draw: the complementary outcome is certain
    const double n = state.C(site, site).real();
    const Vector col = state.C.col(site);
    const Eigen::RowVectorXcd row = state.C.row(site);
    if (q == 1) {
        state.C -= col * row / n;
    } else {
        state.C += col * row / (1.0 - n);
    }
    state.C.row(site).setZero();
    state.C.col(site).setZero();
    state.C(site, site) = static_cast<double>(q);
    return probs[q];
}

GaussianMeasurement measure_occupation(GaussianPureState state, int site, double random_draw) {
    const auto probs = occupation_probabilities(state, site);
    int q = random_draw < probs[0] ? 0 : 1;
    if (probs[q] < 1e-12) q = 1 - q;
    const double p = project_occupation(state, site, q);
    return {q, std::move(state), p};
}

double purity_check(const GaussianPureState& state) {
    return (state.C * state.C - state.C).cwiseAbs().maxCoeff();
}

}  // namespace montraj
