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

#include "montraj/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace montraj {

double entropy_term(double p) {
    if (p <= kEntropyClip || p >= 1.0 - kEntropyClip) return 0.0;
    return -p * std::log(p);
}

double binary_entropy(double nu) {
    if (nu <= kEntropyClip || nu >= 1.0 - kEntropyClip) return 0.0;
    return -nu * std::log(nu) - (1.0 - nu) * std::log(1.0 - nu);
}

double shannon_entropy(std::span<const double> probs) {
    double s = 0.0;
    for (double p : probs) s += entropy_term(p);
    return s;
}

double von_neumann_entropy(const DensityMatrix& rho) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho.rho, Eigen::EigenvaluesOnly);
    const RealVector& w = es.eigenvalues();
    return shannon_entropy({w.data(), static_cast<std::size_t>(w.size())});
}

EntropyProfile entropy_profile(const DenseState& state) {
    EntropyProfile out{RealVector::Zero(state.L - 1)};
    for (int ell = 1; ell < state.L; ++ell) {
        const Eigen::Index dim_a = Eigen::Index{1} << ell;
        const Eigen::Index dim_b = Eigen::Index{1} << (state.L - ell);
        Eigen::Map<const Matrix> mt(state.amplitudes.data(), dim_b, dim_a);
        // Both reduced states share their nonzero spectrum; diagonalize the smaller one.
        const Matrix gram = dim_a <= dim_b ? Matrix(mt.transpose() * mt.conjugate()) : Matrix(mt * mt.adjoint());
        Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
        double s = 0.0;
        for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) s += entropy_term(es.eigenvalues()(k));
        out.S(ell - 1) = s;
    }
    return out;
}

EntropyProfile entropy_profile(const GaussianPureState& state) {
    const int L = state.L();
    EntropyProfile out{RealVector::Zero(L - 1)};
    for (int ell = 1; ell < L; ++ell) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(state.C.topLeftCorner(ell, ell), Eigen::EigenvaluesOnly);
        double s = 0.0;
        for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) s += binary_entropy(es.eigenvalues()(k));
        out.S(ell - 1) = s;
    }
    return out;
}

EntropyProfile entropy_profile(MpsState& state) {
    const int L = state.length();
    state.refresh_schmidt();
    EntropyProfile out{RealVector::Zero(L - 1)};
    for (int b = 0; b + 1 < L; ++b) {
        const RealVector lambda = state.schmidt_spectrum(b);
        double s = 0.0;
        for (Eigen::Index k = 0; k < lambda.size(); ++k) s += entropy_term(lambda(k) * lambda(k));
        out.S(b) = s;
    }
    return out;
}

Matrix one_body_matrix(MpsState& state) { return state.one_body_matrix(); }

OrbitalSpectrum orbital_spectrum(const Matrix& C) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(C, Eigen::EigenvaluesOnly);
    RealVector nu = es.eigenvalues().reverse();
    for (Eigen::Index k = 0; k < nu.size(); ++k) {
        if (nu(k) < -1e-6 || nu(k) > 1.0 + 1e-6) {
            throw NumericalError("orbital occupation " + std::to_string(nu(k)) + " outside [0, 1]");
        }
        // Same threshold as the entropy clip, so pinned orbitals read exactly 0 or 1.
        if (nu(k) < kEntropyClip) nu(k) = 0.0;
        if (nu(k) > 1.0 - kEntropyClip) nu(k) = 1.0;
    }
    return {nu, static_cast<int>(std::lround(C.trace().real()))};
}

double total_ng(const OrbitalSpectrum& spectrum) {
    double ng = 0.0;
    for (Eigen::Index k = 0; k < spectrum.nu.size(); ++k) ng += binary_entropy(spectrum.nu(k));
    return ng;
}

double ng_mixed(const DensityMatrix& rho) {
    if (rho.L > kMaxLindbladSites) throw UnsupportedError("ng_mixed supports L <= 8");
    if (max_anomalous_correlator(rho) > 1e-10) {
        throw UnsupportedError("density matrix has anomalous correlations; only number-conserving states are supported");
    }
    const OrbitalSpectrum spec = orbital_spectrum(one_body_matrix(rho));
    return total_ng(spec) - von_neumann_entropy(rho);
}

GapStats gap(const OrbitalSpectrum& spectrum) {
    const int L = static_cast<int>(spectrum.nu.size());
    if (spectrum.N < 1 || spectrum.N >= L) {
        throw ConfigError("gap needs 1 <= N < L, got N=" + std::to_string(spectrum.N));
    }
    const double d = spectrum.nu(spectrum.N - 1) - spectrum.nu(spectrum.N);
    return {d, d * L};
}

double chord_length(int ell, int L) {
    return (2.0 * L / std::numbers::pi) * std::sin(std::numbers::pi * ell / L);
}

CftFit cft_fit(const EntropyProfile& profile, int L, int ell_min, int ell_max) {
    if (profile.S.size() != L - 1) throw ConfigError("entropy profile length does not match L");
    if (ell_min < 0) ell_min = 2;
    if (ell_max < 0) ell_max = L - 2;
    ell_min = std::max(ell_min, 1);
    ell_max = std::min(ell_max, L - 1);
    const int n = ell_max - ell_min + 1;
    if (n < 3) throw ConfigError("CFT fit needs at least 3 points, got " + std::to_string(std::max(n, 0)));

    Eigen::MatrixXd A(n, 2);
    RealVector y(n);
    for (int i = 0; i < n; ++i) {
        const int ell = ell_min + i;
        A(i, 0) = std::log(chord_length(ell, L));
        A(i, 1) = 1.0;
        y(i) = profile.S(ell - 1);
    }
    const RealVector coef = A.colPivHouseholderQr().solve(y);
    const RealVector r = A * coef - y;
    return {coef(0), coef(1), std::sqrt(r.squaredNorm() / n), n};
}

}  // namespace montraj
