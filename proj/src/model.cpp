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

#include "montraj/model.hpp"

#include <cmath>
#include <sstream>

namespace montraj {

std::string_view to_string(Observable obs) {
    return obs == Observable::Occupation ? "occupation" : "current";
}

Observable observable_from_string(std::string_view name) {
    if (name == "occupation") return Observable::Occupation;
    if (name == "current") return Observable::Current;
    throw ConfigError("observable must be 'occupation' or 'current', got '" + std::string(name) + "'");
}

void ChainSpec::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw ConfigError("invalid " + field + ": " + why);
    };
    if (L < 2) fail("L", "need at least 2 sites");
    if (!(dt > 0.0)) fail("dt", "must be positive");
    if (!(gamma >= 0.0)) fail("gamma", "must be non-negative");
    if (gamma * dt > 1.0 + 1e-15) {
        std::ostringstream os;
        os << "gamma*dt = " << gamma * dt << " exceeds 1";
        fail("gamma", os.str());
    }
    if (n_steps < 0) fail("n_steps", "must be non-negative");
}

bool LocalOperator::is_hermitian(double tol) const {
    return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff() < tol;
}

bool LocalOperator::is_unitary(double tol) const {
    const auto id = Matrix::Identity(matrix.rows(), matrix.cols());
    return (matrix.adjoint() * matrix - id).cwiseAbs().maxCoeff() < tol;
}

int ProjectorSet::index_of(std::string_view label) const {
    for (int q = 0; q < size(); ++q) {
        if (outcomes[q].label == label) return q;
    }
    throw ConfigError("unknown outcome label '" + std::string(label) + "'");
}

namespace ops {
Matrix2 identity() { return Matrix2::Identity(); }
Matrix2 sigma_z() {
    Matrix2 m = Matrix2::Zero();
    m(0, 0) = 1.0;
    m(1, 1) = -1.0;
    return m;
}
Matrix2 creation() {
    Matrix2 m = Matrix2::Zero();
    m(1, 0) = 1.0;
    return m;
}
Matrix2 annihilation() {
    Matrix2 m = Matrix2::Zero();
    m(0, 1) = 1.0;
    return m;
}
Matrix2 number() {
    Matrix2 m = Matrix2::Zero();
    m(1, 1) = 1.0;
    return m;
}
}  // namespace ops

namespace {

// Two-site basis index of |n_left n_right>.
constexpr int idx(int left, int right) { return 2 * left + right; }

Matrix hermitian_exp(const Matrix& h, double tau) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    const RealVector& w = es.eigenvalues();
    Vector phases(w.size());
    for (Eigen::Index k = 0; k < w.size(); ++k) phases(k) = std::exp(Complex(0.0, -w(k) * tau));
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

LocalOperator hamiltonian_bond_matrix(const ChainSpec& spec, int bond) {
    if (bond < 0 || bond > spec.L - 2) {
        throw ConfigError("bond index " + std::to_string(bond) + " out of range for L=" + std::to_string(spec.L));
    }
    Matrix h = Matrix::Zero(4, 4);
    // c+_b c_{b+1} moves a particle from the right site to the left one; the
    // Jordan-Wigner string between neighbours is trivial.
    h(idx(1, 0), idx(0, 1)) = -0.5;
    h(idx(0, 1), idx(1, 0)) = -0.5;
    h(idx(1, 1), idx(1, 1)) = spec.U;
    return {2, h};
}

LocalOperator bond_propagator(const ChainSpec& spec, int bond, double tau) {
    const LocalOperator h = hamiltonian_bond_matrix(spec, bond);
    return {2, hermitian_exp(h.matrix, tau)};
}

TrotterSchedule trotter_gates(const ChainSpec& spec) {
    spec.validate();
    auto layer = [&](int parity, double tau) {
        TrotterLayer out;
        for (int b = parity; b <= spec.L - 2; b += 2) {
            out.bonds.push_back(b);
            out.gates.push_back(bond_propagator(spec, b, tau));
        }
        return out;
    };
    TrotterSchedule s;
    s.layers.push_back(layer(1, spec.dt / 2));
    s.layers.push_back(layer(0, spec.dt));
    s.layers.push_back(layer(1, spec.dt / 2));
    return s;
}

ProjectorSet occupation_projectors() {
    ProjectorSet set;
    set.observable = Observable::Occupation;
    Matrix p0 = Matrix::Zero(2, 2);
    Matrix p1 = Matrix::Zero(2, 2);
    p0(0, 0) = 1.0;
    p1(1, 1) = 1.0;
    set.outcomes.push_back({"n=0", 0.0, {1, p0}});
    set.outcomes.push_back({"n=1", 1.0, {1, p1}});
    return set;
}

ProjectorSet current_projectors() {
    // J_b = -i/2 (c+_b c_{b+1} - c+_{b+1} c_b) has eigenvalue 0 on span{|00>, |11>}
    // and +-1/2 on (|01> -+ i|10>)/sqrt(2).
    ProjectorSet set;
    set.observable = Observable::Current;
    const double r = 1.0 / std::sqrt(2.0);
    const Complex I(0.0, 1.0);

    Matrix p0 = Matrix::Zero(4, 4);
    p0(idx(0, 0), idx(0, 0)) = 1.0;
    p0(idx(1, 1), idx(1, 1)) = 1.0;

    Vector plus = Vector::Zero(4);
    plus(idx(0, 1)) = r;
    plus(idx(1, 0)) = -I * r;
    Vector minus = Vector::Zero(4);
    minus(idx(0, 1)) = r;
    minus(idx(1, 0)) = I * r;

    set.outcomes.push_back({"J=0", 0.0, {2, p0}});
    set.outcomes.push_back({"J=+1/2", 0.5, {2, plus * plus.adjoint()}});
    set.outcomes.push_back({"J=-1/2", -0.5, {2, minus * minus.adjoint()}});
    return set;
}

ProjectorSet projectors_for(Observable obs) {
    return obs == Observable::Occupation ? occupation_projectors() : current_projectors();
}

void clamp_probabilities(std::span<double> probs) {
    for (double& p : probs) {
        if (p < 0.0) {
            if (p < -1e-12) throw NumericalError("negative Born probability " + std::to_string(p));
            p = 0.0;
        }
    }
}

int select_outcome(std::span<const double> probs, double draw) {
    double cumulative = 0.0;
    int chosen = -1;
    for (int q = 0; q < static_cast<int>(probs.size()); ++q) {
        cumulative += probs[q];
        if (draw < cumulative) {
            chosen = q;
            break;
        }
    }
    if (chosen < 0) {
        for (int q = static_cast<int>(probs.size()) - 1; q >= 0; --q) {
            if (probs[q] > 0.0) {
                chosen = q;
                break;
            }
        }
    }
    if (chosen < 0 || probs[chosen] < 1e-14) {
        throw NumericalError("selected measurement outcome has vanishing probability");
    }
    return chosen;
}

Matrix4 two_site_number() {
    Matrix4 n = Matrix4::Zero();
    n(idx(0, 1), idx(0, 1)) = 1.0;
    n(idx(1, 0), idx(1, 0)) = 1.0;
    n(idx(1, 1), idx(1, 1)) = 2.0;
    return n;
}

}  // namespace montraj
