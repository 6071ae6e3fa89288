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

#include "gtest/gtest.h"
#include "montraj/oracle.hpp"

using namespace montraj;

namespace {

ChainSpec chain(int L, double U) {
    ChainSpec s;
    s.L = L;
    s.U = U;
    return s;
}

constexpr int k00 = 0, k01 = 1, k10 = 2, k11 = 3;

}  // namespace

TEST(model, hopping_matrix_elements) {
    const LocalOperator h = hamiltonian_bond_matrix(chain(4, 0.0), 1);
    ASSERT_EQ(h.support, 2);
    EXPECT_EQ(h.matrix(k01, k10), Complex(-0.5));
    EXPECT_EQ(h.matrix(k10, k01), Complex(-0.5));
    Matrix rest = h.matrix;
    rest(k01, k10) = rest(k10, k01) = 0.0;
    EXPECT_EQ(rest.cwiseAbs().maxCoeff(), 0.0);
}

TEST(model, interaction_on_doubly_occupied_bond) {
    const LocalOperator h = hamiltonian_bond_matrix(chain(4, 1.0), 0);
    EXPECT_EQ(h.matrix(k11, k11), Complex(1.0));
    EXPECT_EQ(h.matrix(k01, k10), Complex(-0.5));
    EXPECT_EQ(h.matrix(k00, k00), Complex(0.0));
    EXPECT_TRUE(h.is_hermitian());
}

TEST(model, free_bond_spectrum) {
    // Frozen from a 4x4 diagonalization of the Jordan-Wigner oracle on two sites.
    Eigen::SelfAdjointEigenSolver<oracle::Mat> es(oracle::hamiltonian(2, 0.0));
    const Eigen::Vector4d expected(-0.5, 0.0, 0.0, 0.5);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(es.eigenvalues()(k), expected(k), 1e-14);

    const LocalOperator h = hamiltonian_bond_matrix(chain(5, 0.0), 3);
    Eigen::SelfAdjointEigenSolver<Matrix> mine(h.matrix);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(mine.eigenvalues()(k), expected(k), 1e-14);
}

TEST(model, bond_terms_sum_to_jordan_wigner_hamiltonian) {
    for (double U : {0.0, 1.0, -0.7}) {
        const int L = 5;
        oracle::Mat H = oracle::Mat::Zero(1 << L, 1 << L);
        for (int b = 0; b + 1 < L; ++b) H += oracle::embed(L, b, hamiltonian_bond_matrix(chain(L, U), b).matrix);
        EXPECT_LT((H - oracle::hamiltonian(L, U)).cwiseAbs().maxCoeff(), 1e-14) << "U=" << U;
    }
}

TEST(model, bond_out_of_range) {
    EXPECT_THROW(hamiltonian_bond_matrix(chain(4, 0.0), 3), ConfigError);
    EXPECT_THROW(hamiltonian_bond_matrix(chain(4, 0.0), -1), ConfigError);
}

TEST(model, free_gate_block) {
    const double tau = 0.3;
    const LocalOperator g = bond_propagator(chain(2, 0.0), 0, tau);
    // cos(tau/2), sin(tau/2) for tau = 0.3
    const double c = 0.9887710779360422;
    const double s = 0.14943813247359922;
    EXPECT_NEAR(std::abs(g.matrix(k01, k01) - Complex(c, 0)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(g.matrix(k01, k10) - Complex(0, s)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(g.matrix(k10, k01) - Complex(0, s)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(g.matrix(k10, k10) - Complex(c, 0)), 0.0, 1e-14);
    EXPECT_LT((g.matrix - oracle::expm_hermitian(oracle::hamiltonian(2, 0.0), tau)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(model, zero_time_gate_is_identity) {
    for (double U : {0.0, 2.5}) {
        const LocalOperator g = bond_propagator(chain(3, U), 1, 0.0);
        EXPECT_LT((g.matrix - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(model, trotter_layers_are_unitary_and_conserve_number) {
    ChainSpec s = chain(7, 1.0);
    s.dt = 0.05;
    const TrotterSchedule t = trotter_gates(s);
    ASSERT_EQ(t.layers.size(), 3u);
    EXPECT_EQ(t.layers[0].bonds, (std::vector<int>{1, 3, 5}));
    EXPECT_EQ(t.layers[1].bonds, (std::vector<int>{0, 2, 4}));
    EXPECT_EQ(t.layers[2].bonds, (std::vector<int>{1, 3, 5}));
    const Matrix4 n = two_site_number();
    for (const auto& layer : t.layers) {
        for (const auto& g : layer.gates) {
            EXPECT_TRUE(g.is_unitary(1e-12));
            EXPECT_LT((g.matrix * n - n * g.matrix).cwiseAbs().maxCoeff(), 1e-14);
        }
    }
    // Half steps on the outer layers.
    const Matrix expected = bond_propagator(s, 1, 0.025).matrix;
    EXPECT_LT((t.layers[0].gates[0].matrix - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(model, second_order_splitting_error_scales_as_dt_cubed) {
    const int L = 4;
    auto step_error = [&](double dt) {
        ChainSpec s = chain(L, 1.0);
        s.dt = dt;
        oracle::Mat U = oracle::Mat::Identity(1 << L, 1 << L);
        for (const auto& layer : trotter_gates(s).layers)
            for (std::size_t g = 0; g < layer.bonds.size(); ++g)
                U = (oracle::embed(L, layer.bonds[g], layer.gates[g].matrix) * U).eval();
        return (U - oracle::expm_hermitian(oracle::hamiltonian(L, 1.0), dt)).norm();
    };
    const double e1 = step_error(0.1);
    const double e2 = step_error(0.05);
    EXPECT_NEAR(e1 / e2, 8.0, 0.5);
}

TEST(model, occupation_projectors) {
    const ProjectorSet set = occupation_projectors();
    ASSERT_EQ(set.size(), 2);
    const Matrix& p1 = set.outcomes[1].projector.matrix;
    Eigen::Vector2cd one(0, 1), zero(1, 0);
    EXPECT_LT((p1 * one - one).norm(), 1e-15);
    EXPECT_LT((p1 * zero).norm(), 1e-15);
    EXPECT_EQ(set.outcomes[0].projector.matrix + p1, Matrix::Identity(2, 2));
    // (I + sigma^z)/2 and (I - sigma^z)/2
    EXPECT_EQ(set.outcomes[0].projector.matrix, Matrix((ops::identity() + ops::sigma_z()) / 2.0));
    EXPECT_EQ(p1, Matrix((ops::identity() - ops::sigma_z()) / 2.0));
}

TEST(model, current_projectors_ranks_and_eigenstates) {
    const ProjectorSet set = current_projectors();
    ASSERT_EQ(set.size(), 3);
    EXPECT_EQ(set.outcomes[0].label, "J=0");
    EXPECT_EQ(set.outcomes[1].label, "J=+1/2");
    EXPECT_EQ(set.outcomes[2].label, "J=-1/2");
    const int ranks[3] = {2, 1, 1};
    for (int q = 0; q < 3; ++q) {
        EXPECT_NEAR(set.outcomes[q].projector.matrix.trace().real(), ranks[q], 1e-14);
    }
    const double r = 1.0 / std::sqrt(2.0);
    Eigen::Vector4cd psi_plus = Eigen::Vector4cd::Zero();
    psi_plus(k01) = r;
    psi_plus(k10) = Complex(0, -r);
    EXPECT_LT((set.outcomes[1].projector.matrix * psi_plus - psi_plus).norm(), 1e-15);
}

TEST(model, current_projectors_diagonalize_current_operator) {
    // J = -i/2 (c+_0 c_1 - c+_1 c_0) built from the Jordan-Wigner oracle.
    const oracle::Mat c0 = oracle::annihilator(2, 0);
    const oracle::Mat c1 = oracle::annihilator(2, 1);
    const oracle::Mat J = Complex(0, -0.5) * (c0.adjoint() * c1 - c1.adjoint() * c0);
    const ProjectorSet set = current_projectors();
    Matrix recon = Matrix::Zero(4, 4);
    for (const auto& o : set.outcomes) recon += o.eigenvalue * o.projector.matrix;
    EXPECT_LT((recon - J).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(model, born_probabilities_of_current_on_10) {
    Eigen::Vector4cd s = Eigen::Vector4cd::Zero();
    s(k10) = 1.0;
    const ProjectorSet set = current_projectors();
    const double expected[3] = {0.0, 0.5, 0.5};
    for (int q = 0; q < 3; ++q) {
        EXPECT_NEAR(s.dot(set.outcomes[q].projector.matrix * s).real(), expected[q], 1e-15);
    }
}

TEST(model, projector_sets_are_complete_orthogonal_and_number_conserving) {
    for (const ProjectorSet& set : {occupation_projectors(), current_projectors()}) {
        const int d = set.support() == 1 ? 2 : 4;
        const Matrix n = set.support() == 1 ? Matrix(ops::number()) : Matrix(two_site_number());
        Matrix sum = Matrix::Zero(d, d);
        for (int q = 0; q < set.size(); ++q) {
            const Matrix& P = set.outcomes[q].projector.matrix;
            sum += P;
            EXPECT_TRUE(set.outcomes[q].projector.is_hermitian());
            EXPECT_LT((P * P - P).cwiseAbs().maxCoeff(), 1e-12);
            EXPECT_LT((P * n - n * P).cwiseAbs().maxCoeff(), 1e-15);
            for (int q2 = 0; q2 < set.size(); ++q2) {
                if (q2 == q) continue;
                EXPECT_LT((P * set.outcomes[q2].projector.matrix).cwiseAbs().maxCoeff(), 1e-12);
            }
        }
        EXPECT_LT((sum - Matrix::Identity(d, d)).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(model, spec_validation) {
    ChainSpec s = chain(4, 0.0);
    s.gamma = 30.0;
    s.dt = 0.05;
    try {
        s.validate();
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("gamma"), std::string::npos);
    }
    s.gamma = 20.0;  // gamma*dt = 1 exactly is allowed
    EXPECT_NO_THROW(s.validate());
    s.L = 1;
    EXPECT_THROW(s.validate(), ConfigError);
    s.L = 4;
    s.dt = 0.0;
    EXPECT_THROW(s.validate(), ConfigError);
}

TEST(model, outcome_selection) {
    const std::vector<double> p = {0.0, 0.5, 0.5};
    EXPECT_EQ(select_outcome(p, 0.25), 1);
    EXPECT_EQ(select_outcome(p, 0.75), 2);
    EXPECT_EQ(select_outcome(p, 0.0), 1);
    // Accumulated total a hair below one.
    const std::vector<double> q = {0.3, 0.7 - 1e-15};
    EXPECT_EQ(select_outcome(q, 0.9999999999999999), 1);
    std::vector<double> neg = {-5e-13, 1.0};
    clamp_probabilities(neg);
    EXPECT_EQ(neg[0], 0.0);
    std::vector<double> bad = {-1e-6, 1.0};
    EXPECT_THROW(clamp_probabilities(bad), NumericalError);
}
