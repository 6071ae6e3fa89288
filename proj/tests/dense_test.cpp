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

#include "montraj/dense.hpp"

#include <random>

#include "gtest/gtest.h"
#include "montraj/oracle.hpp"

using namespace montraj;

namespace {

ChainSpec chain(int L, double U, double gamma, Observable obs, double dt = 0.05) {
    ChainSpec s;
    s.L = L;
    s.U = U;
    s.gamma = gamma;
    s.observable = obs;
    s.dt = dt;
    return s;
}

DenseState from_vector(const oracle::Vec& v, int L) {
    DenseState s;
    s.L = L;
    s.amplitudes = v;
    return s;
}

}  // namespace

TEST(dense, neel_layout) {
    const DenseState s = DenseState::neel(4);
    // |1010> with site 0 most significant.
    EXPECT_EQ(s.amplitudes(0b1010), Complex(1.0));
    EXPECT_NEAR(s.norm(), 1.0, 1e-15);
    EXPECT_NEAR(particle_number(s), 2.0, 1e-15);
    const std::vector<int> occ = {1, 0, 1};
    EXPECT_EQ(DenseState::product(occ).amplitudes(0b101), Complex(1.0));
}

TEST(dense, trotter_step_converges_to_exact_evolution) {
    const int L = 6;
    const double T = 1.0;
    std::mt19937_64 rng(5);
    const oracle::Vec psi0 = oracle::random_sector_state(L, 3, rng);
    const oracle::Vec exact = oracle::expm_hermitian(oracle::hamiltonian(L, 1.0), T) * psi0;
    double prev = 0.0;
    for (double dt : {0.1, 0.05}) {
        ChainSpec s = chain(L, 1.0, 0.0, Observable::Occupation, dt);
        DenseState st = from_vector(psi0, L);
        const TrotterSchedule sched = trotter_gates(s);
        for (int k = 0; k < static_cast<int>(std::lround(T / dt)); ++k) apply_trotter_step(st, sched);
        const double err = (st.amplitudes - exact).norm();
        EXPECT_LT(err, 5e-3);
        if (prev > 0.0) EXPECT_NEAR(prev / err, 4.0, 0.4);  // global error ~ dt^2
        prev = err;
    }
}

TEST(dense, unitary_gate_rejects_non_unitary) {
    LocalOperator op{2, Matrix::Identity(4, 4) * 2.0};
    EXPECT_THROW(apply_two_site_unitary(DenseState::neel(4), 0, op), std::exception);
}

TEST(dense, born_probabilities_of_current_on_neel) {
    const DenseState s = DenseState::neel(4);
    const ProjectorSet set = current_projectors();
    // bond 0 holds |10>, bond 1 holds |01>
    for (int b = 0; b < 3; ++b) {
        const auto p = born_probabilities(s, b, set);
        EXPECT_NEAR(p[0], 0.0, 1e-15);
        EXPECT_NEAR(p[1], 0.5, 1e-15);
        EXPECT_NEAR(p[2], 0.5, 1e-15);
    }
    const auto occ = born_probabilities(s, 2, occupation_projectors());
    EXPECT_NEAR(occ[1], 1.0, 1e-15);
}

TEST(dense, projective_measurement_collapses) {
    const DenseState s = DenseState::neel(2);  // |10>
    const MeasurementResult r = projective_measure(s, 0, current_projectors(), 0.25);
    EXPECT_EQ(r.outcome, 1);
    EXPECT_NEAR(r.prob, 0.5, 1e-15);
    EXPECT_NEAR(r.state.norm(), 1.0, 1e-14);
    const auto p = born_probabilities(r.state, 0, current_projectors());
    EXPECT_NEAR(p[1], 1.0, 1e-14);
    // A second measurement repeats the outcome with certainty.
    const MeasurementResult again = projective_measure(r.state, 0, current_projectors(), 0.999);
    EXPECT_EQ(again.outcome, 1);
}

TEST(dense, projection_onto_zero_probability_outcome_throws) {
    DenseState s = DenseState::neel(2);
    EXPECT_THROW(project(s, 1, occupation_projectors().outcomes[1]), NumericalError);
}

TEST(dense, reduced_density_matrix_matches_schmidt_spectrum) {
    std::mt19937_64 rng(6);
    const int L = 7;
    const oracle::Vec psi = oracle::random_state(L, rng);
    const DenseState s = from_vector(psi, L);
    for (int ell = 1; ell < L; ++ell) {
        const DensityMatrix rA = reduced_density_matrix(s, ell);
        EXPECT_NEAR(rA.trace(), 1.0, 1e-13);
        Eigen::SelfAdjointEigenSolver<Matrix> es(rA.rho);
        Eigen::VectorXd ev = es.eigenvalues().reverse();
        const Eigen::VectorXd lam = oracle::schmidt_values(psi, L, ell);
        for (Eigen::Index k = 0; k < lam.size(); ++k) EXPECT_NEAR(ev(k), lam(k) * lam(k), 1e-12);
    }
    // Consistent with the partial trace of the full pure state.
    const DensityMatrix full = DensityMatrix::pure(s);
    const DensityMatrix left3 = trace_out_right(full, L - 3);
    EXPECT_LT((left3.rho - reduced_density_matrix(s, 3).rho).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(dense, partial_traces_of_product_state) {
    std::mt19937_64 rng(7);
    const oracle::Mat a = oracle::random_number_conserving_rho(2, rng);
    const oracle::Mat b = oracle::random_number_conserving_rho(3, rng);
    DensityMatrix ab{5, oracle::kron(a, b)};
    EXPECT_LT((trace_out_right(ab, 3).rho - a).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((trace_out_left(ab, 2).rho - b).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(dense, one_body_matrix_of_mixed_state) {
    std::mt19937_64 rng(8);
    const int L = 5;
    const oracle::Mat rho = oracle::random_number_conserving_rho(L, rng);
    const DensityMatrix d{L, rho};
    EXPECT_LT((one_body_matrix(d) - oracle::one_body(rho, L)).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LT(max_anomalous_correlator(d), 1e-14);
}

TEST(dense, lindblad_rhs_matches_explicit_dissipator) {
    std::mt19937_64 rng(9);
    const int L = 3;
    for (Observable obs : {Observable::Occupation, Observable::Current}) {
        const ChainSpec s = chain(L, 0.7, 1.3, obs);
        const oracle::Mat rho = oracle::random_number_conserving_rho(L, rng);
        const oracle::Mat H = oracle::hamiltonian(L, s.U);
        oracle::Mat ref = Complex(0.0, -1.0) * (H * rho - rho * H);
        const ProjectorSet set = projectors_for(obs);
        const int nloc = obs == Observable::Occupation ? L : L - 1;
        for (int j = 0; j < nloc; ++j) {
            for (const auto& o : set.outcomes) {
                const oracle::Mat P = oracle::embed(L, j, o.projector.matrix);
                ref += s.gamma * (P * rho * P - 0.5 * (P * rho + rho * P));
            }
        }
        EXPECT_LT((lindblad_rhs(rho, s) - ref).cwiseAbs().maxCoeff(), 1e-13) << to_string(obs);
    }
}

TEST(dense, lindblad_without_monitoring_is_unitary) {
    const int L = 4;
    const ChainSpec s = chain(L, 1.0, 0.0, Observable::Occupation, 0.02);
    const DenseState n = DenseState::neel(L);
    const DensityMatrix out = lindblad_evolve(DensityMatrix::pure(n), s, 1.0);
    const oracle::Vec exact = oracle::expm_hermitian(oracle::hamiltonian(L, 1.0), 1.0) * n.amplitudes;
    EXPECT_LT((out.rho - exact * exact.adjoint()).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_NEAR(out.purity(), 1.0, 1e-7);
}

TEST(dense, lindblad_preserves_trace_and_positivity) {
    const int L = 4;
    const ChainSpec s = chain(L, 1.0, 2.0, Observable::Current);
    const DensityMatrix out = lindblad_evolve(DensityMatrix::pure(DenseState::neel(L)), s, 3.0);
    EXPECT_NEAR(out.trace(), 1.0, 1e-10);
    EXPECT_GT(out.min_eigenvalue(), -1e-10);
    EXPECT_LT(out.purity(), 1.0);
    // Number is conserved by both the Hamiltonian and the projectors.
    const oracle::Mat N = oracle::total_number(L);
    EXPECT_NEAR((N * out.rho).trace().real(), 2.0, 1e-10);
}

TEST(dense, lindblad_size_guard) {
    const ChainSpec s = chain(kMaxLindbladSites + 1, 0.0, 1.0, Observable::Occupation);
    DensityMatrix rho;
    rho.L = s.L;
    EXPECT_THROW(lindblad_evolve(rho, s, 1.0), std::exception);
}
