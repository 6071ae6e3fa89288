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

#include <cmath>

#include "gtest/gtest.h"
#include "montraj/backend.hpp"
#include "montraj/dense.hpp"
#include "montraj/oracle.hpp"

using namespace montraj;

namespace {

ChainSpec free_chain(int L) {
    ChainSpec s;
    s.L = L;
    s.U = 0.0;
    s.gamma = 1.0;
    s.observable = Observable::Occupation;
    return s;
}

}  // namespace

TEST(gaussian, neel_correlations) {
    const GaussianPureState s = GaussianPureState::neel(4);
    const Eigen::Vector4d d(1, 0, 1, 0);
    EXPECT_EQ(s.C, Matrix(d.cast<Complex>().asDiagonal()));
    EXPECT_EQ(s.particle_number(), 2.0);
    EXPECT_EQ(purity_check(s), 0.0);
}

TEST(gaussian, two_site_oscillation) {
    // cos^2(t/2) at t = 0.7
    const GaussianPureState s = propagate(GaussianPureState::neel(2), free_chain(2), 0.7);
    EXPECT_NEAR(s.C(0, 0).real(), 0.8824210936422442, 1e-14);
    EXPECT_NEAR(s.C(1, 1).real(), 1.0 - 0.8824210936422442, 1e-14);
}

TEST(gaussian, free_evolution_matches_many_body) {
    const int L = 7;
    const double t = 1.3;
    const GaussianPureState g = propagate(GaussianPureState::neel(L), free_chain(L), t);
    const oracle::Vec psi = oracle::expm_hermitian(oracle::hamiltonian(L, 0.0), t) * DenseState::neel(L).amplitudes;
    EXPECT_LT((g.C - oracle::one_body(psi, L)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(purity_check(g), 1e-12);

    GaussianPureState stepped = GaussianPureState::neel(L);
    const GaussianPropagator prop(free_chain(L), t / 2);
    prop.apply(stepped);
    prop.apply(stepped);
    EXPECT_LT((stepped.C - g.C).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(gaussian, interacting_chain_rejected) {
    ChainSpec s = free_chain(4);
    s.U = 0.5;
    EXPECT_THROW(GaussianPropagator(s, 0.1), UnsupportedError);
    s.U = 0.0;
    s.observable = Observable::Current;
    EXPECT_THROW(check_compatible(BackendKind::Gaussian, s), UnsupportedError);
}

TEST(gaussian, measurement_matches_many_body_projection) {
    const int L = 6;
    const double t = 0.9;
    const GaussianPureState g0 = propagate(GaussianPureState::neel(L), free_chain(L), t);
    const oracle::Vec psi = oracle::expm_hermitian(oracle::hamiltonian(L, 0.0), t) * DenseState::neel(L).amplitudes;
    for (int site = 0; site < L; ++site) {
        for (int outcome : {0, 1}) {
            GaussianPureState g = g0;
            DenseState d;
            d.L = L;
            d.amplitudes = psi;
            const double pd = project(d, site, occupation_projectors().outcomes[outcome]);
            const double pg = project_occupation(g, site, outcome);
            EXPECT_NEAR(pg, pd, 1e-12);
            EXPECT_LT((g.C - oracle::one_body(d.amplitudes, L)).cwiseAbs().maxCoeff(), 1e-11)
                << "site " << site << " outcome " << outcome;
            EXPECT_LT(purity_check(g), 1e-11);
            EXPECT_NEAR(g.C(site, site).real(), outcome, 1e-14);
        }
    }
    const auto p = occupation_probabilities(g0, 2);
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-14);
}

TEST(gaussian, measurement_sampling) {
    const GaussianPureState g = propagate(GaussianPureState::neel(2), free_chain(2), 0.7);
    // P(n_0 = 0) = sin^2(0.35)
    const GaussianMeasurement low = measure_occupation(g, 0, 0.05);
    EXPECT_EQ(low.outcome, 0);
    EXPECT_NEAR(low.prob, 1.0 - 0.8824210936422442, 1e-14);
    const GaussianMeasurement high = measure_occupation(g, 0, 0.5);
    EXPECT_EQ(high.outcome, 1);
    EXPECT_NEAR(high.state.C(1, 1).real(), 0.0, 1e-14);
}

TEST(gaussian, backend_step_matches_dense_backend) {
    ChainSpec s = free_chain(8);
    s.dt = 0.05;
    GaussianBackend g(s);
    DenseBackend d(s);
    for (int k = 0; k < 40; ++k) {
        g.unitary_step();
        d.unitary_step();
        if (k % 10 == 9) {
            const int site = k % 8;
            const auto pg = g.born_probabilities(site);
            const auto pd = d.born_probabilities(site);
            EXPECT_NEAR(pg[1], pd[1], 1e-12);
            const int q = pd[1] > 0.5 ? 1 : 0;
            g.project(site, q);
            d.project(site, q);
        }
    }
    EXPECT_LT((g.one_body_matrix() - d.one_body_matrix()).cwiseAbs().maxCoeff(), 1e-10);
    const auto sg = g.entropy_profile().S;
    const auto sd = d.entropy_profile().S;
    ASSERT_EQ(sg.size(), sd.size());
    for (std::size_t i = 0; i < sg.size(); ++i) EXPECT_NEAR(sg[i], sd[i], 1e-9);
}

TEST(gaussian, single_particle_step_is_unitary) {
    ChainSpec s = free_chain(9);
    const Matrix W = single_particle_trotter_step(s);
    EXPECT_LT((W * W.adjoint() - Matrix::Identity(9, 9)).cwiseAbs().maxCoeff(), 1e-14);
}
