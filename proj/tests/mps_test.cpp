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

#include "montraj/mps.hpp"

#include <random>
#include <sstream>

#include "gtest/gtest.h"
#include "montraj/dense.hpp"
#include "montraj/oracle.hpp"

using namespace montraj;

namespace {

// Random unitary on two sites that conserves particle number.
Matrix4 random_number_conserving_gate(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 2.0 * M_PI);
    Eigen::Matrix2cd m;
    for (int i = 0; i < 4; ++i) m(i) = Complex(g(rng), g(rng));
    const Eigen::Matrix2cd q = m.householderQr().householderQ();
    Matrix4 gate = Matrix4::Zero();
    gate(0, 0) = std::polar(1.0, u(rng));
    gate(3, 3) = std::polar(1.0, u(rng));
    gate.block<2, 2>(1, 1) = q;
    return gate;
}

TruncationPolicy exact_policy() {
    TruncationPolicy p;
    p.chi_max = 1 << 10;
    p.svd_cutoff = 1e-15;
    return p;
}

double fidelity(const Vector& a, const Vector& b) { return std::norm(a.dot(b)) / (a.squaredNorm() * b.squaredNorm()); }

struct Pair {
    MpsState mps;
    DenseState dense;
};

Pair scrambled(int L, int layers, std::mt19937_64& rng) {
    Pair p{MpsState::neel(L), DenseState::neel(L)};
    for (int k = 0; k < layers; ++k) {
        for (int b = k % 2; b + 1 < L; b += 2) {
            const Matrix4 g = random_number_conserving_gate(rng);
            p.mps.apply_two_site_gate(b, g, exact_policy());
            apply_local(p.dense, b, LocalOperator{2, g});
        }
    }
    return p;
}

}  // namespace

TEST(mps, neel_product_state) {
    MpsState m = MpsState::neel(6);
    EXPECT_EQ(m.max_bond_dimension(), 1);
    EXPECT_EQ(m.particle_count(), 3);
    EXPECT_LT((m.to_dense() - DenseState::neel(6).amplitudes).norm(), 1e-15);
    for (int b = 0; b < 5; ++b) {
        const RealVector s = m.schmidt_spectrum(b);
        ASSERT_EQ(s.size(), 1);
        EXPECT_NEAR(s(0), 1.0, 1e-15);
    }
    EXPECT_NEAR(m.expect_one_site(2, ops::number()).real(), 1.0, 1e-15);
    EXPECT_NEAR(m.expect_one_site(3, ops::number()).real(), 0.0, 1e-15);
}

TEST(mps, hopping_gate_on_neel_bond) {
    const double tau = 0.3;
    ChainSpec s;
    s.L = 4;
    MpsState m = MpsState::neel(4);
    m.apply_two_site_gate(1, bond_propagator(s, 1, tau).matrix, TruncationPolicy{});
    const RealVector lam = m.schmidt_spectrum(1);
    ASSERT_EQ(lam.size(), 2);
    // cos(tau/2), sin(tau/2)
    EXPECT_NEAR(lam(0), 0.9887710779360422, 1e-14);
    EXPECT_NEAR(lam(1), 0.14943813247359922, 1e-14);
    EXPECT_EQ(m.schmidt_spectrum(0).size(), 1);
}

TEST(mps, random_circuit_matches_dense) {
    std::mt19937_64 rng(21);
    const int L = 8;
    Pair p = scrambled(L, 8, rng);
    EXPECT_LT(1.0 - fidelity(p.mps.to_dense(), p.dense.amplitudes), 1e-12);
    EXPECT_NEAR(p.mps.norm(), 1.0, 1e-12);
    EXPECT_EQ(p.mps.particle_count(), 4);
    for (int b = 0; b + 1 < L; ++b) {
        const RealVector lam = p.mps.schmidt_spectrum(b);
        const Eigen::VectorXd ref = oracle::schmidt_values(p.dense.amplitudes, L, b + 1);
        for (Eigen::Index k = 0; k < ref.size(); ++k) {
            const double mine = k < lam.size() ? lam(k) : 0.0;
            EXPECT_NEAR(mine, ref(k), 1e-10) << "bond " << b << " k " << k;
        }
    }
    EXPECT_LT((p.mps.one_body_matrix() - oracle::one_body(p.dense.amplitudes, L)).cwiseAbs().maxCoeff(), 1e-11);
    EXPECT_LT(std::abs(p.mps.string_correlator(1, 6) - oracle::one_body(p.dense.amplitudes, L)(1, 6)), 1e-11);
}

TEST(mps, center_moves_preserve_state) {
    std::mt19937_64 rng(22);
    Pair p = scrambled(7, 6, rng);
    const Vector before = p.mps.to_dense();
    for (int c : {0, 6, 3, 1, 5}) {
        p.mps.move_center(c);
        EXPECT_EQ(p.mps.center(), c);
        EXPECT_LT((p.mps.to_dense() - before).norm(), 1e-12);
    }
}

TEST(mps, measurements_match_dense) {
    std::mt19937_64 rng(23);
    const int L = 7;
    for (Observable obs : {Observable::Occupation, Observable::Current}) {
        Pair p = scrambled(L, 6, rng);
        const ProjectorSet set = projectors_for(obs);
        const int nloc = obs == Observable::Occupation ? L : L - 1;
        for (int loc = nloc - 1; loc >= 0; loc -= 2) {
            const auto pm = p.mps.born_probabilities(loc, set);
            const auto pd = born_probabilities(p.dense, loc, set);
            ASSERT_EQ(pm.size(), pd.size());
            int q = 0;
            for (std::size_t k = 0; k < pm.size(); ++k) {
                EXPECT_NEAR(pm[k], pd[k], 1e-12);
                if (pd[k] > pd[q]) q = static_cast<int>(k);
            }
            const double prob_m = p.mps.apply_projector(loc, set.outcomes[q].projector, exact_policy());
            const double prob_d = project(p.dense, loc, set.outcomes[q]);
            EXPECT_NEAR(prob_m, prob_d, 1e-12);
            EXPECT_LT(1.0 - fidelity(p.mps.to_dense(), p.dense.amplitudes), 1e-11) << to_string(obs) << " " << loc;
        }
        for (int b = 0; b + 1 < L; ++b) {
            const RealVector lam = p.mps.schmidt_spectrum(b);
            const Eigen::VectorXd ref = oracle::schmidt_values(p.dense.amplitudes, L, b + 1);
            for (Eigen::Index k = 0; k < std::min<Eigen::Index>(lam.size(), ref.size()); ++k)
                EXPECT_NEAR(lam(k), ref(k), 1e-9);
        }
    }
}

TEST(mps, truncation_bounds_bond_dimension) {
    std::mt19937_64 rng(24);
    const int L = 10;
    TruncationPolicy tight;
    tight.chi_max = 4;
    tight.hard_limit = 1.0;
    MpsState m = MpsState::neel(L);
    DenseState d = DenseState::neel(L);
    double discarded = 0.0;
    for (int k = 0; k < 6; ++k) {
        for (int b = k % 2; b + 1 < L; b += 2) {
            const Matrix4 g = random_number_conserving_gate(rng);
            discarded += m.apply_two_site_gate(b, g, tight);
            apply_local(d, b, LocalOperator{2, g});
        }
    }
    EXPECT_LE(m.max_bond_dimension(), 4);
    EXPECT_GT(discarded, 0.0);
    EXPECT_NEAR(m.truncation_error(), discarded, 1e-15);
    EXPECT_NEAR(m.norm(), 1.0, 1e-12);
    // Infidelity is bounded by roughly twice the summed discarded weight.
    EXPECT_LT(1.0 - fidelity(m.to_dense(), d.amplitudes), 2.0 * discarded + 1e-12);
}

TEST(mps, hard_limit_raises) {
    std::mt19937_64 rng(25);
    TruncationPolicy strict;
    strict.chi_max = 1;
    MpsState m = MpsState::neel(4);
    ChainSpec s;
    s.L = 4;
    EXPECT_THROW(m.apply_two_site_gate(1, bond_propagator(s, 1, 1.0).matrix, strict), NumericalError);
}

TEST(mps, policy_validation) {
    TruncationPolicy p;
    p.chi_max = 0;
    EXPECT_THROW(p.validate(), ConfigError);
    p.chi_max = 8;
    p.svd_cutoff = -1.0;
    EXPECT_THROW(p.validate(), ConfigError);
}

TEST(mps, snapshot_round_trip) {
    std::mt19937_64 rng(26);
    Pair p = scrambled(6, 5, rng);
    p.mps.move_center(2);
    std::stringstream buf;
    p.mps.save(buf);
    buf.seekg(0);
    MpsState back = MpsState::load(buf);
    EXPECT_EQ(back.length(), 6);
    EXPECT_EQ(back.center(), 2);
    EXPECT_EQ(back.particle_count(), 3);
    EXPECT_EQ((back.to_dense() - p.mps.to_dense()).norm(), 0.0);
    // Further evolution works on the restored state.
    back.apply_two_site_gate(3, random_number_conserving_gate(rng), exact_policy());
    EXPECT_NEAR(back.norm(), 1.0, 1e-12);

    std::string bytes = buf.str();
    bytes[0] = 7;
    std::stringstream bad(bytes);
    EXPECT_THROW(MpsState::load(bad), std::exception);
}
