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

#include <bit>
#include <cmath>
#include <string>

#include "montraj/kernels.hpp"

namespace montraj {

namespace {

void check_sites(int L, int limit) {
    if (L < 1 || L > limit) {
        throw ConfigError("dense simulation supports 1 <= L <= " + std::to_string(limit) + ", got L=" +
                          std::to_string(L));
    }
}

void check_location(int L, int location, int support) {
    if (location < 0 || location + support > L) {
        throw ConfigError("location " + std::to_string(location) + " out of range for L=" + std::to_string(L));
    }
}

void apply_local_span(std::span<Complex> psi, int L, int location, const LocalOperator& op) {
    if (op.support == 1) {
        kernels::apply_one_site(psi, L, location, Matrix2(op.matrix));
    } else {
        kernels::apply_two_site(psi, L, location, Matrix4(op.matrix));
    }
}

// op applied to every column of m. Columns are contiguous in Eigen's default layout.
void apply_local_columns(Matrix& m, int L, int location, const LocalOperator& op) {
    const Eigen::Index dim = m.rows();
    const Matrix2 op2 = op.support == 1 ? Matrix2(op.matrix) : Matrix2::Zero();
    const Matrix4 op4 = op.support == 2 ? Matrix4(op.matrix) : Matrix4::Zero();
#pragma omp parallel for schedule(static)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        std::span<Complex> col(m.col(c).data(), static_cast<std::size_t>(dim));
        if (op.support == 1) {
            kernels::serial::apply_one_site(col, L, location, op2);
        } else {
            kernels::serial::apply_two_site(col, L, location, op4);
        }
    }
}

Matrix left_multiply(const Matrix& m, int L, int location, const LocalOperator& op) {
    Matrix out = m;
    apply_local_columns(out, L, location, op);
    return out;
}

}  // namespace

DenseState DenseState::product(std::span<const int> occupations) {
    const int L = static_cast<int>(occupations.size());
    check_sites(L, 30);
    Eigen::Index index = 0;
    for (int j = 0; j < L; ++j) {
        if (occupations[j] != 0 && occupations[j] != 1) throw ConfigError("occupations must be 0 or 1");
        index = (index << 1) | occupations[j];
    }
    DenseState s;
    s.L = L;
    s.amplitudes = Vector::Zero(Eigen::Index{1} << L);
    s.amplitudes(index) = 1.0;
    return s;
}

DenseState DenseState::neel(int L) {
    std::vector<int> occ(static_cast<std::size_t>(L));
    for (int j = 0; j < L; ++j) occ[j] = (j % 2 == 0) ? 1 : 0;
    return product(occ);
}

double DenseState::norm() const { return std::sqrt(kernels::norm_squared(span())); }

DensityMatrix DensityMatrix::pure(const DenseState& psi) {
    return {psi.L, psi.amplitudes * psi.amplitudes.adjoint()};
}

DensityMatrix DensityMatrix::maximally_mixed(int L) {
    const Eigen::Index dim = Eigen::Index{1} << L;
    return {L, Matrix::Identity(dim, dim) / static_cast<double>(dim)};
}

double DensityMatrix::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

void apply_local(DenseState& state, int location, const LocalOperator& op) {
    check_location(state.L, location, op.support);
    apply_local_span(state.span(), state.L, location, op);
}

DenseState apply_two_site_unitary(DenseState state, int bond, const LocalOperator& gate) {
    if (gate.support != 2) throw ConfigError("two-site gate expected");
    if (!gate.is_unitary(1e-10)) throw ConfigError("gate is not unitary");
    apply_local(state, bond, gate);
    return state;
}

void apply_trotter_step(DenseState& state, const TrotterSchedule& schedule) {
    for (const TrotterLayer& layer : schedule.layers) {
        for (std::size_t g = 0; g < layer.bonds.size(); ++g) {
            apply_local_span(state.span(), state.L, layer.bonds[g], layer.gates[g]);
        }
    }
}

std::vector<double> born_probabilities(const DenseState& state, int location, const ProjectorSet& set) {
    check_location(state.L, location, set.support());
    std::vector<double> probs;
    probs.reserve(set.outcomes.size());
    for (const ProjectorOutcome& o : set.outcomes) {
        const Complex e = o.projector.support == 1
                              ? kernels::expect_one_site(state.span(), state.L, location, Matrix2(o.projector.matrix))
                              : kernels::expect_two_site(state.span(), state.L, location, Matrix4(o.projector.matrix));
        probs.push_back(e.real());
    }
    clamp_probabilities(probs);
    return probs;
}

double project(DenseState& state, int location, const ProjectorOutcome& outcome) {
    apply_local(state, location, outcome.projector);
    const double p = kernels::norm_squared(state.span());
    if (p < 1e-14) throw NumericalError("projection onto outcome " + outcome.label + " has vanishing probability");
    state.amplitudes /= std::sqrt(p);
    return p;
}

MeasurementResult projective_measure(DenseState state, int location, const ProjectorSet& set, double random_draw) {
    const std::vector<double> probs = born_probabilities(state, location, set);
    const int q = select_outcome(probs, random_draw);
    project(state, location, set.outcomes[q]);
    return {q, std::move(state), probs[q]};
}

Matrix lindblad_rhs(const Matrix& rho, const ChainSpec& spec) {
    const int L = spec.L;
    Matrix h_rho = Matrix::Zero(rho.rows(), rho.cols());
    Matrix h_rho_dag = Matrix::Zero(rho.rows(), rho.cols());
    const Matrix rho_dag = rho.adjoint();
    for (int b = 0; b + 1 < L; ++b) {
        const LocalOperator h = hamiltonian_bond_matrix(spec, b);
        h_rho += left_multiply(rho, L, b, h);
        h_rho_dag += left_multiply(rho_dag, L, b, h);
    }
    // rho H = (H rho^dagger)^dagger
    Matrix out = Complex(0.0, -1.0) * (h_rho - h_rho_dag.adjoint());
    if (spec.gamma == 0.0) return out;

    const ProjectorSet set = projectors_for(spec.observable);
    const int locations = spec.num_locations();
    Matrix jump = Matrix::Zero(rho.rows(), rho.cols());
    for (int loc = 0; loc < locations; ++loc) {
        for (const ProjectorOutcome& o : set.outcomes) {
            // Pi rho Pi = (Pi (Pi rho)^dagger)^dagger for Hermitian Pi.
            const Matrix left = left_multiply(rho, L, loc, o.projector);
            jump += left_multiply(left.adjoint(), L, loc, o.projector).adjoint();
        }
    }
    // sum_q {Pi_q, rho}/2 = rho per location by completeness.
    out += spec.gamma * (jump - static_cast<double>(locations) * rho);
    return out;
}

DensityMatrix lindblad_evolve(const DensityMatrix& rho0, const ChainSpec& spec, double T) {
    spec.validate();
    check_sites(spec.L, kMaxLindbladSites);
    if (rho0.L != spec.L) throw ConfigError("density matrix size does not match the chain");
    if (T < 0.0) throw ConfigError("evolution time must be non-negative");
    const int steps = T == 0.0 ? 0 : static_cast<int>(std::ceil(T / spec.dt - 1e-12));
    const double h = steps == 0 ? 0.0 : T / steps;
    Matrix rho = rho0.rho;
    const double trace0 = rho.trace().real();
    for (int s = 0; s < steps; ++s) {
        const Matrix k1 = lindblad_rhs(rho, spec);
        const Matrix k2 = lindblad_rhs(rho + 0.5 * h * k1, spec);
        const Matrix k3 = lindblad_rhs(rho + 0.5 * h * k2, spec);
        const Matrix k4 = lindblad_rhs(rho + h * k3, spec);
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    const double drift = std::abs(rho.trace().real() - trace0);
    if (drift > 1e-6) throw NumericalError("Lindblad integration trace drift " + std::to_string(drift));
    // Restore exact Hermiticity lost to rounding.
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return {spec.L, rho};
}

DensityMatrix reduced_density_matrix(const DenseState& state, int ell) {
    if (ell < 1 || ell >= state.L) throw ConfigError("subsystem size must satisfy 1 <= ell < L");
    const Eigen::Index dim_a = Eigen::Index{1} << ell;
    const Eigen::Index dim_b = Eigen::Index{1} << (state.L - ell);
    // Column-major view: mt(b, a) = psi[a * dim_b + b].
    Eigen::Map<const Matrix> mt(state.amplitudes.data(), dim_b, dim_a);
    return {ell, mt.transpose() * mt.conjugate()};
}

DensityMatrix trace_out_right(const DensityMatrix& rho, int count) {
    if (count < 0 || count >= rho.L) throw ConfigError("can only trace out 0 <= count < L sites");
    const int keep = rho.L - count;
    const Eigen::Index da = Eigen::Index{1} << keep;
    const Eigen::Index db = Eigen::Index{1} << count;
    Matrix out = Matrix::Zero(da, da);
    for (Eigen::Index a = 0; a < da; ++a)
        for (Eigen::Index a2 = 0; a2 < da; ++a2)
            for (Eigen::Index b = 0; b < db; ++b) out(a, a2) += rho.rho(a * db + b, a2 * db + b);
    return {keep, out};
}

DensityMatrix trace_out_left(const DensityMatrix& rho, int count) {
    if (count < 0 || count >= rho.L) throw ConfigError("can only trace out 0 <= count < L sites");
    const int keep = rho.L - count;
    const Eigen::Index da = Eigen::Index{1} << count;
    const Eigen::Index db = Eigen::Index{1} << keep;
    Matrix out = Matrix::Zero(db, db);
    for (Eigen::Index a = 0; a < da; ++a) out += rho.rho.block(a * db, a * db, db, db);
    return {keep, out};
}

Matrix one_body_matrix(const DenseState& state) { return kernels::one_body_matrix(state.span(), state.L); }

Matrix one_body_matrix(const DensityMatrix& rho) {
    const int L = rho.L;
    const Eigen::Index dim = rho.rho.rows();
    Matrix C = Matrix::Zero(L, L);
    for (int k = 0; k < L; ++k) {
        const int bk = kernels::bit_of(L, k);
        for (int l = 0; l < L; ++l) {
            const int bl = kernels::bit_of(L, l);
            Complex acc(0.0);
            for (Eigen::Index n = 0; n < dim; ++n) {
                if (!((n >> bl) & 1)) continue;
                const Eigen::Index mid = n & ~(Eigen::Index{1} << bl);
                if (k != l && ((mid >> bk) & 1)) continue;
                const Eigen::Index m = mid | (Eigen::Index{1} << bk);
                const int sign = (std::popcount(static_cast<std::uint64_t>(n) >> (bl + 1)) +
                                  std::popcount(static_cast<std::uint64_t>(mid) >> (bk + 1))) & 1;
                acc += sign ? -rho.rho(n, m) : rho.rho(n, m);
            }
            C(k, l) = acc;
        }
    }
    return C;
}

double max_anomalous_correlator(const DensityMatrix& rho) {
    const int L = rho.L;
    const Eigen::Index dim = rho.rho.rows();
    double worst = 0.0;
    for (int k = 0; k < L; ++k) {
        for (int l = k + 1; l < L; ++l) {
            const int bk = kernels::bit_of(L, k);
            const int bl = kernels::bit_of(L, l);
            Complex acc(0.0);
            // <m| c_k c_l |n> is non-zero only for m = n - e_k - e_l.
            for (Eigen::Index n = 0; n < dim; ++n) {
                if (!((n >> bl) & 1) || !((n >> bk) & 1)) continue;
                const Eigen::Index m = n & ~(Eigen::Index{1} << bl) & ~(Eigen::Index{1} << bk);
                acc += rho.rho(n, m);
            }
            worst = std::max(worst, std::abs(acc));
        }
    }
    return worst;
}

double particle_number(const DenseState& state) {
    double n = 0.0;
    for (int j = 0; j < state.L; ++j) n += kernels::expect_one_site(state.span(), state.L, j, ops::number()).real();
    return n;
}

}  // namespace montraj
