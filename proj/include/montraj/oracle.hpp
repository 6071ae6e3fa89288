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

// Brute-force reference constructions for small chains (L <= 8 or so). Everything
// here is built from Kronecker products of 2x2 matrices and full matrix
// exponentials, independent of the bit-twiddling kernels, the bond matrices
// and the tensor-network code. Used by the tests and by the validation suite.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace montraj::oracle {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Mat pauli_z() {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = 1.0;  // empty site = spin up
    m(1, 1) = -1.0;
    return m;
}

// sigma^+ lowers the occupation: |n=0><n=1|.
inline Mat sigma_plus() {
    Mat m = Mat::Zero(2, 2);
    m(0, 1) = 1.0;
    return m;
}

// Product of single-site factors, site 0 leftmost in the Kronecker product.
inline Mat chain_product(const std::vector<Mat>& factors) {
    Mat out = Mat::Ones(1, 1);
    for (const Mat& f : factors) out = kron(out, f);
    return out;
}

// c_j = prod_{k<j} sigma^z_k sigma^+_j
inline Mat annihilator(int L, int j) {
    std::vector<Mat> f(static_cast<std::size_t>(L), Mat::Identity(2, 2));
    for (int k = 0; k < j; ++k) f[k] = pauli_z();
    f[j] = sigma_plus();
    return chain_product(f);
}

inline Mat number_op(int L, int j) {
    const Mat c = annihilator(L, j);
    return c.adjoint() * c;
}

inline Mat total_number(int L) {
    Mat n = Mat::Zero(1 << L, 1 << L);
    for (int j = 0; j < L; ++j) n += number_op(L, j);
    return n;
}

inline Mat hamiltonian(int L, double U) {
    const int d = 1 << L;
    Mat H = Mat::Zero(d, d);
    for (int j = 0; j + 1 < L; ++j) {
        const Mat cj = annihilator(L, j);
        const Mat cj1 = annihilator(L, j + 1);
        H += -0.5 * (cj.adjoint() * cj1 + cj1.adjoint() * cj);
        H += U * (cj.adjoint() * cj) * (cj1.adjoint() * cj1);
    }
    return H;
}

inline Mat expm_hermitian(const Mat& H, double t) {
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    Vec ph(es.eigenvalues().size());
    for (Eigen::Index k = 0; k < ph.size(); ++k) ph(k) = std::exp(Complex(0.0, -es.eigenvalues()(k) * t));
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

// Embeds a 2x2 or 4x4 operator at `site` (leftmost support) into L sites.
inline Mat embed(int L, int site, const Mat& op) {
    const int support = op.rows() == 2 ? 1 : 2;
    Mat left = Mat::Identity(1 << site, 1 << site);
    const int right_sites = L - site - support;
    Mat right = Mat::Identity(1 << right_sites, 1 << right_sites);
    return kron(kron(left, op), right);
}

inline Mat one_body(const Vec& psi, int L) {
    Mat C(L, L);
    std::vector<Mat> c;
    for (int j = 0; j < L; ++j) c.push_back(annihilator(L, j));
    for (int k = 0; k < L; ++k)
        for (int l = 0; l < L; ++l) C(k, l) = psi.dot(c[k].adjoint() * c[l] * psi);
    return C;
}

inline Mat one_body(const Mat& rho, int L) {
    Mat C(L, L);
    std::vector<Mat> c;
    for (int j = 0; j < L; ++j) c.push_back(annihilator(L, j));
    for (int k = 0; k < L; ++k)
        for (int l = 0; l < L; ++l) C(k, l) = (rho * c[k].adjoint() * c[l]).trace();
    return C;
}

inline Vec basis_state(const std::vector<int>& occ) {
    int idx = 0;
    for (int n : occ) idx = 2 * idx + n;
    Vec v = Vec::Zero(1 << occ.size());
    v(idx) = 1.0;
    return v;
}

// Schmidt values of the cut after `ell` sites by a plain SVD of the reshaped amplitudes.
inline Eigen::VectorXd schmidt_values(const Vec& psi, int L, int ell) {
    const int da = 1 << ell;
    const int db = 1 << (L - ell);
    Mat M(da, db);
    for (int a = 0; a < da; ++a)
        for (int b = 0; b < db; ++b) M(a, b) = psi(a * db + b);
    Eigen::JacobiSVD<Mat> svd(M);
    return svd.singularValues();
}

inline double entropy_of_schmidt(const Eigen::VectorXd& lambda) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < lambda.size(); ++k) {
        const double p = lambda(k) * lambda(k);
        if (p > 1e-300) s -= p * std::log(p);
    }
    return s;
}

inline Vec random_state(int L, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Vec v(1 << L);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = Complex(g(rng), g(rng));
    return v.normalized();
}

inline int popcount(int x) {
    int c = 0;
    for (; x; x >>= 1) c += x & 1;
    return c;
}

// Random pure state supported on the N-particle sector.
inline Vec random_sector_state(int L, int N, std::mt19937_64& rng) {
    Vec v = random_state(L, rng);
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (popcount(static_cast<int>(i)) != N) v(i) = 0.0;
    return v.normalized();
}

// Random mixed state block-diagonal in particle number: a few random sector
// states (possibly different N) with random weights.
inline Mat random_number_conserving_rho(int L, std::mt19937_64& rng, int terms = 3) {
    std::uniform_int_distribution<int> pickN(0, L);
    std::uniform_real_distribution<double> w(0.05, 1.0);
    Mat rho = Mat::Zero(1 << L, 1 << L);
    double total = 0.0;
    for (int t = 0; t < terms; ++t) {
        const Vec v = random_sector_state(L, pickN(rng), rng);
        const double weight = w(rng);
        rho += weight * v * v.adjoint();
        total += weight;
    }
    return rho / total;
}

// Random single-particle Hermitian matrix and its many-body quadratic lift.
inline Mat random_quadratic_hamiltonian(int L, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Mat h(L, L);
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < L; ++j) h(i, j) = Complex(g(rng), g(rng));
    h = 0.5 * (h + h.adjoint()).eval();
    Mat H = Mat::Zero(1 << L, 1 << L);
    std::vector<Mat> c;
    for (int j = 0; j < L; ++j) c.push_back(annihilator(L, j));
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < L; ++j) H += h(i, j) * c[i].adjoint() * c[j];
    return H;
}

}  // namespace montraj::oracle
