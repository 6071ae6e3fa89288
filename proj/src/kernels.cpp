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

#include "montraj/kernels.hpp"

#include <bit>
#include <cstdint>
#include <vector>

namespace montraj::kernels {

namespace {

constexpr std::int64_t kReductionBlocks = 64;

using Index = std::int64_t;

// Insert a zero bit at position `pos` of `k`.
inline Index insert_zero(Index k, int pos) {
    const Index low = k & ((Index{1} << pos) - 1);
    return ((k >> pos) << (pos + 1)) | low;
}

inline int parity_above(Index n, int bit) {
    return std::popcount(static_cast<std::uint64_t>(n) >> (bit + 1)) & 1;
}

template <typename Body>
Complex blocked_sum(Index count, Body body) {
    const Index blocks = std::min<Index>(kReductionBlocks, std::max<Index>(count, 1));
    const Index chunk = (count + blocks - 1) / blocks;
    std::vector<Complex> partial(static_cast<std::size_t>(blocks), Complex(0.0));
#pragma omp parallel for schedule(static)
    for (Index b = 0; b < blocks; ++b) {
        Complex acc(0.0);
        const Index end = std::min(count, (b + 1) * chunk);
        for (Index k = b * chunk; k < end; ++k) acc += body(k);
        partial[static_cast<std::size_t>(b)] = acc;
    }
    Complex total(0.0);
    for (const Complex& p : partial) total += p;
    return total;
}

Complex one_body_element(std::span<const Complex> psi, int L, int k, int l) {
    const int bk = bit_of(L, k);
    const int bl = bit_of(L, l);
    const Index dim = static_cast<Index>(psi.size());
    Complex acc(0.0);
    for (Index n = 0; n < dim; ++n) {
        if (!((n >> bl) & 1)) continue;
        const Index mid = n & ~(Index{1} << bl);
        if (k != l && ((mid >> bk) & 1)) continue;
        const Index m = mid | (Index{1} << bk);
        const int sign = parity_above(n, bl) ^ parity_above(mid, bk);
        const Complex term = std::conj(psi[m]) * psi[n];
        acc += sign ? -term : term;
    }
    return acc;
}

}  // namespace

void apply_one_site(std::span<Complex> psi, int L, int site, const Matrix2& op) {
    const int b = bit_of(L, site);
    const Index half = static_cast<Index>(psi.size()) / 2;
    const Index mask = Index{1} << b;
#pragma omp parallel for schedule(static)
    for (Index k = 0; k < half; ++k) {
        const Index i0 = insert_zero(k, b);
        const Index i1 = i0 | mask;
        const Complex a0 = psi[i0];
        const Complex a1 = psi[i1];
        psi[i0] = op(0, 0) * a0 + op(0, 1) * a1;
        psi[i1] = op(1, 0) * a0 + op(1, 1) * a1;
    }
}

void apply_two_site(std::span<Complex> psi, int L, int bond, const Matrix4& op) {
    const int hi = bit_of(L, bond);
    const int lo = hi - 1;
    const Index quarter = static_cast<Index>(psi.size()) / 4;
    const Index mhi = Index{1} << hi;
    const Index mlo = Index{1} << lo;
#pragma omp parallel for schedule(static)
    for (Index k = 0; k < quarter; ++k) {
        const Index i00 = insert_zero(insert_zero(k, lo), hi);
        const Index idx[4] = {i00, i00 | mlo, i00 | mhi, i00 | mhi | mlo};
        const Complex a[4] = {psi[idx[0]], psi[idx[1]], psi[idx[2]], psi[idx[3]]};
        for (int r = 0; r < 4; ++r) {
            psi[idx[r]] = op(r, 0) * a[0] + op(r, 1) * a[1] + op(r, 2) * a[2] + op(r, 3) * a[3];
        }
    }
}

Complex expect_one_site(std::span<const Complex> psi, int L, int site, const Matrix2& op) {
    const int b = bit_of(L, site);
    const Index mask = Index{1} << b;
    return blocked_sum(static_cast<Index>(psi.size()) / 2, [&](Index k) {
        const Index i0 = insert_zero(k, b);
        const Index i1 = i0 | mask;
        const Complex a0 = psi[i0];
        const Complex a1 = psi[i1];
        return std::conj(a0) * (op(0, 0) * a0 + op(0, 1) * a1) + std::conj(a1) * (op(1, 0) * a0 + op(1, 1) * a1);
    });
}

Complex expect_two_site(std::span<const Complex> psi, int L, int bond, const Matrix4& op) {
    const int hi = bit_of(L, bond);
    const int lo = hi - 1;
    const Index mhi = Index{1} << hi;
    const Index mlo = Index{1} << lo;
    return blocked_sum(static_cast<Index>(psi.size()) / 4, [&](Index k) {
        const Index i00 = insert_zero(insert_zero(k, lo), hi);
        const Index idx[4] = {i00, i00 | mlo, i00 | mhi, i00 | mhi | mlo};
        Complex acc(0.0);
        for (int r = 0; r < 4; ++r) {
            Complex row(0.0);
            for (int c = 0; c < 4; ++c) row += op(r, c) * psi[idx[c]];
            acc += std::conj(psi[idx[r]]) * row;
        }
        return acc;
    });
}

double norm_squared(std::span<const Complex> psi) {
    return blocked_sum(static_cast<Index>(psi.size()), [&](Index k) { return Complex(std::norm(psi[k])); }).real();
}

Matrix one_body_matrix(std::span<const Complex> psi, int L) {
    Matrix C(L, L);
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < L; ++k) {
        for (int l = k; l < L; ++l) C(k, l) = one_body_element(psi, L, k, l);
    }
    for (int k = 0; k < L; ++k) {
        C(k, k) = C(k, k).real();
        for (int l = k + 1; l < L; ++l) C(l, k) = std::conj(C(k, l));
    }
    return C;
}

namespace serial {

void apply_one_site(std::span<Complex> psi, int L, int site, const Matrix2& op) {
    const Index mask = Index{1} << bit_of(L, site);
    for (Index i = 0; i < static_cast<Index>(psi.size()); ++i) {
        if (i & mask) continue;
        const Complex a0 = psi[i];
        const Complex a1 = psi[i | mask];
        psi[i] = op(0, 0) * a0 + op(0, 1) * a1;
        psi[i | mask] = op(1, 0) * a0 + op(1, 1) * a1;
    }
}

void apply_two_site(std::span<Complex> psi, int L, int bond, const Matrix4& op) {
    const Index mhi = Index{1} << bit_of(L, bond);
    const Index mlo = Index{1} << bit_of(L, bond + 1);
    for (Index i = 0; i < static_cast<Index>(psi.size()); ++i) {
        if ((i & mhi) || (i & mlo)) continue;
        const Index idx[4] = {i, i | mlo, i | mhi, i | mhi | mlo};
        Eigen::Vector4cd a;
        for (int r = 0; r < 4; ++r) a(r) = psi[idx[r]];
        const Eigen::Vector4cd b = op * a;
        for (int r = 0; r < 4; ++r) psi[idx[r]] = b(r);
    }
}

Complex expect_one_site(std::span<const Complex> psi, int L, int site, const Matrix2& op) {
    std::vector<Complex> tmp(psi.begin(), psi.end());
    apply_one_site(tmp, L, site, op);
    Complex acc(0.0);
    for (std::size_t i = 0; i < psi.size(); ++i) acc += std::conj(psi[i]) * tmp[i];
    return acc;
}

Complex expect_two_site(std::span<const Complex> psi, int L, int bond, const Matrix4& op) {
    std::vector<Complex> tmp(psi.begin(), psi.end());
    apply_two_site(tmp, L, bond, op);
    Complex acc(0.0);
    for (std::size_t i = 0; i < psi.size(); ++i) acc += std::conj(psi[i]) * tmp[i];
    return acc;
}

double norm_squared(std::span<const Complex> psi) {
    double acc = 0.0;
    for (const Complex& a : psi) acc += std::norm(a);
    return acc;
}

Matrix one_body_matrix(std::span<const Complex> psi, int L) {
    Matrix C(L, L);
    for (int k = 0; k < L; ++k) {
        for (int l = 0; l < L; ++l) C(k, l) = one_body_element(psi, L, k, l);
    }
    return C;
}

}  // namespace serial

}  // namespace montraj::kernels
