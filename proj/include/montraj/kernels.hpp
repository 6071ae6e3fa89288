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

// Data-parallel statevector kernels. Every kernel has an OpenMP version in
// montraj::kernels and a plain loop version in montraj::kernels::serial that
// the tests use as reference. Reductions are accumulated over a fixed number
// of blocks so results do not depend on the thread count.

#include <cstddef>
#include <span>

#include "montraj/types.hpp"

namespace montraj::kernels {

/// Index of site `site` as a bit position when site 0 is the most significant bit.
inline int bit_of(int L, int site) { return L - 1 - site; }

void apply_one_site(std::span<Complex> psi, int L, int site, const Matrix2& op);
void apply_two_site(std::span<Complex> psi, int L, int bond, const Matrix4& op);

/// <psi| op |psi> for a local operator.
Complex expect_one_site(std::span<const Complex> psi, int L, int site, const Matrix2& op);
Complex expect_two_site(std::span<const Complex> psi, int L, int bond, const Matrix4& op);

double norm_squared(std::span<const Complex> psi);

/// C_kl = <c+_k c_l> with Jordan-Wigner signs, for a pure state.
Matrix one_body_matrix(std::span<const Complex> psi, int L);

namespace serial {
void apply_one_site(std::span<Complex> psi, int L, int site, const Matrix2& op);
void apply_two_site(std::span<Complex> psi, int L, int bond, const Matrix4& op);
Complex expect_one_site(std::span<const Complex> psi, int L, int site, const Matrix2& op);
Complex expect_two_site(std::span<const Complex> psi, int L, int bond, const Matrix4& op);
double norm_squared(std::span<const Complex> psi);
Matrix one_body_matrix(std::span<const Complex> psi, int L);
}  // namespace serial

}  // namespace montraj::kernels
