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

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "montraj/model.hpp"
#include "montraj/types.hpp"

namespace montraj {

struct TruncationPolicy {
    int chi_max = 256;
    /// Schmidt values with lambda^2 / sum(lambda^2) <= svd_cutoff are dropped.
    double svd_cutoff = 1e-10;
    /// Discarded weight above this at a chi_max-limited cut is a failure.
    double hard_limit = 1e-4;

    void validate() const;
};

/// Open-boundary matrix product state in mixed canonical form.
///
/// Site k holds two matrices A[k][s] of shape dim(k) x dim(k+1), s the site
/// occupation. Virtual bond k sits to the left of site k, so the physical
/// bond b (between sites b and b+1) is virtual bond b+1. Every virtual basis
/// vector carries a definite particle number on the sites to its left; SVDs
/// are done block by block in that label, which keeps the labels exact.
class MpsState {
   public:
    static MpsState product(std::span<const int> occupations);
    static MpsState neel(int L);

    int length() const { return static_cast<int>(tensors_.size()); }
    int center() const { return center_; }
    int bond_dimension(int bond) const { return dim(bond + 1); }
    int max_bond_dimension() const;
    int particle_count() const { return charges_.back().front(); }
    /// Accumulated discarded weight over all truncations.
    double truncation_error() const { return discarded_total_; }

    /// Moves the orthogonality center by exact (untruncated) SVDs.
    void move_center(int site);

    /// Applies a 4x4 gate on bond (b, b+1) and truncates. Returns the
    /// discarded weight of this cut. Throws NumericalError when chi_max is
    /// binding and the discarded weight exceeds policy.hard_limit.
    double apply_two_site_gate(int bond, const Matrix4& gate, const TruncationPolicy& policy);

    std::vector<double> born_probabilities(int location, const ProjectorSet& set);

    /// Applies a projector at a site or bond and renormalizes. Two-site
    /// projectors are re-split by a truncated SVD. Returns <Pi>.
    double apply_projector(int location, const LocalOperator& projector, const TruncationPolicy& policy);

    /// Descending Schmidt values across physical bond `bond`.
    RealVector schmidt_spectrum(int bond);

    /// Recomputes every Schmidt spectrum that is not up to date.
    void refresh_schmidt();

    Complex expect_one_site(int site, const Matrix2& op);

    /// <c+_i c_j> including the sigma^z string between i and j.
    Complex string_correlator(int i, int j);

    /// Full correlation matrix, built with one left-to-right contraction per row.
    Matrix one_body_matrix();

    double norm() const;

    /// Exact contraction to a 2^L amplitude vector (L <= 12).
    Vector to_dense() const;

    /// Binary checkpoint: u8 version, i32 L, i32 physical dim, i32 dims[L+1],
    /// i32 center, then per site the (left, phys, right) tensor in row-major
    /// order as (re, im) doubles, then i32 charge labels per virtual bond.
    /// All integers and doubles little-endian.
    void save(std::ostream& out) const;
    static MpsState load(std::istream& in);

    static constexpr std::uint8_t kSnapshotVersion = 1;

   private:
    MpsState() = default;

    int dim(int virtual_bond) const { return static_cast<int>(charges_[virtual_bond].size()); }
    void move_center_right();
    void move_center_left();
    // Splits theta (rows (a, s1) with a fastest, columns (b, s2) with b fastest)
    // back into sites b, b+1 and places the center on `center_site`.
    double split_two_site(int bond, const Matrix& theta, const TruncationPolicy* policy, int center_site);
    Matrix two_site_theta(int bond) const;
    void invalidate_schmidt(int except_bond = -1);
    Matrix left_environment_step(const Matrix& env, int site, const Matrix2& op) const;

    std::vector<std::array<Matrix, 2>> tensors_;
    std::vector<std::vector<int>> charges_;  // size L+1
    std::vector<RealVector> schmidt_;        // size L-1, by physical bond
    std::vector<char> schmidt_valid_;
    int center_ = 0;
    double discarded_total_ = 0.0;
};

}  // namespace montraj
