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

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <string>

namespace montraj {

namespace {

using Index = Eigen::Index;

// Relative weight below which a Schmidt value is treated as an exact zero.
constexpr double kZeroWeight = 1e-28;
// Relative tolerance for the tie-broadening rule at the truncation boundary.
constexpr double kTieTolerance = 1e-12;

struct SvdSplit {
    Matrix U;
    RealVector S;
    Matrix Vh;
    std::vector<int> charges;
    double discarded = 0.0;
    bool chi_limited = false;
};

struct SvdBlock {
    int charge;
    std::vector<Index> rows;
    std::vector<Index> cols;
    Matrix U;
    RealVector S;
    Matrix V;
};

SvdSplit block_svd(const Matrix& M, const std::vector<int>& row_q, const std::vector<int>& col_q,
                   const TruncationPolicy* policy) {
    std::map<int, std::vector<Index>> row_groups;
    std::map<int, std::vector<Index>> col_groups;
    for (Index r = 0; r < M.rows(); ++r) row_groups[row_q[r]].push_back(r);
    for (Index c = 0; c < M.cols(); ++c) col_groups[col_q[c]].push_back(c);

    std::vector<SvdBlock> blocks;
    for (auto& [q, rows] : row_groups) {
        auto it = col_groups.find(q);
        if (it == col_groups.end()) continue;
        const Matrix sub = M(rows, it->second);
        Eigen::BDCSVD<Matrix> svd(sub, Eigen::ComputeThinU | Eigen::ComputeThinV);
        blocks.push_back({q, rows, it->second, svd.matrixU(), svd.singularValues(), svd.matrixV()});
    }

    struct Entry {
        double s;
        int block;
        Index k;
    };
    std::vector<Entry> entries;
    double total = 0.0;
    for (int b = 0; b < static_cast<int>(blocks.size()); ++b) {
        for (Index k = 0; k < blocks[b].S.size(); ++k) {
            entries.push_back({blocks[b].S(k), b, k});
            total += blocks[b].S(k) * blocks[b].S(k);
        }
    }
    if (!(total > 0.0)) throw NumericalError("cannot split a two-site tensor with zero norm");
    // Blocks are in ascending charge order, so a stable sort fixes the order of ties.
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.s > b.s; });

    const double cutoff = policy ? policy->svd_cutoff : kZeroWeight;
    std::size_t keep = 0;
    while (keep < entries.size() && entries[keep].s * entries[keep].s / total > cutoff) ++keep;
    bool chi_limited = false;
    if (policy && keep > static_cast<std::size_t>(policy->chi_max)) {
        chi_limited = true;
        keep = static_cast<std::size_t>(policy->chi_max);
        const double last = entries[keep - 1].s;
        while (keep < entries.size() && entries[keep].s >= last * (1.0 - kTieTolerance)) ++keep;
    }
    keep = std::max<std::size_t>(keep, 1);

    SvdSplit out;
    double kept_weight = 0.0;
    for (std::size_t i = 0; i < keep; ++i) kept_weight += entries[i].s * entries[i].s;
    out.discarded = std::max(0.0, 1.0 - kept_weight / total);
    out.chi_limited = chi_limited;

    const Index n = static_cast<Index>(keep);
    out.U = Matrix::Zero(M.rows(), n);
    out.Vh = Matrix::Zero(n, M.cols());
    out.S.resize(n);
    out.charges.resize(keep);
    const double scale = 1.0 / std::sqrt(kept_weight);
    for (Index i = 0; i < n; ++i) {
        const Entry& e = entries[static_cast<std::size_t>(i)];
        const SvdBlock& blk = blocks[e.block];
        for (std::size_t r = 0; r < blk.rows.size(); ++r) out.U(blk.rows[r], i) = blk.U(static_cast<Index>(r), e.k);
        for (std::size_t c = 0; c < blk.cols.size(); ++c)
            out.Vh(i, blk.cols[c]) = std::conj(blk.V(static_cast<Index>(c), e.k));
        out.S(i) = e.s * scale;
        out.charges[static_cast<std::size_t>(i)] = blk.charge;
    }
    return out;
}

// Applies a 4x4 local operator to theta laid out as 2x2 blocks of dl x dr.
Matrix apply_to_theta(const Matrix& theta, const Matrix4& op, Index dl, Index dr) {
    Matrix out = Matrix::Zero(theta.rows(), theta.cols());
    for (int s1 = 0; s1 < 2; ++s1)
        for (int s2 = 0; s2 < 2; ++s2)
            for (int t1 = 0; t1 < 2; ++t1)
                for (int t2 = 0; t2 < 2; ++t2) {
                    const Complex g = op(2 * s1 + s2, 2 * t1 + t2);
                    if (g == Complex(0.0)) continue;
                    out.block(s1 * dl, s2 * dr, dl, dr) += g * theta.block(t1 * dl, t2 * dr, dl, dr);
                }
    return out;
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ConfigError("truncated MPS snapshot");
    return v;
}

}  // namespace

void TruncationPolicy::validate() const {
    if (chi_max < 1) throw ConfigError("invalid chi_max: must be >= 1");
    if (!(svd_cutoff >= 0.0 && svd_cutoff < 1.0)) throw ConfigError("invalid svd_cutoff: must lie in [0, 1)");
    if (!(hard_limit > 0.0)) throw ConfigError("invalid hard_limit: must be positive");
}

MpsState MpsState::product(std::span<const int> occupations) {
    const int L = static_cast<int>(occupations.size());
    if (L < 2) throw ConfigError("an MPS needs at least 2 sites");
    MpsState m;
    m.tensors_.resize(static_cast<std::size_t>(L));
    m.charges_.assign(static_cast<std::size_t>(L + 1), std::vector<int>{0});
    for (int k = 0; k < L; ++k) {
        const int n = occupations[k];
        if (n != 0 && n != 1) throw ConfigError("occupations must be 0 or 1");
        for (int s = 0; s < 2; ++s) m.tensors_[k][s] = Matrix::Constant(1, 1, s == n ? 1.0 : 0.0);
        m.charges_[k + 1][0] = m.charges_[k][0] + n;
    }
    m.schmidt_.assign(static_cast<std::size_t>(L - 1), RealVector::Ones(1));
    m.schmidt_valid_.assign(static_cast<std::size_t>(L - 1), 1);
    return m;
}

MpsState MpsState::neel(int L) {
    std::vector<int> occ(static_cast<std::size_t>(L));
    for (int j = 0; j < L; ++j) occ[j] = (j % 2 == 0) ? 1 : 0;
    return product(occ);
}

int MpsState::max_bond_dimension() const {
    int chi = 1;
    for (const auto& q : charges_) chi = std::max(chi, static_cast<int>(q.size()));
    return chi;
}

void MpsState::invalidate_schmidt(int except_bond) {
    for (int b = 0; b < static_cast<int>(schmidt_valid_.size()); ++b) {
        if (b != except_bond) schmidt_valid_[b] = 0;
    }
}

void MpsState::move_center_right() {
    const int c = center_;
    const Index dl = dim(c);
    const Index dr = dim(c + 1);
    Matrix M(2 * dl, dr);
    M.topRows(dl) = tensors_[c][0];
    M.bottomRows(dl) = tensors_[c][1];
    std::vector<int> row_q(static_cast<std::size_t>(2 * dl));
    for (Index a = 0; a < dl; ++a) {
        row_q[a] = charges_[c][a];
        row_q[dl + a] = charges_[c][a] + 1;
    }
    SvdSplit split = block_svd(M, row_q, charges_[c + 1], nullptr);
    tensors_[c][0] = split.U.topRows(dl);
    tensors_[c][1] = split.U.bottomRows(dl);
    const Matrix R = split.S.asDiagonal() * split.Vh;
    for (int s = 0; s < 2; ++s) tensors_[c + 1][s] = (R * tensors_[c + 1][s]).eval();
    charges_[c + 1] = std::move(split.charges);
    schmidt_[c] = split.S;
    schmidt_valid_[c] = 1;
    center_ = c + 1;
}

void MpsState::move_center_left() {
    const int c = center_;
    const Index dl = dim(c);
    const Index dr = dim(c + 1);
    Matrix M(dl, 2 * dr);
    M.leftCols(dr) = tensors_[c][0];
    M.rightCols(dr) = tensors_[c][1];
    std::vector<int> col_q(static_cast<std::size_t>(2 * dr));
    for (Index b = 0; b < dr; ++b) {
        col_q[b] = charges_[c + 1][b];
        col_q[dr + b] = charges_[c + 1][b] - 1;
    }
    SvdSplit split = block_svd(M, charges_[c], col_q, nullptr);
    tensors_[c][0] = split.Vh.leftCols(dr);
    tensors_[c][1] = split.Vh.rightCols(dr);
    const Matrix Lm = split.U * split.S.asDiagonal();
    for (int s = 0; s < 2; ++s) tensors_[c - 1][s] = (tensors_[c - 1][s] * Lm).eval();
    charges_[c] = std::move(split.charges);
    schmidt_[c - 1] = split.S;
    schmidt_valid_[c - 1] = 1;
    center_ = c - 1;
}

void MpsState::move_center(int site) {
    if (site < 0 || site >= length()) throw ConfigError("center position out of range");
    while (center_ < site) move_center_right();
    while (center_ > site) move_center_left();
}

Matrix MpsState::two_site_theta(int bond) const {
    const Index dl = dim(bond);
    const Index dr = dim(bond + 2);
    Matrix theta(2 * dl, 2 * dr);
    for (int s1 = 0; s1 < 2; ++s1)
        for (int s2 = 0; s2 < 2; ++s2)
            theta.block(s1 * dl, s2 * dr, dl, dr).noalias() = tensors_[bond][s1] * tensors_[bond + 1][s2];
    return theta;
}

double MpsState::split_two_site(int bond, const Matrix& theta, const TruncationPolicy* policy, int center_site) {
    const Index dl = dim(bond);
    const Index dr = dim(bond + 2);
    std::vector<int> row_q(static_cast<std::size_t>(2 * dl));
    std::vector<int> col_q(static_cast<std::size_t>(2 * dr));
    for (Index a = 0; a < dl; ++a) {
        row_q[a] = charges_[bond][a];
        row_q[dl + a] = charges_[bond][a] + 1;
    }
    for (Index b = 0; b < dr; ++b) {
        col_q[b] = charges_[bond + 2][b];
        col_q[dr + b] = charges_[bond + 2][b] - 1;
    }
    SvdSplit split = block_svd(theta, row_q, col_q, policy);
    if (policy && split.chi_limited && split.discarded > policy->hard_limit) {
        throw NumericalError("truncation failure at bond " + std::to_string(bond) + ": discarded weight " +
                             std::to_string(split.discarded) + " with chi_max=" + std::to_string(policy->chi_max));
    }
    for (int s = 0; s < 2; ++s) {
        tensors_[bond][s] = split.U.middleRows(s * dl, dl);
        tensors_[bond + 1][s] = split.Vh.middleCols(s * dr, dr);
    }
    if (center_site == bond + 1) {
        for (int s = 0; s < 2; ++s) tensors_[bond + 1][s] = (split.S.asDiagonal() * tensors_[bond + 1][s]).eval();
    } else {
        for (int s = 0; s < 2; ++s) tensors_[bond][s] = (tensors_[bond][s] * split.S.asDiagonal()).eval();
    }
    charges_[bond + 1] = std::move(split.charges);
    schmidt_[bond] = split.S;
    schmidt_valid_[bond] = 1;
    center_ = center_site;
    discarded_total_ += split.discarded;
    return split.discarded;
}

double MpsState::apply_two_site_gate(int bond, const Matrix4& gate, const TruncationPolicy& policy) {
    if (bond < 0 || bond > length() - 2) throw ConfigError("bond out of range");
    const bool from_left = center_ <= bond;
    move_center(from_left ? bond : bond + 1);
    const Matrix theta = apply_to_theta(two_site_theta(bond), gate, dim(bond), dim(bond + 2));
    const double discarded = split_two_site(bond, theta, &policy, from_left ? bond + 1 : bond);
    if (discarded > 0.0) invalidate_schmidt(bond);
    return discarded;
}

std::vector<double> MpsState::born_probabilities(int location, const ProjectorSet& set) {
    std::vector<double> probs;
    if (set.support() == 1) {
        move_center(location);
        const auto& A = tensors_[location];
        const double w0 = A[0].squaredNorm();
        const double w1 = A[1].squaredNorm();
        const double total = w0 + w1;
        for (const ProjectorOutcome& o : set.outcomes) {
            const Matrix& P = o.projector.matrix;
            Complex e = P(0, 0) * w0 + P(1, 1) * w1;
            if (P(0, 1) != Complex(0.0) || P(1, 0) != Complex(0.0)) {
                const Complex cross = A[0].cwiseProduct(A[1].conjugate()).sum();  // <A1|A0>
                e += P(1, 0) * cross + P(0, 1) * std::conj(cross);
            }
            probs.push_back(e.real() / total);
        }
    } else {
        if (location < 0 || location > length() - 2) throw ConfigError("bond out of range");
        move_center(center_ <= location ? location : location + 1);
        const Matrix theta = two_site_theta(location);
        const double total = theta.squaredNorm();
        for (const ProjectorOutcome& o : set.outcomes) {
            const Matrix ptheta = apply_to_theta(theta, Matrix4(o.projector.matrix), dim(location), dim(location + 2));
            probs.push_back(theta.cwiseProduct(ptheta.conjugate()).sum().real() / total);
        }
    }
    clamp_probabilities(probs);
    return probs;
}

double MpsState::apply_projector(int location, const LocalOperator& projector, const TruncationPolicy& policy) {
    if (projector.support == 1) {
        if (location < 0 || location >= length()) throw ConfigError("site out of range");
        move_center(location);
        auto& A = tensors_[location];
        const Matrix2 P = projector.matrix;
        const Matrix a0 = P(0, 0) * A[0] + P(0, 1) * A[1];
        const Matrix a1 = P(1, 0) * A[0] + P(1, 1) * A[1];
        const double prob = a0.squaredNorm() + a1.squaredNorm();
        if (prob < 1e-14) throw NumericalError("degenerate projection at site " + std::to_string(location));
        const double scale = 1.0 / std::sqrt(prob);
        A[0] = a0 * scale;
        A[1] = a1 * scale;
        invalidate_schmidt();
        return prob;
    }
    if (location < 0 || location > length() - 2) throw ConfigError("bond out of range");
    const bool from_left = center_ <= location;
    move_center(from_left ? location : location + 1);
    Matrix theta = apply_to_theta(two_site_theta(location), Matrix4(projector.matrix), dim(location), dim(location + 2));
    const double prob = theta.squaredNorm();
    if (prob < 1e-14) throw NumericalError("degenerate projection at bond " + std::to_string(location));
    theta /= std::sqrt(prob);
    split_two_site(location, theta, &policy, from_left ? location + 1 : location);
    invalidate_schmidt(location);
    return prob;
}

RealVector MpsState::schmidt_spectrum(int bond) {
    if (bond < 0 || bond > length() - 2) throw ConfigError("bond out of range");
    if (!schmidt_valid_[bond]) {
        if (center_ <= bond) {
            move_center(bond + 1);
        } else {
            move_center(bond);
        }
    }
    return schmidt_[bond];
}

void MpsState::refresh_schmidt() {
    const bool all_valid = std::all_of(schmidt_valid_.begin(), schmidt_valid_.end(), [](char v) { return v != 0; });
    if (all_valid) return;
    move_center(0);
    move_center(length() - 1);
}

Complex MpsState::expect_one_site(int site, const Matrix2& op) {
    move_center(site);
    const auto& A = tensors_[site];
    Complex acc(0.0);
    for (int s = 0; s < 2; ++s)
        for (int t = 0; t < 2; ++t) {
            if (op(s, t) == Complex(0.0)) continue;
            acc += op(s, t) * A[s].conjugate().cwiseProduct(A[t]).sum();
        }
    return acc;
}

Complex MpsState::string_correlator(int i, int j) {
    if (i < 0 || j < 0 || i >= length() || j >= length()) throw ConfigError("site out of range");
    if (i == j) return expect_one_site(i, ops::number());
    if (i > j) return std::conj(string_correlator(j, i));
    move_center(i);
    // c+_i = sigma^-_i with the string to the left cancelling against c_j's.
    Matrix T = tensors_[i][1].adjoint() * tensors_[i][0];
    for (int k = i + 1; k < j; ++k) {
        T = (tensors_[k][0].adjoint() * T * tensors_[k][0] - tensors_[k][1].adjoint() * T * tensors_[k][1]).eval();
    }
    return tensors_[j][0].conjugate().cwiseProduct(T * tensors_[j][1]).sum();
}

Matrix MpsState::left_environment_step(const Matrix& env, int site, const Matrix2& op) const {
    const auto& A = tensors_[site];
    Matrix out = Matrix::Zero(dim(site + 1), dim(site + 1));
    for (int s = 0; s < 2; ++s)
        for (int t = 0; t < 2; ++t) {
            if (op(s, t) == Complex(0.0)) continue;
            out.noalias() += op(s, t) * (A[s].adjoint() * (env * A[t]));
        }
    return out;
}

Matrix MpsState::one_body_matrix() {
    const int L = length();
    move_center(0);
    Matrix C = Matrix::Zero(L, L);
    Matrix env = Matrix::Ones(1, 1);
    for (int i = 0; i < L; ++i) {
        const auto& Ai = tensors_[i];
        C(i, i) = Ai[1].conjugate().cwiseProduct(env * Ai[1]).sum().real();
        Matrix T = Ai[1].adjoint() * (env * Ai[0]);
        for (int j = i + 1; j < L; ++j) {
            const auto& Aj = tensors_[j];
            C(i, j) = Aj[0].conjugate().cwiseProduct(T * Aj[1]).sum();
            if (j + 1 < L) T = left_environment_step(T, j, ops::sigma_z());
        }
        env = left_environment_step(env, i, ops::identity());
    }
    for (int i = 0; i < L; ++i)
        for (int j = i + 1; j < L; ++j) C(j, i) = std::conj(C(i, j));
    return C;
}

double MpsState::norm() const {
    Matrix env = Matrix::Ones(1, 1);
    for (int k = 0; k < length(); ++k) env = left_environment_step(env, k, ops::identity());
    return std::sqrt(std::abs(env(0, 0)));
}

Vector MpsState::to_dense() const {
    if (length() > 12) throw ConfigError("to_dense supports L <= 12");
    Matrix partial = Matrix::Ones(1, 1);  // rows: basis of sites 0..k-1, cols: virtual bond
    for (int k = 0; k < length(); ++k) {
        Matrix next(partial.rows() * 2, dim(k + 1));
        for (Index r = 0; r < partial.rows(); ++r)
            for (int s = 0; s < 2; ++s) next.row(2 * r + s) = partial.row(r) * tensors_[k][s];
        partial = std::move(next);
    }
    return partial.col(0);
}

void MpsState::save(std::ostream& out) const {
    write_pod<std::uint8_t>(out, kSnapshotVersion);
    write_pod<std::int32_t>(out, length());
    write_pod<std::int32_t>(out, 2);
    for (int k = 0; k <= length(); ++k) write_pod<std::int32_t>(out, dim(k));
    write_pod<std::int32_t>(out, center_);
    for (int k = 0; k < length(); ++k) {
        const Index dl = dim(k);
        const Index dr = dim(k + 1);
        for (Index a = 0; a < dl; ++a)
            for (int s = 0; s < 2; ++s)
                for (Index b = 0; b < dr; ++b) {
                    const Complex v = tensors_[k][s](a, b);
                    write_pod<double>(out, v.real());
                    write_pod<double>(out, v.imag());
                }
    }
    for (const auto& q : charges_)
        for (int c : q) write_pod<std::int32_t>(out, c);
}

MpsState MpsState::load(std::istream& in) {
    const auto version = read_pod<std::uint8_t>(in);
    if (version != kSnapshotVersion) throw ConfigError("unsupported MPS snapshot version " + std::to_string(version));
    const int L = read_pod<std::int32_t>(in);
    const int phys = read_pod<std::int32_t>(in);
    if (L < 2 || phys != 2) throw ConfigError("malformed MPS snapshot header");
    std::vector<int> dims(static_cast<std::size_t>(L + 1));
    for (int& d : dims) {
        d = read_pod<std::int32_t>(in);
        if (d < 1) throw ConfigError("malformed MPS snapshot bond dimension");
    }
    MpsState m;
    m.center_ = read_pod<std::int32_t>(in);
    if (m.center_ < 0 || m.center_ >= L) throw ConfigError("malformed MPS snapshot center");
    m.tensors_.resize(static_cast<std::size_t>(L));
    for (int k = 0; k < L; ++k) {
        for (int s = 0; s < 2; ++s) m.tensors_[k][s].resize(dims[k], dims[k + 1]);
        for (int a = 0; a < dims[k]; ++a)
            for (int s = 0; s < 2; ++s)
                for (int b = 0; b < dims[k + 1]; ++b) {
                    const double re = read_pod<double>(in);
                    const double im = read_pod<double>(in);
                    m.tensors_[k][s](a, b) = Complex(re, im);
                }
    }
    m.charges_.resize(static_cast<std::size_t>(L + 1));
    for (int k = 0; k <= L; ++k) {
        m.charges_[k].resize(static_cast<std::size_t>(dims[k]));
        for (int& c : m.charges_[k]) c = read_pod<std::int32_t>(in);
    }
    m.schmidt_.assign(static_cast<std::size_t>(L - 1), RealVector());
    m.schmidt_valid_.assign(static_cast<std::size_t>(L - 1), 0);
    return m;
}

}  // namespace montraj
