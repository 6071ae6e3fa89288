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

#include "montraj/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>

#include "montraj/experiment.hpp"
#include "montraj/oracle.hpp"

namespace montraj {

namespace {

bool full(const ValidationOptions& o) { return o.scale == ValidationScale::Full; }

template <class T>
T pick(const ValidationOptions& o, T quick, T full_value) {
    return full(o) ? full_value : quick;
}

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", x);
    return buf;
}

std::string fixed(double x, int digits = 4) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

void note(const ValidationOptions& o, const std::string& msg) {
    if (o.log) *o.log << msg << std::endl;
}

ChainSpec chain(int L, double U, double gamma, Observable obs, int steps) {
    ChainSpec s;
    s.L = L;
    s.U = U;
    s.gamma = gamma;
    s.observable = obs;
    s.n_steps = steps;
    return s;
}

double ng_of(const Matrix& C) { return total_ng(orbital_spectrum(C)); }

// ---------------------------------------------------------------------------

CriterionResult dense_vs_mps(const ValidationOptions& o) {
    CriterionResult r{1, "dense and MPS trajectories agree", false, ""};
    const int L = 8;
    const int n_traj = pick(o, 5, 50);
    const int steps = pick(o, 100, 200);
    const TruncationPolicy policy{256, 1e-12, 1e-4};
    double dS = 0, dC = 0, dnu = 0, dng = 0;
    int mismatched = 0, total = 0, combo = 0;
    for (double U : {0.0, 1.0})
        for (Observable obs : {Observable::Occupation, Observable::Current})
            for (double gamma : {0.1, 0.5}) {
                const ChainSpec spec = chain(L, U, gamma, obs, steps);
                for (int t = 0; t < n_traj; ++t) {
                    ++total;
                    const std::uint64_t stream = static_cast<std::uint64_t>(combo) * 1000 + t;
                    DenseBackend dense(spec);
                    MpsBackend mps(spec, policy);
                    const TrajectoryRecord a = run_trajectory(dense, 1001, stream, SamplingOptions{0.5, 0.0});
                    const TrajectoryRecord b = run_trajectory(mps, 1001, stream, SamplingOptions{0.5, 0.0});
                    bool same = a.events.size() == b.events.size();
                    for (std::size_t k = 0; same && k < a.events.size(); ++k)
                        same = a.events[k].location == b.events[k].location && a.events[k].outcome == b.events[k].outcome;
                    if (!same) {
                        ++mismatched;
                        continue;
                    }
                    for (std::size_t k = 0; k < a.samples.size(); ++k) {
                        const auto& x = a.samples[k];
                        const auto& y = b.samples[k];
                        dS = std::max(dS, (x.entropy.S - y.entropy.S).cwiseAbs().maxCoeff());
                        dC = std::max(dC, (x.C - y.C).cwiseAbs().maxCoeff());
                        const OrbitalSpectrum sx = orbital_spectrum(x.C), sy = orbital_spectrum(y.C);
                        dnu = std::max(dnu, (sx.nu - sy.nu).cwiseAbs().maxCoeff());
                        dng = std::max(dng, std::abs(total_ng(sx) - total_ng(sy)));
                    }
                }
                ++combo;
                note(o, "  criterion 1: U=" + fixed(U, 1) + " " + std::string(to_string(obs)) + " gamma=" +
                            fixed(gamma, 1) + " done, running max |dC| " + sci(dC));
            }
    const double worst = std::max({dS, dC, dnu, dng});
    r.pass = mismatched == 0 && worst <= 1e-7;
    r.detail = std::to_string(total) + " trajectory pairs (L=8, cutoff 1e-12), outcome mismatches " +
               std::to_string(mismatched) + "; max |dS| " + sci(dS) + ", |dC| " + sci(dC) + ", |dnu| " + sci(dnu) +
               ", |dNG| " + sci(dng) + " (tolerance 1e-7)";
    return r;
}

CriterionResult gaussian_exactness(const ValidationOptions& o) {
    CriterionResult r{2, "Gaussian backend is exact for free fermions with occupation monitoring", false, ""};
    const int n_traj = pick(o, 10, 100);
    const int steps = pick(o, 100, 200);
    const double gammas[3] = {0.1, 0.5, 2.0};
    double dC = 0, ng = 0;
    int inconsistent = 0, total = 0;
    for (int L : {8, 10}) {
        for (int t = 0; t < n_traj; ++t) {
            ++total;
            const ChainSpec spec = chain(L, 0.0, gammas[t % 3], Observable::Occupation, steps);
            GaussianBackend g(spec);
            const TrajectoryRecord a = run_trajectory(g, 2002, static_cast<std::uint64_t>(L) * 1000 + t, {0.5, 0.0});
            for (const auto& s : a.samples) ng = std::max(ng, ng_of(s.C));
            DenseBackend d(spec);
            try {
                const TrajectoryRecord b = replay(a, d);
                for (std::size_t k = 0; k < a.samples.size(); ++k)
                    dC = std::max(dC, (a.samples[k].C - b.samples[k].C).cwiseAbs().maxCoeff());
            } catch (const BackendInconsistencyError&) {
                ++inconsistent;
            }
        }
    }
    r.pass = inconsistent == 0 && dC <= 1e-8 && ng < 1e-8;
    r.detail = std::to_string(total) + " trajectories at L=8 and L=10 replayed on dense: max |dC| " + sci(dC) +
               " (tolerance 1e-8), inconsistent replays " + std::to_string(inconsistent) + ", max NG " + sci(ng) +
               " (tolerance 1e-8)";
    return r;
}

CriterionResult unconditional_dynamics(const ValidationOptions& o) {
    CriterionResult r{3, "trajectory average reproduces the master equation", false, ""};
    const int L = 6;
    const int n_traj = pick(o, 100, 600);
    const double gamma = 0.5;

    // Density matrix at t = 10.
    const ChainSpec spec = chain(L, 0.0, gamma, Observable::Occupation, 200);
    const Eigen::Index dim = Eigen::Index{1} << L;
    Accumulator rho_acc(static_cast<std::size_t>(2 * dim * dim));
    std::vector<double> row(rho_acc.size());
    for (int t = 0; t < n_traj; ++t) {
        DenseBackend d(spec);
        run_trajectory(d, 3003, static_cast<std::uint64_t>(t), SamplingOptions{10.0, 10.0});
        const Vector& psi = d.state().amplitudes;
        for (Eigen::Index i = 0; i < dim; ++i)
            for (Eigen::Index j = 0; j < dim; ++j) {
                const Complex v = psi(i) * std::conj(psi(j));
                row[static_cast<std::size_t>(2 * (i * dim + j))] = v.real();
                row[static_cast<std::size_t>(2 * (i * dim + j) + 1)] = v.imag();
            }
        rho_acc.add(row);
    }
    const DensityMatrix lindblad = lindblad_evolve(DensityMatrix::pure(DenseState::neel(L)), spec, 10.0);
    const auto se = rho_acc.stderr_of_mean();
    int rho_bad = 0;
    double rho_z = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j)
            for (int part = 0; part < 2; ++part) {
                const auto k = static_cast<std::size_t>(2 * (i * dim + j) + part);
                const double ref = part == 0 ? lindblad.rho(i, j).real() : lindblad.rho(i, j).imag();
                const double diff = std::abs(rho_acc.mean()[k] - ref);
                if (diff > 4.0 * se[k] + 1e-10) ++rho_bad;
                if (se[k] > 0.0) rho_z = std::max(rho_z, diff / se[k]);
            }
    note(o, "  criterion 3: density matrix at t=10 compared, max z " + fixed(rho_z, 2));

    // Late-time correlation matrix.
    ExperimentPlan plan;
    plan.L = {L};
    plan.U = {0.0};
    plan.gamma = {gamma};
    plan.trajectories = n_traj;
    plan.backend = BackendChoice::Dense;
    plan.n_steps = 2000;
    plan.burn_in = 0.5;
    plan.sample_interval = 1.0;
    plan.master_seed = 3004;
    plan.output = o.work_dir / (full(o) ? "unconditional_full" : "unconditional_quick");
    const auto aggs = run_ensemble(plan, RunOptions{o.workers, o.log});
    const EnsembleAggregate& a = aggs.front();
    int c_bad = 0;
    double c_z = 0.0;
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < L; ++j) {
            const double ref = i == j ? 0.5 : 0.0;
            const double dre = std::abs(a.C_mean(i, j).real() - ref), dim_ = std::abs(a.C_mean(i, j).imag());
            const double sre = a.C_stderr(i, j).real(), sim = a.C_stderr(i, j).imag();
            if (dre > 4.0 * sre + 1e-10) ++c_bad;
            if (dim_ > 4.0 * sim + 1e-10) ++c_bad;
            if (sre > 0) c_z = std::max(c_z, dre / sre);
            if (sim > 0) c_z = std::max(c_z, dim_ / sim);
        }
    r.pass = rho_bad == 0 && c_bad == 0;
    r.detail = std::to_string(n_traj) + " trajectories (L=6, gamma=0.5): rho(t=10) entries beyond 4 stderr " +
               std::to_string(rho_bad) + " (max z " + fixed(rho_z, 2) + "); late-time C vs I/2 over t in [50,100] " +
               "entries beyond 4 stderr " + std::to_string(c_bad) + " (max z " + fixed(c_z, 2) + ")";
    return r;
}

CriterionResult ng_axioms(const ValidationOptions& o) {
    CriterionResult r{4, "non-Gaussianity resource properties", false, ""};
    const int trials = pick(o, 100, 1000);
    std::mt19937_64 rng(4004);
    auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    const double tol = 1e-9;
    int bad[5] = {0, 0, 0, 0, 0};
    double worst[5] = {0, 0, 0, 0, 0};
    auto record = [&](int axiom, double excess) {
        worst[axiom] = std::max(worst[axiom], excess);
        if (excess > tol) ++bad[axiom];
    };
    for (int t = 0; t < trials; ++t) {
        // Non-negativity, pure and mixed.
        {
            const int L = uniform_int(2, 6);
            const auto psi = oracle::random_sector_state(L, uniform_int(0, L), rng);
            record(0, -ng_of(oracle::one_body(psi, L)));
            const int Lm = uniform_int(2, 4);
            record(0, -ng_mixed(DensityMatrix{Lm, oracle::random_number_conserving_rho(Lm, rng, uniform_int(1, 4))}));
        }
        // Additivity under products of number eigenstates.
        {
            const int L1 = uniform_int(1, 3), L2 = uniform_int(1, 3);
            const auto a = oracle::random_sector_state(L1, uniform_int(0, L1), rng);
            const auto b = oracle::random_sector_state(L2, uniform_int(0, L2), rng);
            const oracle::Vec ab = oracle::kron(oracle::Mat(a), oracle::Mat(b));
            const double lhs = ng_of(oracle::one_body(ab, L1 + L2));
            const double rhs = ng_of(oracle::one_body(a, L1)) + ng_of(oracle::one_body(b, L2));
            record(1, std::abs(lhs - rhs));
        }
        // Invariance under free (quadratic) evolution.
        {
            const int L = uniform_int(2, 5);
            const auto psi = oracle::random_sector_state(L, uniform_int(1, L - 1), rng);
            const double time = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
            const oracle::Vec out = oracle::expm_hermitian(oracle::random_quadratic_hamiltonian(L, rng), time) * psi;
            record(2, std::abs(ng_of(oracle::one_body(out, L)) - ng_of(oracle::one_body(psi, L))));
        }
        // Partial-trace monotonicity.
        {
            const int L = uniform_int(2, 5);
            const DensityMatrix rho{L, oracle::random_number_conserving_rho(L, rng, uniform_int(1, 4))};
            const int k = uniform_int(1, L - 1);
            const DensityMatrix part = t % 2 ? trace_out_left(rho, k) : trace_out_right(rho, k);
            record(3, ng_mixed(part) - ng_mixed(rho));
        }
        // Averaged non-increase under an occupation measurement.
        {
            const int L = uniform_int(2, 6);
            const auto psi = oracle::random_sector_state(L, uniform_int(1, L - 1), rng);
            const int site = uniform_int(0, L - 1);
            double averaged = 0.0;
            for (const ProjectorOutcome& q : occupation_projectors().outcomes) {
                oracle::Vec phi = oracle::embed(L, site, q.projector.matrix) * psi;
                const double p = phi.squaredNorm();
                if (p < 1e-14) continue;
                phi /= std::sqrt(p);
                averaged += p * ng_of(oracle::one_body(phi, L));
            }
            record(4, averaged - ng_of(oracle::one_body(psi, L)));
        }
    }
    const char* names[5] = {"non-negativity", "additivity", "free-rotation invariance", "partial-trace monotonicity",
                            "averaged measurement non-increase"};
    r.pass = true;
    std::ostringstream d;
    d << trials << " trials each;";
    for (int a = 0; a < 5; ++a) {
        r.pass = r.pass && bad[a] == 0;
        d << " " << names[a] << " " << bad[a] << " violations (max excess " << sci(worst[a]) << ")"
          << (a < 4 ? ";" : "");
    }
    r.detail = d.str();
    return r;
}

CriterionResult maximal_ng(const ValidationOptions& o) {
    CriterionResult r{5, "non-Gaussianity never exceeds 2 N log 2", false, ""};
    const int n_traj = pick(o, 3, 20);
    const int L = 8;
    int snapshots = 0, bad = 0;
    double closest = -1e9;  // max of NG - bound
    int combo = 0;
    for (Observable obs : {Observable::Occupation, Observable::Current})
        for (double gamma : {0.1, 0.5, 2.0}) {
            const ChainSpec spec = chain(L, 1.0, gamma, obs, 200);
            for (int t = 0; t < n_traj; ++t) {
                DenseBackend d(spec);
                const TrajectoryRecord rec =
                    run_trajectory(d, 5005, static_cast<std::uint64_t>(combo) * 1000 + t, {0.25, 0.0});
                for (const auto& s : rec.samples) {
                    const OrbitalSpectrum sp = orbital_spectrum(s.C);
                    const double excess = total_ng(sp) - 2.0 * sp.N * std::log(2.0);
                    closest = std::max(closest, excess);
                    ++snapshots;
                    if (excess > 1e-9) ++bad;
                }
            }
            ++combo;
        }
    // Flat-spectrum states (|1..10..0> + |0..01..1>)/sqrt 2 have C = I/2.
    double attained = 0.0;
    for (int Lf : {4, 8}) {
        DenseState s{Lf, Vector::Zero(Eigen::Index{1} << Lf)};
        const Eigen::Index half = (Eigen::Index{1} << (Lf / 2)) - 1;
        s.amplitudes(half << (Lf / 2)) = 1.0 / std::sqrt(2.0);
        s.amplitudes(half) = 1.0 / std::sqrt(2.0);
        const OrbitalSpectrum sp = orbital_spectrum(one_body_matrix(s));
        attained = std::max(attained, std::abs(total_ng(sp) - 2.0 * sp.N * std::log(2.0)));
    }
    r.pass = bad == 0 && attained < 1e-12;
    r.detail = std::to_string(snapshots) + " trajectory snapshots (L=8, U=1, both observables), violations " +
               std::to_string(bad) + ", max NG - 2N log 2 = " + sci(closest) +
               "; flat-spectrum states at L=4, 8 reach the bound within " + sci(attained);
    return r;
}

CriterionResult gap_behaviour(const ValidationOptions& o) {
    CriterionResult r{6, "occupation gap opens with the measurement rate", false, ""};
    ExperimentPlan plan;
    plan.L = full(o) ? std::vector<int>{12, 16} : std::vector<int>{10, 12};
    plan.U = {1.0};
    plan.gamma = {0.05, 0.2, 0.5, 2.0};
    plan.trajectories = pick(o, 16, 200);
    plan.backend = BackendChoice::Dense;
    plan.n_steps = pick(o, 200, 400);
    plan.burn_in = 0.5;
    plan.sample_interval = 1.0;
    plan.master_seed = 6006;
    plan.output = o.work_dir / (full(o) ? "gap_full" : "gap_quick");
    std::vector<EnsembleAggregate> aggs;
    try {
        aggs = run_ensemble(plan, RunOptions{o.workers, o.log});
    } catch (const NumericalError& e) {
        r.detail = e.what();
        return r;
    }
    r.pass = true;
    std::ostringstream d;
    d << plan.trajectories << " trajectories per point, T=" << plan.n_steps * plan.dt << ", late window t >= "
      << plan.burn_in * plan.n_steps * plan.dt << ";";
    for (int L : plan.L) {
        std::vector<Estimate> g;
        for (const auto& a : aggs)
            if (a.point.L == L) g.push_back(a.delta_nu);
        const double ratio = g.back().mean / g.front().mean;
        bool monotone = true;
        for (std::size_t k = 0; k + 1 < g.size(); ++k)
            if (g[k + 1].mean + g[k + 1].stderr < g[k].mean - g[k].stderr) monotone = false;
        r.pass = r.pass && ratio >= 3.0 && monotone;
        d << " L=" << L << ": delta_nu";
        for (const Estimate& e : g) d << " " << fixed(e.mean) << "(" << fixed(e.stderr) << ")";
        d << ", ratio " << fixed(ratio, 2) << (monotone ? ", monotone;" : ", NOT monotone;");
    }
    r.detail = d.str();
    return r;
}

CriterionResult zeno(const ValidationOptions& o) {
    CriterionResult r{7, "Zeno limit pins a product state", false, ""};
    const int n_traj = pick(o, 3, 10);
    const int L = 8;
    int snapshots = 0, bad = 0;
    for (double U : {0.0, 1.0, 4.0}) {
        const ChainSpec spec = chain(L, U, 20.0, Observable::Occupation, 100);  // gamma dt = 1
        std::vector<BackendKind> kinds = {BackendKind::Dense, BackendKind::Mps};
        if (U == 0.0) kinds.push_back(BackendKind::Gaussian);
        for (BackendKind kind : kinds) {
            std::vector<TrajectorySummary> runs;
            for (int t = 0; t < n_traj; ++t) {
                auto be = make_backend(kind, spec);
                const TrajectoryRecord rec = run_trajectory(*be, 7007, static_cast<std::uint64_t>(t), {0.5, 2.5});
                for (const auto& s : rec.samples) {
                    ++snapshots;
                    const OrbitalSpectrum sp = orbital_spectrum(s.C);
                    bool ok = (s.entropy.S.array() == 0.0).all() && gap(sp).delta_nu == 1.0;
                    for (int k = 0; k < L; ++k) ok = ok && sp.nu(k) == (k < sp.N ? 1.0 : 0.0);
                    if (!ok) ++bad;
                }
                runs.push_back(summarize(rec, t));
            }
            const EnsembleAggregate a = aggregate({L, U, 20.0, Observable::Occupation}, kind, runs);
            for (const Estimate& e : a.S)
                if (e.mean != 0.0 || e.stderr != 0.0) ++bad;
            if (a.delta_nu.mean != 1.0) ++bad;
        }
    }
    r.pass = bad == 0;
    r.detail = std::to_string(snapshots) + " snapshots (gamma dt = 1, U in {0,1,4}, dense/MPS/Gaussian), " +
               "entropy or spectrum deviations from exact 0 / step " + std::to_string(bad);
    return r;
}

CriterionResult cft_fit_check(const ValidationOptions& o) {
    CriterionResult r{8, "chord-length fit", false, ""};
    double worst = 0.0, worst_param = 0.0;
    for (int L : {12, 24, 40})
        for (double alpha : {0.3, 1.0 / 3.0, 1.0})
            for (double s0 : {0.1, 0.7}) {
                EntropyProfile p{RealVector(L - 1)};
                for (int ell = 1; ell < L; ++ell) p.S(ell - 1) = alpha * std::log(chord_length(ell, L)) + s0;
                const CftFit f = cft_fit(p, L);
                worst = std::max(worst, f.residual);
                worst_param = std::max({worst_param, std::abs(f.alpha - alpha), std::abs(f.s0 - s0)});
            }
    ExperimentPlan plan;
    plan.L = {pick(o, 10, 12)};
    plan.U = {1.0};
    plan.gamma = {0.2};
    plan.trajectories = pick(o, 8, 40);
    plan.backend = BackendChoice::Dense;
    plan.n_steps = 400;
    plan.master_seed = 8008;
    plan.output = o.work_dir / (full(o) ? "cft_full" : "cft_quick");
    const auto aggs = run_ensemble(plan, RunOptions{o.workers, o.log});
    const auto fits = fit_results(ResultSet{plan, aggs});
    const auto& f = fits.front();
    const bool finite = f.fit && std::isfinite(f.fit->alpha) && std::isfinite(f.fit->s0) && std::isfinite(f.fit->residual);
    r.pass = worst < 1e-10 && worst_param < 1e-10 && finite;
    std::ostringstream d;
    d << "18 synthetic profiles: max residual " << sci(worst) << ", max parameter error " << sci(worst_param)
      << "; ensemble L=" << plan.L[0] << " U=1 gamma=0.2 (" << plan.trajectories << " trajectories): ";
    if (finite)
        d << "alpha " << fixed(f.fit->alpha) << ", s0 " << fixed(f.fit->s0) << ", residual " << sci(f.fit->residual);
    else
        d << "fit failed " << f.note;
    r.detail = d.str();
    return r;
}

CriterionResult synthetic_scan(const ValidationOptions& o) {
    CriterionResult r{9, "finite-size scan on the synthetic slope fixture", false, ""};
    ExperimentPlan plan;
    plan.L = {8, 12, 16, 24};
    plan.U = {1.0};
    plan.gamma.clear();
    for (int k = 0; k < 12; ++k) plan.gamma.push_back(0.03 + 0.05 * k);
    plan.output = o.work_dir / "scan_fixture";
    const double resolution = 0.05;
    std::vector<EnsembleAggregate> aggs;
    for (const GridPoint& p : plan.points()) {
        EnsembleAggregate a;
        a.point = p;
        a.n_traj = 1;
        a.S.assign(static_cast<std::size_t>(p.L - 1), Estimate{});
        a.nu.assign(static_cast<std::size_t>(p.L), Estimate{});
        a.delta_nu = {std::max(0.0, p.gamma - 0.2), 0.0};
        a.slope = {a.delta_nu.mean * p.L, 0.0};
        a.C_mean = Matrix::Zero(p.L, p.L);
        a.C_stderr = Matrix::Zero(p.L, p.L);
        aggs.push_back(std::move(a));
    }
    emit_outputs(plan, aggs, plan.output);
    const auto scans = scan_results(load_results(plan.output));
    const auto& res = scans.front().result;
    r.pass = scans.size() == 1 && res.crossing && std::abs(*res.crossing - 0.2) <= resolution;
    r.detail = "delta_nu = max(0, gamma - 0.2), L in {8,12,16,24}, grid step " + fixed(resolution, 2) +
               ": crossing " + (res.crossing ? fixed(*res.crossing) : std::string("undetermined")) + " (" +
               res.diagnostic + "). Large-L critical rates and entropy/NG curves are outside desk scale and not checked";
    return r;
}

}  // namespace

CriterionResult run_criterion(int id, const ValidationOptions& o) {
    switch (id) {
        case 1:
            return dense_vs_mps(o);
        case 2:
            return gaussian_exactness(o);
        case 3:
            return unconditional_dynamics(o);
        case 4:
            return ng_axioms(o);
        case 5:
            return maximal_ng(o);
        case 6:
            return gap_behaviour(o);
        case 7:
            return zeno(o);
        case 8:
            return cft_fit_check(o);
        case 9:
            return synthetic_scan(o);
        default:
            throw ConfigError("unknown criterion " + std::to_string(id) + " (valid: 1.." + std::to_string(kNumCriteria) +
                              ")");
    }
}

std::vector<CriterionResult> run_validation(const ValidationOptions& o, std::span<const int> ids) {
    std::vector<int> todo(ids.begin(), ids.end());
    if (todo.empty())
        for (int k = 1; k <= kNumCriteria; ++k) todo.push_back(k);
    std::vector<CriterionResult> out;
    for (int id : todo) {
        note(o, "running criterion " + std::to_string(id));
        out.push_back(run_criterion(id, o));
        note(o, format_result(out.back()));
    }
    return out;
}

std::string format_result(const CriterionResult& r) {
    return "criterion " + std::to_string(r.id) + ": " + (r.pass ? "PASS" : "FAIL") + "  " + r.title + " | " + r.detail;
}

}  // namespace montraj
