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

#include "montraj/experiment.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "nlohmann/json.hpp"
#include "toml.hpp"

namespace montraj {

namespace {

using ojson = nlohmann::ordered_json;

std::string_view to_string(BackendChoice c) {
    switch (c) {
        case BackendChoice::Auto:
            return "auto";
        case BackendChoice::Dense:
            return "dense";
        case BackendChoice::Gaussian:
            return "gaussian";
        case BackendChoice::Mps:
            return "mps";
    }
    return "?";
}

BackendChoice choice_from_string(std::string_view name) {
    if (name == "auto") return BackendChoice::Auto;
    if (name == "dense") return BackendChoice::Dense;
    if (name == "gaussian") return BackendChoice::Gaussian;
    if (name == "mps") return BackendChoice::Mps;
    throw ConfigError("invalid backend: expected 'auto', 'dense', 'gaussian' or 'mps', got '" + std::string(name) + "'");
}

// Shortest representation that reads back to the same double.
std::string fmt(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
    throw ConfigError("invalid " + field + ": " + why);
}

// ---- TOML helpers ---------------------------------------------------------

void reject_unknown(const toml::table& t, std::initializer_list<std::string_view> known, const std::string& where) {
    for (auto&& [k, v] : t) {
        if (std::find(known.begin(), known.end(), k.str()) == known.end()) {
            throw ConfigError("unknown key '" + std::string(k.str()) + "' in " + where);
        }
    }
}

double as_double(const toml::node& n, const std::string& field) {
    if (auto v = n.value<double>(); v && (n.is_integer() || n.is_floating_point())) return *v;
    bad_field(field, "expected a number");
}

std::int64_t as_int(const toml::node& n, const std::string& field) {
    if (auto v = n.value_exact<std::int64_t>()) return *v;
    bad_field(field, "expected an integer");
}

std::string as_string(const toml::node& n, const std::string& field) {
    if (auto v = n.value_exact<std::string>()) return *v;
    bad_field(field, "expected a string");
}

// A scalar or an array of scalars.
template <class F>
auto as_list(const toml::node& n, const std::string& field, F&& convert) {
    std::vector<decltype(convert(n, field))> out;
    if (const toml::array* a = n.as_array()) {
        for (const toml::node& e : *a) out.push_back(convert(e, field));
    } else {
        out.push_back(convert(n, field));
    }
    if (out.empty()) bad_field(field, "empty list");
    return out;
}

// ---- JSON helpers ---------------------------------------------------------

ojson estimate_json(const Estimate& e) { return ojson{{"mean", e.mean}, {"stderr", e.stderr}}; }

Estimate estimate_from(const ojson& j) { return {j.at("mean").get<double>(), j.at("stderr").get<double>()}; }

ojson estimates_json(const std::vector<Estimate>& v) {
    ojson mean = ojson::array(), err = ojson::array();
    for (const Estimate& e : v) {
        mean.push_back(e.mean);
        err.push_back(e.stderr);
    }
    return ojson{{"mean", mean}, {"stderr", err}};
}

std::vector<Estimate> estimates_from(const ojson& j) {
    std::vector<Estimate> out;
    const auto& m = j.at("mean");
    const auto& e = j.at("stderr");
    for (std::size_t k = 0; k < m.size(); ++k) out.push_back({m[k].get<double>(), e[k].get<double>()});
    return out;
}

ojson matrix_json(const Matrix& M) {
    ojson re = ojson::array(), im = ojson::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            re.push_back(M(i, j).real());
            im.push_back(M(i, j).imag());
        }
    return ojson{{"rows", M.rows()}, {"re", re}, {"im", im}};
}

Matrix matrix_from(const ojson& j) {
    const auto n = j.at("rows").get<Eigen::Index>();
    Matrix M(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < n; ++k) {
            const auto idx = static_cast<std::size_t>(i * n + k);
            M(i, k) = Complex(j.at("re")[idx].get<double>(), j.at("im")[idx].get<double>());
        }
    return M;
}

ojson plan_json(const ExperimentPlan& p) {
    ojson obs = ojson::array();
    for (Observable o : p.observables) obs.push_back(std::string(to_string(o)));
    return ojson{{"master_seed", p.master_seed},
                 {"trajectories", p.trajectories},
                 {"backend", std::string(to_string(p.backend))},
                 {"output", p.output.string()},
                 {"grid", {{"L", p.L}, {"U", p.U}, {"gamma", p.gamma}, {"observable", obs}}},
                 {"time",
                  {{"dt", p.dt}, {"n_steps", p.n_steps}, {"burn_in", p.burn_in}, {"sample_interval", p.sample_interval}}},
                 {"truncation",
                  {{"chi_max", p.policy.chi_max},
                   {"svd_cutoff", p.policy.svd_cutoff},
                   {"hard_limit", p.policy.hard_limit}}}};
}

ExperimentPlan plan_from_json(const ojson& j) {
    ExperimentPlan p;
    p.master_seed = j.at("master_seed").get<std::uint64_t>();
    p.trajectories = j.at("trajectories").get<int>();
    p.backend = choice_from_string(j.at("backend").get<std::string>());
    p.output = j.at("output").get<std::string>();
    const auto& g = j.at("grid");
    p.L = g.at("L").get<std::vector<int>>();
    p.U = g.at("U").get<std::vector<double>>();
    p.gamma = g.at("gamma").get<std::vector<double>>();
    p.observables.clear();
    for (const auto& o : g.at("observable")) p.observables.push_back(observable_from_string(o.get<std::string>()));
    const auto& t = j.at("time");
    p.dt = t.at("dt").get<double>();
    p.n_steps = t.at("n_steps").get<int>();
    p.burn_in = t.at("burn_in").get<double>();
    p.sample_interval = t.at("sample_interval").get<double>();
    const auto& tr = j.at("truncation");
    p.policy.chi_max = tr.at("chi_max").get<int>();
    p.policy.svd_cutoff = tr.at("svd_cutoff").get<double>();
    p.policy.hard_limit = tr.at("hard_limit").get<double>();
    return p;
}

ojson point_header(const ExperimentPlan& plan, const GridPoint& pt, BackendKind backend) {
    return ojson{{"format", "montraj-store"},
                 {"version", 1},
                 {"L", pt.L},
                 {"U", pt.U},
                 {"gamma", pt.gamma},
                 {"observable", std::string(to_string(pt.observable))},
                 {"backend", std::string(to_string(backend))},
                 {"master_seed", plan.master_seed},
                 {"dt", plan.dt},
                 {"n_steps", plan.n_steps},
                 {"burn_in", plan.burn_in},
                 {"sample_interval", plan.sample_interval},
                 {"chi_max", plan.policy.chi_max},
                 {"svd_cutoff", plan.policy.svd_cutoff}};
}

ojson summary_json(const TrajectorySummary& s) {
    ojson re = ojson::array(), im = ojson::array();
    for (const Complex& c : s.C) {
        re.push_back(c.real());
        im.push_back(c.imag());
    }
    return ojson{{"index", s.index},
                 {"ok", s.ok},
                 {"error", s.error},
                 {"samples", s.samples},
                 {"events", s.events},
                 {"truncation_error", s.truncation_error},
                 {"S", s.S},
                 {"nu", s.nu},
                 {"ng", s.ng},
                 {"ng_per_particle", s.ng_per_particle},
                 {"delta_nu", s.delta_nu},
                 {"slope", s.slope},
                 {"C_re", re},
                 {"C_im", im}};
}

TrajectorySummary summary_from(const ojson& j) {
    TrajectorySummary s;
    s.index = j.at("index").get<int>();
    s.ok = j.at("ok").get<bool>();
    s.error = j.at("error").get<std::string>();
    s.samples = j.at("samples").get<int>();
    s.events = j.at("events").get<int>();
    s.truncation_error = j.at("truncation_error").get<double>();
    s.S = j.at("S").get<std::vector<double>>();
    s.nu = j.at("nu").get<std::vector<double>>();
    s.ng = j.at("ng").get<double>();
    s.ng_per_particle = j.at("ng_per_particle").get<double>();
    s.delta_nu = j.at("delta_nu").get<double>();
    s.slope = j.at("slope").get<double>();
    const auto re = j.at("C_re").get<std::vector<double>>();
    const auto im = j.at("C_im").get<std::vector<double>>();
    for (std::size_t k = 0; k < re.size(); ++k) s.C.emplace_back(re[k], im[k]);
    return s;
}

std::vector<Estimate> estimates(const Accumulator& acc, std::size_t from, std::size_t count) {
    const auto err = acc.stderr_of_mean();
    std::vector<Estimate> out(count);
    for (std::size_t k = 0; k < count; ++k) out[k] = {acc.mean()[from + k], err[from + k]};
    return out;
}

std::string point_label(const GridPoint& p) {
    return "L=" + std::to_string(p.L) + " U=" + fmt(p.U) + " gamma=" + fmt(p.gamma) + " " +
           std::string(to_string(p.observable));
}

}  // namespace

// ---------------------------------------------------------------------------
// Plan

BackendKind resolve_backend(BackendChoice choice, const ChainSpec& spec) {
    switch (choice) {
        case BackendChoice::Dense:
            return BackendKind::Dense;
        case BackendChoice::Gaussian:
            return BackendKind::Gaussian;
        case BackendChoice::Mps:
            return BackendKind::Mps;
        case BackendChoice::Auto:
            break;
    }
    if (spec.U == 0.0 && spec.observable == Observable::Occupation) return BackendKind::Gaussian;
    return spec.L <= kAutoDenseSites ? BackendKind::Dense : BackendKind::Mps;
}

std::vector<GridPoint> ExperimentPlan::points() const {
    std::vector<GridPoint> out;
    for (int l : L)
        for (double u : U)
            for (double g : gamma)
                for (Observable o : observables) out.push_back({l, u, g, o});
    return out;
}

ChainSpec ExperimentPlan::spec_for(const GridPoint& p) const {
    ChainSpec s;
    s.L = p.L;
    s.U = p.U;
    s.gamma = p.gamma;
    s.observable = p.observable;
    s.dt = dt;
    s.n_steps = n_steps;
    return s;
}

void ExperimentPlan::validate() const {
    if (trajectories < 1) bad_field("trajectories", "must be at least 1");
    if (n_steps < 1) bad_field("n_steps", "must be at least 1");
    if (!(burn_in >= 0.0 && burn_in < 1.0)) bad_field("burn_in", "must lie in [0, 1)");
    if (!(sample_interval > 0.0)) bad_field("sample_interval", "must be positive");
    if (L.empty() || U.empty() || gamma.empty() || observables.empty()) bad_field("grid", "every axis needs a value");
    if (output.empty()) bad_field("output", "must not be empty");
    policy.validate();
    for (const GridPoint& p : points()) {
        const ChainSpec s = spec_for(p);
        s.validate();
        try {
            check_compatible(resolve_backend(backend, s), s);
        } catch (const UnsupportedError& e) {
            bad_field("backend", e.what());
        }
    }
}

ExperimentPlan parse_plan(const std::string& text, const std::filesystem::path& base_dir) {
    toml::table t;
    try {
        t = toml::parse(text);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << "plan is not valid TOML: " << e.description() << " (line " << e.source().begin.line << ")";
        throw ConfigError(msg.str());
    }
    reject_unknown(t, {"master_seed", "trajectories", "backend", "output", "grid", "time", "truncation"}, "plan");

    ExperimentPlan p;
    if (auto n = t.get("master_seed")) {
        const auto v = as_int(*n, "master_seed");
        if (v < 0) bad_field("master_seed", "must be non-negative");
        p.master_seed = static_cast<std::uint64_t>(v);
    }
    if (auto n = t.get("trajectories")) p.trajectories = static_cast<int>(as_int(*n, "trajectories"));
    if (auto n = t.get("backend")) p.backend = choice_from_string(as_string(*n, "backend"));
    if (auto n = t.get("output")) p.output = as_string(*n, "output");
    if (p.output.is_relative()) p.output = base_dir / p.output;

    auto section = [&](const char* name) -> const toml::table* {
        const toml::node* n = t.get(name);
        if (!n) return nullptr;
        if (!n->is_table()) bad_field(name, "expected a table");
        return n->as_table();
    };
    if (const toml::table* g = section("grid")) {
        reject_unknown(*g, {"L", "U", "gamma", "observable"}, "[grid]");
        if (auto n = g->get("L"))
            p.L = as_list(*n, "L", [](const toml::node& e, const std::string& f) { return static_cast<int>(as_int(e, f)); });
        if (auto n = g->get("U")) p.U = as_list(*n, "U", as_double);
        if (auto n = g->get("gamma")) p.gamma = as_list(*n, "gamma", as_double);
        if (auto n = g->get("observable")) {
            p.observables = as_list(*n, "observable", [](const toml::node& e, const std::string& f) {
                return observable_from_string(as_string(e, f));
            });
        }
    }
    if (const toml::table* tm = section("time")) {
        reject_unknown(*tm, {"dt", "n_steps", "burn_in", "sample_interval"}, "[time]");
        if (auto n = tm->get("dt")) p.dt = as_double(*n, "dt");
        if (auto n = tm->get("n_steps")) p.n_steps = static_cast<int>(as_int(*n, "n_steps"));
        if (auto n = tm->get("burn_in")) p.burn_in = as_double(*n, "burn_in");
        if (auto n = tm->get("sample_interval")) p.sample_interval = as_double(*n, "sample_interval");
    }
    if (const toml::table* tr = section("truncation")) {
        reject_unknown(*tr, {"chi_max", "svd_cutoff", "hard_limit"}, "[truncation]");
        if (auto n = tr->get("chi_max")) p.policy.chi_max = static_cast<int>(as_int(*n, "chi_max"));
        if (auto n = tr->get("svd_cutoff")) p.policy.svd_cutoff = as_double(*n, "svd_cutoff");
        if (auto n = tr->get("hard_limit")) p.policy.hard_limit = as_double(*n, "hard_limit");
    }
    p.validate();
    return p;
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read plan " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_plan(buf.str(), path.parent_path());
}

std::string plan_to_toml(const ExperimentPlan& p) {
    auto list = [](const auto& v, auto f) {
        std::string s = "[";
        for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + f(v[k]);
        return s + "]";
    };
    auto num = [](double x) {
        std::string s = fmt(x);
        if (s.find_first_of(".e") == std::string::npos) s += ".0";
        return s;
    };
    std::ostringstream o;
    o << "master_seed = " << p.master_seed << "\n"
      << "trajectories = " << p.trajectories << "\n"
      << "backend = \"" << to_string(p.backend) << "\"\n"
      << "output = \"" << p.output.generic_string() << "\"\n\n"
      << "[grid]\n"
      << "L = " << list(p.L, [](int x) { return std::to_string(x); }) << "\n"
      << "U = " << list(p.U, num) << "\n"
      << "gamma = " << list(p.gamma, num) << "\n"
      << "observable = "
      << list(p.observables, [](Observable x) { return "\"" + std::string(to_string(x)) + "\""; }) << "\n\n"
      << "[time]\n"
      << "dt = " << num(p.dt) << "\n"
      << "n_steps = " << p.n_steps << "\n"
      << "burn_in = " << num(p.burn_in) << "\n"
      << "sample_interval = " << num(p.sample_interval) << "\n\n"
      << "[truncation]\n"
      << "chi_max = " << p.policy.chi_max << "\n"
      << "svd_cutoff = " << num(p.policy.svd_cutoff) << "\n"
      << "hard_limit = " << num(p.policy.hard_limit) << "\n";
    return o.str();
}

// ---------------------------------------------------------------------------
// Accumulator

Accumulator::Accumulator(std::size_t size) : mean_(size, 0.0), m2_(size, 0.0) {}

void Accumulator::add(std::span<const double> x) {
    if (x.size() != mean_.size()) throw std::invalid_argument("accumulator size mismatch");
    ++n_;
    const double inv = 1.0 / static_cast<double>(n_);
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = x[k] - mean_[k];
        mean_[k] += d * inv;
        m2_[k] += d * (x[k] - mean_[k]);
    }
}

void Accumulator::merge(const Accumulator& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
        *this = other;
        return;
    }
    if (other.size() != size()) throw std::invalid_argument("accumulator size mismatch");
    const double na = static_cast<double>(n_), nb = static_cast<double>(other.n_);
    const double n = na + nb;
    for (std::size_t k = 0; k < size(); ++k) {
        const double d = other.mean_[k] - mean_[k];
        mean_[k] += d * nb / n;
        m2_[k] += other.m2_[k] + d * d * na * nb / n;
    }
    n_ += other.n_;
}

std::vector<double> Accumulator::variance() const {
    std::vector<double> v(size(), 0.0);
    if (n_ < 2) return v;
    for (std::size_t k = 0; k < size(); ++k) v[k] = std::max(0.0, m2_[k]) / static_cast<double>(n_ - 1);
    return v;
}

std::vector<double> Accumulator::stderr_of_mean() const {
    std::vector<double> v = variance();
    for (double& x : v) x = n_ > 0 ? std::sqrt(x / static_cast<double>(n_)) : 0.0;
    return v;
}

// ---------------------------------------------------------------------------
// Summaries and aggregates

TrajectorySummary summarize(const TrajectoryRecord& record, int index) {
    const int L = record.spec.L;
    TrajectorySummary s;
    s.index = index;
    s.events = static_cast<int>(record.events.size());
    s.truncation_error = record.truncation_error;
    s.S.assign(static_cast<std::size_t>(L - 1), 0.0);
    s.nu.assign(static_cast<std::size_t>(L), 0.0);
    s.C.assign(static_cast<std::size_t>(L) * L, Complex(0.0));
    const double from = record.sampling.record_from - 1e-9;
    for (const ObservableSnapshot& snap : record.samples) {
        if (snap.time < from) continue;
        ++s.samples;
        const OrbitalSpectrum sp = orbital_spectrum(snap.C);
        const GapStats g = gap(sp);
        const double ng = total_ng(sp);
        for (int k = 0; k < L - 1; ++k) s.S[k] += snap.entropy.S(k);
        for (int k = 0; k < L; ++k) s.nu[k] += sp.nu(k);
        for (int i = 0; i < L; ++i)
            for (int j = 0; j < L; ++j) s.C[static_cast<std::size_t>(i) * L + j] += snap.C(i, j);
        s.ng += ng;
        s.ng_per_particle += ng / sp.N;
        s.delta_nu += g.delta_nu;
        s.slope += g.slope;
    }
    if (s.samples == 0) throw NumericalError("trajectory has no late-time samples");
    const double inv = 1.0 / s.samples;
    for (double& x : s.S) x *= inv;
    for (double& x : s.nu) x *= inv;
    for (Complex& x : s.C) x *= inv;
    s.ng *= inv;
    s.ng_per_particle *= inv;
    s.delta_nu *= inv;
    s.slope *= inv;
    return s;
}

EnsembleAggregate aggregate(const GridPoint& point, BackendKind backend, std::span<const TrajectorySummary> runs) {
    const auto L = static_cast<std::size_t>(point.L);
    // Layout: S (L-1), nu (L), ng, ng/N, delta_nu, slope, Re C (L*L), Im C (L*L).
    const std::size_t off_nu = L - 1, off_scalar = off_nu + L, off_re = off_scalar + 4, off_im = off_re + L * L;
    Accumulator acc(off_im + L * L);

    std::vector<const TrajectorySummary*> order;
    for (const TrajectorySummary& s : runs) order.push_back(&s);
    std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->index < b->index; });

    EnsembleAggregate out;
    out.point = point;
    out.backend = backend;
    std::vector<double> row(acc.size());
    for (const TrajectorySummary* s : order) {
        if (!s->ok) {
            ++out.n_failed;
            continue;
        }
        if (s->S.size() != L - 1 || s->nu.size() != L || s->C.size() != L * L)
            throw ConfigError("trajectory summary does not match L=" + std::to_string(L));
        std::copy(s->S.begin(), s->S.end(), row.begin());
        std::copy(s->nu.begin(), s->nu.end(), row.begin() + off_nu);
        row[off_scalar] = s->ng;
        row[off_scalar + 1] = s->ng_per_particle;
        row[off_scalar + 2] = s->delta_nu;
        row[off_scalar + 3] = s->slope;
        for (std::size_t k = 0; k < L * L; ++k) {
            row[off_re + k] = s->C[k].real();
            row[off_im + k] = s->C[k].imag();
        }
        acc.add(row);
    }
    out.n_traj = static_cast<int>(acc.count());
    out.S = estimates(acc, 0, L - 1);
    out.nu = estimates(acc, off_nu, L);
    const auto sc = estimates(acc, off_scalar, 4);
    out.ng = sc[0];
    out.ng_per_particle = sc[1];
    out.delta_nu = sc[2];
    out.slope = sc[3];
    const auto re = estimates(acc, off_re, L * L);
    const auto im = estimates(acc, off_im, L * L);
    out.C_mean = Matrix(point.L, point.L);
    out.C_stderr = Matrix(point.L, point.L);
    for (std::size_t i = 0; i < L; ++i)
        for (std::size_t j = 0; j < L; ++j) {
            const std::size_t k = i * L + j;
            out.C_mean(i, j) = Complex(re[k].mean, im[k].mean);
            out.C_stderr(i, j) = Complex(re[k].stderr, im[k].stderr);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Running

int worker_count() {
    if (const char* env = std::getenv(kWorkersEnv); env && *env) {
        int n = 0;
        const std::string_view v(env);
        const auto r = std::from_chars(v.data(), v.data() + v.size(), n);
        if (r.ec != std::errc() || r.ptr != v.data() + v.size() || n < 1)
            throw ConfigError(std::string("invalid ") + kWorkersEnv + ": expected a positive integer, got '" + env + "'");
        return n;
    }
    return std::max(1, omp_get_max_threads());
}

std::vector<TrajectorySummary> read_store(const std::filesystem::path& store) {
    std::vector<TrajectorySummary> out;
    std::ifstream in(store);
    if (!in) return out;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ojson j;
        try {
            j = ojson::parse(line);
        } catch (const ojson::parse_error&) {
            if (in.peek() == EOF) break;  // torn final line from an interrupted run
            throw ConfigError("corrupt trajectory store " + store.string());
        }
        if (header) {
            header = false;
            if (j.contains("format")) continue;
        }
        out.push_back(summary_from(j));
    }
    return out;
}

void append_store(const std::filesystem::path& store, const TrajectorySummary& summary) {
    std::ofstream out(store, std::ios::app);
    if (!out) throw ConfigError("cannot write " + store.string());
    out << summary_json(summary).dump() << '\n';
    out.flush();
}

EnsembleAggregate run_point(const ExperimentPlan& plan, const GridPoint& point, std::size_t point_index,
                            const std::filesystem::path& store, const RunOptions& options) {
    const ChainSpec spec = plan.spec_for(point);
    const BackendKind kind = resolve_backend(plan.backend, spec);
    check_compatible(kind, spec);
    const ojson header = point_header(plan, point, kind);

    // Start a store or check that the existing one belongs to this point.
    if (std::filesystem::exists(store)) {
        std::ifstream in(store);
        std::string first;
        std::getline(in, first);
        ojson existing;
        try {
            existing = ojson::parse(first);
        } catch (const ojson::parse_error&) {
        }
        if (existing != header) {
            throw ConfigError("trajectory store " + store.string() +
                              " was written for different settings; remove it or change the output directory");
        }
    } else {
        if (store.has_parent_path()) std::filesystem::create_directories(store.parent_path());
        std::ofstream out(store);
        if (!out) throw ConfigError("cannot write " + store.string());
        out << header.dump() << '\n';
    }

    std::vector<TrajectorySummary> done = read_store(store);
    std::set<int> have;
    for (const auto& s : done) have.insert(s.index);
    std::vector<int> pending;
    for (int i = 0; i < plan.trajectories; ++i)
        if (!have.count(i)) pending.push_back(i);

    if (options.log && !pending.empty()) {
        *options.log << "point " << point_index << " (" << point_label(point) << ", " << to_string(kind)
                     << "): " << pending.size() << " of " << plan.trajectories << " trajectories to run\n";
    }

    const SamplingOptions sampling = plan.sampling();
    const std::uint64_t stream_base = static_cast<std::uint64_t>(point_index) << 32;
    std::exception_ptr fatal;
    std::vector<TrajectorySummary> fresh;
    const auto n_pending = static_cast<std::ptrdiff_t>(pending.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, options.workers))
    for (std::ptrdiff_t k = 0; k < n_pending; ++k) {
        if (fatal) continue;
        const int index = pending[static_cast<std::size_t>(k)];
        TrajectorySummary s;
        try {
            auto backend = make_backend(kind, spec, plan.policy);
            const TrajectoryRecord rec =
                run_trajectory(*backend, plan.master_seed, stream_base + static_cast<std::uint64_t>(index), sampling);
            s = summarize(rec, index);
        } catch (const NumericalError& e) {
            s = TrajectorySummary{};
            s.index = index;
            s.ok = false;
            s.error = e.what();
        } catch (...) {
#pragma omp critical(montraj_fatal)
            if (!fatal) fatal = std::current_exception();
            continue;
        }
#pragma omp critical(montraj_store)
        {
            try {
                append_store(store, s);
            } catch (...) {
                if (!fatal) fatal = std::current_exception();
            }
            fresh.push_back(std::move(s));
            if (options.log && !fresh.back().ok)
                *options.log << "  trajectory " << index << " failed: " << fresh.back().error << "\n";
        }
    }
    if (fatal) std::rethrow_exception(fatal);

    done.insert(done.end(), std::make_move_iterator(fresh.begin()), std::make_move_iterator(fresh.end()));
    // Keep only the plan's indices, one summary each.
    std::map<int, TrajectorySummary> unique;
    for (auto& s : done)
        if (s.index < plan.trajectories) unique.emplace(s.index, std::move(s));
    std::vector<TrajectorySummary> runs;
    for (auto& [i, s] : unique) runs.push_back(std::move(s));

    EnsembleAggregate agg = aggregate(point, kind, runs);
    if (agg.n_failed * 20 > plan.trajectories) {
        throw NumericalError("point " + point_label(point) + ": " + std::to_string(agg.n_failed) + " of " +
                             std::to_string(plan.trajectories) + " trajectories failed (limit 5%)");
    }
    return agg;
}

std::vector<EnsembleAggregate> run_ensemble(const ExperimentPlan& plan, const RunOptions& options) {
    plan.validate();
    std::filesystem::create_directories(plan.output / "trajectories");
    {
        std::ofstream echo(plan.output / "plan.toml");
        if (!echo) throw ConfigError("cannot write into " + plan.output.string());
        echo << plan_to_toml(plan);
    }
    std::vector<EnsembleAggregate> out;
    const auto points = plan.points();
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto store = plan.output / "trajectories" / ("point_" + std::to_string(i) + ".ndjson");
        out.push_back(run_point(plan, points[i], i, store, options));
    }
    emit_outputs(plan, out, plan.output);
    return out;
}

// ---------------------------------------------------------------------------
// Finite-size scan

ScanResult finite_size_scan(std::span<const GapSample> samples) {
    std::map<double, std::map<int, Estimate>> table;
    std::set<int> sizes;
    for (const GapSample& s : samples) {
        table[s.gamma][s.L] = s.delta_nu;
        sizes.insert(s.L);
    }
    if (sizes.size() < 2) throw ConfigError("crossing undetermined: finite-size scan needs at least two system sizes");
    for (const auto& [g, row] : table) {
        if (row.size() != sizes.size())
            throw ConfigError("finite-size scan needs every system size at every gamma (gamma=" + fmt(g) + ")");
    }

    ScanResult out;
    for (const auto& [g, row] : table) {
        ScanRow r;
        r.gamma = g;
        for (const auto& [L, e] : row) {
            r.L.push_back(L);
            r.delta_nu.push_back(e);
            r.slope.push_back({e.mean * L, e.stderr * L});
        }
        // Least squares delta_nu = a + b x with x = 1/L.
        const double n = static_cast<double>(r.L.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t k = 0; k < r.L.size(); ++k) {
            const double x = 1.0 / r.L[k], y = r.delta_nu[k].mean;
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double det = n * sxx - sx * sx;
        r.inverse_L_coefficient = (n * sxy - sx * sy) / det;
        r.extrapolated = (sy - r.inverse_L_coefficient * sx) / n;
        out.rows.push_back(std::move(r));
    }

    const std::vector<int> Ls(sizes.begin(), sizes.end());
    std::vector<double> found;
    for (std::size_t p = 0; p + 1 < Ls.size(); ++p) {
        PairCrossing pc{Ls[p], Ls[p + 1], std::nullopt, ""};
        // Difference of the slope curves, larger size minus smaller.
        std::vector<double> d, sd;
        for (const ScanRow& r : out.rows) {
            d.push_back(r.slope[p + 1].mean - r.slope[p].mean);
            sd.push_back(std::hypot(r.slope[p + 1].stderr, r.slope[p].stderr));
        }
        int up = 0, down = 0;
        std::size_t at = 0;
        for (std::size_t k = 1; k < d.size(); ++k) {
            const bool was = d[k - 1] > 0.0, is = d[k] > 0.0;
            if (!was && is) {
                ++up;
                at = k;
            } else if (was && !is) {
                ++down;
            }
        }
        if (up == 1 && down == 0) {
            if (sd[at] > 0.0 && d[at] < 2.0 * sd[at]) {
                pc.diagnostic = "slope difference above the crossing is within 2 standard errors";
            } else {
                const double g0 = out.rows[at - 1].gamma, g1 = out.rows[at].gamma;
                pc.gamma = g0 + (g1 - g0) * (0.0 - d[at - 1]) / (d[at] - d[at - 1]);
                found.push_back(*pc.gamma);
            }
        } else if (up == 0 && down == 0) {
            pc.diagnostic = d.empty() || d.front() > 0.0 ? "larger size has the larger slope everywhere"
                                                          : "larger size never has the larger slope";
        } else {
            pc.diagnostic = "slope difference changes sign " + std::to_string(up + down) + " times (" +
                            std::to_string(up) + " up, " + std::to_string(down) + " down)";
        }
        out.pairs.push_back(std::move(pc));
    }
    if (!found.empty()) {
        double sum = 0.0;
        for (double g : found) sum += g;
        out.crossing = sum / static_cast<double>(found.size());
        out.diagnostic = std::to_string(found.size()) + " of " + std::to_string(out.pairs.size()) + " size pairs cross";
    } else {
        out.diagnostic = "crossing undetermined: no size pair has a single clean crossing";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Outputs

void write_csv(std::ostream& out, std::span<const EnsembleAggregate> aggregates) {
    out << kCsvHeader << '\n';
    for (const EnsembleAggregate& a : aggregates) {
        const std::string lead = fmt(a.point.gamma) + "," + std::to_string(a.point.L) + "," + fmt(a.point.U) + "," +
                                 std::string(to_string(a.point.observable)) + ",";
        const std::string tail = "," + std::to_string(a.n_traj) + "\n";
        auto row = [&](const std::string& index, const char* q, const Estimate& e) {
            out << lead << index << "," << q << "," << fmt(e.mean) << "," << fmt(e.stderr) << tail;
        };
        for (std::size_t k = 0; k < a.S.size(); ++k) row(std::to_string(k + 1), "S", a.S[k]);
        for (std::size_t k = 0; k < a.nu.size(); ++k) row(std::to_string(k + 1), "nu", a.nu[k]);
        row("", "NG", a.ng);
        row("", "NG_per_N", a.ng_per_particle);
        row("", "delta_nu", a.delta_nu);
        row("", "slope", a.slope);
    }
}

int GapGroup::sizes() const {
    std::set<int> L;
    for (const GapSample& s : samples) L.insert(s.L);
    return static_cast<int>(L.size());
}

std::vector<GapGroup> gap_groups(std::span<const EnsembleAggregate> aggregates) {
    std::map<std::pair<double, int>, GapGroup> groups;
    for (const EnsembleAggregate& a : aggregates) {
        GapGroup& g = groups[{a.point.U, static_cast<int>(a.point.observable)}];
        g.U = a.point.U;
        g.observable = a.point.observable;
        g.samples.push_back({a.point.L, a.point.gamma, a.delta_nu});
    }
    std::vector<GapGroup> out;
    for (auto& [k, g] : groups) out.push_back(std::move(g));
    return out;
}

std::vector<GroupScan> scan_results(const ResultSet& results) {
    std::vector<GroupScan> out;
    for (const GapGroup& g : gap_groups(results.aggregates)) {
        if (g.sizes() < 2) continue;
        out.push_back({g.U, g.observable, finite_size_scan(g.samples)});
    }
    if (out.empty()) throw ConfigError("crossing undetermined: finite-size scan needs at least two system sizes");
    return out;
}

void print_scan(std::ostream& out, std::span<const GroupScan> scans) {
    for (const GroupScan& g : scans) {
        out << "U=" << fmt(g.U) << " " << to_string(g.observable) << "\n";
        out << "  gamma      L   delta_nu (stderr)        slope (stderr)      extrapolated\n";
        for (const ScanRow& r : g.result.rows) {
            for (std::size_t k = 0; k < r.L.size(); ++k) {
                char line[160];
                std::snprintf(line, sizeof line, "  %-9.4g %3d   %.6f (%.6f)    %.5f (%.5f)", r.gamma, r.L[k],
                              r.delta_nu[k].mean, r.delta_nu[k].stderr, r.slope[k].mean, r.slope[k].stderr);
                out << line;
                if (k == 0) {
                    std::snprintf(line, sizeof line, "    %.6f", r.extrapolated);
                    out << line;
                }
                out << "\n";
            }
        }
        for (const PairCrossing& p : g.result.pairs) {
            out << "  sizes " << p.L1 << "/" << p.L2 << ": ";
            if (p.gamma) out << "crossing at gamma=" << fmt(*p.gamma) << "\n";
            else out << "undetermined (" << p.diagnostic << ")\n";
        }
        out << "  crossing estimate: ";
        if (g.result.crossing) out << fmt(*g.result.crossing) << " (" << g.result.diagnostic << ")\n";
        else out << g.result.diagnostic << "\n";
    }
}

std::vector<PointFit> fit_results(const ResultSet& results, int ell_min, int ell_max) {
    std::vector<PointFit> out;
    for (const EnsembleAggregate& a : results.aggregates) {
        PointFit f{a.point, std::nullopt, ""};
        EntropyProfile prof{RealVector(a.point.L - 1)};
        for (int k = 0; k < a.point.L - 1; ++k) prof.S(k) = a.S[k].mean;
        try {
            f.fit = cft_fit(prof, a.point.L, ell_min, ell_max);
        } catch (const std::exception& e) {
            f.note = e.what();
        }
        out.push_back(std::move(f));
    }
    return out;
}

void print_fits(std::ostream& out, std::span<const PointFit> fits) {
    out << "gamma,L,U,observable,alpha,s0,residual,points\n";
    for (const PointFit& f : fits) {
        out << fmt(f.point.gamma) << "," << f.point.L << "," << fmt(f.point.U) << "," << to_string(f.point.observable)
            << ",";
        if (f.fit) out << fmt(f.fit->alpha) << "," << fmt(f.fit->s0) << "," << fmt(f.fit->residual) << "," << f.fit->points;
        else out << ",,," << 0 << "  # " << f.note;
        out << "\n";
    }
}

void emit_outputs(const ExperimentPlan& plan, std::span<const EnsembleAggregate> aggregates,
                  const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream csv(dir / "aggregates.csv");
        if (!csv) throw ConfigError("cannot write " + (dir / "aggregates.csv").string());
        write_csv(csv, aggregates);
    }

    ojson points = ojson::array();
    ojson fits = ojson::array();
    for (std::size_t i = 0; i < aggregates.size(); ++i) {
        const EnsembleAggregate& a = aggregates[i];
        points.push_back({{"L", a.point.L},
                          {"U", a.point.U},
                          {"gamma", a.point.gamma},
                          {"observable", std::string(to_string(a.point.observable))},
                          {"backend", std::string(to_string(a.backend))},
                          {"seed", {{"master", plan.master_seed}, {"stream_base", static_cast<std::uint64_t>(i) << 32}}},
                          {"n_traj", a.n_traj},
                          {"n_failed", a.n_failed},
                          {"S", estimates_json(a.S)},
                          {"nu", estimates_json(a.nu)},
                          {"NG", estimate_json(a.ng)},
                          {"NG_per_N", estimate_json(a.ng_per_particle)},
                          {"delta_nu", estimate_json(a.delta_nu)},
                          {"slope", estimate_json(a.slope)},
                          {"C_mean", matrix_json(a.C_mean)},
                          {"C_stderr", matrix_json(a.C_stderr)}});
        ojson fit = {{"point", i}};
        if (a.point.L >= 6 && a.n_traj > 0) {
            EntropyProfile prof{RealVector(a.point.L - 1)};
            for (int k = 0; k < a.point.L - 1; ++k) prof.S(k) = a.S[k].mean;
            const CftFit f = cft_fit(prof, a.point.L);
            fit["alpha"] = f.alpha;
            fit["s0"] = f.s0;
            fit["residual"] = f.residual;
            fit["points"] = f.points;
        } else {
            fit["skipped"] = "needs L >= 6 for three points in 2 <= ell <= L-2";
        }
        fits.push_back(fit);
    }

    ojson gaps = ojson::array();
    for (const GapGroup& group : gap_groups(aggregates)) {
        if (group.sizes() < 2) continue;
        try {
            const ScanResult r = finite_size_scan(group.samples);
            ojson rows = ojson::array();
            for (const ScanRow& row : r.rows) {
                rows.push_back({{"gamma", row.gamma},
                                {"L", row.L},
                                {"delta_nu", [&] {
                                     ojson v = ojson::array();
                                     for (const auto& e : row.delta_nu) v.push_back(estimate_json(e));
                                     return v;
                                 }()},
                                {"extrapolated", row.extrapolated}});
            }
            gaps.push_back({{"U", group.U},
                            {"observable", std::string(to_string(group.observable))},
                            {"rows", rows},
                            {"crossing", r.crossing ? ojson(*r.crossing) : ojson(nullptr)},
                            {"diagnostic", r.diagnostic}});
        } catch (const ConfigError& e) {
            gaps.push_back({{"error", e.what()}});
        }
    }

    const ojson summary = {{"format", "montraj-results"},
                           {"version", 1},
                           {"montraj", version_string()},
                           {"plan", plan_json(plan)},
                           {"points", points},
                           {"gap_table", gaps},
                           {"cft_fits", fits}};
    std::ofstream js(dir / "summary.json");
    if (!js) throw ConfigError("cannot write " + (dir / "summary.json").string());
    js << summary.dump(1) << '\n';
}

ResultSet load_results(const std::filesystem::path& dir) {
    std::ifstream in(dir / "summary.json");
    if (!in) throw ConfigError("no summary.json in " + dir.string());
    ojson j;
    try {
        j = ojson::parse(in);
    } catch (const ojson::parse_error& e) {
        throw ConfigError("cannot parse " + (dir / "summary.json").string() + ": " + e.what());
    }
    if (j.value("format", "") != "montraj-results") throw ConfigError("not a montraj results file");
    ResultSet out;
    try {
        out.plan = plan_from_json(j.at("plan"));
        for (const auto& p : j.at("points")) {
            EnsembleAggregate a;
            a.point = {p.at("L").get<int>(), p.at("U").get<double>(), p.at("gamma").get<double>(),
                       observable_from_string(p.at("observable").get<std::string>())};
            a.backend = backend_from_string(p.at("backend").get<std::string>());
            a.n_traj = p.at("n_traj").get<int>();
            a.n_failed = p.at("n_failed").get<int>();
            a.S = estimates_from(p.at("S"));
            a.nu = estimates_from(p.at("nu"));
            a.ng = estimate_from(p.at("NG"));
            a.ng_per_particle = estimate_from(p.at("NG_per_N"));
            a.delta_nu = estimate_from(p.at("delta_nu"));
            a.slope = estimate_from(p.at("slope"));
            a.C_mean = matrix_from(p.at("C_mean"));
            a.C_stderr = matrix_from(p.at("C_stderr"));
            out.aggregates.push_back(std::move(a));
        }
    } catch (const ojson::exception& e) {
        throw ConfigError("malformed summary.json: " + std::string(e.what()));
    }
    return out;
}

std::string version_string() { return "montraj 0.1.0"; }

}  // namespace montraj
