// wtkin: command-line front end for the isotropic wave-kinetic solver and
// its closure diagnostics.  Every command reads a plain key=value config,
// echoes the effective settings next to its outputs, and writes a JSON
// report with an explicit assertions array.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "wtkin/collision.hpp"
#include "wtkin/cumulant.hpp"
#include "wtkin/errors.hpp"
#include "wtkin/evolve.hpp"
#include "wtkin/grid.hpp"
#include "wtkin/markov.hpp"
#include "wtkin/parallel.hpp"
#include "wtkin/rng.hpp"
#include "wtkin/selfsim.hpp"
#include "wtkin/wick.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wtkin;

namespace {

constexpr const char* kVersion = "wtkin 0.1.0";

// ---------------------------------------------------------------- config

struct Config {
    std::map<std::string, std::string> kv;  // ordered for stable echoes

    bool has(const std::string& k) const { return kv.count(k) != 0; }
    std::string get(const std::string& k, const std::string& dflt) const {
        auto it = kv.find(k);
        return it == kv.end() ? dflt : it->second;
    }
    double get_num(const std::string& k, double dflt) const {
        auto it = kv.find(k);
        if (it == kv.end()) return dflt;
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size())
            throw std::invalid_argument("config: bad number for " + k);
        return v;
    }
    long long get_int(const std::string& k, long long dflt) const {
        auto it = kv.find(k);
        if (it == kv.end()) return dflt;
        return std::stoll(it->second);
    }
    std::vector<double> get_list(const std::string& k,
                                 const std::string& dflt) const {
        std::vector<double> out;
        std::stringstream ss(get(k, dflt));
        std::string tok;
        while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
        return out;
    }
};

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

Config load_config(const std::string& path,
                   const std::set<std::string>& known) {
    Config cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read config: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!known.count(key))
            throw std::invalid_argument("config: unknown key '" + key + "'");
        cfg.kv[key] = val;
    }
    return cfg;
}

// effective settings, every key present, for byte-identical reruns
void write_config_echo(const fs::path& dir, const Config& effective) {
    std::ofstream out(dir / "config_used.cfg");
    for (const auto& [k, v] : effective.kv) out << k << " = " << v << "\n";
}

json echo_json(const Config& effective) {
    json j = json::object();
    for (const auto& [k, v] : effective.kv) j[k] = v;
    return j;
}

struct Assertion {
    std::string name;
    bool pass;
    double measured;
    double expected;
    double tolerance;
};

json assertions_json(const std::vector<Assertion>& as, bool& all_pass) {
    json arr = json::array();
    all_pass = true;
    for (const auto& a : as) {
        arr.push_back({{"name", a.name},
                       {"pass", a.pass},
                       {"measured", a.measured},
                       {"expected", a.expected},
                       {"tolerance", a.tolerance}});
        all_pass = all_pass && a.pass;
    }
    return arr;
}

void write_report(const fs::path& path, const json& j) {
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

void apply_threads(const Config& cfg) {
    int threads = static_cast<int>(cfg.get_int("threads", 0));
    if (const char* env = std::getenv("WTKIN_THREADS")) threads = std::atoi(env);
    set_max_threads(threads);
}

std::shared_ptr<const EnergyGrid> grid_from_config(const Config& cfg) {
    return std::make_shared<EnergyGrid>(
        make_log_grid(cfg.get_num("grid.eps_min", 1e-4),
                      cfg.get_num("grid.eps_max", 50.0),
                      static_cast<std::size_t>(cfg.get_int("grid.n", 256))));
}

Spectrum initial_spectrum(const Config& cfg,
                          std::shared_ptr<const EnergyGrid> grid) {
    const std::string family = cfg.get("f0.family", "exponential");
    const double amp = cfg.get_num("f0.amplitude", 1.0);
    std::vector<double> v(grid->size());
    if (family == "exponential") {
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] = amp * std::exp(-grid->nodes[i]);
    } else if (family == "constant") {
        std::fill(v.begin(), v.end(), amp);
    } else if (family == "rayleigh_jeans") {
        return rayleigh_jeans(std::move(grid), cfg.get_num("f0.T", 1.0),
                              cfg.get_num("f0.mu", 0.1));
    } else {
        throw std::invalid_argument("config: unknown f0.family " + family);
    }
    return make_spectrum(std::move(grid), std::move(v));
}

std::string num_str(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

// ---------------------------------------------------------------- evolve

const std::set<std::string> kEvolveKeys = {
    "threads",        "grid.eps_min",   "grid.eps_max",
    "grid.n",         "gamma",          "boundary_refine",
    "f0.family",      "f0.amplitude",   "f0.T",
    "f0.mu",          "dt_init",        "dt_min",
    "safety",         "rtol",           "atol",
    "t_end",          "snapshot_every", "blowup_growth_factor",
    "negativity_tol", "max_steps"};

Config evolve_effective(const Config& in) {
    Config e = in;
    auto d = [&](const char* k, const std::string& v) {
        if (!e.has(k)) e.kv[k] = v;
    };
    d("threads", "0");
    d("grid.eps_min", "0.0001");
    d("grid.eps_max", "50");
    d("grid.n", "256");
    d("gamma", num_str(default_gamma()));
    d("boundary_refine", "4");
    d("f0.family", "exponential");
    d("f0.amplitude", "1");
    d("f0.T", "1");
    d("f0.mu", "0.1");
    d("dt_init", "0.001");
    d("dt_min", "1e-12");
    d("safety", "0.9");
    d("rtol", "0.0001");
    d("atol", "1e-12");
    d("t_end", "1e9");
    d("snapshot_every", "1");
    d("blowup_growth_factor", "1000");
    d("negativity_tol", "1e-12");
    d("max_steps", "200000");
    return e;
}

int cmd_evolve(const Config& raw, const fs::path& out_dir) {
    const Config cfg = evolve_effective(raw);
    apply_threads(cfg);
    auto grid = grid_from_config(cfg);
    Spectrum f0 = initial_spectrum(cfg, grid);

    KernelParams kp{cfg.get_num("gamma", default_gamma())};
    CollisionOperator op(grid, kp,
                         static_cast<int>(cfg.get_int("boundary_refine", 4)));
    EvolveConfig ec;
    ec.dt_init = cfg.get_num("dt_init", 1e-3);
    ec.dt_min = cfg.get_num("dt_min", 1e-12);
    ec.safety = cfg.get_num("safety", 0.9);
    ec.rtol = cfg.get_num("rtol", 1e-4);
    ec.atol = cfg.get_num("atol", 1e-12);
    ec.t_end = cfg.get_num("t_end", 1e9);
    ec.snapshot_every =
        static_cast<std::size_t>(cfg.get_int("snapshot_every", 1));
    ec.blowup_growth_factor = cfg.get_num("blowup_growth_factor", 1e3);
    ec.negativity_tol = cfg.get_num("negativity_tol", 1e-12);
    ec.max_steps = static_cast<std::size_t>(cfg.get_int("max_steps", 200000));

    TrajectoryRecord rec = run(op, f0, ec);

    fs::create_directories(out_dir);
    write_config_echo(out_dir, cfg);

    json traj;
    traj["version"] = kVersion;
    traj["command"] = "evolve";
    traj["config"] = echo_json(cfg);
    traj["stop_reason"] = to_string(rec.stop_reason);
    traj["times"] = rec.times;
    traj["n_moment"] = rec.n_moment;
    traj["e_moment"] = rec.e_moment;
    traj["sup_f"] = rec.sup_f;

    json snaps = json::array();
    const std::size_t stride = std::max<std::size_t>(1, ec.snapshot_every);
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
        if (i % stride != 0 && i + 1 != rec.times.size()) continue;
        char name[64];
        std::snprintf(name, sizeof(name), "snap_%06zu.csv", i);
        write_spectrum_csv((out_dir / name).string(),
                           make_spectrum(rec.grid, rec.snapshots[i]));
        snaps.push_back({{"index", i}, {"time", rec.times[i]}, {"file", name}});
    }
    traj["snapshots"] = snaps;
    write_report(out_dir / "trajectory.json", traj);

    if (rec.stop_reason == StopReason::dt_underflow) return 2;
    return 0;
}

// ------------------------------------------------------------ fit-selfsim

const std::set<std::string> kFitKeys = {
    "threads",            "trajectory_dir",  "alpha_init",
    "tail_window_lo",     "tail_window_hi",  "collapse_window_lo",
    "collapse_window_hi", "iterations"};

int cmd_fit_selfsim(const Config& raw, const fs::path& out_dir) {
    Config cfg = raw;
    auto d = [&](const char* k, const std::string& v) {
        if (!cfg.has(k)) cfg.kv[k] = v;
    };
    d("threads", "0");
    d("trajectory_dir", ".");
    d("alpha_init", "2.639");
    d("tail_window_lo", "10");
    d("tail_window_hi", "1000");
    d("collapse_window_lo", "0.1");
    d("collapse_window_hi", "1000");
    d("iterations", "2");
    apply_threads(cfg);

    const fs::path tdir = cfg.get("trajectory_dir", ".");
    std::ifstream in(tdir / "trajectory.json");
    if (!in)
        throw std::invalid_argument("fit-selfsim: cannot read trajectory.json");
    json traj = json::parse(in);

    const auto times = traj["times"].get<std::vector<double>>();
    const auto n_mom = traj["n_moment"].get<std::vector<double>>();
    const auto e_mom = traj["e_moment"].get<std::vector<double>>();
    const auto sup = traj["sup_f"].get<std::vector<double>>();

    // keep only rows with persisted spectra
    TrajectoryRecord dense;
    for (const auto& s : traj["snapshots"]) {
        Spectrum sp =
            read_spectrum_csv((tdir / s["file"].get<std::string>()).string());
        if (!dense.grid) dense.grid = sp.grid;
        const std::size_t idx = s["index"].get<std::size_t>();
        if (idx >= times.size())
            throw std::invalid_argument("fit-selfsim: snapshot index out of range");
        dense.times.push_back(times[idx]);
        dense.snapshots.push_back(sp.values);
        dense.n_moment.push_back(n_mom[idx]);
        dense.e_moment.push_back(e_mom[idx]);
        dense.sup_f.push_back(sup[idx]);
    }
    if (dense.snapshots.empty())
        throw std::invalid_argument("fit-selfsim: trajectory has no snapshots");

    FitOptions opt;
    opt.alpha_init = cfg.get_num("alpha_init", 2.639);
    opt.tail_window_lo = cfg.get_num("tail_window_lo", 10.0);
    opt.tail_window_hi = cfg.get_num("tail_window_hi", 1e3);
    opt.collapse_window_lo = cfg.get_num("collapse_window_lo", 0.1);
    opt.collapse_window_hi = cfg.get_num("collapse_window_hi", 1e3);
    opt.iterations = static_cast<int>(cfg.get_int("iterations", 2));

    ProfileFit fit = fit_selfsim(dense, opt);

    fs::create_directories(out_dir);
    write_config_echo(out_dir, cfg);

    // final rescaled profile for plotting
    {
        std::ptrdiff_t last =
            static_cast<std::ptrdiff_t>(dense.times.size()) - 1;
        while (last >= 0 && !(dense.times[last] < fit.t_star)) --last;
        if (last >= 0) {
            Spectrum prof = rescale_snapshot(
                make_spectrum(dense.grid, dense.snapshots[last]),
                dense.times[last], fit.t_star, fit.exponents);
            write_spectrum_csv((out_dir / "profile_final.csv").string(), prof,
                               "omega", "phi");
        }
    }

    json rep;
    rep["version"] = kVersion;
    rep["command"] = "fit-selfsim";
    rep["config"] = echo_json(cfg);
    rep["t_star"] = fit.t_star;
    rep["nu_fit"] = fit.nu_fit;
    rep["alpha"] = fit.exponents.alpha;
    rep["two_beta"] = fit.exponents.two_beta();
    rep["tail_amplitude"] = fit.amplitude;
    rep["fit_residual"] = fit.fit_residual;
    rep["two_beta_front"] = fit.two_beta_front;
    rep["nu_fresh"] = fit.nu_fresh;
    rep["tail_window"] = {fit.window_lo, fit.window_hi};
    json cs = json::array();
    for (const auto& c : fit.collapse_series)
        cs.push_back({{"t", c.t}, {"error", c.error}});
    rep["collapse_series"] = cs;
    rep["collapse_error"] = fit.collapse_error;
    write_report(out_dir / "selfsim_report.json", rep);
    return 0;
}

// ------------------------------------------------------------ markov-check

const std::set<std::string> kMarkovKeys = {"threads", "tau", "eps_values",
                                           "omega_max", "omega_n"};

int cmd_markov_check(const Config& raw, const fs::path& out_dir) {
    Config cfg = raw;
    auto d = [&](const char* k, const std::string& v) {
        if (!cfg.has(k)) cfg.kv[k] = v;
    };
    d("threads", "0");
    d("tau", "1");
    d("eps_values", "0.3,0.1,0.03");
    d("omega_max", "8");
    d("omega_n", "800001");
    apply_threads(cfg);

    const double tau = cfg.get_num("tau", 1.0);
    const double L = cfg.get_num("omega_max", 8.0);
    const std::size_t n =
        static_cast<std::size_t>(cfg.get_int("omega_n", 800001));
    std::vector<double> omega(n), psi(n);
    for (std::size_t i = 0; i < n; ++i) {
        omega[i] = -L + 2.0 * L * double(i) / double(n - 1);
        psi[i] = std::exp(-omega[i] * omega[i]);
    }
    const double target = 2.0 * 3.14159265358979323846;

    json table = json::array();
    std::vector<Assertion> as;
    double prev_err = 1e300;
    bool decreasing = true;
    double final_err = 0.0;
    for (double eps : cfg.get_list("eps_values", "0.3,0.1,0.03")) {
        const double val = smeared_delta_apply(omega, psi, tau, eps);
        const double err = std::abs(val - target) / target;
        table.push_back({{"eps", eps}, {"value", val}, {"rel_error", err}});
        decreasing = decreasing && (err < prev_err);
        prev_err = err;
        final_err = err;
    }
    as.push_back({"error_strictly_decreasing", decreasing,
                  decreasing ? 1.0 : 0.0, 1.0, 0.0});
    as.push_back({"final_rel_error_below_5pct", final_err <= 0.05, final_err,
                  0.0, 0.05});

    fs::create_directories(out_dir);
    write_config_echo(out_dir, cfg);
    json rep;
    rep["version"] = kVersion;
    rep["command"] = "markov-check";
    rep["config"] = echo_json(cfg);
    rep["target"] = target;
    rep["table"] = table;
    bool ok = true;
    rep["assertions"] = assertions_json(as, ok);
    write_report(out_dir / "markov_report.json", rep);
    return ok ? 0 : 2;
}

// -------------------------------------------------------- nonmarkov-compare

const std::set<std::string> kNonmarkovKeys = {
    "threads",        "k1",     "tau",
    "eps_values",     "n_samples", "seed",
    "proposal_scale", "time_quadrature_steps", "gamma",
    "grid.eps_min",   "grid.eps_max", "grid.n"};

int cmd_nonmarkov_compare(const Config& raw, const fs::path& out_dir) {
    Config cfg = raw;
    auto d = [&](const char* k, const std::string& v) {
        if (!cfg.has(k)) cfg.kv[k] = v;
    };
    d("threads", "0");
    d("k1", "1.4142135623730951");
    d("tau", "0.5");
    d("eps_values", "0.5,0.25");
    d("n_samples", "200000");
    d("seed", "20240901");
    d("proposal_scale", "1");
    d("time_quadrature_steps", "4096");
    d("gamma", num_str(default_gamma()));
    d("grid.eps_min", "0.0001");
    d("grid.eps_max", "50");
    d("grid.n", "256");
    apply_threads(cfg);

    auto grid = grid_from_config(cfg);
    std::vector<double> v(grid->size());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = std::exp(-grid->nodes[i]);

    const double k1 = cfg.get_num("k1", std::sqrt(2.0));
    const double tau = cfg.get_num("tau", 0.5);
    KernelParams kp{cfg.get_num("gamma", default_gamma())};
    McConfig mc;
    mc.n_samples = static_cast<std::size_t>(cfg.get_int("n_samples", 200000));
    mc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 20240901));
    mc.proposal_scale = cfg.get_num("proposal_scale", 1.0);
    mc.time_quadrature_steps =
        static_cast<std::size_t>(cfg.get_int("time_quadrature_steps", 4096));

    auto f_eval = [](double eps) { return std::exp(-eps); };
    const McEstimate mk = markovian_rhs_mc(f_eval, k1, kp, mc);

    json table = json::array();
    std::vector<Assertion> as;
    double prev_gap = 1e300;
    bool decreasing = true;
    double final_gap = 0.0, final_gap_err = 0.0;
    for (double eps : cfg.get_list("eps_values", "0.5,0.25")) {
        const double t = tau / (eps * eps);
        HistorySpectra h({0.0, t},
                         {make_spectrum(grid, v), make_spectrum(grid, v)});
        const McEstimate nm = nonmarkovian_rhs_mc(h, k1, t, eps, kp, mc);
        const double rate = nm.value / (eps * eps);
        const double rate_err = nm.stderr_ / (eps * eps);
        const double gap = std::abs(rate - mk.value) / std::abs(mk.value);
        const double gap_err =
            std::sqrt(rate_err * rate_err + mk.stderr_ * mk.stderr_) /
            std::abs(mk.value);
        table.push_back({{"eps", eps},
                         {"t", t},
                         {"nonmarkovian_rate", rate},
                         {"nonmarkovian_stderr", rate_err},
                         {"rel_gap", gap},
                         {"rel_gap_stderr", gap_err}});
        decreasing = decreasing && (gap < prev_gap + gap_err);
        prev_gap = gap;
        final_gap = gap;
        final_gap_err = gap_err;
    }
    as.push_back(
        {"gap_decreasing", decreasing, decreasing ? 1.0 : 0.0, 1.0, 0.0});
    as.push_back({"final_gap_below_15pct_within_errors",
                  final_gap - 3.0 * final_gap_err <= 0.15, final_gap, 0.0,
                  0.15});

    fs::create_directories(out_dir);
    write_config_echo(out_dir, cfg);
    json rep;
    rep["version"] = kVersion;
    rep["command"] = "nonmarkov-compare";
    rep["config"] = echo_json(cfg);
    rep["markovian"] = {{"value", mk.value},
                        {"stderr", mk.stderr_},
                        {"n_samples", mk.n_samples},
                        {"acceptance", mk.acceptance}};
    rep["table"] = table;
    bool ok = true;
    rep["assertions"] = assertions_json(as, ok);
    write_report(out_dir / "nonmarkov_report.json", rep);
    return ok ? 0 : 2;
}

// ---------------------------------------------------------------- breakdown

const std::set<std::string> kBreakdownKeys = {"threads", "beta", "eps_values",
                                              "tau_factors"};

int cmd_breakdown(const Config& raw, const fs::path& out_dir) {
    Config cfg = raw;
    auto d = [&](const char* k, const std::string& v) {
        if (!cfg.has(k)) cfg.kv[k] = v;
    };
    d("threads", "0");
    d("beta", "1.068");
    d("eps_values", "0.01,0.001");
    d("tau_factors", "10,1,0.1");
    apply_threads(cfg);

    const double beta = cfg.get_num("beta", 1.068);
    json entries = json::array();
    std::vector<Assertion> as;
    for (double eps : cfg.get_list("eps_values", "0.01,0.001")) {
        BreakdownReport r = make_breakdown_report(beta, eps);
        json e;
        e["eps"] = eps;
        e["beta"] = beta;
        e["tau_star"] = r.tau_star;
        e["g22_scale_at_tau_star"] = r.at_tau_star.g22_scale;
        e["f11sq_scale_at_tau_star"] = r.at_tau_star.f11sq_scale;
        e["hierarchy_at_tau_star"] = r.hierarchy_at_tau_star;
        json sweeps = json::array();
        for (double fac : cfg.get_list("tau_factors", "10,1,0.1")) {
            const double mt = fac * r.tau_star;
            const BreakdownScales s = breakdown_scales(beta, eps, mt);
            const auto h3 = hierarchy_scales(beta, eps, mt);
            sweeps.push_back({{"minus_tau", mt},
                              {"g22_scale", s.g22_scale},
                              {"f11sq_scale", s.f11sq_scale},
                              {"g22_over_f11sq", s.g22_scale / s.f11sq_scale},
                              {"hierarchy", h3}});
        }
        e["sweep"] = sweeps;
        entries.push_back(e);

        char nm[64];
        std::snprintf(nm, sizeof(nm), "scale_equality_eps_%g", eps);
        as.push_back({nm, r.scale_equality_rel_gap <= 1e-12,
                      r.scale_equality_rel_gap, 0.0, 1e-12});
        std::snprintf(nm, sizeof(nm), "hierarchy_equality_eps_%g", eps);
        as.push_back({nm, r.hierarchy_max_rel_gap <= 1e-12,
                      r.hierarchy_max_rel_gap, 0.0, 1e-12});
    }
    {
        // high-precision arithmetic oracle for the pinned case
        const long double b = 1.068L, e = 1e-3L;
        const long double ts = std::pow(e, 2.0L / (1.0L + 2.0L * b));
        const double measured = breakdown_time(1.068, 1e-3);
        as.push_back({"tau_star_beta_1.068_eps_1e-3",
                      std::abs(measured - double(ts)) <= 1e-6, measured,
                      double(ts), 1e-6});
    }

    fs::create_directories(out_dir);
    write_config_echo(out_dir, cfg);
    json rep;
    rep["version"] = kVersion;
    rep["command"] = "breakdown";
    rep["config"] = echo_json(cfg);
    rep["entries"] = entries;
    bool ok = true;
    rep["assertions"] = assertions_json(as, ok);
    write_report(out_dir / "breakdown_report.json", rep);
    return ok ? 0 : 2;
}

// ---------------------------------------------------------------- wick-check

const std::set<std::string> kWickKeys = {"threads", "l_max", "mc_l_max",
                                         "n_samples", "seed"};

CovarianceMatrix random_psd(std::size_t n, std::uint64_t seed) {
    CounterRng rng{seed};
    CovarianceMatrix a(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            a.at(i, j) =
                cplx(rng.normal(i * n + j, 0), rng.normal(i * n + j, 1));
    CovarianceMatrix c(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            cplx s = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                s += a.at(i, k) * std::conj(a.at(j, k));
            c.at(i, j) = s / double(n);
        }
    return c;
}

int cmd_wick_check(const Config& raw, const fs::path& out_dir) {
    Config cfg = raw;
    auto d = [&](const char* k, const std::string& v) {
        if (!cfg.has(k)) cfg.kv[k] = v;
    };
    d("threads", "0");
    d("l_max", "5");
    d("mc_l_max", "3");
    d("n_samples", "200000");
    d("seed", "777");
    apply_threads(cfg);

    const std::size_t l_max = static_cast<std::size_t>(cfg.get_int("l_max", 5));
    const std::size_t mc_l_max =
        static_cast<std::size_t>(cfg.get_int("mc_l_max", 3));
    const std::uint64_t seed =
        static_cast<std::uint64_t>(cfg.get_int("seed", 777));

    std::vector<Assertion> as;
    json table = json::array();
    for (std::size_t L = 1; L <= l_max; ++L) {
        CovarianceMatrix c = random_psd(L, seed + L);
        const cplx en = moment_pairings(L, L, c);
        const cplx ry = permanent_ryser(c);
        const double rel = std::abs(en - ry) / std::max(1e-300, std::abs(ry));
        char nm[64];
        std::snprintf(nm, sizeof(nm), "enumeration_equals_ryser_L%zu", L);
        as.push_back({nm, rel <= 1e-12, rel, 0.0, 1e-12});

        const cplx zero = moment_pairings(L, L + 1, c);
        std::snprintf(nm, sizeof(nm), "unequal_orders_vanish_L%zu", L);
        as.push_back({nm, std::abs(zero) == 0.0, std::abs(zero), 0.0, 0.0});

        DeltaProductSum dd = initial_f_hat(L, [](const Vec3&) { return 1.0; });
        std::size_t fact = 1;
        for (std::size_t q = 2; q <= L; ++q) fact *= q;
        std::snprintf(nm, sizeof(nm), "initial_f_hat_term_count_L%zu", L);
        as.push_back({nm, dd.term_count() == fact, double(dd.term_count()),
                      double(fact), 0.0});

        json row = {{"L", L},
                    {"permanent_re", ry.real()},
                    {"permanent_im", ry.imag()},
                    {"enum_vs_ryser_rel", rel}};
        if (L <= mc_l_max) {
            McConfig mc;
            mc.n_samples =
                static_cast<std::size_t>(cfg.get_int("n_samples", 200000));
            mc.seed = seed + 100 + L;
            ComplexEstimate est = mc_gaussian_moment(c, L, mc);
            const double dre = std::abs(est.value.real() - ry.real());
            const double dim = std::abs(est.value.imag() - ry.imag());
            const bool pass = dre <= 3.0 * est.stderr_re + 1e-12 &&
                              dim <= 3.0 * est.stderr_im + 1e-12;
            std::snprintf(nm, sizeof(nm), "mc_moment_within_3sigma_L%zu", L);
            as.push_back({nm, pass, dre, 0.0, 3.0 * est.stderr_re});
            row["mc_re"] = est.value.real();
            row["mc_im"] = est.value.imag();
            row["mc_stderr_re"] = est.stderr_re;
            row["mc_stderr_im"] = est.stderr_im;
        }
        table.push_back(row);
    }

    fs::create_directories(out_dir);
    write_config_echo(out_dir, cfg);
    json rep;
    rep["version"] = kVersion;
    rep["command"] = "wick-check";
    rep["config"] = echo_json(cfg);
    rep["table"] = table;
    bool ok = true;
    rep["assertions"] = assertions_json(as, ok);
    write_report(out_dir / "wick_report.json", rep);
    return ok ? 0 : 2;
}

// ---------------------------------------------------------------- residual

const std::set<std::string> kResidualKeys = {"threads", "profile_csv", "nu",
                                             "gamma", "boundary_refine"};

int cmd_residual(const Config& raw, const fs::path& out_dir) {
    Config cfg = raw;
    auto d = [&](const char* k, const std::string& v) {
        if (!cfg.has(k)) cfg.kv[k] = v;
    };
    d("threads", "0");
    d("nu", "1.234");
    d("gamma", num_str(default_gamma()));
    d("boundary_refine", "4");
    apply_threads(cfg);
    if (!cfg.has("profile_csv"))
        throw std::invalid_argument("residual: profile_csv is required");

    Spectrum phi = read_spectrum_csv(cfg.get("profile_csv", ""));
    const double nu = cfg.get_num("nu", 1.234);
    KernelParams kp{cfg.get_num("gamma", default_gamma())};
    std::vector<double> res = selfsim_residual(phi, nu, kp);

    double rmax = 0.0, nmax = 0.0;
    for (std::size_t i = 0; i < res.size(); ++i) {
        rmax = std::max(rmax, std::abs(res[i]));
        nmax = std::max(nmax, std::abs(nu * phi.values[i]));
    }

    fs::create_directories(out_dir);
    write_config_echo(out_dir, cfg);
    write_spectrum_csv((out_dir / "residual.csv").string(),
                       make_spectrum(phi.grid, res), "omega", "residual");
    json rep;
    rep["version"] = kVersion;
    rep["command"] = "residual";
    rep["config"] = echo_json(cfg);
    rep["residual_sup"] = rmax;
    rep["nu_phi_sup"] = nmax;
    rep["relative_sup"] = nmax > 0 ? rmax / nmax : 0.0;
    write_report(out_dir / "residual_report.json", rep);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"isotropic wave-kinetics toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    struct Sub {
        const char* name;
        const std::set<std::string>* keys;
        int (*fn)(const Config&, const fs::path&);
    };
    const Sub subs[] = {
        {"evolve", &kEvolveKeys, cmd_evolve},
        {"fit-selfsim", &kFitKeys, cmd_fit_selfsim},
        {"markov-check", &kMarkovKeys, cmd_markov_check},
        {"nonmarkov-compare", &kNonmarkovKeys, cmd_nonmarkov_compare},
        {"breakdown", &kBreakdownKeys, cmd_breakdown},
        {"wick-check", &kWickKeys, cmd_wick_check},
        {"residual", &kResidualKeys, cmd_residual},
    };
    for (const auto& s : subs) {
        auto* sc = app.add_subcommand(s.name);
        sc->add_option("--config", config_path, "key = value settings file");
        sc->add_option("--out", out_dir, "output directory");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        for (const auto& s : subs) {
            if (app.get_subcommand(s.name)->parsed())
                return s.fn(load_config(config_path, *s.keys), out_dir);
        }
    } catch (const not_in_asymptotic_regime& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const statistics_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
