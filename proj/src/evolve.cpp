#include "wtkin/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wtkin/errors.hpp"

namespace wtkin {

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::reached_t_end: return "reached_t_end";
        case StopReason::blowup_detected: return "blowup_detected";
        case StopReason::dt_underflow: return "dt_underflow";
    }
    return "unknown";
}

namespace {

// Dormand-Prince 5(4), FSAL
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187,
                 A53 = 64448.0 / 6561, A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247,
                 A64 = 49.0 / 176, A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192,
                 B5 = -2187.0 / 6784, B6 = 11.0 / 84;
// error weights b5 - b4hat
constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920,
                 E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40;

double sup_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

struct Attempt {
    std::vector<double> y5;
    double err_ratio = 0.0;   // embedded error / tolerance
    double min_value = 0.0;   // most negative entry of y5
    std::vector<double> k7;   // FSAL stage
};

Attempt try_step(const CollisionOperator& op,
                 std::shared_ptr<const EnergyGrid> grid,
                 const std::vector<double>& y, const std::vector<double>& k1,
                 double dt, const EvolveConfig& cfg) {
    const std::size_t n = y.size();
    auto stage = [&](const std::vector<double>& yy) {
        Spectrum s = make_spectrum(grid, yy);
        return op.rhs(s);
    };
    std::vector<double> tmp(n);
    std::vector<double> k2, k3, k4, k5, k6;
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + dt * A21 * k1[i];
    k2 = stage(tmp);
    for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + dt * (A31 * k1[i] + A32 * k2[i]);
    k3 = stage(tmp);
    for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + dt * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    k4 = stage(tmp);
    for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + dt * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] +
                              A54 * k4[i]);
    k5 = stage(tmp);
    for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + dt * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] +
                              A64 * k4[i] + A65 * k5[i]);
    k6 = stage(tmp);

    Attempt out;
    out.y5.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.y5[i] = y[i] + dt * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] +
                                 B5 * k5[i] + B6 * k6[i]);
    out.k7 = stage(out.y5);

    const double tol = cfg.rtol * (sup_abs(y) + cfg.atol);
    double err = 0.0, mn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = dt * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] +
                               E5 * k5[i] + E6 * k6[i] + E7 * out.k7[i]);
        err = std::max(err, std::abs(e));
        mn = std::min(mn, out.y5[i]);
    }
    out.err_ratio = tol > 0.0 ? err / tol : (err > 0.0 ? 1e300 : 0.0);
    out.min_value = mn;
    return out;
}

}  // namespace

StepResult step_adaptive(const CollisionOperator& op, const Spectrum& s,
                         double dt, const EvolveConfig& cfg) {
    if (dt < cfg.dt_min)
        throw std::invalid_argument("step_adaptive: dt below dt_min");
    const auto grid = s.grid;
    const std::vector<double> k1 = op.rhs(s);
    const double sup0 = sup_abs(s.values);

    StepResult res;
    double h = dt;
    for (;;) {
        Attempt a = try_step(op, grid, s.values, k1, h, cfg);
        const bool too_negative = a.min_value < -cfg.negativity_tol * sup0;
        if (a.err_ratio <= 1.0 && !too_negative) {
            for (double& v : a.y5)
                if (v < 0.0) v = 0.0;  // clip negativity_tol remnants
            res.next = make_spectrum(grid, std::move(a.y5));
            res.accepted_dt = h;
            double grow = a.err_ratio > 0.0
                              ? cfg.safety * std::pow(a.err_ratio, -0.2)
                              : 5.0;
            grow = std::clamp(grow, 0.2, 5.0);
            res.next_dt = h * grow;
            return res;
        }
        // reject: halve on negativity, otherwise follow the controller
        double shrink = 0.5;
        if (a.err_ratio > 1.0)
            shrink = std::clamp(cfg.safety * std::pow(a.err_ratio, -0.2), 0.1,
                                0.5);
        h *= shrink;
        if (h < cfg.dt_min) {
            res.next = s;
            res.accepted_dt = 0.0;
            res.next_dt = h;
            res.underflow = true;
            return res;
        }
    }
}

namespace {

// step with a caller-provided first stage; fills it with the last stage of
// the accepted step (the pair is first-same-as-last)
StepResult step_fsal(const CollisionOperator& op, const Spectrum& s,
                     double dt, const EvolveConfig& cfg,
                     std::vector<double>& k_first) {
    StepResult res;
    double h = dt;
    const double sup0 = sup_abs(s.values);
    for (;;) {
        Attempt a = try_step(op, s.grid, s.values, k_first, h, cfg);
        const bool too_negative = a.min_value < -cfg.negativity_tol * sup0;
        if (a.err_ratio <= 1.0 && !too_negative) {
            bool clipped = false;
            for (double& v : a.y5)
                if (v < 0.0) {
                    v = 0.0;
                    clipped = true;
                }
            res.next = make_spectrum(s.grid, std::move(a.y5));
            res.accepted_dt = h;
            double grow = a.err_ratio > 0.0
                              ? cfg.safety * std::pow(a.err_ratio, -0.2)
                              : 5.0;
            res.next_dt = h * std::clamp(grow, 0.2, 5.0);
            if (clipped)
                k_first = op.rhs(res.next);  // clipping invalidates the stage
            else
                k_first = std::move(a.k7);
            return res;
        }
        double shrink = 0.5;
        if (a.err_ratio > 1.0)
            shrink = std::clamp(cfg.safety * std::pow(a.err_ratio, -0.2), 0.1,
                                0.5);
        h *= shrink;
        if (h < cfg.dt_min) {
            res.next = s;
            res.accepted_dt = 0.0;
            res.next_dt = h;
            res.underflow = true;
            return res;
        }
    }
}

}  // namespace

TrajectoryRecord run(const CollisionOperator& op, const Spectrum& f0,
                     const EvolveConfig& cfg) {
    TrajectoryRecord rec;
    rec.grid = f0.grid;
    Spectrum f = f0;
    double t = 0.0;
    double dt = cfg.dt_init;

    auto record = [&](double tt, const Spectrum& s) {
        rec.times.push_back(tt);
        rec.snapshots.push_back(s.values);
        rec.n_moment.push_back(moment(s, 0.5));
        rec.e_moment.push_back(moment(s, 1.5));
        double m = 0.0;
        for (double v : s.values) m = std::max(m, v);
        rec.sup_f.push_back(m);
    };
    record(t, f);
    const double sup0 = rec.sup_f.front();

    std::vector<double> k1 = op.rhs(f);
    for (std::size_t step = 0; step < cfg.max_steps; ++step) {
        if (t >= cfg.t_end) {
            rec.stop_reason = StopReason::reached_t_end;
            return rec;
        }
        double h = std::min(dt, cfg.t_end - t);
        h = std::max(h, cfg.dt_min);
        StepResult sr = step_fsal(op, f, h, cfg, k1);
        if (sr.underflow) {
            rec.stop_reason = StopReason::dt_underflow;
            return rec;
        }
        t += sr.accepted_dt;
        f = std::move(sr.next);
        dt = sr.next_dt;
        record(t, f);
        if (rec.sup_f.back() >= cfg.blowup_growth_factor * sup0) {
            rec.stop_reason = StopReason::blowup_detected;
            return rec;
        }
    }
    rec.stop_reason = StopReason::reached_t_end;
    return rec;
}

BlowupFit estimate_blowup_time(const TrajectoryRecord& rec, double alpha) {
    const std::size_t n = rec.times.size();
    if (n < 10)
        throw not_in_asymptotic_regime("estimate_blowup_time: need >= 10 samples");
    const double sup_last = rec.sup_f.back();
    const double sup_first = rec.sup_f.front();
    if (!(sup_last >= 10.0 * sup_first))
        throw not_in_asymptotic_regime(
            "estimate_blowup_time: sup f grew less than 10x");

    // last decade of growth
    std::vector<double> ts, ys;
    for (std::size_t i = 0; i < n; ++i) {
        if (rec.sup_f[i] >= 0.1 * sup_last && rec.sup_f[i] > 0.0) {
            ts.push_back(rec.times[i]);
            ys.push_back(std::pow(rec.sup_f[i], -1.0 / alpha));
        }
    }
    if (ts.size() < 3)
        throw not_in_asymptotic_regime(
            "estimate_blowup_time: too few samples in the last decade");

    // linear least squares y = a - b t; T* = a / b
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double N = static_cast<double>(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        sx += ts[i];
        sy += ys[i];
        sxx += ts[i] * ts[i];
        sxy += ts[i] * ys[i];
    }
    const double det = N * sxx - sx * sx;
    if (det == 0.0) throw fit_error("estimate_blowup_time: degenerate fit");
    const double slope = (N * sxy - sx * sy) / det;
    const double icept = (sy * sxx - sx * sxy) / det;
    if (!(slope < 0.0))
        throw not_in_asymptotic_regime(
            "estimate_blowup_time: sup f is not growing toward a singularity");

    BlowupFit fit;
    fit.t_star = -icept / slope;
    fit.points_used = ts.size();
    double ss = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double model = icept + slope * ts[i];
        const double rel = (ys[i] - model) / (std::abs(ys[i]) + 1e-300);
        ss += rel * rel;
    }
    fit.residual = std::sqrt(ss / N);
    return fit;
}

}  // namespace wtkin
