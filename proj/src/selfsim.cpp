#include "wtkin/selfsim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wtkin/errors.hpp"

namespace wtkin {

SelfSimExponents exponents_from_nu(double nu) {
    if (!(nu > 1.0))
        throw std::domain_error("exponents_from_nu: need nu > 1");
    SelfSimExponents e;
    e.nu = nu;
    const double two_beta = 1.0 / (2.0 * (nu - 1.0));
    e.beta = 0.5 * two_beta;
    e.alpha = nu * two_beta;  // alpha = nu /(2(nu-1)); alpha - 2beta = 1/2
    return e;
}

Spectrum rescale_snapshot(const Spectrum& s, double t, double t_star,
                          const SelfSimExponents& exps) {
    if (!(t < t_star))
        throw std::domain_error("rescale_snapshot: need t < T*");
    const double mt = t_star - t;
    const double len = std::pow(mt, exps.two_beta());
    const double amp = std::pow(mt, exps.alpha) / std::sqrt(exps.two_beta());

    EnergyGrid og;
    const auto& g = *s.grid;
    og.nodes.resize(g.size());
    og.log_nodes.resize(g.size());
    og.weights.resize(g.size());
    const double log_len = std::log(len);
    for (std::size_t i = 0; i < g.size(); ++i) {
        og.nodes[i] = g.nodes[i] / len;
        og.log_nodes[i] = g.log_nodes[i] - log_len;
        og.weights[i] = g.weights[i] / len;
    }
    std::vector<double> phi(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) phi[i] = s.values[i] * amp;
    return make_spectrum(std::make_shared<EnergyGrid>(std::move(og)),
                         std::move(phi));
}

TailFit fit_tail_exponent(const Spectrum& profile, double omega_lo,
                          double omega_hi) {
    const auto& g = *profile.grid;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.nodes[i] < omega_lo || g.nodes[i] > omega_hi) continue;
        if (!(profile.values[i] > 0.0))
            throw fit_error("fit_tail_exponent: nonpositive value in window");
        xs.push_back(g.log_nodes[i]);
        ys.push_back(std::log(profile.values[i]));
    }
    if (xs.size() < 8)
        throw fit_error("fit_tail_exponent: need >= 8 positive nodes in window");

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double det = n * sxx - sx * sx;
    if (det == 0.0) throw fit_error("fit_tail_exponent: degenerate window");
    const double slope = (n * sxy - sx * sy) / det;
    const double icept = (sy * sxx - sx * sxy) / det;

    TailFit f;
    f.nu = -slope;
    f.amplitude = std::exp(icept);
    f.points = xs.size();
    return f;
}

std::vector<double> selfsim_residual(const Spectrum& phi, double nu,
                                     KernelParams params) {
    const auto& g = *phi.grid;
    const std::size_t n = g.size();
    CollisionOperator op(phi.grid, params);
    const std::vector<double> c = op.rhs(phi);

    std::vector<double> res(n, 0.0);
    auto wdphi = [&](std::size_t i) {  // omega * dphi/domega at node i
        const std::size_t a = (i == 0) ? 0 : i - 1;
        const std::size_t b = (i + 1 == n) ? i : i + 1;
        const double du = g.log_nodes[b] - g.log_nodes[a];
        if (du == 0.0) return 0.0;
        if (phi.values[a] > 0.0 && phi.values[b] > 0.0 && phi.values[i] > 0.0) {
            // logarithmic derivative: exact on pure powers
            const double dlog =
                (std::log(phi.values[b]) - std::log(phi.values[a])) / du;
            return phi.values[i] * dlog;
        }
        return g.nodes[i] * (phi.values[b] - phi.values[a]) /
               (g.nodes[b] - g.nodes[a]);
    };
    for (std::size_t i = 0; i < n; ++i)
        res[i] = nu * phi.values[i] + wdphi(i) - c[i];
    return res;
}

double front_position(const Spectrum& s) {
    const auto& g = *s.grid;
    double sup = 0.0;
    for (double v : s.values) sup = std::max(sup, v);
    if (sup <= 0.0) return g.eps_min();
    const double half = 0.5 * sup;
    for (std::size_t i = g.size(); i-- > 1;) {
        if (s.values[i] >= half) {
            if (i + 1 == g.size() || s.values[i + 1] <= 0.0) return g.nodes[i];
            // log-interpolate the crossing between nodes i and i+1
            const double la = std::log(s.values[i]);
            const double lb = std::log(std::max(s.values[i + 1], 1e-300));
            const double t = (std::log(half) - la) / (lb - la);
            return std::exp(g.log_nodes[i] +
                            t * (g.log_nodes[i + 1] - g.log_nodes[i]));
        }
    }
    return g.eps_min();
}

namespace {

// relative L2 distance between two rescaled profiles on [lo, hi];
// the earlier profile is interpolated onto the later one's nodes
double collapse_distance(const Spectrum& earlier, const Spectrum& later,
                         double lo, double hi) {
    const auto& g = *later.grid;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double w = g.nodes[i];
        if (w < lo || w > hi) continue;
        const double a = interp_loglog(earlier, w);
        const double b = later.values[i];
        num += (a - b) * (a - b);
        den += b * b;
    }
    if (den == 0.0) return 0.0;
    return std::sqrt(num / den);
}

// least-squares T* for the front law: minimizes the residual of
// log(front) = log c + two_beta log(T*-t) over T* by golden section
double front_law_t_star(const std::vector<double>& ts,
                        const std::vector<double>& fronts, double two_beta,
                        double t_min) {
    auto rss = [&](double t_star) {
        double sx = 0.0, n = double(ts.size());
        for (std::size_t i = 0; i < ts.size(); ++i)
            sx += std::log(fronts[i]) - two_beta * std::log(t_star - ts[i]);
        const double c = sx / n;
        double acc = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const double r = std::log(fronts[i]) -
                             two_beta * std::log(t_star - ts[i]) - c;
            acc += r * r;
        }
        return acc;
    };
    const double span = ts.back() - ts.front();
    double lo = t_min + 1e-9 * std::max(1.0, std::abs(t_min));
    double hi = ts.back() + 10.0 * std::max(span, 1e-6);
    const double gr = 0.61803398874989485;
    double a = lo, b = hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = rss(x1), f2 = rss(x2);
    for (int it = 0; it < 200 && (b - a) > 1e-12 * std::max(1.0, b); ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = rss(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = rss(x2);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

ProfileFit fit_selfsim(const TrajectoryRecord& rec, const FitOptions& opt) {
    if (rec.snapshots.empty())
        throw std::invalid_argument("fit_selfsim: empty record");

    ProfileFit out;
    out.window_lo = opt.tail_window_lo;
    out.window_hi = opt.tail_window_hi;

    double alpha = opt.alpha_init;
    // nu from alpha: 2beta = alpha - 1/2, nu = alpha/(alpha - 1/2)
    SelfSimExponents exps = exponents_from_nu(alpha / (alpha - 0.5));

    // snapshots whose front the grid still resolves, in the scaling regime
    const double eps_min = rec.grid->eps_min();
    const double front_floor = opt.resolved_front_floor * eps_min;
    std::vector<double> fts, fronts;
    std::size_t fit_idx = 0;
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
        const double fr =
            front_position(make_spectrum(rec.grid, rec.snapshots[i]));
        if (fr < front_floor) break;
        if (fr <= rec.grid->eps_max() / 100.0 &&
            rec.sup_f[i] >= 10.0 * rec.sup_f.front()) {
            fts.push_back(rec.times[i]);
            fronts.push_back(fr);
            fit_idx = i;
        }
    }

    BlowupFit bf = estimate_blowup_time(rec, alpha);
    out.t_star = bf.t_star;
    out.fit_residual = bf.residual;
    if (fts.size() < 4)
        throw not_in_asymptotic_regime(
            "fit_selfsim: too few snapshots with a resolved front");

    for (int it = 0; it < opt.iterations; ++it) {
        // front-position law pins T* where the sup extrapolation is biased
        out.t_star = front_law_t_star(fts, fronts, exps.two_beta(),
                                      rec.times[fit_idx]);
        const Spectrum snap = make_spectrum(rec.grid, rec.snapshots[fit_idx]);
        Spectrum prof =
            rescale_snapshot(snap, rec.times[fit_idx], out.t_star, exps);
        // The eigenvalue problem fixes the profile only up to the scaling
        // family phi -> lam phi(lam omega); the tail window is therefore
        // anchored to the profile's own half-peak scale, matching how the
        // published profiles are normalized.
        const double knee = front_position(prof);
        TailFit tf = fit_tail_exponent(prof, opt.tail_window_lo * knee,
                                       opt.tail_window_hi * knee);
        out.nu_fit = tf.nu;
        out.amplitude = tf.amplitude;
        // freshly deposited tail right behind the front, for reference
        try {
            out.nu_fresh = fit_tail_exponent(prof, 3.0 * knee, 30.0 * knee).nu;
        } catch (const fit_error&) {
            out.nu_fresh = 0.0;
        }
        exps = exponents_from_nu(tf.nu);
        alpha = exps.alpha;
    }
    out.exponents = exps;

    // direct front-scaling exponent at the fitted T*
    {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = double(fts.size());
        for (std::size_t i = 0; i < fts.size(); ++i) {
            const double x = std::log(out.t_star - fts[i]);
            const double y = std::log(fronts[i]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double det = n * sxx - sx * sx;
        out.two_beta_front = det != 0.0 ? (n * sxy - sx * sy) / det : 0.0;
    }

    // collapse diagnostics over the final decade of T*-t; the window spans
    // the profile core, so it needs more front clearance than the tail fit
    out.collapse_series.clear();
    const double t_star = out.t_star;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i <= fit_idx; ++i) {
        if (!(rec.times[i] < t_star)) continue;
        const double fr =
            front_position(make_spectrum(rec.grid, rec.snapshots[i]));
        if (fr < opt.collapse_front_floor * eps_min) break;
        keep.push_back(i);
    }
    // pairs separated by ~10^(1/4) in T*-t, always ending at the fit snapshot
    double target = 0.0;
    std::vector<std::size_t> marks;
    const double stride = std::pow(10.0, 0.25);
    for (std::size_t idx : keep) {
        const double mt = t_star - rec.times[idx];
        if (marks.empty() || mt <= target) {
            marks.push_back(idx);
            target = mt / stride;
        }
    }
    if (!keep.empty() && (marks.empty() || marks.back() != keep.back()))
        marks.push_back(keep.back());
    for (std::size_t m = 1; m < marks.size(); ++m) {
        const Spectrum sa = make_spectrum(rec.grid, rec.snapshots[marks[m - 1]]);
        const Spectrum sb = make_spectrum(rec.grid, rec.snapshots[marks[m]]);
        const Spectrum pa =
            rescale_snapshot(sa, rec.times[marks[m - 1]], t_star, exps);
        const Spectrum pb =
            rescale_snapshot(sb, rec.times[marks[m]], t_star, exps);
        CollapsePoint cp;
        cp.t = rec.times[marks[m]];
        const double knee = front_position(pb);  // same normalization freedom
        cp.error = collapse_distance(pa, pb, opt.collapse_window_lo * knee,
                                     opt.collapse_window_hi * knee);
        out.collapse_series.push_back(cp);
    }
    if (!out.collapse_series.empty())
        out.collapse_error = out.collapse_series.back().error;
    return out;
}

}  // namespace wtkin
