#include "wtkin/collision.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wtkin/parallel.hpp"

namespace wtkin {

double default_gamma() {
    const double pi = 3.14159265358979323846;
    return 1.0 / (8.0 * pi * pi * pi * pi * pi * pi);
}

double kernel_w(double e1, double e2, double e3, double e4) {
    if (!(e1 > 0.0)) throw std::domain_error("kernel_w: e1 must be > 0");
    double m = e1;
    if (e2 < m) m = e2;
    if (e3 < m) m = e3;
    if (e4 < m) m = e4;
    if (m < 0.0) m = 0.0;
    return std::sqrt(m / e1);
}

namespace {

// fraction of the rectangle [x0,x1]x[y0,y1] lying in the band
// clo <= x+y <= chi (closed form; rectangle/half-plane clipping)
double band_fraction(double x0, double x1, double y0, double y1, double clo,
                     double chi) {
    const double w = x1 - x0, h = y1 - y0, area = w * h;
    auto below = [&](double c) {  // area of {x+y <= c} inside the rectangle
        double d = c - (x0 + y0);
        if (d <= 0.0) return 0.0;
        const double span = w + h;
        if (d >= span) return area;
        double a = 0.5 * d * d;
        if (d > w) a -= 0.5 * (d - w) * (d - w);
        if (d > h) a -= 0.5 * (d - h) * (d - h);
        return std::min(a, area);
    };
    const double f = (below(chi) - below(clo)) / area;
    return std::clamp(f, 0.0, 1.0);
}

// int_{rect, x+y >= c} sqrt(x+y-c) dA.  Reduces to a 1D integral of the
// diagonal chord length, which is piecewise linear in s = x+y; each piece
// integrates against sqrt(s-c) in closed form.  Needed because W ~
// sqrt(e2) at the resonance line: a flat midpoint weight there biases the
// conserved moments at O(h^{3/2}).
double sqrt_band_integral(double x0, double x1, double y0, double y1,
                          double c) {
    const double w = x1 - x0, h = y1 - y0;
    const double a0 = x0 + y0, a3 = x1 + y1;
    const double a1 = a0 + std::min(w, h), a2 = a0 + std::max(w, h);
    if (a3 <= c) return 0.0;

    // chord length: rises 0 -> min(w,h) on [a0,a1], flat on [a1,a2],
    // falls to 0 on [a2,a3]
    auto piece = [&](double lo, double hi, double alpha,
                     double beta) {  // int (alpha + beta s) sqrt(s-c) ds
        lo = std::max(lo, c);
        if (hi <= lo) return 0.0;
        const double ul = lo - c, uh = hi - c;
        const double p32 = std::pow(uh, 1.5) - std::pow(ul, 1.5);
        const double p52 = std::pow(uh, 2.5) - std::pow(ul, 2.5);
        return (alpha + beta * c) * (2.0 / 3.0) * p32 + beta * 0.4 * p52;
    };
    double acc = 0.0;
    acc += piece(a0, a1, -a0, 1.0);                  // len = s - a0
    acc += piece(a1, a2, std::min(w, h), 0.0);       // len = min(w,h)
    acc += piece(a2, a3, a3, -1.0);                  // len = a3 - s
    return acc;
}

}  // namespace

CollisionOperator::CollisionOperator(std::shared_ptr<const EnergyGrid> grid,
                                     KernelParams params, int boundary_refine)
    : grid_(std::move(grid)), params_(params),
      boundary_refine_(std::max(1, std::abs(boundary_refine))),
      subdivide_all_(boundary_refine < 0) {
    if (!grid_) throw std::invalid_argument("CollisionOperator: null grid");
    const std::size_t n = grid_->size();
    cell_left_.resize(n);
    cell_right_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        cell_left_[j] = grid_->cell_left(j);
        cell_right_[j] = grid_->cell_right(j);
    }
}

double CollisionOperator::node_rhs(const LogLogInterp& f,
                                   const std::vector<double>& fv, double eps1,
                                   double f1) const {
    const auto& g = *grid_;
    const std::size_t n = g.size();
    const double emax = g.eps_max();
    const double slo = eps1;          // e3 + e4 >= e1
    const double shi = eps1 + emax;   // keep e2 = e3+e4-e1 inside the domain
    const double inv_sqrt_e1 = 1.0 / std::sqrt(eps1);
    const int m = boundary_refine_;

    // the integrand is symmetric in (e3, e4): sum the lower triangle in a
    // fixed ascending order and double the off-diagonal cells
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e3 = g.nodes[i];
        const double f3 = fv[i];
        const double li = g.cell_left(i), ri = g.cell_right(i);
        if (ri + g.cell_right(n - 1) <= slo) continue;
        if (li + g.cell_left(0) >= shi) break;

        // cells [jlo, jhi) can intersect the band for this row
        const auto& cr = cell_right_;
        const auto& cl = cell_left_;
        std::size_t jlo = static_cast<std::size_t>(
            std::upper_bound(cr.begin(), cr.end(), slo - ri) - cr.begin());
        std::size_t jhi = static_cast<std::size_t>(
            std::lower_bound(cl.begin(), cl.end(), shi - li) - cl.begin());
        if (jhi > i + 1) jhi = i + 1;

        std::size_t hint2 = 0;  // e2 is monotone along the row
        std::size_t hint3 = 0, hint4 = 0;
        for (std::size_t j = jlo; j < jhi; ++j) {
            const double pair_w = j == i ? 1.0 : 2.0;
            const double e4 = g.nodes[j];
            const double s = e3 + e4;
            const double lj = cl[j], rj = cr[j];
            const bool cut = subdivide_all_ ||
                             (li + lj < slo && slo < ri + rj) ||
                             (li + lj < shi && shi < ri + rj);
            if (!cut) {
                if (s < slo || s > shi) continue;
                const double e2 = std::max(s - eps1, 0.0);
                const double f2 = f.eval_hinted(e2, hint2);
                const double f4 = fv[j];
                double mn = e2 < eps1 ? e2 : eps1;
                const double me = e3 < e4 ? e3 : e4;
                if (me < mn) mn = me;
                const double W = std::sqrt(mn) * inv_sqrt_e1;
                const double p34 = f3 * f4, s34 = f3 + f4;
                acc += pair_w * g.weights[i] * g.weights[j] * W *
                       ((f1 + f2) * p34 - s34 * f1 * f2);
                continue;
            }
            // cell cut by a clip line: subdivide, same rule per sub-cell
            const double dx = (ri - li) / m, dy = (rj - lj) / m;
            const double sub_area = dx * dy;
            for (int a = 0; a < m; ++a) {
                const double xc = li + (a + 0.5) * dx;
                const double fx = f.eval_hinted(xc, hint3);
                for (int b = 0; b < m; ++b) {
                    const double yc = lj + (b + 0.5) * dy;
                    const double sc = xc + yc;
                    if (sc < slo || sc > shi) continue;
                    const double sx0 = li + a * dx, sx1 = li + (a + 1) * dx;
                    const double sy0 = lj + b * dy, sy1 = lj + (b + 1) * dy;
                    const double e2 = std::max(sc - eps1, 0.0);
                    const double f2 = f.eval_hinted(e2, hint2);
                    const double fy = f.eval_hinted(yc, hint4);
                    const double bracket =
                        (f1 + f2) * fx * fy - (fx + fy) * f1 * f2;
                    double mn = e2 < eps1 ? e2 : eps1;
                    const double mc = xc < yc ? xc : yc;
                    if (mc < mn) mn = mc;
                    if (mn == e2 && sx1 + sy1 <= shi) {
                        // W = sqrt(e2/e1) branch: integrate the sqrt factor
                        // exactly over the clipped sub-cell
                        const double sq =
                            sqrt_band_integral(sx0, sx1, sy0, sy1, slo);
                        acc += pair_w * sq * inv_sqrt_e1 * bracket;
                    } else {
                        const double frac =
                            band_fraction(sx0, sx1, sy0, sy1, slo, shi);
                        if (frac <= 0.0) continue;
                        const double W = std::sqrt(mn) * inv_sqrt_e1;
                        acc += pair_w * sub_area * frac * W * bracket;
                    }
                }
            }
        }
    }
    return params_.gamma * acc;
}

double CollisionOperator::rhs_at(const Spectrum& s, double eps1) const {
    if (!(eps1 > 0.0))
        throw std::domain_error("collision_rhs_at: eps1 must be > 0");
    const LogLogInterp f(s);
    std::size_t hint = 0;
    const double f1 = f.eval_hinted(eps1, hint);
    return node_rhs(f, s.values, eps1, f1);
}

std::vector<double> CollisionOperator::rhs(const Spectrum& s) const {
    const std::size_t n = grid_->size();
    std::vector<double> out(n, 0.0);
    const LogLogInterp f(s);
    parallel_for(n, [&](std::size_t k) {
        out[k] = node_rhs(f, s.values, grid_->nodes[k], s.values[k]);
    });
    return out;
}

double collision_rhs_at(const Spectrum& s, double eps1, KernelParams params) {
    return CollisionOperator(s.grid, params).rhs_at(s, eps1);
}

std::vector<double> collision_rhs(const Spectrum& s, KernelParams params) {
    return CollisionOperator(s.grid, params).rhs(s);
}

Spectrum rayleigh_jeans(std::shared_ptr<const EnergyGrid> grid, double T,
                        double mu) {
    if (!(T > 0.0) || mu < 0.0)
        throw std::invalid_argument("rayleigh_jeans: need T > 0, mu >= 0");
    std::vector<double> v(grid->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = T / (grid->nodes[i] + mu);
    return make_spectrum(std::move(grid), std::move(v));
}

}  // namespace wtkin
