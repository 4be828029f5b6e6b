#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace wtkin {

// Logarithmic energy axis with trapezoidal weights in epsilon (not in
// log-epsilon).  The blow-up profile spans several decades, so all solvers
// share this discretization.
struct EnergyGrid {
    std::vector<double> nodes;      // strictly increasing, all > 0
    std::vector<double> weights;    // trapezoid in epsilon, all > 0
    std::vector<double> log_nodes;  // cached log(nodes)
    std::string kind = "logarithmic";

    std::size_t size() const { return nodes.size(); }
    double eps_min() const { return nodes.front(); }
    double eps_max() const { return nodes.back(); }

    // cell of node i: [cell_left(i), cell_right(i)], width == weights[i]
    double cell_left(std::size_t i) const;
    double cell_right(std::size_t i) const;
};

EnergyGrid make_log_grid(double eps_min, double eps_max, std::size_t n);

// Occupation density f(eps) sampled on a shared grid.
struct Spectrum {
    std::shared_ptr<const EnergyGrid> grid;
    std::vector<double> values;  // finite, >= 0 outside rejected steps

    std::size_t size() const { return values.size(); }
};

Spectrum make_spectrum(std::shared_ptr<const EnergyGrid> grid,
                       std::vector<double> values);

// Power-law interpolation: linear in (log eps, log f), exact at nodes,
// constant below eps_min, zero above eps_max.  Falls back to linear in
// eps whenever a bracketing value is zero.
double interp_loglog(const Spectrum& s, double eps);

// quadrature of f(eps) * eps^p over the grid
double moment(const Spectrum& s, double p);

// Prepared interpolant for dense off-grid evaluation.  Same boundary
// policies as interp_loglog; in the interior it uses a 4-point Lagrange
// stencil in (log eps, log f).  Cubic order keeps shifted equilibria
// T/(eps+mu) accurate to ~1e-8 where 2-point interpolation is only ~1e-4,
// which the collision operator needs; pure power laws are still exact.
class LogLogInterp {
  public:
    LogLogInterp() = default;
    explicit LogLogInterp(const Spectrum& s);

    double operator()(double eps) const;

    // hint-based evaluation for monotone query sequences (hot path, inline)
    double eval_hinted(double eps, std::size_t& cell_hint) const;

  private:
    double eval_general(double eps, std::size_t i) const;

    const EnergyGrid* grid_ = nullptr;
    std::vector<double> values_;
    std::vector<double> log_values_;
    std::vector<unsigned char> positive_;
    bool uniform_log_ = false;  // enables the division-free cubic basis
    double inv_h_ = 0.0;
};

inline double LogLogInterp::eval_hinted(double eps, std::size_t& hint) const {
    const auto& nodes = grid_->nodes;
    const std::size_t n = nodes.size();
    if (eps < nodes[0] || eps > nodes[n - 1]) {
        if (eps > nodes[n - 1]) return 0.0;
        if (eps >= 0.0) return values_[0];
        throw std::domain_error("LogLogInterp: eps must be >= 0");
    }
    std::size_t i = hint;
    if (i > n - 2) i = n - 2;
    while (i > 0 && eps < nodes[i]) --i;
    while (i + 2 < n && eps >= nodes[i + 1]) ++i;
    hint = i;

    if (eps == nodes[i]) return values_[i];
    if (eps == nodes[i + 1]) return values_[i + 1];

    std::size_t s0 = (i == 0) ? 0 : i - 1;
    if (s0 + 3 > n - 1) s0 = n - 4;
    if (uniform_log_ && positive_[s0] && positive_[s0 + 1] &&
        positive_[s0 + 2] && positive_[s0 + 3]) {
        const double x = std::log(eps);
        const double* ys = &log_values_[s0];
        // stencil abscissae at t = -1, 0, 1, 2 around s0+1
        const double t = (x - grid_->log_nodes[s0 + 1]) * inv_h_;
        const double tm = t - 1.0, tp = t + 1.0, t2 = t - 2.0;
        const double acc = (-t * tm * t2 / 6.0) * ys[0] +
                           (0.5 * tp * tm * t2) * ys[1] +
                           (-0.5 * tp * t * t2) * ys[2] +
                           (tp * t * tm / 6.0) * ys[3];
        return std::exp(acc);
    }
    return eval_general(eps, i);
}

void write_spectrum_csv(const std::string& path, const Spectrum& s,
                        const std::string& x_name = "epsilon",
                        const std::string& y_name = "f");
Spectrum read_spectrum_csv(const std::string& path);

}  // namespace wtkin
