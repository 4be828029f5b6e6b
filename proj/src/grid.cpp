#include "wtkin/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "wtkin/errors.hpp"

namespace wtkin {

double EnergyGrid::cell_left(std::size_t i) const {
    return i == 0 ? nodes[0] : 0.5 * (nodes[i - 1] + nodes[i]);
}

double EnergyGrid::cell_right(std::size_t i) const {
    return i + 1 == nodes.size() ? nodes[i] : 0.5 * (nodes[i] + nodes[i + 1]);
}

EnergyGrid make_log_grid(double eps_min, double eps_max, std::size_t n) {
    if (!(eps_min > 0.0) || !(eps_max > eps_min))
        throw std::invalid_argument("make_log_grid: need 0 < eps_min < eps_max");
    if (n < 3) throw std::invalid_argument("make_log_grid: need n >= 3");

    EnergyGrid g;
    g.nodes.resize(n);
    g.log_nodes.resize(n);
    const double l0 = std::log(eps_min), l1 = std::log(eps_max);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = l0 + (l1 - l0) * static_cast<double>(i) /
                                  static_cast<double>(n - 1);
        g.nodes[i] = std::exp(u);
        g.log_nodes[i] = u;
    }
    g.nodes.front() = eps_min;  // pin endpoints exactly
    g.nodes.back() = eps_max;
    g.log_nodes.front() = l0;
    g.log_nodes.back() = l1;

    g.weights.resize(n);
    g.weights.front() = 0.5 * (g.nodes[1] - g.nodes[0]);
    g.weights.back() = 0.5 * (g.nodes[n - 1] - g.nodes[n - 2]);
    for (std::size_t i = 1; i + 1 < n; ++i)
        g.weights[i] = 0.5 * (g.nodes[i + 1] - g.nodes[i - 1]);
    return g;
}

Spectrum make_spectrum(std::shared_ptr<const EnergyGrid> grid,
                       std::vector<double> values) {
    if (!grid) throw std::invalid_argument("make_spectrum: null grid");
    if (values.size() != grid->size())
        throw std::invalid_argument("make_spectrum: size mismatch");
    Spectrum s;
    s.grid = std::move(grid);
    s.values = std::move(values);
    return s;
}

namespace {

// index of the cell [nodes[i], nodes[i+1]] containing eps
std::size_t locate(const std::vector<double>& nodes, double eps) {
    auto it = std::upper_bound(nodes.begin(), nodes.end(), eps);
    std::size_t i = static_cast<std::size_t>(it - nodes.begin());
    if (i == 0) return 0;
    if (i >= nodes.size()) return nodes.size() - 2;
    return i - 1;
}

}  // namespace

double interp_loglog(const Spectrum& s, double eps) {
    if (!(eps > 0.0)) throw std::domain_error("interp_loglog: eps must be > 0");
    const auto& g = *s.grid;
    if (eps < g.eps_min()) return s.values.front();
    if (eps > g.eps_max()) return 0.0;

    const std::size_t i = locate(g.nodes, eps);
    if (eps == g.nodes[i]) return s.values[i];
    if (eps == g.nodes[i + 1]) return s.values[i + 1];

    const double fa = s.values[i], fb = s.values[i + 1];
    if (fa > 0.0 && fb > 0.0) {
        const double t =
            (std::log(eps) - g.log_nodes[i]) / (g.log_nodes[i + 1] - g.log_nodes[i]);
        return std::exp((1.0 - t) * std::log(fa) + t * std::log(fb));
    }
    // linear in eps when a bracketing value vanishes
    const double t = (eps - g.nodes[i]) / (g.nodes[i + 1] - g.nodes[i]);
    return (1.0 - t) * fa + t * fb;
}

double moment(const Spectrum& s, double p) {
    const auto& g = *s.grid;
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        acc += g.weights[i] * s.values[i] * std::pow(g.nodes[i], p);
    return acc;
}

LogLogInterp::LogLogInterp(const Spectrum& s)
    : grid_(s.grid.get()), values_(s.values) {
    const std::size_t n = values_.size();
    log_values_.resize(n);
    positive_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        positive_[i] = values_[i] > 0.0 ? 1 : 0;
        log_values_[i] = positive_[i] ? std::log(values_[i]) : 0.0;
    }
    if (n >= 4) {
        const double h =
            (grid_->log_nodes.back() - grid_->log_nodes.front()) /
            static_cast<double>(n - 1);
        double dev = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i)
            dev = std::max(dev, std::abs(grid_->log_nodes[i + 1] -
                                         grid_->log_nodes[i] - h));
        if (dev < 1e-12 * h) {
            uniform_log_ = true;
            inv_h_ = 1.0 / h;
        }
    }
}

// slow path: non-uniform stencils and zero-value fallbacks
double LogLogInterp::eval_general(double eps, std::size_t i) const {
    const auto& nodes = grid_->nodes;
    const std::size_t n = nodes.size();
    std::size_t s0 = (i == 0) ? 0 : i - 1;
    if (n >= 4 && s0 + 3 > n - 1) s0 = n - 4;
    if (n >= 4 && positive_[s0] && positive_[s0 + 1] && positive_[s0 + 2] &&
        positive_[s0 + 3]) {
        const double x = std::log(eps);
        const double* ys = &log_values_[s0];
        const double* xs = &grid_->log_nodes[s0];
        double acc = 0.0;
        for (int m = 0; m < 4; ++m) {
            double lm = 1.0;
            for (int q = 0; q < 4; ++q)
                if (q != m) lm *= (x - xs[q]) / (xs[m] - xs[q]);
            acc += lm * ys[m];
        }
        return std::exp(acc);
    }
    if (positive_[i] && positive_[i + 1]) {
        const double t = (std::log(eps) - grid_->log_nodes[i]) /
                         (grid_->log_nodes[i + 1] - grid_->log_nodes[i]);
        return std::exp((1.0 - t) * log_values_[i] + t * log_values_[i + 1]);
    }
    const double t = (eps - nodes[i]) / (nodes[i + 1] - nodes[i]);
    return (1.0 - t) * values_[i] + t * values_[i + 1];
}

double LogLogInterp::operator()(double eps) const {
    std::size_t hint = 0;
    return eval_hinted(eps, hint);
}

void write_spectrum_csv(const std::string& path, const Spectrum& s,
                        const std::string& x_name, const std::string& y_name) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open for writing: " + path);
    std::fprintf(fp, "%s,%s\n", x_name.c_str(), y_name.c_str());
    for (std::size_t i = 0; i < s.size(); ++i)
        std::fprintf(fp, "%.17g,%.17g\n", s.grid->nodes[i], s.values[i]);
    std::fclose(fp);
}

Spectrum read_spectrum_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
    std::vector<double> xs, ys;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string a, b;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b))
            throw std::runtime_error("bad csv row in " + path);
        xs.push_back(std::stod(a));
        ys.push_back(std::stod(b));
    }
    EnergyGrid g;
    g.nodes = xs;
    g.log_nodes.resize(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) g.log_nodes[i] = std::log(xs[i]);
    g.weights.assign(xs.size(), 0.0);
    if (xs.size() >= 2) {
        g.weights.front() = 0.5 * (xs[1] - xs[0]);
        g.weights.back() = 0.5 * (xs[xs.size() - 1] - xs[xs.size() - 2]);
        for (std::size_t i = 1; i + 1 < xs.size(); ++i)
            g.weights[i] = 0.5 * (xs[i + 1] - xs[i - 1]);
    }
    return make_spectrum(std::make_shared<EnergyGrid>(std::move(g)), std::move(ys));
}

}  // namespace wtkin
