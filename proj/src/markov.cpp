#include "wtkin/markov.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "wtkin/errors.hpp"
#include "wtkin/parallel.hpp"
#include "wtkin/rng.hpp"

namespace wtkin {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
}  // namespace

double memory_weight(double tau, double omega, double eps_coupling) {
    if (!(tau > 0.0) || !(eps_coupling > 0.0))
        throw std::domain_error("memory_weight: need tau > 0, eps > 0");
    const double e2 = eps_coupling * eps_coupling;
    if (omega == 0.0) return tau / e2;
    return (2.0 / omega) * std::sin(tau * omega / (2.0 * e2));
}

double smeared_delta_apply(std::span<const double> omega_grid,
                           std::span<const double> psi, double tau,
                           double eps_coupling) {
    if (omega_grid.size() != psi.size() || omega_grid.size() < 2)
        throw std::invalid_argument("smeared_delta_apply: bad grids");
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < omega_grid.size(); ++i) {
        const double h = omega_grid[i + 1] - omega_grid[i];
        const double a = psi[i] * memory_weight(tau, omega_grid[i], eps_coupling);
        const double b =
            psi[i + 1] * memory_weight(tau, omega_grid[i + 1], eps_coupling);
        acc += 0.5 * h * (a + b);
    }
    return acc;
}

namespace {

struct BlockMoments {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t accepted = 0;
};

// Deterministic blockwise MC driver: samples are indexed, blocks are summed
// sequentially and combined pairwise in fixed order, so the estimate is
// identical for any worker count.
McEstimate reduce_blocks(std::size_t n_samples,
                         const std::function<BlockMoments(std::size_t,
                                                          std::size_t)>& run) {
    constexpr std::size_t kBlock = 4096;
    const std::size_t n_blocks = (n_samples + kBlock - 1) / kBlock;
    std::vector<BlockMoments> blocks(n_blocks);
    parallel_for(n_blocks, [&](std::size_t b) {
        const std::size_t lo = b * kBlock;
        const std::size_t hi = std::min(n_samples, lo + kBlock);
        blocks[b] = run(lo, hi);
    });
    std::vector<double> sums(n_blocks), sqs(n_blocks);
    std::size_t accepted = 0;
    for (std::size_t b = 0; b < n_blocks; ++b) {
        sums[b] = blocks[b].sum;
        sqs[b] = blocks[b].sum_sq;
        accepted += blocks[b].accepted;
    }
    const double total = pairwise_sum(sums);
    const double total_sq = pairwise_sum(sqs);
    const double n = static_cast<double>(n_samples);

    McEstimate est;
    est.n_samples = n_samples;
    est.n_accepted = accepted;
    est.acceptance = n > 0.0 ? static_cast<double>(accepted) / n : 0.0;
    est.value = total / n;
    const double var = std::max(0.0, total_sq / n - est.value * est.value);
    est.stderr_ = std::sqrt(var / n);
    return est;
}

Vec3 gaussian_vec(const CounterRng& rng, std::size_t sample,
                  std::uint64_t pair0, double scale) {
    return Vec3{scale * rng.normal(sample, pair0),
                scale * rng.normal(sample, pair0, true),
                scale * rng.normal(sample, pair0 + 1)};
}

double gaussian_pdf3(const Vec3& v, double scale) {
    const double s2 = scale * scale;
    return std::exp(-v.norm2() / (2.0 * s2)) /
           std::pow(kTwoPi * s2, 1.5);
}

}  // namespace

McEstimate markovian_rhs_mc(const std::function<double(double)>& f_of_eps,
                            double k1mod, const KernelParams& params,
                            const McConfig& cfg) {
    if (!(k1mod > 0.0))
        throw std::domain_error("markovian_rhs_mc: need |k1| > 0");
    const CounterRng rng{cfg.seed};
    const double prefactor = params.gamma / (4.0 * kPi * kPi);
    const Vec3 k1{0.0, 0.0, k1mod};
    const double n1 = f_of_eps(0.5 * k1mod * k1mod);

    auto block = [&](std::size_t lo, std::size_t hi) {
        BlockMoments m;
        for (std::size_t s = lo; s < hi; ++s) {
            const Vec3 k2 = gaussian_vec(rng, s, 0, cfg.proposal_scale);
            const double q = gaussian_pdf3(k2, cfg.proposal_scale);
            const Vec3 P = k1 + k2;
            const double twoE = k1.norm2() + k2.norm2();
            const double R2 = 0.5 * twoE - 0.25 * P.norm2();
            double val = 0.0;
            if (R2 > 0.0) {
                const double R = std::sqrt(R2);
                // uniform direction on the resonant sphere
                const double u = 2.0 * rng.uniform(s, 4) - 1.0;
                const double ph = kTwoPi * rng.uniform(s, 5);
                const double st = std::sqrt(std::max(0.0, 1.0 - u * u));
                const Vec3 nhat{st * std::cos(ph), st * std::sin(ph), u};
                const Vec3 xi1 = P * 0.5 + R * nhat;
                const Vec3 xi2 = P * 0.5 - R * nhat;
                const double n2 = f_of_eps(0.5 * k2.norm2());
                const double m1 = f_of_eps(0.5 * xi1.norm2());
                const double m2 = f_of_eps(0.5 * xi2.norm2());
                const double bracket = (n1 + n2) * m1 * m2 - n1 * n2 * (m1 + m2);
                // sphere area 4 pi R^2 times Jacobian 1/(4R) = pi R
                val = prefactor * kPi * R * bracket / q;
                m.accepted += 1;
            }
            m.sum += val;
            m.sum_sq += val * val;
        }
        return m;
    };
    McEstimate est = reduce_blocks(cfg.n_samples, block);
    if (est.acceptance < 0.1)
        throw statistics_error("markovian_rhs_mc: acceptance below 10%");
    return est;
}

McEstimate nonmarkovian_rhs_mc(const HistorySpectra& h, double k1mod, double t,
                               double eps_coupling, const KernelParams& params,
                               const McConfig& cfg) {
    if (!(k1mod > 0.0))
        throw std::domain_error("nonmarkovian_rhs_mc: need |k1| > 0");
    if (t < h.t_min() || t > h.t_max())
        throw std::domain_error("nonmarkovian_rhs_mc: t outside history");
    const CounterRng rng{cfg.seed};
    // consistent with the Markovian normalization: the oscillatory kernel
    // integrates to 2 pi delta(Omega), so gamma/(4 pi^2) there corresponds
    // to gamma/(8 pi^3) eps^2 here (microscopic-time rate)
    const double prefactor = params.gamma / (8.0 * kPi * kPi * kPi) *
                             eps_coupling * eps_coupling;
    const Vec3 k1{0.0, 0.0, k1mod};

    auto block = [&](std::size_t lo, std::size_t hi) {
        BlockMoments m;
        for (std::size_t s = lo; s < hi; ++s) {
            const Vec3 k2 = gaussian_vec(rng, s, 0, cfg.proposal_scale);
            const Vec3 P = k1 + k2;
            // xi1 proposed around the resonant sphere center
            const Vec3 g = gaussian_vec(rng, s, 2, cfg.proposal_scale);
            const Vec3 xi1 = P * 0.5 + g;
            const Vec3 xi2 = P - xi1;
            const double q = gaussian_pdf3(k2, cfg.proposal_scale) *
                             gaussian_pdf3(g, cfg.proposal_scale);
            FourWaveArgs args{k1, k2, xi1, xi2};
            const double omega = args.omega();

            // inner memory integral: trapezoid with phase-bounded steps
            std::size_t steps = 16;
            const double span = std::abs(omega) * 0.5 * t;
            while (steps < cfg.time_quadrature_steps &&
                   span / double(steps) > 0.1)
                steps *= 2;
            double inner = 0.0;
            double b_prev = bracket_B(h, args, 0.0) * std::cos(0.5 * omega * t);
            for (std::size_t j = 1; j <= steps; ++j) {
                const double sj = t * (double(j) / double(steps));
                const double bj = bracket_B(h, args, sj) *
                                  std::cos(0.5 * omega * (t - sj));
                inner += 0.5 * (b_prev + bj);
                b_prev = bj;
            }
            inner *= t / double(steps);

            // the kinetic bracket is minus the memory bracket
            const double val = -prefactor * inner / q;
            m.accepted += 1;
            m.sum += val;
            m.sum_sq += val * val;
        }
        return m;
    };
    McEstimate est = reduce_blocks(cfg.n_samples, block);
    if (est.acceptance < 0.1)
        throw statistics_error("nonmarkovian_rhs_mc: acceptance below 10%");
    return est;
}

}  // namespace wtkin
