#include "wtkin/cumulant.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace wtkin {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

HistorySpectra::HistorySpectra(std::vector<double> times,
                               std::vector<Spectrum> spectra)
    : times_(std::move(times)), spectra_(std::move(spectra)) {
    if (times_.size() < 2 || times_.size() != spectra_.size())
        throw std::invalid_argument("HistorySpectra: need >= 2 aligned samples");
    for (std::size_t i = 1; i < times_.size(); ++i)
        if (!(times_[i] > times_[i - 1]))
            throw std::invalid_argument("HistorySpectra: times must increase");
    interps_.reserve(spectra_.size());
    for (const auto& s : spectra_) interps_.emplace_back(s);
}

double HistorySpectra::eval_eps(double eps, double s) const {
    if (s < times_.front() || s > times_.back())
        throw std::domain_error("HistorySpectra: time outside history");
    auto it = std::upper_bound(times_.begin(), times_.end(), s);
    std::size_t j = static_cast<std::size_t>(it - times_.begin());
    if (j == 0) j = 1;
    if (j >= times_.size()) j = times_.size() - 1;
    const double t0 = times_[j - 1], t1 = times_[j];
    const double w = (s - t0) / (t1 - t0);
    const double a = interps_[j - 1](eps);
    const double b = interps_[j](eps);
    if (a == b) return a;  // frozen histories stay bitwise frozen
    return (1.0 - w) * a + w * b;
}

double HistorySpectra::eval_k(double kmod, double s) const {
    return eval_eps(0.5 * kmod * kmod, s);
}

double bracket_B(const HistorySpectra& h, const FourWaveArgs& a, double s) {
    const double n1 = h.eval_k(a.k1.norm(), s);
    const double n2 = h.eval_k(a.k2.norm(), s);
    const double m1 = h.eval_k(a.xi1.norm(), s);
    const double m2 = h.eval_k(a.xi2.norm(), s);
    return n1 * n2 * (m2 + m1) - (n1 + n2) * m1 * m2;
}

namespace {

// I0(th) = int_0^1 e^{-i th v} (1-v) dv,  I1(th) = int_0^1 e^{-i th v} v dv
// (closed forms with a series switch for small |th|)
void filon_linear_weights(double th, std::complex<double>& w0,
                          std::complex<double>& w1) {
    if (std::abs(th) < 1e-4) {
        // Taylor: total = sum z^m/(m!(m+1)), I1 = sum z^m/(m!(m+2)), z = -i th
        const std::complex<double> z(0.0, -th);
        std::complex<double> term(1.0, 0.0), total(0.0, 0.0), i1(0.0, 0.0);
        for (int m = 0; m < 8; ++m) {
            total += term / double(m + 1);
            i1 += term / double(m + 2);
            term *= z / double(m + 1);
        }
        w1 = i1;
        w0 = total - i1;
        return;
    }
    const std::complex<double> i(0.0, 1.0);
    const std::complex<double> e = std::exp(-i * th);
    const std::complex<double> ith = i * th;
    const std::complex<double> total = (1.0 - e) / ith;
    const std::complex<double> i1 = (e * (1.0 + ith) - 1.0) / (th * th);
    w1 = i1;
    w0 = total - i1;
}

}  // namespace

std::complex<double> delta_eval(const HistorySpectra& h,
                                const FourWaveArgs& args, double t) {
    if (t < h.t_min() || t > h.t_max())
        throw std::domain_error("delta_eval: t outside history");
    const double omega = args.omega();
    if (t == 0.0) return {0.0, 0.0};

    // power-of-two step count with phase advance <= 0.1 rad per step
    const double phase_span = std::abs(omega) * 0.5 * t;
    std::size_t steps = 16;
    while (steps < (1u << 22) && phase_span / double(steps) > 0.1) steps *= 2;

    const double hstep = t / double(steps);
    const double th = 0.5 * omega * hstep;
    std::complex<double> w0, w1;
    filon_linear_weights(th, w0, w1);

    // e^{i (t - s) Omega/2} on [s_j, s_j+h]:
    //   e^{i (t - s_j) Omega/2} * e^{-i Omega u/2},  u in [0, h]
    const std::complex<double> i(0.0, 1.0);
    std::vector<double> bs(steps + 1);
    for (std::size_t j = 0; j <= steps; ++j)
        bs[j] = bracket_B(h, args, t * (double(j) / double(steps)));

    // sum h * e^{i(t-s_j)Omega/2} (w0 B_j + w1 B_{j+1}); accumulate the
    // per-step phase by index to avoid drift
    std::vector<std::complex<double>> terms(steps);
    for (std::size_t j = 0; j < steps; ++j) {
        const double sj = t * (double(j) / double(steps));
        const std::complex<double> ph = std::exp(i * (0.5 * omega * (t - sj)));
        terms[j] = ph * (w0 * bs[j] + w1 * bs[j + 1]);
    }
    // pairwise sum for reproducibility and accuracy
    // strict pairwise doubling: over a power-of-two count this sums equal
    // terms exactly, so the Omega = 0 frozen case returns B * t bitwise
    std::function<std::complex<double>(std::size_t, std::size_t)> psum =
        [&](std::size_t lo, std::size_t n) -> std::complex<double> {
        if (n == 1) return terms[lo];
        if (n == 2) return terms[lo] + terms[lo + 1];
        return psum(lo, n / 2) + psum(lo + n / 2, n - n / 2);
    };
    return hstep * psum(0, steps);
}

TaggedComplex g22_prefactor(const HistorySpectra& h, const FourWaveArgs& args,
                            double t, double eps_coupling) {
    const std::complex<double> i(0.0, 1.0);
    const double c = 2.0 * std::pow(kTwoPi, 4.5) * eps_coupling;
    TaggedComplex out;
    out.delta_argument = args.momentum_mismatch();
    out.value = (c / i) * delta_eval(h, args, t);
    return out;
}

double breakdown_time(double beta, double eps_coupling) {
    if (!(beta > 0.0) || !(eps_coupling > 0.0) || eps_coupling > 1.0)
        throw std::domain_error("breakdown_time: need beta > 0, 0 < eps <= 1");
    return std::pow(eps_coupling, 2.0 / (1.0 + 2.0 * beta));
}

BreakdownScales breakdown_scales(double beta, double eps_coupling,
                                 double minus_tau) {
    BreakdownScales s;
    s.g22_scale =
        std::pow(minus_tau, -9.0 * beta - 0.5) / eps_coupling;
    s.f11sq_scale = std::pow(minus_tau, -10.0 * beta - 1.0);
    return s;
}

std::array<double, 3> hierarchy_scales(double beta, double eps_coupling,
                                       double minus_tau) {
    return {1.0 / minus_tau,
            std::pow(minus_tau, 2.0 * beta) / (eps_coupling * eps_coupling),
            std::pow(minus_tau, beta - 0.5) / eps_coupling};
}

RescaledVariables rescale_variables(double beta, double eps_coupling,
                                    double tau, double k, int order_L) {
    if (!(eps_coupling > 0.0) || eps_coupling > 1.0 || order_L < 1)
        throw std::invalid_argument("rescale_variables: bad parameters");
    RescaledVariables r;
    const double tau_scale = breakdown_time(beta, eps_coupling);
    const double k_scale =
        std::pow(eps_coupling, 2.0 * beta / (1.0 + 2.0 * beta));
    r.sigma_bar = tau / tau_scale;
    r.p = k / k_scale;
    r.h_normalization = std::pow(
        eps_coupling,
        (10.0 * beta + 1.0) * double(order_L) / (1.0 + 2.0 * beta));
    return r;
}

TaggedComplex matching_h11(double p, double sigma_bar,
                           const std::function<double(double)>& profile,
                           double beta, double sigma_exponent) {
    if (!(sigma_bar < 0.0))
        throw std::domain_error("matching_h11: need sigma_bar < 0");
    if (sigma_exponent < 0.0) sigma_exponent = 2.0 * beta + 1.0;
    const double ms = -sigma_bar;
    TaggedComplex out;
    out.delta_argument = Vec3{p, 0.0, 0.0};  // delta(p1 - zeta1) placeholder
    out.value = std::pow(ms, -sigma_exponent) *
                profile(p / std::pow(ms, beta));
    return out;
}

DeltaProductSum matching_hLL(std::size_t L, double sigma_bar,
                             const std::function<double(double)>& profile,
                             double beta, double prefactor) {
    if (L == 0 || L > 8)
        throw std::invalid_argument("matching_hLL: need 1 <= L <= 8");
    if (!(sigma_bar < 0.0))
        throw std::domain_error("matching_hLL: need sigma_bar < 0");
    if (prefactor < 0.0) prefactor = std::pow(kTwoPi, 1.5 * double(L));

    DeltaProductSum d;
    d.order = L;
    // every factor carries its own (2 pi)^{3/2} plus the global prefactor
    d.coefficient = prefactor * std::pow(kTwoPi, 1.5 * double(L));
    const double se = 2.0 * beta + 1.0;
    const double ms = -sigma_bar;
    d.amplitude = [profile, beta, se, ms](const Vec3& pvec) {
        return std::pow(ms, -se) * profile(pvec.norm() / std::pow(ms, beta));
    };
    std::vector<std::size_t> perm(L);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        d.permutations.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return d;
}

BreakdownReport make_breakdown_report(double beta, double eps_coupling) {
    BreakdownReport r;
    r.beta = beta;
    r.eps_coupling = eps_coupling;
    r.tau_star = breakdown_time(beta, eps_coupling);
    r.at_tau_star = breakdown_scales(beta, eps_coupling, r.tau_star);
    r.hierarchy_at_tau_star = hierarchy_scales(beta, eps_coupling, r.tau_star);
    r.scale_equality_rel_gap =
        std::abs(r.at_tau_star.g22_scale - r.at_tau_star.f11sq_scale) /
        r.at_tau_star.f11sq_scale;
    double mx = 0.0;
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b)
            mx = std::max(mx, std::abs(r.hierarchy_at_tau_star[a] -
                                       r.hierarchy_at_tau_star[b]) /
                                  r.hierarchy_at_tau_star[b]);
    r.hierarchy_max_rel_gap = mx;
    return r;
}

}  // namespace wtkin
