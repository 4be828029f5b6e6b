#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "wtkin/grid.hpp"
#include "wtkin/vec3.hpp"
#include "wtkin/wick.hpp"

namespace wtkin {

// Four wavevector arguments of the second cumulant.  The momentum Dirac
// factor is carried symbolically (see TaggedComplex), so the arguments do
// not have to satisfy k1+k2 = xi1+xi2.
struct FourWaveArgs {
    Vec3 k1, k2, xi1, xi2;

    Vec3 momentum_mismatch() const { return k1 + k2 - xi1 - xi2; }
    // Omega = |k1|^2 + |k2|^2 - |xi1|^2 - |xi2|^2
    double omega() const {
        return k1.norm2() + k2.norm2() - xi1.norm2() - xi2.norm2();
    }
};

// Time-stamped isotropic spectra n(k, t_j), stored in the energy variable
// eps = |k|^2/2; linear interpolation in time, power-law in energy.
class HistorySpectra {
  public:
    HistorySpectra(std::vector<double> times, std::vector<Spectrum> spectra);

    double t_min() const { return times_.front(); }
    double t_max() const { return times_.back(); }
    const std::vector<double>& times() const { return times_; }

    // n at |k| = kmod and time s (throws outside the covered interval)
    double eval_k(double kmod, double s) const;
    double eval_eps(double eps, double s) const;

  private:
    std::vector<double> times_;
    std::vector<Spectrum> spectra_;
    std::vector<LogLogInterp> interps_;
};

// cubic bracket of the memory integrand:
//   n1 n2 (n(xi2)+n(xi1)) - (n1+n2) n(xi1) n(xi2)   at time s
double bracket_B(const HistorySpectra& h, const FourWaveArgs& args, double s);

// Delta(args; t) = int_0^t exp(i (t-s) Omega / 2) B(s) ds.
// Piecewise-linear Filon quadrature: the oscillatory factor is integrated
// exactly on each step, so frozen and linear brackets match their closed
// forms to roundoff; the step count is a power of two chosen so the phase
// advance per step stays below 0.1 rad.
std::complex<double> delta_eval(const HistorySpectra& h,
                                const FourWaveArgs& args, double t);

// A numeric prefactor together with the symbolic Dirac constraint it
// multiplies; the constraint is metadata, never a number.
struct TaggedComplex {
    std::complex<double> value;
    Vec3 delta_argument;  // the Dirac factor is delta(delta_argument)
};

// G22 = (2 (2pi)^{9/2} eps / i) delta(k1+k2-xi1-xi2) Delta(args; t)
TaggedComplex g22_prefactor(const HistorySpectra& h, const FourWaveArgs& args,
                            double t, double eps_coupling);

// crossover time scale (-tau) = eps^{2/(1+2beta)}
double breakdown_time(double beta, double eps_coupling);

struct BreakdownScales {
    double g22_scale = 0.0;     // eps^{-1} (-tau)^{-9 beta - 1/2}
    double f11sq_scale = 0.0;   // (-tau)^{-10 beta - 1}
};

BreakdownScales breakdown_scales(double beta, double eps_coupling,
                                 double minus_tau);

// the three magnitudes balanced by the rescaled hierarchy:
//   1/(-tau),  (-tau)^{2 beta} / eps^2,  (-tau)^{beta - 1/2} / eps
std::array<double, 3> hierarchy_scales(double beta, double eps_coupling,
                                       double minus_tau);

struct RescaledVariables {
    double sigma_bar = 0.0;        // tau / tau_star
    double p = 0.0;                // k / eps^{2beta/(1+2beta)}
    double h_normalization = 0.0;  // multiplier taking F_hat_{L,L} to H_hat_{L,L}
};

RescaledVariables rescale_variables(double beta, double eps_coupling,
                                    double tau, double k, int order_L);

// Matching value of the pair correlation in rescaled variables:
// smooth part (-sigma)^{-sigma_exponent} Phi(p / (-sigma)^beta) with the
// Dirac factor as metadata.  sigma_exponent defaults to 2 beta + 1.
TaggedComplex matching_h11(double p, double sigma_bar,
                           const std::function<double(double)>& profile,
                           double beta, double sigma_exponent = -1.0);

// Factorized matching of the order-L correlation: permutation sum of
// pair-correlation products.  The net constant in front of the product is
// ambiguous between conventions, so it is exposed; the default is the
// literal (2 pi)^{3L/2} on top of the (2 pi)^{3/2} carried per factor.
DeltaProductSum matching_hLL(std::size_t L, double sigma_bar,
                             const std::function<double(double)>& profile,
                             double beta, double prefactor = -1.0);

struct BreakdownReport {
    double eps_coupling = 0.0;
    double beta = 0.0;
    double tau_star = 0.0;
    BreakdownScales at_tau_star;
    std::array<double, 3> hierarchy_at_tau_star{};
    double scale_equality_rel_gap = 0.0;      // |g22 - f11sq| / f11sq at tau*
    double hierarchy_max_rel_gap = 0.0;       // max pairwise gap at tau*
};

BreakdownReport make_breakdown_report(double beta, double eps_coupling);

}  // namespace wtkin
