#pragma once

#include <vector>

#include "wtkin/collision.hpp"
#include "wtkin/evolve.hpp"
#include "wtkin/grid.hpp"

namespace wtkin {

// Blow-up ansatz  f(eps, t) = sqrt(2 beta) (T*-t)^{-alpha} phi(omega),
// omega = eps / (T*-t)^{2 beta}, with the exponent relations
//   alpha - 2 beta = 1/2      and      nu = alpha / (2 beta)  > 1.
// beta is the wavevector exponent; the published tables list 2*beta.
struct SelfSimExponents {
    double alpha = 0.0;
    double beta = 0.0;  // wavevector exponent (table value / 2)
    double nu = 0.0;

    double two_beta() const { return 2.0 * beta; }
};

SelfSimExponents exponents_from_nu(double nu);

// phi(omega_i) = f(eps_i, t) (T*-t)^alpha / sqrt(2 beta) on
// omega_i = eps_i / (T*-t)^{2 beta}
Spectrum rescale_snapshot(const Spectrum& s, double t, double t_star,
                          const SelfSimExponents& exps);

struct TailFit {
    double nu = 0.0;        // -slope of log phi vs log omega
    double amplitude = 0.0; // exp(intercept)
    std::size_t points = 0;
};

TailFit fit_tail_exponent(const Spectrum& profile, double omega_lo,
                          double omega_hi);

// residual_i = nu phi_i + omega_i (d phi/d omega)_i - C[phi](omega_i)
// The derivative is the logarithmic one (centered differences of log phi on
// the log grid), which annihilates pure power tails exactly; it falls back
// to plain differences where phi is not positive.
std::vector<double> selfsim_residual(const Spectrum& phi, double nu,
                                     KernelParams params = {});

struct CollapsePoint {
    double t = 0.0;          // later snapshot time of the pair
    double error = 0.0;      // relative L2 mismatch on the window
};

struct ProfileFit {
    double t_star = 0.0;
    double nu_fit = 0.0;
    double amplitude = 0.0;       // tail amplitude A
    double collapse_error = 0.0;  // final pair mismatch
    double window_lo = 0.0, window_hi = 0.0;
    double fit_residual = 0.0;    // blow-up time fit residual
    double two_beta_front = 0.0;  // direct front-position scaling exponent
    double nu_fresh = 0.0;        // tail slope just behind the front ([3,30])
    SelfSimExponents exponents;   // derived from nu_fit
    std::vector<CollapsePoint> collapse_series;
};

struct FitOptions {
    double alpha_init = 2.639;        // published anchor for the first pass
    double tail_window_lo = 10.0;
    double tail_window_hi = 1e3;
    double collapse_window_lo = 0.1;
    double collapse_window_hi = 1e3;
    int iterations = 2;               // T* <-> nu refinement passes
    double resolved_front_floor = 2.0;  // min front (eps_min units), tail fit
    double collapse_front_floor = 4.0;  // min front for collapse pairs
};

// front position of a spectrum: largest energy where f is still at half of
// its peak (log-interpolated crossing)
double front_position(const Spectrum& s);

// The full pipeline.  The first T* guess is the sup-f extrapolation with
// the anchor alpha; afterwards T* is refined against the front-position law
// front ~ c (T*-t)^{2 beta}, which stays well conditioned when the sup
// series is still pre-asymptotic, and the tail is refit on the latest
// snapshot whose front the grid still resolves.
ProfileFit fit_selfsim(const TrajectoryRecord& rec, const FitOptions& opt = {});

}  // namespace wtkin
