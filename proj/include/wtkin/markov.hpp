#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "wtkin/collision.hpp"
#include "wtkin/cumulant.hpp"

namespace wtkin {

struct McConfig {
    std::size_t n_samples = 1000000;
    std::uint64_t seed = 0;          // mandatory; fixed seed => bitwise output
    double proposal_scale = 1.0;     // Gaussian proposal width in |k|
    std::size_t time_quadrature_steps = 4096;  // cap for the memory integral
};

// int_0^tau (dsigma/eps^2) cos(sigma Omega / (2 eps^2))
//   = (2/Omega) sin(tau Omega / (2 eps^2)),  tau/eps^2 at Omega = 0
double memory_weight(double tau, double omega, double eps_coupling);

// quadrature of int dOmega psi(Omega) memory_weight(tau, Omega, eps) over a
// symmetric Omega grid; converges to 2 pi psi(0) as eps -> 0
double smeared_delta_apply(std::span<const double> omega_grid,
                           std::span<const double> psi, double tau,
                           double eps_coupling);

struct McEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    std::size_t n_samples = 0;
    std::size_t n_accepted = 0;
    double acceptance = 0.0;
};

// Kinetic rate at |k1| by 3D Monte Carlo over the resonant manifold:
// k2 from an isotropic Gaussian proposal, xi2 = k1+k2-xi1 (momentum delta),
// xi1 uniform on the sphere |xi1 - P/2| = R, R^2 = E - |P|^2/4, with the
// energy-delta Jacobian 1/(4R).
//
// Normalized so the estimate converges to the isotropic operator with the
// same KernelParams: the angular reduction of the resonant integral gives
// exactly 4 pi^2 * iint de3 de4 W [...], hence the prefactor gamma/(4 pi^2).
McEstimate markovian_rhs_mc(const std::function<double(double)>& f_of_eps,
                            double k1, const KernelParams& params,
                            const McConfig& cfg);

// Pre-limit memory rate at (|k1|, t): full (k2, xi1) integral with the
// oscillatory time kernel, no energy delta.  Returns the microscopic-time
// rate; dividing by eps^2 gives the kinetic-time rate that approaches
// markovian_rhs_mc as eps -> 0.
McEstimate nonmarkovian_rhs_mc(const HistorySpectra& h, double k1, double t,
                               double eps_coupling, const KernelParams& params,
                               const McConfig& cfg);

}  // namespace wtkin
