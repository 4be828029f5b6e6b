#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

#include "wtkin/vec3.hpp"

namespace wtkin {

struct McConfig;  // markov.hpp

using cplx = std::complex<double>;

// Pair-correlation matrix C[j][k] = E[Z*_j Z_k] of a circular Gaussian
// family; Hermitian positive semidefinite.
struct CovarianceMatrix {
    std::size_t n = 0;
    std::vector<cplx> a;  // row-major n x n

    CovarianceMatrix() = default;
    explicit CovarianceMatrix(std::size_t n_) : n(n_), a(n_ * n_) {}

    cplx& at(std::size_t i, std::size_t j) { return a[i * n + j]; }
    const cplx& at(std::size_t i, std::size_t j) const { return a[i * n + j]; }

    bool is_hermitian(double tol = 1e-12) const;
};

// eigenvalues ascending (cyclic Jacobi for Hermitian matrices)
std::vector<double> hermitian_eigenvalues(const CovarianceMatrix& c);

// throws std::domain_error unless all eigenvalues >= -1e-10 * trace
void validate_psd(const CovarianceMatrix& c);

// Hermitian square root with eigenvalue clipping at zero
CovarianceMatrix hermitian_sqrt(const CovarianceMatrix& c);

// Gaussian moment E[Z*_1..Z*_L Z_1..Z_M]: zero when L != M, otherwise the
// permanent of C by direct permutation enumeration (L <= 8).
cplx moment_pairings(std::size_t L, std::size_t M, const CovarianceMatrix& c);

// permanent by Ryser inclusion-exclusion with Gray-code updates, L <= 20
cplx permanent_ryser(const CovarianceMatrix& c);

struct ComplexEstimate {
    cplx value;
    double stderr_re = 0.0, stderr_im = 0.0;
    std::size_t n_samples = 0;
};

// statistical oracle: sample Z = C^{1/2} g and average prod Z*_j prod Z_k
ComplexEstimate mc_gaussian_moment(const CovarianceMatrix& c, std::size_t L,
                                   const McConfig& cfg);

// Symbolic permutation sum of Dirac-delta products:
//   coefficient * sum_sigma prod_j [ delta(k_j - xi_sigma(j)) n0(k_j) ].
// Deltas are never numbers; downstream code consumes the permutations and
// the per-factor amplitudes.
struct DeltaProductSum {
    std::size_t order = 0;
    double coefficient = 0.0;
    std::vector<std::vector<std::size_t>> permutations;  // duplicate-free
    std::function<double(const Vec3&)> amplitude;        // n0 per factor

    std::size_t term_count() const { return permutations.size(); }
    // coefficient * prod_j amplitude(k_j); identical for every term
    double term_amplitude(const std::vector<Vec3>& ks) const;
};

// initial data of the L-th correlation function for a Gaussian field
DeltaProductSum initial_f_hat(std::size_t L,
                              std::function<double(const Vec3&)> n0);

}  // namespace wtkin
