#include "wtkin/wick.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "wtkin/markov.hpp"
#include "wtkin/rng.hpp"

namespace wtkin {

bool CovarianceMatrix::is_hermitian(double tol) const {
    double scale = 0.0;
    for (const auto& z : a) scale = std::max(scale, std::abs(z));
    if (scale == 0.0) return true;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (std::abs(at(i, j) - std::conj(at(j, i))) > tol * scale)
                return false;
    return true;
}

namespace {

struct EigenSystem {
    std::vector<double> values;
    std::vector<cplx> vectors;  // columns, row-major n x n
};

// cyclic Jacobi with complex rotations; plenty for n <= 20
EigenSystem jacobi_hermitian(const CovarianceMatrix& c) {
    const std::size_t n = c.n;
    std::vector<cplx> A = c.a;
    std::vector<cplx> V(n * n, cplx(0.0));
    for (std::size_t i = 0; i < n; ++i) V[i * n + i] = 1.0;

    auto off = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                s += std::norm(A[i * n + j]);
        return s;
    };
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        scale = std::max(scale, std::abs(A[i * n + i]));
    scale = std::max(scale, 1e-300);

    for (int sweep = 0; sweep < 100 && off() > 1e-28 * scale * scale; ++sweep) {
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const cplx apq = A[p * n + q];
                if (std::abs(apq) == 0.0) continue;
                const double app = A[p * n + p].real();
                const double aqq = A[q * n + q].real();
                // diagonalize the 2x2 block [[app, apq],[apq*, aqq]]
                const double absq = std::abs(apq);
                const cplx phase = apq / absq;
                const double theta = 0.5 * std::atan2(2.0 * absq, app - aqq);
                const double cs = std::cos(theta), sn = std::sin(theta);
                const cplx s1 = sn * phase;
                for (std::size_t k = 0; k < n; ++k) {
                    const cplx akp = A[k * n + p], akq = A[k * n + q];
                    A[k * n + p] = cs * akp + std::conj(s1) * akq;
                    A[k * n + q] = -s1 * akp + cs * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const cplx apk = A[p * n + k], aqk = A[q * n + k];
                    A[p * n + k] = cs * apk + s1 * aqk;
                    A[q * n + k] = -std::conj(s1) * apk + cs * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const cplx vkp = V[k * n + p], vkq = V[k * n + q];
                    V[k * n + p] = cs * vkp + std::conj(s1) * vkq;
                    V[k * n + q] = -s1 * vkp + cs * vkq;
                }
            }
    }
    EigenSystem es;
    es.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) es.values[i] = A[i * n + i].real();
    es.vectors = std::move(V);
    return es;
}

}  // namespace

std::vector<double> hermitian_eigenvalues(const CovarianceMatrix& c) {
    auto es = jacobi_hermitian(c);
    std::sort(es.values.begin(), es.values.end());
    return es.values;
}

void validate_psd(const CovarianceMatrix& c) {
    if (!c.is_hermitian(1e-10))
        throw std::domain_error("covariance matrix is not Hermitian");
    const auto ev = hermitian_eigenvalues(c);
    double tr = 0.0;
    for (std::size_t i = 0; i < c.n; ++i) tr += c.at(i, i).real();
    tr = std::max(tr, 1e-300);
    if (!ev.empty() && ev.front() < -1e-10 * tr)
        throw std::domain_error("covariance matrix is not PSD");
}

CovarianceMatrix hermitian_sqrt(const CovarianceMatrix& c) {
    auto es = jacobi_hermitian(c);
    const std::size_t n = c.n;
    CovarianceMatrix r(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            cplx s = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double lam = std::max(es.values[k], 0.0);
                s += es.vectors[i * n + k] * std::sqrt(lam) *
                     std::conj(es.vectors[j * n + k]);
            }
            r.at(i, j) = s;
        }
    return r;
}

cplx moment_pairings(std::size_t L, std::size_t M, const CovarianceMatrix& c) {
    if (L != M) return cplx(0.0);  // unequal star counts average to zero
    if (L == 0) return cplx(1.0);
    if (L > 8)
        throw std::invalid_argument(
            "moment_pairings: L > 8, use permanent_ryser");
    if (c.n < L) throw std::invalid_argument("moment_pairings: matrix too small");

    std::vector<std::size_t> perm(L);
    std::iota(perm.begin(), perm.end(), 0);
    cplx sum = 0.0;
    do {
        cplx prod = 1.0;
        for (std::size_t j = 0; j < L; ++j) prod *= c.at(j, perm[j]);
        sum += prod;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return sum;
}

cplx permanent_ryser(const CovarianceMatrix& c) {
    const std::size_t n = c.n;
    if (n == 0) return cplx(1.0);
    if (n > 20) throw std::invalid_argument("permanent_ryser: n > 20");

    // Gray-code subset walk keeping running row sums
    std::vector<cplx> row_sum(n, cplx(0.0));
    cplx total = 0.0;
    const std::uint64_t subsets = 1ull << n;
    std::uint64_t gray = 0;
    for (std::uint64_t k = 1; k < subsets; ++k) {
        const std::uint64_t next = k ^ (k >> 1);
        const std::uint64_t diff = gray ^ next;
        int col = 0;
        while (!((diff >> col) & 1ull)) ++col;
        if ((next >> col) & 1ull)
            for (std::size_t i = 0; i < n; ++i) row_sum[i] += c.at(i, col);
        else
            for (std::size_t i = 0; i < n; ++i) row_sum[i] -= c.at(i, col);

        cplx prod = 1.0;
        for (std::size_t i = 0; i < n; ++i) prod *= row_sum[i];
        const int popcount = __builtin_popcountll(next);
        if ((n - popcount) & 1ull)
            total -= prod;
        else
            total += prod;
        gray = next;
    }
    return total;
}

ComplexEstimate mc_gaussian_moment(const CovarianceMatrix& c, std::size_t L,
                                   const McConfig& cfg) {
    validate_psd(c);
    if (c.n < L)
        throw std::invalid_argument("mc_gaussian_moment: matrix too small");
    const CovarianceMatrix B = hermitian_sqrt(c);
    const std::size_t n = c.n;
    const CounterRng rng{cfg.seed};

    const std::size_t ns = cfg.n_samples;
    std::vector<double> re(ns), im(ns);
    for (std::size_t s = 0; s < ns; ++s) {
        // iid circular normals: Re, Im ~ N(0, 1/2)
        std::vector<cplx> g(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = rng.normal(s, 2 * i) / std::sqrt(2.0);
            const double y = rng.normal(s, 2 * i + 1) / std::sqrt(2.0);
            g[i] = cplx(x, y);
        }
        std::vector<cplx> z(n, cplx(0.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) z[i] += B.at(i, k) * g[k];
        cplx prod = 1.0;
        for (std::size_t j = 0; j < L; ++j) prod *= std::conj(z[j]);
        for (std::size_t j = 0; j < L; ++j) prod *= z[j];
        re[s] = prod.real();
        im[s] = prod.imag();
    }
    ComplexEstimate est;
    est.n_samples = ns;
    const double mr = pairwise_sum(re) / static_cast<double>(ns);
    const double mi = pairwise_sum(im) / static_cast<double>(ns);
    est.value = cplx(mr, mi);
    double vr = 0.0, vi = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
        vr += (re[s] - mr) * (re[s] - mr);
        vi += (im[s] - mi) * (im[s] - mi);
    }
    const double denom = static_cast<double>(ns) * std::max<double>(ns - 1, 1);
    est.stderr_re = std::sqrt(vr / denom);
    est.stderr_im = std::sqrt(vi / denom);
    return est;
}

double DeltaProductSum::term_amplitude(const std::vector<Vec3>& ks) const {
    if (ks.size() != order)
        throw std::invalid_argument("term_amplitude: wrong argument count");
    double p = coefficient;
    for (const auto& k : ks) p *= amplitude(k);
    return p;
}

DeltaProductSum initial_f_hat(std::size_t L,
                              std::function<double(const Vec3&)> n0) {
    if (L == 0 || L > 8)
        throw std::invalid_argument("initial_f_hat: need 1 <= L <= 8");
    DeltaProductSum d;
    d.order = L;
    const double two_pi = 6.283185307179586476925286766559;
    d.coefficient = std::pow(two_pi, 1.5 * static_cast<double>(L));
    d.amplitude = std::move(n0);
    std::vector<std::size_t> perm(L);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        d.permutations.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return d;
}

}  // namespace wtkin
