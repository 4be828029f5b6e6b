#include <cmath>
#include <memory>

#include "doctest.h"
#include "wtkin/collision.hpp"
#include "wtkin/parallel.hpp"

using namespace wtkin;

namespace {
std::shared_ptr<const EnergyGrid> grid(std::size_t n) {
    return std::make_shared<EnergyGrid>(make_log_grid(1e-4, 50.0, n));
}

Spectrum exp_spectrum(std::shared_ptr<const EnergyGrid> g, double amp = 1.0) {
    std::vector<double> v(g->size());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = amp * std::exp(-g->nodes[i]);
    return make_spectrum(std::move(g), std::move(v));
}
}  // namespace

TEST_CASE("interaction kernel") {
    CHECK(kernel_w(1.0, 1.0, 1.0, 1.0) == 1.0);
    CHECK(kernel_w(2.0, 1.0, 1.0, 2.0) ==
          doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
    CHECK(kernel_w(1.0, 0.0, 0.5, 0.5) == 0.0);
    CHECK_THROWS_AS(kernel_w(0.0, 1.0, 1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(kernel_w(-1.0, 1.0, 1.0, -1.0), std::domain_error);

    // symmetric in the outgoing pair
    for (int i = 0; i < 20; ++i) {
        const double e3 = 0.1 + 0.37 * i, e4 = 3.0 / (1.0 + i);
        const double e1 = 0.8, e2 = e3 + e4 - e1;
        if (e2 < 0) continue;
        CHECK(kernel_w(e1, e2, e3, e4) == kernel_w(e1, e2, e4, e3));
    }
}

TEST_CASE("default collision constant") {
    const double pi = 3.14159265358979323846;
    CHECK(default_gamma() ==
          doctest::Approx(1.0 / (8.0 * std::pow(pi, 6.0))).epsilon(1e-15));
    CHECK(KernelParams{}.gamma == doctest::Approx(default_gamma()).epsilon(1e-12));
}

TEST_CASE("equilibria are annihilated pointwise") {
    auto g = grid(256);
    CollisionOperator op(g, {});

    Spectrum ones = make_spectrum(g, std::vector<double>(g->size(), 1.0));
    auto c1 = op.rhs(ones);
    const double scale1 = op.params().gamma * 1.0 * 50.0 * 50.0;
    for (double x : c1) CHECK(std::abs(x) <= 1e-10 * scale1);

    // same for an arbitrary constant
    Spectrum c7 = make_spectrum(g, std::vector<double>(g->size(), 7.25));
    auto c2 = op.rhs(c7);
    const double scale2 = op.params().gamma * std::pow(7.25, 3.0) * 2500.0;
    for (double x : c2) CHECK(std::abs(x) <= 1e-10 * scale2);

    Spectrum rj = rayleigh_jeans(g, 1.0, 0.1);
    auto c3 = op.rhs(rj);
    const double fm = rj.values.front();
    const double scale3 = op.params().gamma * fm * fm * fm * 2500.0;
    for (double x : c3) CHECK(std::abs(x) <= 1e-10 * scale3);

    // example values of the equilibrium family itself
    CHECK(rayleigh_jeans(grid(64), 1.0, 0.0).values.back() ==
          doctest::Approx(1.0 / 50.0));
    auto g2 = grid(64);
    Spectrum rj2 = rayleigh_jeans(g2, 2.0, 1.0);
    for (std::size_t i = 0; i < g2->size(); i += 9)
        CHECK(rj2.values[i] == 2.0 / (g2->nodes[i] + 1.0));
    CHECK(interp_loglog(rj2, 1.0) == doctest::Approx(1.0).epsilon(3e-3));
    CHECK_THROWS_AS(rayleigh_jeans(grid(64), -1.0, 0.0), std::invalid_argument);
}

TEST_CASE("cubic homogeneity") {
    auto g = grid(96);
    Spectrum f = exp_spectrum(g);
    Spectrum f3 = exp_spectrum(g, 3.0);
    CollisionOperator op(g, {});
    auto c1 = op.rhs(f);
    auto c3 = op.rhs(f3);
    for (std::size_t i = 0; i < c1.size(); ++i) {
        if (std::abs(c1[i]) < 1e-300) continue;
        CHECK(c3[i] == doctest::Approx(27.0 * c1[i]).epsilon(1e-11));
    }
}

TEST_CASE("conserved moments of the rate shrink under refinement") {
    double prev_n = 1e300, prev_e = 1e300;
    for (std::size_t n : {128u, 256u, 512u}) {
        auto g = grid(n);
        Spectrum f = exp_spectrum(g);
        CollisionOperator op(g, {});
        auto c = op.rhs(f);
        double mn = 0, me = 0, an = 0, ae = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double wn = g->weights[i] * std::sqrt(g->nodes[i]);
            const double we = g->weights[i] * std::pow(g->nodes[i], 1.5);
            mn += wn * c[i];
            me += we * c[i];
            an += wn * std::abs(c[i]);
            ae += we * std::abs(c[i]);
        }
        const double dn = std::abs(mn) / an, de = std::abs(me) / ae;
        if (n == 512u) {
            CHECK(dn <= 1e-2);
            CHECK(de <= 1e-2);
        }
        CHECK(dn < prev_n * 1.5);  // monotone within noise
        CHECK(de < prev_e * 1.5);
        prev_n = dn;
        prev_e = de;
    }
}

TEST_CASE("off-grid evaluation and errors") {
    auto g = grid(128);
    Spectrum f = exp_spectrum(g);
    CollisionOperator op(g, {});
    CHECK_THROWS_AS(op.rhs_at(f, 0.0), std::domain_error);
    CHECK_THROWS_AS(op.rhs_at(f, -2.0), std::domain_error);
    // off-grid point sits between the neighboring node values' rates
    const double mid = std::sqrt(g->nodes[60] * g->nodes[61]);
    const double cm = op.rhs_at(f, mid);
    const double ca = op.rhs_at(f, g->nodes[60]);
    const double cb = op.rhs_at(f, g->nodes[61]);
    CHECK(((cm >= std::min(ca, cb) - 1e-12) && (cm <= std::max(ca, cb) + 1e-12)));
}

TEST_CASE("node rates are identical across worker counts") {
    auto g = grid(128);
    Spectrum f = exp_spectrum(g, 2.0);
    CollisionOperator op(g, {});
    set_max_threads(1);
    auto c1 = op.rhs(f);
    set_max_threads(3);
    auto c3 = op.rhs(f);
    set_max_threads(1);
    REQUIRE(c1.size() == c3.size());
    for (std::size_t i = 0; i < c1.size(); ++i) CHECK(c1[i] == c3[i]);
}
