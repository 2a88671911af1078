#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oscprop/numerics.hpp"
#include "oscprop/random.hpp"

using namespace oscprop;

namespace {

// Damped oracle for Gaussian-type integrals: fixed-panel quadrature of
// exp((a2 - eps) u^2 + a1 u + a0) over a truncation box, extrapolated to
// eps -> 0 through three damping levels.
cplx damped_gaussian(const quadratic_coefficients& q, double eps) {
    const double decay = -q.a2.real() + eps;
    const double drift = std::abs(q.a1.real());
    const double L = (drift + std::sqrt(drift * drift + 4.0 * decay * 45.0)) / (2.0 * decay) + 2.0;
    const double phase_span = std::abs(q.a2.imag()) * L * L + std::abs(q.a1.imag()) * L;
    const int panels = std::max(64, static_cast<int>(phase_span / 4.0));
    cplx acc{0.0, 0.0};
    for (int p = 0; p < panels; ++p) {
        const double a = -L + 2.0 * L * p / panels;
        const double b = -L + 2.0 * L * (p + 1) / panels;
        acc += gauss_legendre(
            [&](double u) { return std::exp((q.a2 - eps) * u * u + q.a1 * u + q.a0); }, a, b, 16);
    }
    return acc;
}

cplx damped_limit(const quadratic_coefficients& q) {
    const double eps[3] = {1e-2, 1e-3, 1e-4};
    cplx v[3];
    for (int i = 0; i < 3; ++i) v[i] = damped_gaussian(q, eps[i]);
    // Neville tableau for the value at eps = 0.
    for (int level = 1; level < 3; ++level)
        for (int i = 0; i < 3 - level; ++i)
            v[i] = (eps[i] * v[i + 1] - eps[i + level] * v[i]) / (eps[i] - eps[i + level]);
    return v[0];
}

}  // namespace

TEST_CASE("gauss_legendre fixed-order examples") {
    const cplx a = gauss_legendre([](double x) { return cplx(x * x, 0.0); }, 0.0, 1.0, 2);
    CHECK(std::abs(a.real() - 1.0 / 3.0) < 1e-15);
    const cplx b = gauss_legendre([](double x) { return cplx(std::cos(x), 0.0); }, 0.0, 1.0, 8);
    CHECK(std::abs(b.real() - std::sin(1.0)) < 1e-12);
    const cplx c = gauss_legendre([](double x) { return cplx(std::sin(x), 0.0); }, 0.0, pi, 16);
    CHECK(std::abs(c.real() - 2.0) < 1e-12);
}

TEST_CASE("log_gamma values and domain") {
    CHECK(log_gamma(1.0) == 0.0);
    CHECK(std::abs(log_gamma(0.5) - std::log(std::sqrt(pi))) < 1e-13);
    CHECK(std::abs(log_gamma(5.0) - std::log(24.0)) < 1e-12);
    CHECK_THROWS_AS(log_gamma(0.0), domain_error);
    CHECK_THROWS_AS(log_gamma(-1.5), domain_error);
}

TEST_CASE("complex_gaussian_integral closed forms") {
    const cplx g1 = complex_gaussian_integral({cplx(-0.5, 0.0), 0.0, 0.0});
    CHECK(std::abs(g1 - std::sqrt(2.0 * pi)) < 1e-14);

    const cplx g2 = complex_gaussian_integral({cplx(0.0, 0.5), 0.0, 0.0});
    const cplx fresnel = std::sqrt(2.0 * pi) * std::exp(iu * pi / 4.0);
    CHECK(std::abs(g2 - fresnel) < 1e-14);
    CHECK(std::abs(g2.real() - 1.7724539) < 1e-7);

    const cplx g3 = complex_gaussian_integral({cplx(-0.5, 0.0), cplx(1.0, 0.0), 0.0});
    CHECK(std::abs(g3 - std::sqrt(2.0 * pi) * std::exp(0.5)) < 1e-13);
}

TEST_CASE("complex_gaussian_integral error conditions") {
    CHECK_THROWS_AS(complex_gaussian_integral({cplx(0.0, 0.0), 1.0, 0.0}),
                    degenerate_quadratic);
    CHECK_THROWS_AS(complex_gaussian_integral({cplx(1.0, 0.0), 0.0, 0.0}), divergent_integral);
    CHECK_THROWS_AS(complex_gaussian_integral({cplx(1e-6, 1.0), 0.0, 0.0}), divergent_integral);
}

TEST_CASE("fresnel case sits on the principal branch") {
    for (double s : {0.5, 2.0, -0.7, -3.0}) {
        const cplx v = complex_gaussian_integral({cplx(0.0, s), 0.0, 0.0});
        const double want = (s > 0.0 ? 1.0 : -1.0) * pi / 4.0;
        CHECK(std::abs(std::arg(v) - want) < 1e-12);
    }
}

TEST_CASE("complex_gaussian_integral matches damped quadrature") {
    random_stream rng(20240816);
    for (int trial = 0; trial < 100; ++trial) {
        quadratic_coefficients q;
        if (trial % 4 == 0) {
            double s = rng.uniform(0.3, 2.0) * (trial % 8 == 0 ? 1.0 : -1.0);
            q.a2 = cplx(0.0, s);
            q.a1 = cplx(0.0, rng.uniform(-2.0, 2.0));
        } else {
            q.a2 = cplx(-rng.uniform(0.15, 2.0), rng.uniform(-2.0, 2.0));
            q.a1 = cplx(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
        }
        q.a0 = cplx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        const cplx closed = complex_gaussian_integral(q);
        const cplx oracle = damped_limit(q);
        CHECK(std::abs(closed - oracle) < 1e-6 * std::max(1.0, std::abs(closed)));
    }
}

TEST_CASE("extract_quadratic exact examples") {
    auto g1 = [](double u) { return std::exp(cplx(2.0 * u * u + 3.0 * u + 1.0, 0.0)); };
    const auto q1 = extract_quadratic(g1, -1.0, 0.0, 1.0);
    CHECK(std::abs(q1.a2 - cplx(2.0, 0.0)) < 1e-10);
    CHECK(std::abs(q1.a1 - cplx(3.0, 0.0)) < 1e-10);
    CHECK(std::abs(q1.a0 - cplx(1.0, 0.0)) < 1e-10);

    auto g2 = [](double u) { return std::exp(iu * u * u); };
    const auto q2 = extract_quadratic(g2, -1.0, 0.0, 1.0);
    CHECK(std::abs(q2.a2 - iu) < 1e-10);
    CHECK(std::abs(q2.a1) < 1e-10);
    CHECK(std::abs(q2.a0) < 1e-10);
}

TEST_CASE("extract_quadratic round trip on random quadratics") {
    random_stream rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        quadratic_coefficients q;
        q.a2 = cplx(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0));
        q.a1 = cplx(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0));
        q.a0 = cplx(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0));
        auto g = [&](double u) { return std::exp(q.a0 + u * (q.a1 + u * q.a2)); };
        const auto r = extract_quadratic(g, -1.0, 0.0, 1.0);
        CHECK(std::abs(r.a2 - q.a2) < 1e-10 * std::max(1.0, std::abs(q.a2)));
        CHECK(std::abs(r.a1 - q.a1) < 1e-10 * std::max(1.0, std::abs(q.a1)));
        // Im(a0) is recoverable only modulo 2*pi from samples of the
        // exponential.
        cplx d0 = r.a0 - q.a0;
        d0 -= cplx(0.0, 2.0 * pi * std::round(d0.imag() / (2.0 * pi)));
        CHECK(std::abs(d0) < 1e-10 * std::max(1.0, std::abs(q.a0)));
        for (double u : {-1.0, 0.0, 1.0}) {
            const cplx back = std::exp(r.a0 + u * (r.a1 + u * r.a2));
            CHECK(std::abs(back - g(u)) < 1e-12 * std::abs(g(u)));
        }
    }
}

TEST_CASE("extract_quadratic rejects non-quadratic input") {
    auto g = [](double u) { return std::exp(cplx(0.3 * u * u * u + u, 0.0)); };
    CHECK_THROWS_AS(extract_quadratic(g, -1.0, 0.0, 1.0), not_quadratic);
}
