#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oscprop/random.hpp"
#include "oscprop/test_function.hpp"

using namespace oscprop;

namespace {

test_function parabola01() {
    // f(t) = t(1-t) on [0,1]: local coefficients (0, 1, -1, 0).
    return test_function({0.0, 1.0}, {{0.0, 1.0, -1.0, 0.0}});
}

test_function random_bump(random_stream& rng) {
    const int n = rng.uniform_int(3, 6);
    std::vector<double> knots(n), values(n), slopes(n);
    double x = rng.uniform(-1.0, 0.5);
    for (int i = 0; i < n; ++i) {
        knots[i] = x;
        x += rng.uniform(0.2, 0.8);
        values[i] = (i == 0 || i == n - 1) ? 0.0 : rng.uniform(-1.5, 1.5);
        slopes[i] = rng.uniform(-2.0, 2.0);
    }
    return test_function::hermite(knots, values, slopes);
}

}  // namespace

TEST_CASE("time_window validation") {
    CHECK_THROWS_AS(time_window(1.0, 1.0), invalid_window);
    CHECK_THROWS_AS(time_window(2.0, 1.0), invalid_window);
    CHECK(time_window(0.0, 0.5).length() == 0.5);
}

TEST_CASE("piecewise cubic evaluation") {
    const test_function f = parabola01();
    CHECK(f.value(0.5) == 0.25);
    CHECK(f.deriv(0.5) == 0.0);
    CHECK(f.value(2.0) == 0.0);
    CHECK(f.value(-0.3) == 0.0);
    CHECK(f.deriv(2.0) == 0.0);
}

TEST_CASE("constructor validation") {
    CHECK_THROWS_AS(test_function({0.0, 0.0}, {{0.0, 1.0, -1.0, 0.0}}), domain_error);
    CHECK_THROWS_AS(test_function({0.0, 1.0}, {{0.5, 0.0, 0.0, 0.0}}), domain_error);
    // Two pieces with a value jump at the interior breakpoint.
    CHECK_THROWS_AS(test_function({0.0, 1.0, 2.0},
                                  {{0.0, 1.0, -1.0, 0.0}, {1.0, 0.0, -1.0, 0.0}}),
                    domain_error);
}

TEST_CASE("hermite pieces are C1 at the knots") {
    const test_function f =
        test_function::hermite({0.0, 0.5, 1.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 0.0});
    CHECK(std::abs(f.value(0.5) - 1.0) < 1e-15);
    CHECK(std::abs(f.deriv(0.5)) < 1e-15);
    const double eps = 1e-7;
    CHECK(std::abs(f.value(0.5 - eps) - f.value(0.5 + eps)) < 1e-6);
    CHECK(std::abs(f.value(0.25) - 0.5) < 1e-15);
}

TEST_CASE("norms on the unit parabola") {
    const test_function f = parabola01();
    const norm_bundle nb = norms(f, time_window(0.0, 1.0));
    CHECK(std::abs(nb.sup_f - 0.25) < 1e-14);
    CHECK(std::abs(nb.sup_fprime - 1.0) < 1e-14);
    CHECK(std::abs(nb.l2_full * nb.l2_full - 1.0 / 30.0) < 1e-14);
    CHECK(nb.l2_off_window == 0.0);
    CHECK(nb.triple == nb.sup_f + nb.sup_fprime + nb.l2_full);

    const norm_bundle half = norms(f, time_window(0.0, 0.5));
    CHECK(std::abs(half.l2_window * half.l2_window - 1.0 / 60.0) < 1e-14);
    CHECK(std::abs(half.l2_off_window * half.l2_off_window - (1.0 / 30.0 - 1.0 / 60.0)) <
          1e-14);
}

TEST_CASE("norms of the zero function") {
    const test_function f;
    const norm_bundle nb = norms(f, time_window(0.0, 1.0));
    CHECK(nb.sup_f == 0.0);
    CHECK(nb.sup_fprime == 0.0);
    CHECK(nb.l2_full == 0.0);
    CHECK(nb.l2_window == 0.0);
    CHECK(nb.l2_off_window == 0.0);
    CHECK(nb.triple == 0.0);
}

TEST_CASE("indicator shifts with half-open convention") {
    const shifted_test_function zero;
    const auto s = zero.with_shift(1.0, 0.0, 1.0);
    CHECK(s.value(0.5) == 1.0);
    CHECK(s.value(0.0) == 1.0);
    CHECK(s.value(1.0) == 0.0);
    CHECK(s.value(-0.1) == 0.0);

    const test_function f = parabola01();
    const shifted_test_function unshifted = shifted_test_function(f).with_shift(0.0, 0.0, 2.0);
    for (double t : {-0.5, 0.3, 0.9, 1.7}) CHECK(unshifted.value(t) == f.value(t));

    const auto two = zero.with_shift(2.0, -0.5, 1.5);
    CHECK(std::abs(l2sq(two, 0.0, 1.0) - 4.0) < 1e-14);
}

TEST_CASE("closed right endpoint variant") {
    const shifted_test_function zero;
    const auto s = zero.with_shift(1.0, 0.0, 1.0, true);
    CHECK(s.value(1.0) == 1.0);
    CHECK(s.value(1.0 + 1e-12) == 0.0);
}

TEST_CASE("integrals split at shift boundaries") {
    const shifted_test_function zero;
    const auto s = zero.with_shift(3.0, 0.25, 0.75);
    CHECK(std::abs(integral(s, 0.0, 1.0) - 1.5) < 1e-14);
    CHECK(std::abs(l2sq(s, 0.0, 1.0) - 4.5) < 1e-14);
    CHECK(std::abs(l2sq_full(s) - 4.5) < 1e-14);
}

TEST_CASE("norm bundle properties on random functions") {
    random_stream rng(4242);
    for (int trial = 0; trial < 100; ++trial) {
        const test_function f = random_bump(rng);
        const double lo = rng.uniform(-1.5, 1.0);
        const time_window w(lo, lo + rng.uniform(0.3, 2.5));
        const norm_bundle nb = norms(f, w);
        CHECK(nb.sup_f >= 0.0);
        CHECK(nb.sup_fprime >= 0.0);
        CHECK(nb.triple >= nb.sup_f);
        const double defect = nb.l2_full * nb.l2_full - nb.l2_window * nb.l2_window -
                              nb.l2_off_window * nb.l2_off_window;
        CHECK(std::abs(defect) < 1e-10);
        for (int probe = 0; probe < 10; ++probe) {
            const double t = rng.uniform(std::max(w.t0, f.support_lo()),
                                         std::min(w.t, f.support_hi()));
            if (t > w.t0 && t < w.t) {
                CHECK(std::abs(f.value(t)) <= nb.sup_f + 1e-12);
                CHECK(std::abs(f.deriv(t)) <= nb.sup_fprime + 1e-12);
            }
        }
    }
}
