#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "oscprop/errors.hpp"
#include "oscprop/numerics.hpp"
#include "oscprop/test_function.hpp"

namespace oscprop {

struct oscillator_problem {
    time_window window;
    double k;
    double x0;
    double x;

    oscillator_problem(time_window w, double k_, double x0_, double x_)
        : window(w), k(k_), x0(x0_), x(x_) {
        if (k < 0.0) throw frequency_out_of_range("oscillator_problem: k must be >= 0");
        if (k * window.length() >= pi / 2.0)
            throw frequency_out_of_range("oscillator_problem: k|Delta| must be < pi/2");
    }
};

namespace detail {

inline double cos_weighted_integral(const std::vector<double>& c,
                                    const shifted_test_function& f, double k, double ref,
                                    bool flip) {
    // flip=false: integral of f(u) cos(k (u - ref)); flip=true: f(u) cos(k (ref - u)).
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < c.size(); ++j)
        acc += gauss_legendre(
                   [&](double u) {
                       const double arg = flip ? k * (ref - u) : k * (u - ref);
                       return cplx(f.value(u) * std::cos(arg), 0.0);
                   },
                   c[j], c[j + 1], 16)
                   .real();
    return acc;
}

inline double cos_weighted_integral(const shifted_test_function& f, double a, double b,
                                    double k, double ref, bool flip) {
    return cos_weighted_integral(f.cuts(a, b), f, k, ref, flip);
}

// Ordered double integral of fo(s1) fi(s2) cos(k (t - s1)) cos(k (s2 - t0))
// over t0 < s2 < s1 < t, iterated with the inner antiderivative accumulated
// across pieces.
inline double double_cos_integral(const std::vector<double>& c,
                                  const shifted_test_function& fo,
                                  const shifted_test_function& fi, double t0, double t,
                                  double k) {
    auto inner = [&](double u) { return fi.value(u) * std::cos(k * (u - t0)); };
    std::vector<double> prefix(c.size(), 0.0);
    for (std::size_t j = 0; j + 1 < c.size(); ++j)
        prefix[j + 1] =
            prefix[j] +
            gauss_legendre([&](double u) { return cplx(inner(u), 0.0); }, c[j], c[j + 1], 16)
                .real();
    double total = 0.0;
    for (std::size_t j = 0; j + 1 < c.size(); ++j) {
        total += gauss_legendre(
                     [&](double s1) {
                         const double partial =
                             gauss_legendre([&](double u) { return cplx(inner(u), 0.0); },
                                            c[j], s1, 16)
                                 .real();
                         return cplx(fo.value(s1) * std::cos(k * (t - s1)) *
                                         (prefix[j] + partial),
                                     0.0);
                     },
                     c[j], c[j + 1], 16)
                     .real();
    }
    return total;
}

inline double double_cos_integral(const shifted_test_function& f, double t0, double t,
                                  double k) {
    return double_cos_integral(f.cuts(t0, t), f, f, t0, t, k);
}

}  // namespace detail

inline cplx free_kernel(double x, double t, double x0, double t0,
                        const shifted_test_function& f, cplx z = cplx(1.0, 0.0)) {
    if (!(t > t0)) throw invalid_window("free_kernel: need t > t0");
    const double dt = t - t0;
    const cplx pref = 1.0 / std::sqrt(cplx(0.0, 2.0 * pi * dt));
    cplx phase{0.0, 0.0};
    if (!f.is_zero() || z != cplx(1.0, 0.0)) {
        const double i1 = integral(f, t0, t);
        const double l2d = l2sq(f, t0, t);
        const cplx arg = z * i1 + (x - x0);
        phase = iu * z * (x0 * f.value(t0) - x * f.value(t)) - 0.5 * iu * z * z * l2d +
                iu / (2.0 * dt) * arg * arg;
    } else {
        const double d = x - x0;
        phase = iu * d * d / (2.0 * dt);
    }
    const cplx value = pref * std::exp(phase);
    ensure_finite(value, "free_kernel");
    return value;
}

inline cplx harmonic_kernel(const oscillator_problem& p, const shifted_test_function& f,
                            cplx z = cplx(1.0, 0.0)) {
    if (p.k == 0.0) return free_kernel(p.x, p.window.t, p.x0, p.window.t0, f, z);
    const double t0 = p.window.t0, t = p.window.t, dt = p.window.length();
    const double s = std::sin(p.k * dt), c = std::cos(p.k * dt);
    const cplx pref = std::sqrt(p.k / cplx(0.0, 2.0 * pi * s));
    cplx bracket = cplx((p.x0 * p.x0 + p.x * p.x) * c - 2.0 * p.x0 * p.x, 0.0);
    cplx phase{0.0, 0.0};
    if (!f.is_zero()) {
        const double cl = detail::cos_weighted_integral(f, t0, t, p.k, t0, false);
        const double cr = detail::cos_weighted_integral(f, t0, t, p.k, t, true);
        const double dd = detail::double_cos_integral(f, t0, t, p.k);
        bracket += 2.0 * p.x * z * cl - 2.0 * p.x0 * z * cr + 2.0 * z * z * dd;
        const double l2d = l2sq(f, t0, t);
        phase = iu * z * (p.x0 * f.value(t0) - p.x * f.value(t)) - 0.5 * iu * z * z * l2d;
    }
    const cplx value = pref * std::exp(iu * p.k / (2.0 * s) * bracket + phase);
    ensure_finite(value, "harmonic_kernel");
    return value;
}

enum class kernel_kind { free_particle, harmonic };

inline cplx propagator(kernel_kind kind, const oscillator_problem& p,
                       const shifted_test_function& f, cplx z = cplx(1.0, 0.0)) {
    if (kind == kernel_kind::free_particle)
        return free_kernel(p.x, p.window.t, p.x0, p.window.t0, f, z);
    return harmonic_kernel(p, f, z);
}

// Max relative defect of (i d_t + 1/2 d_xx - fdot(t) x - 1/2 k^2 x^2) K over
// the supplied evaluation points, with central differences in t and a 5-point
// stencil in x.
inline double schrodinger_residual(kernel_kind kind, const oscillator_problem& p,
                                   const shifted_test_function& f, double h,
                                   const std::vector<std::pair<double, double>>& points) {
    if (!(h > 0.0)) throw domain_error("schrodinger_residual: need h > 0");
    const double t0 = p.window.t0;
    double worst = 0.0;
    for (const auto& [xe, te] : points) {
        if (!(te - t0 >= 10.0 * h && te + h <= p.window.t))
            throw domain_error("schrodinger_residual: evaluation point too close to the window ends");
        auto K = [&](double xx, double tt) {
            return propagator(kind, {time_window(t0, tt), p.k, p.x0, xx}, f);
        };
        const cplx k0 = K(xe, te);
        const cplx dt = (K(xe, te + h) - K(xe, te - h)) / (2.0 * h);
        const cplx dxx = (-K(xe - 2.0 * h, te) + 16.0 * K(xe - h, te) - 30.0 * k0 +
                          16.0 * K(xe + h, te) - K(xe + 2.0 * h, te)) /
                         (12.0 * h * h);
        const double w = f.deriv(te) * xe + 0.5 * p.k * p.k * xe * xe;
        const double r = std::abs(iu * dt + 0.5 * dxx - w * k0) / std::abs(k0);
        worst = std::max(worst, r);
    }
    return worst;
}

// Semigroup defect: the y-integral of K(x,t|y,s) K(y,s|x0,t0) is
// exp-of-quadratic in y, evaluated in closed form.
inline double chapman_kolmogorov_defect(const oscillator_problem& p,
                                        const shifted_test_function& f, double s) {
    if (!(s > p.window.t0 && s < p.window.t))
        throw invalid_window("chapman_kolmogorov_defect: split must be interior");
    auto g = [&](double y) {
        const cplx late = harmonic_kernel({time_window(s, p.window.t), p.k, y, p.x}, f);
        const cplx early = harmonic_kernel({time_window(p.window.t0, s), p.k, p.x0, y}, f);
        return late * early;
    };
    const auto q = extract_quadratic(g, -1.0, 0.0, 1.0);
    const cplx glued = complex_gaussian_integral(q);
    const cplx whole = harmonic_kernel(p, f);
    return std::abs(glued - whole) / std::abs(whole);
}

// Invariance of the kernel under a constant shift of f on an interval
// containing the closed window (both endpoint values must shift, so the
// half-open indicator requires t < hi strictly).
inline double lemma42_defect(const oscillator_problem& p, const shifted_test_function& f,
                             double lo, double hi, double lam) {
    if (!(lo <= p.window.t0 && p.window.t < hi))
        throw window_not_contained("lemma42_defect: need lo <= t0 and t < hi");
    const cplx base = harmonic_kernel(p, f);
    const cplx shifted = harmonic_kernel(p, f.with_shift(lam, lo, hi));
    return std::abs(shifted - base) / std::abs(base);
}

}  // namespace oscprop
