#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <vector>

#include "oscprop/errors.hpp"

namespace oscprop {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr cplx iu{0.0, 1.0};

inline void ensure_finite(const cplx& v, const char* what) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw domain_error(std::string(what) + ": non-finite result");
}

struct gl_rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Legendre nodes on [-1, 1] by Newton iteration on the Legendre
// recurrence; cached per order.
inline const gl_rule& gauss_legendre_rule(int n) {
    static std::mutex mu;
    static std::map<int, gl_rule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    if (n < 1) throw domain_error("gauss_legendre_rule: order must be >= 1");
    gl_rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) {
                p0 = 1.0;
                p1 = x;
                for (int j = 2; j <= n; ++j) {
                    double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                break;
            }
        }
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[i] = -x;
        r.weights[i] = w;
        r.nodes[n - 1 - i] = x;
        r.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.nodes[n / 2] = 0.0;
    return cache.emplace(n, std::move(r)).first->second;
}

template <class F>
cplx gauss_legendre(F&& f, double a, double b, int order) {
    const gl_rule& r = gauss_legendre_rule(order);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    cplx acc{0.0, 0.0};
    for (int i = 0; i < order; ++i) acc += r.weights[i] * f(mid + half * r.nodes[i]);
    return acc * half;
}

inline double log_gamma(double x) {
    if (!(x > 0.0)) throw domain_error("log_gamma: argument must be positive");
    return std::lgamma(x);
}

struct quadratic_coefficients {
    cplx a2;
    cplx a1;
    cplx a0;
};

// Integral of exp(a2 u^2 + a1 u + a0) over the real line:
// sqrt(-pi/a2) exp(a0 - a1^2/(4 a2)), principal branch.  A tiny positive
// real part of a2 (below 1e-12 relative) is treated as roundoff and the
// quadratic is projected onto the imaginary axis (Fresnel regularization).
inline cplx complex_gaussian_integral(const quadratic_coefficients& q) {
    cplx a2 = q.a2;
    const double mag = std::abs(a2);
    if (mag == 0.0) throw degenerate_quadratic("complex_gaussian_integral: a2 = 0");
    if (a2.real() > 1e-12 * mag)
        throw divergent_integral("complex_gaussian_integral: Re a2 > 0");
    if (a2.real() > 0.0) {
        if (a2.imag() == 0.0)
            throw divergent_integral("complex_gaussian_integral: Re a2 > 0");
        a2 = cplx(0.0, a2.imag());
    }
    const cplx value = std::sqrt(-pi / a2) * std::exp(q.a0 - q.a1 * q.a1 / (4.0 * a2));
    ensure_finite(value, "complex_gaussian_integral");
    return value;
}

namespace detail {

// Unwrapped complex logs of g along a refining path through u1 < u2 < u3;
// returns logs at the three anchor points.
template <class G>
std::array<cplx, 3> anchor_logs(G&& g, double u1, double u2, double u3, int m) {
    std::vector<double> path;
    path.reserve(m + 2);
    for (int i = 0; i <= m; ++i) path.push_back(u1 + (u3 - u1) * i / m);
    path.push_back(u2);
    std::sort(path.begin(), path.end());
    path.erase(std::unique(path.begin(), path.end()), path.end());
    double offset = 0.0, prev_im = 0.0;
    bool first = true;
    std::array<cplx, 3> out{};
    for (double u : path) {
        const cplx v = g(u);
        if (!(std::abs(v) > 0.0))
            throw not_quadratic("extract_quadratic: sample vanishes");
        cplx l = std::log(v);
        if (!first) {
            double d = l.imag() + offset - prev_im;
            offset -= 2.0 * pi * std::round(d / (2.0 * pi));
        }
        l += cplx(0.0, offset);
        prev_im = l.imag();
        first = false;
        for (int a = 0; a < 3; ++a) {
            const double ua = (a == 0) ? u1 : (a == 1) ? u2 : u3;
            if (u == ua) out[a] = l;
        }
    }
    return out;
}

}  // namespace detail

// Fits log g(u) = a0 + a1 u + a2 u^2 from three samples, with the complex
// log unwrapped along a refining path between the anchors, and verifies the
// fit at a fourth point.
template <class G>
quadratic_coefficients extract_quadratic(G&& g, double u1, double u2, double u3) {
    if (!(u1 < u2 && u2 < u3)) throw domain_error("extract_quadratic: need u1 < u2 < u3");
    std::array<cplx, 3> logs{};
    std::array<cplx, 3> prev{};
    bool have_prev = false;
    for (int m = 16; m <= (1 << 16); m *= 2) {
        logs = detail::anchor_logs(g, u1, u2, u3, m);
        if (have_prev) {
            double d = 0.0;
            for (int a = 0; a < 3; ++a) d = std::max(d, std::abs(logs[a] - prev[a]));
            if (d < 1e-9) break;
        }
        prev = logs;
        have_prev = true;
    }
    const double us[3] = {u1, u2, u3};
    // 3x3 Vandermonde solve via Lagrange differences.
    const cplx f01 = (logs[1] - logs[0]) / (us[1] - us[0]);
    const cplx f12 = (logs[2] - logs[1]) / (us[2] - us[1]);
    quadratic_coefficients q;
    q.a2 = (f12 - f01) / (us[2] - us[0]);
    q.a1 = f01 - q.a2 * (us[0] + us[1]);
    q.a0 = logs[0] - us[0] * (q.a1 + q.a2 * us[0]);
    const double u4 = u1 + 0.6180339887498949 * (u3 - u1);
    const cplx predicted = std::exp(q.a0 + u4 * (q.a1 + q.a2 * u4));
    const cplx actual = g(u4);
    const double scale = std::max(std::abs(actual), std::abs(predicted));
    if (!(std::abs(predicted - actual) <= 1e-8 * scale))
        throw not_quadratic("extract_quadratic: check point deviates from quadratic fit");
    return q;
}

}  // namespace oscprop
