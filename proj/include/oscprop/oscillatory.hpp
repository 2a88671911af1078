#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <utility>
#include <vector>

#include "oscprop/errors.hpp"
#include "oscprop/numerics.hpp"

namespace oscprop {

// Quadrature for integrals whose integrand carries sigma^{-1/2} modulus
// singularities and e^{i C / sigma} phase factors at one or both endpoints
// (sigma = distance to the end).  Layout along sigma in [0, W]:
//   sigma < C/theta_max : moments of a polynomial fit in sqrt(sigma) of the
//                         slowly varying factor against E_nu(X) tail integrals
//   (zero-phase end: a sqrt-substituted adaptive panel instead)
//   interior            : embedded Gauss-Legendre panels, seeded at
//                         phase-equidistant edges of Psi(s) = Ca/s + Cb/(W-s).

struct osc_result {
    cplx value;
    double err;
};

struct osc_options {
    double abs_tol = 1e-13;
    int cap = 24000;
    double k_scale = 1.0;
};

namespace detail {

inline constexpr double osc_theta_base = 40.0;
inline constexpr double osc_theta_cap = 6000.0;
inline constexpr double osc_dtheta = 8.0;
inline constexpr double osc_ratio = 1.6;
inline constexpr double osc_tail_fracs[7] = {1.0, 0.8, 0.65, 0.5, 0.38, 0.28, 0.2};
inline constexpr double osc_tail_check_frac = 0.42;

// E_nu(X) = integral over w in (X, inf) of w^{-nu} e^{i w}; asymptotic
// series, machine precision for X >= ~35.
inline cplx e_nu_tail(double nu, double x) {
    const cplx pref = iu * std::exp(iu * x) * std::pow(x, -nu);
    cplx s = 0.0, term = 1.0;
    double best = std::numeric_limits<double>::infinity();
    int m = 0;
    while (true) {
        s += term;
        m += 1;
        term *= -iu * (nu + m - 1.0) / x;
        if (std::abs(term) < 1e-18) break;
        if (std::abs(term) > best) break;
        best = std::abs(term);
        if (m > 200) break;
    }
    return pref * s;
}

// Solve the real Vandermonde system V c = phi (increasing powers) by
// Gaussian elimination with partial pivoting.
inline std::vector<cplx> solve_vandermonde(const std::vector<double>& vs,
                                           std::vector<cplx> rhs) {
    const std::size_t n = vs.size();
    std::vector<std::vector<double>> a(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        double p = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            a[i][j] = p;
            p *= vs[i];
        }
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        std::swap(a[col], a[piv]);
        std::swap(rhs[col], rhs[piv]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t j = col; j < n; ++j) a[r][j] -= f * a[col][j];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<cplx> c(n);
    for (std::size_t i = n; i-- > 0;) {
        cplx acc = rhs[i];
        for (std::size_t j = i + 1; j < n; ++j) acc -= a[i][j] * c[j];
        c[i] = acc / a[i][i];
    }
    return c;
}

// Integral over sigma in (0, sig_d) of F(sigma) = sigma^{-1/2} e^{iC/sigma}
// phi(sqrt(sigma)) with phi smooth: fit phi at scaled sample points, then
// sum exact moments C^{(j+1)/2} E_{(j+3)/2}(C/sig_d).  The error is
// estimated from the fit residual at a held-out sample.
inline std::pair<cplx, double> deep_tail(const std::function<cplx(double)>& fs, double c,
                                         double sig_d) {
    constexpr int deg = 7;
    const double x = c / sig_d;
    std::vector<double> vs(deg);
    std::vector<cplx> phis(deg);
    for (int j = 0; j < deg; ++j) {
        vs[j] = std::sqrt(sig_d * osc_tail_fracs[j]);
        phis[j] = fs(vs[j] * vs[j]) * vs[j] * std::exp(-iu * c / (vs[j] * vs[j]));
    }
    const auto cj = solve_vandermonde(vs, phis);
    const double vc = std::sqrt(sig_d * osc_tail_check_frac);
    cplx fit = 0.0;
    double p = 1.0;
    for (int j = 0; j < deg; ++j) {
        fit += cj[j] * p;
        p *= vc;
    }
    const double resid =
        std::abs(fit - fs(vc * vc) * vc * std::exp(-iu * c / (vc * vc)));
    cplx val = 0.0;
    for (int j = 0; j < deg; ++j)
        val += cj[j] * std::pow(c, 0.5 * (j + 1)) * e_nu_tail(0.5 * (j + 3), x);
    return {val, resid * 2.0 * std::sqrt(sig_d)};
}

struct adapt_stats {
    int panels = 0;
    double err = 0.0;
    int cap = 24000;
};

inline cplx gl20_panel(const std::function<cplx(double)>& f, double a, double b) {
    const gl_rule& r = gauss_legendre_rule(20);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    cplx acc = 0.0;
    for (int i = 0; i < 20; ++i) acc += r.weights[i] * f(mid + half * r.nodes[i]);
    return acc * half;
}

inline cplx adapt(const std::function<cplx(double)>& f, double lo, double hi,
                  double tol_density, int depth, adapt_stats& stats,
                  const std::function<double(double)>* phase) {
    const gl_rule& r = gauss_legendre_rule(20);
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    cplx whole = 0.0;
    double amax = 0.0;
    for (int i = 0; i < 20; ++i) {
        const cplx fv = f(mid + half * r.nodes[i]);
        whole += r.weights[i] * fv;
        amax = std::max(amax, std::abs(fv));
    }
    whole *= half;
    const cplx fine = gl20_panel(f, lo, mid) + gl20_panel(f, mid, hi);
    const double est = std::abs(whole - fine);
    stats.panels += 2;
    if (stats.panels > stats.cap)
        throw quadrature_not_converged("oscillatory panel budget exhausted");
    const double ph = phase ? std::max((*phase)(lo), (*phase)(hi)) : 0.0;
    const double floor = 2.2e-16 * (30.0 + 150.0 * ph) * amax;
    if (est <= (hi - lo) * (tol_density + floor) || depth >= 52) {
        stats.err += est;
        return fine;
    }
    return adapt(f, lo, mid, tol_density, depth + 1, stats, phase) +
           adapt(f, mid, hi, tol_density, depth + 1, stats, phase);
}

// Smaller root of Ca/s + Cb/(W-s) = theta.
inline double psi_root_left(double theta, double ca, double cb, double w) {
    const double a = theta, b = cb - ca - theta * w, c = ca * w;
    const double disc = std::max(b * b - 4.0 * a * c, 0.0);
    return (-b - std::sqrt(disc)) / (2.0 * a);
}

}  // namespace detail

// Integral over (0, width) in sigma-from-the-left-end coordinates; fa(sigma)
// and fb(sigma) evaluate the integrand at distance sigma from the left/right
// end, so the gap is never reconstructed by a cancelling subtraction.
inline osc_result osc_integrate(const std::function<cplx(double)>& fa,
                                const std::function<cplx(double)>& fb, double width,
                                double ca, double cb, const osc_options& opt = {}) {
    using namespace detail;
    const double w = width;
    if (!(w > 0.0)) throw invalid_window("osc_integrate: need width > 0");
    ca = std::max(ca, 0.0);
    cb = std::max(cb, 0.0);
    const double czero = 1e-18 * w;
    const std::function<double(double)> psi = [=](double sig) {
        return (ca > 0.0 ? ca / sig : 0.0) + (cb > 0.0 ? cb / (w - sig) : 0.0);
    };
    const double ra = std::sqrt(ca), rb = std::sqrt(cb);
    double sig_star = 0.5 * w;
    if (ra + rb > 0.0) {
        sig_star = ra > 0.0 ? w * ra / (ra + rb) : 0.5 * w;
        if (rb == 0.0) sig_star = w;
    }
    sig_star = std::min(std::max(sig_star, 1e-3 * w), (1.0 - 1e-3) * w);
    const double psi_star = psi(sig_star);

    cplx total = 0.0;
    double err = 0.0;
    std::vector<double> edges;

    double start;
    if (ca > czero) {
        double theta_a = std::max({osc_theta_base, 1.2 * ca / sig_star, psi_star + 20.0,
                                   (ca * opt.k_scale) * (ca * opt.k_scale) / 0.15});
        if (cb > 0.0)
            theta_a = std::max(theta_a,
                               std::min(ca * cb / (0.05 * w * w), osc_theta_cap));
        const double sig_da = ca / theta_a;
        auto [tval, terr] = deep_tail(fa, ca, sig_da);
        total += tval;
        err += terr;
        double lo = sig_da;
        while (lo < sig_star && psi(lo) - psi_star > osc_dtheta) {
            edges.push_back(lo);
            double nxt = std::min(lo * osc_ratio, 0.999 * sig_star);
            if (psi(lo) - psi(nxt) > osc_dtheta)
                nxt = psi_root_left(psi(lo) - osc_dtheta, ca, cb, w);
            if (nxt <= lo) break;
            lo = nxt;
        }
        start = sig_da;
    } else {
        const double sig_v = std::min(0.25 * w, cb > 0.0 ? 0.5 * w * w / cb : 0.25 * w);
        adapt_stats stats_v;
        stats_v.cap = opt.cap;
        total += adapt([&](double v) { return 2.0 * v * fa(v * v); }, 0.0,
                       std::sqrt(sig_v), opt.abs_tol / w, 0, stats_v, nullptr);
        err += 6.0 * stats_v.err;
        start = sig_v;
    }

    const std::function<double(double)> psi_b = [&](double sig) { return psi(w - sig); };
    double stop;
    if (cb > czero) {
        double theta_b = std::max({osc_theta_base, 1.2 * cb / (w - sig_star),
                                   psi_star + 20.0,
                                   (cb * opt.k_scale) * (cb * opt.k_scale) / 0.15});
        if (ca > 0.0)
            theta_b = std::max(theta_b,
                               std::min(ca * cb / (0.05 * w * w), osc_theta_cap));
        const double sig_db = cb / theta_b;
        auto [tval, terr] = deep_tail(fb, cb, sig_db);
        total += tval;
        err += terr;
        double lo = sig_db;
        while (lo < w - sig_star && psi_b(lo) - psi_star > osc_dtheta) {
            edges.push_back(w - lo);
            double nxt = std::min(lo * osc_ratio, 0.999 * (w - sig_star));
            if (psi_b(lo) - psi_b(nxt) > osc_dtheta)
                nxt = psi_root_left(psi_b(lo) - osc_dtheta, cb, ca, w);
            if (nxt <= lo) break;
            lo = nxt;
        }
        stop = w - sig_db;
    } else {
        const double sig_v = std::min(0.25 * w, ca > 0.0 ? 0.5 * w * w / ca : 0.25 * w);
        adapt_stats stats_v;
        stats_v.cap = opt.cap;
        total += adapt([&](double v) { return 2.0 * v * fb(v * v); }, 0.0,
                       std::sqrt(sig_v), opt.abs_tol / w, 0, stats_v, nullptr);
        err += 6.0 * stats_v.err;
        stop = w - sig_v;
    }

    std::set<double> sig_edges{start, stop};
    for (double e : edges)
        if (start < e && e < stop) sig_edges.insert(e);
    if (start < sig_star && sig_star < stop) sig_edges.insert(sig_star);
    adapt_stats stats;
    stats.cap = opt.cap;
    double prev = -1.0;
    for (double e : sig_edges) {
        if (prev >= 0.0 && e > prev)
            total += adapt(fa, prev, e, 0.8 * opt.abs_tol / (stop - start), 0, stats,
                           &psi);
        prev = e;
    }
    err += stats.err;
    return {total, err};
}

// Convenience wrapper for an integrand given in absolute coordinates on
// [a, b]; adequate when the endpoint gaps need no subtraction care.
inline osc_result osc_integrate(const std::function<cplx(double)>& f, double a, double b,
                                double ca, double cb, const osc_options& opt = {}) {
    return osc_integrate([=](double sig) { return f(a + sig); },
                         [=](double sig) { return f(b - sig); }, b - a, ca, cb, opt);
}

}  // namespace oscprop
