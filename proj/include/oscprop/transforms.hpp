#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "oscprop/bounds.hpp"
#include "oscprop/errors.hpp"
#include "oscprop/kernels.hpp"
#include "oscprop/numerics.hpp"
#include "oscprop/test_function.hpp"

namespace oscprop {

namespace detail {

// Quadratic polynomial in the complex scale z; every window functional of the
// affine argument z f + g is one of these.
struct zpoly {
    cplx c2{0.0, 0.0};
    cplx c1{0.0, 0.0};
    cplx c0{0.0, 0.0};

    cplx operator()(const cplx& z) const { return (c2 * z + c1) * z + c0; }
};

inline std::vector<double> merged_cuts(const shifted_test_function& f,
                                       const shifted_test_function* g, double a, double b) {
    auto c = f.cuts(a, b);
    if (g != nullptr) {
        const auto cg = g->cuts(a, b);
        if (cg.size() > 2) c.insert(c.end(), cg.begin() + 1, cg.end() - 1);
        std::sort(c.begin(), c.end());
        c.erase(std::unique(c.begin(), c.end()), c.end());
    }
    return c;
}

template <class F>
double piecewise_value(const std::vector<double>& c, F&& fn) {
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < c.size(); ++j)
        acc += gauss_legendre([&](double u) { return cplx(fn(u), 0.0); }, c[j], c[j + 1], 16)
                   .real();
    return acc;
}

// Window functionals of h = z f + g over [t0, t]: endpoint values, plain
// integral, windowed and off-window L2 forms, and (for k != 0) the
// cosine-weighted single and ordered double integrals.
struct window_functionals {
    double dt = 0.0;
    zpoly end_lo;
    zpoly end_hi;
    zpoly i1;
    zpoly l2win;
    zpoly l2off;
    zpoly cl;
    zpoly cr;
    zpoly dd;
};

inline window_functionals compute_functionals(double t0, double t, double k,
                                              const shifted_test_function& f,
                                              const shifted_test_function* g,
                                              bool need_off) {
    window_functionals w;
    w.dt = t - t0;
    const bool fz = f.is_zero();
    const bool gz = (g == nullptr) || g->is_zero();
    if (!fz) {
        w.end_lo.c1 = f.value(t0);
        w.end_hi.c1 = f.value(t);
    }
    if (!gz) {
        w.end_lo.c0 = g->value(t0);
        w.end_hi.c0 = g->value(t);
    }
    if (fz && gz) return w;
    const auto cw = merged_cuts(f, g, t0, t);
    if (!fz) {
        w.i1.c1 = piecewise_value(cw, [&](double u) { return f.value(u); });
        w.l2win.c2 = piecewise_value(cw, [&](double u) {
            const double v = f.value(u);
            return v * v;
        });
    }
    if (!gz) {
        w.i1.c0 = piecewise_value(cw, [&](double u) { return g->value(u); });
        w.l2win.c0 = piecewise_value(cw, [&](double u) {
            const double v = g->value(u);
            return v * v;
        });
    }
    if (!fz && !gz)
        w.l2win.c1 =
            2.0 * piecewise_value(cw, [&](double u) { return f.value(u) * g->value(u); });
    if (k != 0.0) {
        if (!fz) {
            w.cl.c1 = cos_weighted_integral(cw, f, k, t0, false);
            w.cr.c1 = cos_weighted_integral(cw, f, k, t, true);
            w.dd.c2 = double_cos_integral(cw, f, f, t0, t, k);
        }
        if (!gz) {
            w.cl.c0 = cos_weighted_integral(cw, *g, k, t0, false);
            w.cr.c0 = cos_weighted_integral(cw, *g, k, t, true);
            w.dd.c0 = double_cos_integral(cw, *g, *g, t0, t, k);
        }
        if (!fz && !gz)
            w.dd.c1 = double_cos_integral(cw, f, *g, t0, t, k) +
                      double_cos_integral(cw, *g, f, t0, t, k);
    }
    if (need_off) {
        double lo = 0.0, hi = 0.0;
        bool any = false;
        auto widen = [&](const shifted_test_function& s) {
            if (s.is_zero()) return;
            const auto [slo, shi] = s.support_hull();
            if (!any) {
                lo = slo;
                hi = shi;
                any = true;
            } else {
                lo = std::min(lo, slo);
                hi = std::max(hi, shi);
            }
        };
        widen(f);
        if (g != nullptr) widen(*g);
        if (any && hi > lo) {
            const auto ch = merged_cuts(f, g, lo, hi);
            double full_ff = 0.0, full_fg = 0.0, full_gg = 0.0;
            if (!fz)
                full_ff = piecewise_value(ch, [&](double u) {
                    const double v = f.value(u);
                    return v * v;
                });
            if (!gz)
                full_gg = piecewise_value(ch, [&](double u) {
                    const double v = g->value(u);
                    return v * v;
                });
            if (!fz && !gz)
                full_fg =
                    2.0 * piecewise_value(ch, [&](double u) { return f.value(u) * g->value(u); });
            w.l2off.c2 = cplx(std::max(0.0, full_ff - w.l2win.c2.real()), 0.0);
            w.l2off.c1 = cplx(full_fg, 0.0) - w.l2win.c1;
            w.l2off.c0 = cplx(std::max(0.0, full_gg - w.l2win.c0.real()), 0.0);
        }
    }
    return w;
}

// Harmonic kernel over one window at argument z f + g, built from the
// functional bundle; k = 0 falls back to the free form.
inline cplx kernel_core(double k, double x0, double x, const window_functionals& w,
                        const cplx& z) {
    const cplx endphase = iu * (x0 * w.end_lo(z) - x * w.end_hi(z));
    if (k == 0.0) {
        const cplx pref = 1.0 / std::sqrt(cplx(0.0, 2.0 * pi * w.dt));
        const cplx arg = w.i1(z) + (x - x0);
        return pref *
               std::exp(endphase - 0.5 * iu * w.l2win(z) + iu / (2.0 * w.dt) * arg * arg);
    }
    const double s = std::sin(k * w.dt), c = std::cos(k * w.dt);
    const cplx pref = std::sqrt(k / cplx(0.0, 2.0 * pi * s));
    const cplx bracket = (x0 * x0 + x * x) * c - 2.0 * x0 * x + 2.0 * x * w.cl(z) -
                         2.0 * x0 * w.cr(z) + 2.0 * w.dd(z);
    return pref * std::exp(iu * k / (2.0 * s) * bracket + endphase - 0.5 * iu * w.l2win(z));
}

// T-transform over one window at argument z f + g: the kernel phase pattern
// with the endpoint phases absent and the off-window damping present.
inline cplx transform_core(double k, double x0, double x, const window_functionals& w,
                           const cplx& z) {
    const cplx damp = -0.5 * iu * w.l2win(z) - 0.5 * w.l2off(z);
    if (k == 0.0) {
        const cplx pref = 1.0 / std::sqrt(cplx(0.0, 2.0 * pi * w.dt));
        const cplx arg = w.i1(z) + (x - x0);
        return pref * std::exp(damp + iu / (2.0 * w.dt) * arg * arg);
    }
    const double s = std::sin(k * w.dt), c = std::cos(k * w.dt);
    const cplx pref = std::sqrt(k / cplx(0.0, 2.0 * pi * s));
    const cplx bracket = (x0 * x0 + x * x) * c - 2.0 * x0 * x + 2.0 * x * w.cl(z) -
                         2.0 * x0 * w.cr(z) + 2.0 * w.dd(z);
    return pref * std::exp(iu * k / (2.0 * s) * bracket + damp);
}

}  // namespace detail

inline cplx t_transform_free(double x, double t, double x0, double t0,
                             const shifted_test_function& f, cplx z = cplx(1.0, 0.0)) {
    if (!(t > t0)) throw invalid_window("t_transform_free: need t > t0");
    const auto w = detail::compute_functionals(t0, t, 0.0, f, nullptr, true);
    const cplx value = detail::transform_core(0.0, x0, x, w, z);
    ensure_finite(value, "t_transform_free");
    return value;
}

inline cplx t_transform_harmonic(const oscillator_problem& p, const shifted_test_function& f,
                                 cplx z = cplx(1.0, 0.0)) {
    const auto w =
        detail::compute_functionals(p.window.t0, p.window.t, p.k, f, nullptr, true);
    const cplx value = detail::transform_core(p.k, p.x0, p.x, w, z);
    ensure_finite(value, "t_transform_harmonic");
    return value;
}

inline cplx t_transform_harmonic(const oscillator_problem& p, const shifted_test_function& f,
                                 const shifted_test_function& g, cplx z) {
    const auto w = detail::compute_functionals(p.window.t0, p.window.t, p.k, f, &g, true);
    const cplx value = detail::transform_core(p.k, p.x0, p.x, w, z);
    ensure_finite(value, "t_transform_harmonic");
    return value;
}

// S and T transforms are related by S(f) = exp(-|f|^2 / 2) T(-i f); the caller
// supplies the T value already evaluated at -i f.
inline cplx s_from_t(cplx t_value_at_minus_if, const shifted_test_function& f) {
    return std::exp(-0.5 * l2sq_full(f)) * t_value_at_minus_if;
}

inline cplx donsker_t(double t, double a, const shifted_test_function& f,
                      cplx z = cplx(1.0, 0.0)) {
    if (!(t > 0.0)) throw invalid_window("donsker_t: need t > 0");
    const cplx arg = z * integral(f, 0.0, t) + iu * a;
    const cplx value =
        std::exp(-0.5 * z * z * l2sq_full(f) + arg * arg / (2.0 * t)) /
        std::sqrt(2.0 * pi * t);
    ensure_finite(value, "donsker_t");
    return value;
}

inline cplx donsker_s(double t, double a, const shifted_test_function& f) {
    if (!(t > 0.0)) throw invalid_window("donsker_s: need t > 0");
    const double d = integral(f, 0.0, t) - a;
    return std::exp(-d * d / (2.0 * t)) / std::sqrt(2.0 * pi * t);
}

struct pin_configuration {
    std::vector<std::pair<double, double>> pins;
};

inline void validate_pins(const oscillator_problem& p, const pin_configuration& pc) {
    double prev = p.window.t0;
    for (const auto& pin : pc.pins) {
        if (!(pin.first > prev))
            throw invalid_pins("pin_configuration: pin times must increase strictly from t0");
        prev = pin.first;
    }
    if (!(prev < p.window.t))
        throw invalid_pins("pin_configuration: pin times must stay strictly below t");
}

inline double pin_sup_abs(const oscillator_problem& p, const pin_configuration& pc) {
    double sup = std::max(std::abs(p.x0), std::abs(p.x));
    for (const auto& pin : pc.pins) sup = std::max(sup, std::abs(pin.second));
    return sup;
}

namespace detail {

inline cplx pinned_impl(const oscillator_problem& p, const pin_configuration& pc,
                        const shifted_test_function& f, const shifted_test_function* g,
                        const cplx& z) {
    validate_pins(p, pc);
    const double t0 = p.window.t0, t = p.window.t;
    const auto full = compute_functionals(t0, t, 0.0, f, g, true);
    cplx acc = std::exp(-0.5 * full.l2off(z) +
                        iu * (p.x * full.end_hi(z) - p.x0 * full.end_lo(z)));
    double tprev = t0, xprev = p.x0;
    auto factor = [&](double tj, double xj) {
        const auto w = compute_functionals(tprev, tj, p.k, f, g, false);
        acc *= kernel_core(p.k, xprev, xj, w, z);
        tprev = tj;
        xprev = xj;
    };
    for (const auto& pin : pc.pins) factor(pin.first, pin.second);
    factor(t, p.x);
    ensure_finite(acc, "pinned_t_transform");
    return acc;
}

}  // namespace detail

inline cplx pinned_t_transform(const oscillator_problem& p, const pin_configuration& pc,
                               const shifted_test_function& f, cplx z = cplx(1.0, 0.0)) {
    return detail::pinned_impl(p, pc, f, nullptr, z);
}

inline cplx pinned_t_transform(const oscillator_problem& p, const pin_configuration& pc,
                               const shifted_test_function& f, const shifted_test_function& g,
                               cplx z) {
    return detail::pinned_impl(p, pc, f, &g, z);
}

// Single-pin product formula: (2 pi)^{-1} integral over lambda of
// exp(-i lambda (x1 - x0)) T(f + lambda 1_[t0, t1)), evaluated analytically by
// quadratic extraction in lambda, compared against the one-pin product.
inline double product_formula_check(const oscillator_problem& p, double t1, double x1,
                                    const shifted_test_function& f) {
    if (!(t1 > p.window.t0 && t1 < p.window.t))
        throw invalid_pins("product_formula_check: pin time must be interior");
    auto tt = [&](double lam) {
        return t_transform_harmonic(p, f.with_shift(lam, p.window.t0, t1));
    };
    const auto q = extract_quadratic(tt, -1.0, 0.0, 1.0);
    const cplx lhs =
        complex_gaussian_integral({q.a2, q.a1 - iu * (x1 - p.x0), q.a0}) / (2.0 * pi);
    pin_configuration pc;
    pc.pins.emplace_back(t1, x1);
    const cplx rhs = pinned_t_transform(p, pc, f);
    return std::abs(lhs - rhs) / std::abs(rhs);
}

struct growth_bound {
    double lhs;
    double rhs;
    double log_rhs;
};

// Modulus bound for the pinned transform at argument z f:
// lhs = |pinned transform|, rhs = prod_j (4 |Delta_j|)^{-1/2} * exp(X^2 gamma)
//       * exp(|z|^2 ||f||^2 (1/2 + pi |Delta| / 2 + L^2 / (2 gamma))).
inline growth_bound growth_bound_check(const oscillator_problem& p,
                                       const pin_configuration& pc, const test_function& f,
                                       cplx z, double gamma) {
    if (!(gamma > 0.0)) throw domain_error("growth_bound_check: need gamma > 0");
    validate_pins(p, pc);
    const shifted_test_function sf(f);
    const double lhs = std::abs(pinned_t_transform(p, pc, sf, z));
    const auto nb = norms(f, p.window);
    const double dlen = p.window.length();
    const double big_l = eq11_constant(p.k, dlen);
    const double sup_x = pin_sup_abs(p, pc);
    double logpref = 0.0;
    double tprev = p.window.t0;
    for (const auto& pin : pc.pins) {
        logpref -= 0.5 * std::log(4.0 * (pin.first - tprev));
        tprev = pin.first;
    }
    logpref -= 0.5 * std::log(4.0 * (p.window.t - tprev));
    const double zn = std::abs(z);
    const double fn = nb.triple;
    const double logrhs =
        logpref + sup_x * sup_x * gamma +
        zn * zn * fn * fn * (0.5 + 0.5 * pi * dlen + big_l * big_l / (2.0 * gamma));
    return {lhs, std::exp(logrhs), logrhs};
}

}  // namespace oscprop
