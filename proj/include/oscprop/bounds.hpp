#pragma once

#include <cmath>
#include <vector>

#include "oscprop/errors.hpp"
#include "oscprop/numerics.hpp"

namespace oscprop {

// Growth constant of the pinned-transform modulus bound:
// L = pi + (3/4) pi k |Delta| + 2 k |Delta| + (pi/4) |Delta| (2 + k^2 |Delta|).
inline double eq11_constant(double k, double delta_len) {
    if (!(k >= 0.0)) throw domain_error("eq11_constant: need k >= 0");
    if (!(delta_len > 0.0)) throw domain_error("eq11_constant: need delta_len > 0");
    const double kd = k * delta_len;
    return pi + 0.75 * pi * kd + 2.0 * kd + 0.25 * pi * delta_len * (2.0 + k * kd);
}

// Conjugate-exponent pair and growth data feeding the term bounds C_n.
struct bound_params {
    double gamma;
    double q;
    double p;
    double eq11_L;
    double q_value;
};

inline void validate_bound_params(const bound_params& bp) {
    if (!(bp.gamma > 0.0)) throw domain_error("bound_params: need gamma > 0");
    if (!(bp.q > 2.0)) throw domain_error("bound_params: need q > 2");
    if (!(bp.p < 2.0)) throw domain_error("bound_params: need p < 2");
    if (std::abs(1.0 / bp.p + 1.0 / bp.q - 1.0) > 1e-12)
        throw domain_error("bound_params: exponents are not conjugate");
    if (!(bp.q_value >= 0.0)) throw domain_error("bound_params: need q_value >= 0");
}

inline bound_params make_bound_params(double gamma, double q, double eq11_L,
                                      double q_value) {
    bound_params bp{gamma, q, q / (q - 1.0), eq11_L, q_value};
    validate_bound_params(bp);
    return bp;
}

// Certified bound on the modulus of the n-th series term:
// C_n = e^{gamma (x0^2+x^2)} Q^n sup|nu_t|^{n/p} Gamma((2-p)/2)^{(n+1)/p}
//       |Delta|^{n/p-(n+1)/2} / (2^{n+1} Gamma((n+1)(2-p)/2)^{1/p}).
inline double tail_bound_cn(int n, const bound_params& bp, double nu_t_sup,
                            double delta_len, double x0, double x) {
    if (n < 0) throw domain_error("tail_bound_cn: need n >= 0");
    if (!(delta_len > 0.0)) throw domain_error("tail_bound_cn: need delta_len > 0");
    if (!(nu_t_sup >= 0.0)) throw domain_error("tail_bound_cn: need nu_t_sup >= 0");
    validate_bound_params(bp);
    const double half_gap = 0.5 * (2.0 - bp.p);
    if (!((n + 1.0) * half_gap > 0.0))
        throw domain_error("tail_bound_cn: gamma-function argument must be positive");
    if (n >= 1 && (bp.q_value == 0.0 || nu_t_sup == 0.0)) return 0.0;
    double lg = bp.gamma * (x0 * x0 + x * x);
    if (n >= 1) {
        lg += n * std::log(bp.q_value);
        lg += (n / bp.p) * std::log(nu_t_sup);
    }
    lg += ((n + 1.0) / bp.p) * log_gamma(half_gap);
    lg += (n / bp.p - 0.5 * (n + 1.0)) * std::log(delta_len);
    lg -= (n + 1.0) * std::log(2.0);
    lg -= (1.0 / bp.p) * log_gamma((n + 1.0) * half_gap);
    return std::exp(lg);
}

// Ordered-gap integral with power weight over t0 < t_1 < ... < t_n < t:
// integral of prod_{j=1}^{n+1} (4 (t_j - t_{j-1}))^{-alpha}
//   = (Gamma(1-alpha)/4^alpha)^{n+1} len^{n(1-alpha)-alpha} / Gamma((n+1)(1-alpha)).
inline double simplex_gamma_integral(int n, double alpha, double len) {
    if (n < 1) throw domain_error("simplex_gamma_integral: need n >= 1");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw domain_error("simplex_gamma_integral: need 0 < alpha < 1");
    if (!(len > 0.0)) throw domain_error("simplex_gamma_integral: need len > 0");
    const double lg = (n + 1.0) * (log_gamma(1.0 - alpha) - alpha * std::log(4.0)) +
                      (n * (1.0 - alpha) - alpha) * std::log(len) -
                      log_gamma((n + 1.0) * (1.0 - alpha));
    return std::exp(lg);
}

namespace detail {

// Nested quadrature for the unit gap-simplex integral of prod g_j^-alpha.
// Each level carries the remaining budget rho inward; the explicit g^-alpha
// end is desingularized by g = v^{1/(1-alpha)} and the inward face, where the
// remaining integral vanishes like a fractional power, gets dyadic panels.
struct simplex_quadrature {
    int n;
    double alpha;
    double ia;
    const gl_rule& rule;
    int bulk;
    int levels;

    double rem_inner(double rho) const {
        const double vmax = std::pow(0.5 * rho, 1.0 - alpha);
        double acc = 0.0;
        const double h = 0.5 / bulk;
        for (int j = 0; j < bulk; ++j) {
            const double m = (j + 0.5) / bulk;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                const double w = m + h * rule.nodes[i];
                const double g = std::pow(vmax * w, ia);
                acc += h * rule.weights[i] * ia * std::pow(rho - g, -alpha);
            }
        }
        return 2.0 * vmax * acc;
    }

    double rem(int m, double rho) const {
        if (m == n) return rem_inner(rho);
        auto inner = [&](double u) { return m + 1 == n ? rem_inner(u) : rem(m + 1, u); };
        const double half = 0.5 * rho;
        const double vmax = std::pow(half, 1.0 - alpha);
        double left = 0.0;
        for (int j = 0; j < bulk; ++j) {
            const double a = vmax * j / bulk, b = vmax * (j + 1) / bulk;
            const double mid = 0.5 * (a + b), hw = 0.5 * (b - a);
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                const double v = mid + hw * rule.nodes[i];
                left += hw * rule.weights[i] * ia * inner(rho - std::pow(v, ia));
            }
        }
        std::vector<double> edges{0.0};
        for (int j = levels; j >= 0; --j) edges.push_back(half * std::pow(2.0, -j));
        double right = 0.0;
        for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
            const double mid = 0.5 * (edges[e] + edges[e + 1]);
            const double hw = 0.5 * (edges[e + 1] - edges[e]);
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                const double u = mid + hw * rule.nodes[i];
                right += hw * rule.weights[i] * std::pow(rho - u, -alpha) * inner(u);
            }
        }
        return left + right;
    }
};

}  // namespace detail

inline double simplex_direct(int n, double alpha, double len, int gl_order = 12,
                             int bulk = 8, int levels = 30) {
    if (n < 1) throw domain_error("simplex_direct: need n >= 1");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw domain_error("simplex_direct: need 0 < alpha < 1");
    if (!(len > 0.0)) throw domain_error("simplex_direct: need len > 0");
    detail::simplex_quadrature sq{n,    alpha, 1.0 / (1.0 - alpha),
                                  gauss_legendre_rule(gl_order), bulk, levels};
    const double unit = sq.rem(1, 1.0);
    return std::pow(4.0, -alpha * (n + 1)) *
           std::pow(len, n * (1.0 - alpha) - alpha) * unit;
}

}  // namespace oscprop
