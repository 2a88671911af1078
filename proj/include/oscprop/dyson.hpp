#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "oscprop/bounds.hpp"
#include "oscprop/errors.hpp"
#include "oscprop/kernels.hpp"
#include "oscprop/measures.hpp"
#include "oscprop/numerics.hpp"
#include "oscprop/oscillatory.hpp"
#include "oscprop/test_function.hpp"
#include "oscprop/transforms.hpp"

namespace oscprop {

// Pinned kernel across a bare time gap.  Caller guarantees gap > 0 and
// k * gap < pi/2; no validation on this hot path.  sin(k * gap) > 0 there, so
// the prefactor square root reduces to a real one times (1 - i) / sqrt(2).
inline cplx gap_kernel(double x_hi, double x_lo, double gap, double k) {
    double r, phi;
    if (k == 0.0) {
        const double d = x_hi - x_lo;
        r = 1.0 / std::sqrt(2.0 * pi * gap);
        phi = d * d / (2.0 * gap);
    } else {
        const double s = std::sin(k * gap);
        r = std::sqrt(k / (2.0 * pi * s));
        const double xx = x_hi * x_hi + x_lo * x_lo;
        phi = xx == 0.0 ? 0.0
                        : k / (2.0 * s) * (xx * std::cos(k * gap) - 2.0 * x_hi * x_lo);
    }
    const double h = r * 0.7071067811865476;
    if (phi == 0.0) return cplx(h, -h);
    const double cp = std::cos(phi), sp = std::sin(phi);
    return cplx(h * (cp + sp), h * (sp - cp));
}

struct series_settings {
    int grid_n = 1024;
    double tol0 = 1e-13;
    int spatial_order = 12;
    double beta = 1.0;
    double q = 4.0;
};

struct series_result {
    std::vector<cplx> terms;
    std::vector<cplx> partial_sums;
    std::vector<double> tail_bounds;
    int truncation_order = 0;
    double certified_error = 0.0;
};

struct max_order_exceeded : error {
    series_result partial;
    max_order_exceeded(const std::string& msg, series_result part)
        : error(msg), partial(std::move(part)) {}
};

struct volterra_result {
    cplx value;
    double err;
};

namespace detail {

inline void require_same_window(const time_window& nu_w, const time_window& p_w,
                                const char* who) {
    const double tol = 1e-12 * std::max(1.0, std::abs(p_w.t0) + std::abs(p_w.t));
    if (std::abs(nu_w.t0 - p_w.t0) > tol || std::abs(nu_w.t - p_w.t) > tol)
        throw domain_error(std::string(who) + ": measure window must match the problem window");
}

// Kernel factor across one sub-window; plain pinned kernel when f == 0, the
// f-dependent kernel otherwise.  end_time fixes the sub-window in absolute
// time, which matters only for the f-dependent branch.
struct gap_evaluator {
    double k = 0.0;
    const shifted_test_function* f = nullptr;

    cplx operator()(double x_hi, double x_lo, double end_time, double gap) const {
        if (f == nullptr) return gap_kernel(x_hi, x_lo, gap, k);
        return harmonic_kernel(
            oscillator_problem(time_window(end_time - gap, end_time), k, x_lo, x_hi), *f);
    }
};

// Off-window damping and endpoint phase of the pinned product representation;
// every series term carries this common factor.
inline cplx window_prefactor(const oscillator_problem& p, const shifted_test_function& f) {
    if (f.is_zero()) return cplx(1.0, 0.0);
    const double off = std::max(0.0, l2sq_full(f) - l2sq(f, p.window.t0, p.window.t));
    return std::exp(
        cplx(-0.5 * off, p.x * f.value(p.window.t) - p.x0 * f.value(p.window.t0)));
}

struct series_atom {
    double position;
    double weight;
    const piecewise_constant_density* temporal;
};

// Spatial discretization of the measure: atoms pass through exactly, density
// pieces become Gauss-Legendre nodes with signed weights.
inline std::vector<series_atom> atomize(const signed_measure& nu, int spatial_order) {
    std::vector<series_atom> atoms;
    for (const auto& comp : nu.components()) {
        if (comp.coefficient == 0.0) continue;
        if (comp.spatial.is_atom()) {
            atoms.push_back({comp.spatial.atom_position(), comp.coefficient, &comp.temporal});
            continue;
        }
        const auto& den = comp.spatial.density();
        const gl_rule& rule = gauss_legendre_rule(spatial_order);
        const auto& bp = den.breakpoints();
        const auto& vals = den.values();
        for (std::size_t j = 0; j < vals.size(); ++j) {
            if (vals[j] == 0.0) continue;
            const double mid = 0.5 * (bp[j] + bp[j + 1]);
            const double half = 0.5 * (bp[j + 1] - bp[j]);
            for (int i = 0; i < spatial_order; ++i)
                atoms.push_back({mid + half * rule.nodes[i],
                                 comp.coefficient * vals[j] * half * rule.weights[i],
                                 &comp.temporal});
        }
    }
    return atoms;
}

// Five-point finite-difference slopes on a uniform grid with spacing h.
inline std::vector<cplx> fd_slopes(const std::vector<cplx>& y, double h) {
    const int n = static_cast<int>(y.size());
    std::vector<cplx> d(n);
    for (int i = 2; i < n - 2; ++i)
        d[i] = (8.0 * (y[i + 1] - y[i - 1]) - (y[i + 2] - y[i - 2])) / (12.0 * h);
    const double c[5] = {-25.0, 48.0, -36.0, 16.0, -3.0};
    auto one_sided = [&](int i, int sgn) {
        cplx acc = 0.0;
        for (int m = 0; m < 5; ++m) acc += c[m] * y[i + sgn * m];
        return static_cast<double>(sgn) * acc / (12.0 * h);
    };
    d[0] = one_sided(0, 1);
    d[1] = one_sided(1, 1);
    d[n - 2] = one_sided(n - 2, -1);
    d[n - 1] = one_sided(n - 1, -1);
    return d;
}

// Cubic Hermite interpolation of grid values sampled at
// s_l = t0 + dt sin^2(pi l / (2 n)); uniform in u = (2/pi) asin sqrtapprox,
// so resolution concentrates at the window ends.
struct chi_interp {
    double t0 = 0.0;
    double dt = 1.0;
    int n = 0;
    std::vector<cplx> y;
    std::vector<cplx> d;

    chi_interp() = default;
    chi_interp(double t0_, double dt_, std::vector<cplx> vals)
        : t0(t0_),
          dt(dt_),
          n(static_cast<int>(vals.size()) - 1),
          y(std::move(vals)),
          d(fd_slopes(y, 1.0 / n)) {}

    cplx operator()(double s) const {
        const double arg = std::clamp((s - t0) / dt, 0.0, 1.0);
        const double u = (2.0 / pi) * std::asin(std::sqrt(arg));
        const int j = std::clamp(static_cast<int>(u * n), 0, n - 1);
        const double xi = u * n - j;
        const double xi2 = xi * xi, xi3 = xi2 * xi;
        const double h00 = 2.0 * xi3 - 3.0 * xi2 + 1.0;
        const double h10 = xi3 - 2.0 * xi2 + xi;
        const double h01 = -2.0 * xi3 + 3.0 * xi2;
        const double h11 = xi3 - xi2;
        const double h = 1.0 / n;
        return h00 * y[j] + h10 * h * d[j] + h01 * y[j + 1] + h11 * h * d[j + 1];
    }
};

// Integral over sigma in (0, sig_d) of a sqrt-singular layer integrand; the
// oscillatory moment fit when the corner phase constant is positive, the
// plain even-moment fit when the phase vanishes.
inline std::pair<cplx, double> layer_tail(const std::function<cplx(double)>& fs, double c,
                                          double sig_d) {
    if (c > 0.0) return deep_tail(fs, c, sig_d);
    constexpr int deg = 7;
    std::vector<double> vs(deg);
    std::vector<cplx> phis(deg);
    for (int j = 0; j < deg; ++j) {
        vs[j] = std::sqrt(sig_d * osc_tail_fracs[j]);
        phis[j] = fs(vs[j] * vs[j]) * vs[j];
    }
    const auto cj = solve_vandermonde(vs, phis);
    const double vc = std::sqrt(sig_d * osc_tail_check_frac);
    cplx fit = 0.0;
    double pw = 1.0;
    for (int j = 0; j < deg; ++j) {
        fit += cj[j] * pw;
        pw *= vc;
    }
    const double resid = std::abs(fit - fs(vc * vc) * vc);
    const double vd = std::sqrt(sig_d);
    cplx val = 0.0;
    for (int j = 0; j < deg; ++j)
        val += cj[j] * (2.0 * std::pow(vd, j + 1) / (j + 1));
    return {val, resid * 2.0 * vd};
}

}  // namespace detail

// Recursive evaluation of the perturbation series: level m holds
// chi_m(i, s) = phi_m(a_i, s) / K(a_i, s | x0, t0) on the sin^2-graded grid,
// phi_0 = 1, and each level integrates the previous one against the kernel
// and the measure.  Levels are built lazily and cached.
class dyson_engine {
  public:
    dyson_engine(const signed_measure& nu, const oscillator_problem& p,
                 const shifted_test_function& f, const series_settings& settings = {})
        : nu_(nu), p_(p), f_(f), set_(settings) {
        if (set_.grid_n < 16) throw domain_error("dyson_engine: need grid_n >= 16");
        if (set_.spatial_order < 2 || set_.spatial_order > 64)
            throw domain_error("dyson_engine: spatial_order out of range");
        if (!(set_.tol0 > 0.0)) throw domain_error("dyson_engine: need tol0 > 0");
        detail::require_same_window(nu_.window(), p_.window, "dyson_engine");
        atoms_ = detail::atomize(nu_, set_.spatial_order);
        eval_ = detail::gap_evaluator{p_.k, f_.is_zero() ? nullptr : &f_};
        prefactor_ = detail::window_prefactor(p_, f_);
        const int n = set_.grid_n;
        grid_.resize(n + 1);
        for (int l = 0; l <= n; ++l) {
            const double sn = std::sin(pi * l / (2.0 * n));
            grid_[l] = p_.window.t0 + p_.window.length() * sn * sn;
        }
    }

    cplx term(int n) {
        if (n < 0) throw domain_error("dyson_engine: need n >= 0");
        if (n == 0) return t_transform_harmonic(p_, f_);
        if (atoms_.empty()) return cplx(0.0, 0.0);
        ensure_levels(n - 1);
        const double tol = level_tol(n);
        cplx acc = 0.0;
        for (std::size_t j = 0; j < atoms_.size(); ++j)
            acc += cplx(0.0, -atoms_[j].weight) *
                   source_integral(p_.x, p_.window.t, atoms_[j], interp(n - 1, j),
                                   cplx(1.0, 0.0), tol);
        return prefactor_ * acc;
    }

    const oscillator_problem& problem() const { return p_; }
    const signed_measure& measure() const { return nu_; }
    cplx prefactor() const { return prefactor_; }

  private:
    double level_tol(int order) const {
        return std::max(set_.tol0 * std::pow(0.2, order - 1), 3e-16);
    }

    const detail::chi_interp* interp(int m, std::size_t j) const {
        return m == 0 ? nullptr : &levels_[m - 1][j];
    }

    void ensure_levels(int upto) {
        while (static_cast<int>(levels_.size()) < upto)
            build_level(static_cast<int>(levels_.size()) + 1);
    }

    void build_level(int m) {
        const int n = set_.grid_n;
        const double t0 = p_.window.t0;
        const double tol = level_tol(m);
        const std::size_t na = atoms_.size();
        std::vector<std::vector<cplx>> vals(na, std::vector<cplx>(n + 1, cplx(0.0, 0.0)));
        for (int l = 1; l <= n; ++l) {
            const double sl = grid_[l];
            for (std::size_t i = 0; i < na; ++i) {
                const cplx k0 = eval_(atoms_[i].position, p_.x0, sl, sl - t0);
                cplx acc = 0.0;
                for (std::size_t j = 0; j < na; ++j)
                    acc += cplx(0.0, -atoms_[j].weight) *
                           source_integral(atoms_[i].position, sl, atoms_[j],
                                           interp(m - 1, j), k0, tol);
                vals[i][l] = acc;
            }
        }
        std::vector<detail::chi_interp> level;
        level.reserve(na);
        for (std::size_t i = 0; i < na; ++i)
            level.emplace_back(t0, p_.window.length(), std::move(vals[i]));
        levels_.push_back(std::move(level));
    }

    // Integral over s' in (t0, s_hi) of
    //   K(y_hi, s_hi | a_j, s') g_j(s') K(a_j, s' | x0, t0) chi_prev(s') / k0,
    // split at the temporal breakpoints of g_j so each piece sees a constant
    // density value; corner phase constants apply only at the window ends.
    cplx source_integral(double y_hi, double s_hi, const detail::series_atom& atom,
                         const detail::chi_interp* prev, const cplx& k0, double tol) const {
        const double t0 = p_.window.t0;
        const double w_full = s_hi - t0;
        const double ca = 0.5 * (atom.position - p_.x0) * (atom.position - p_.x0);
        const double cb = 0.5 * (y_hi - atom.position) * (y_hi - atom.position);
        const auto& g = *atom.temporal;
        std::vector<double> cuts{t0, s_hi};
        for (double b : g.breakpoints())
            if (b > t0 + 1e-13 && b < s_hi - 1e-13) cuts.push_back(b);
        std::sort(cuts.begin(), cuts.end());
        osc_options opt;
        opt.abs_tol = tol;
        opt.k_scale = p_.k;
        cplx total = 0.0;
        for (std::size_t r = 0; r + 1 < cuts.size(); ++r) {
            const double c0 = cuts[r], c1 = cuts[r + 1];
            if (!(c1 - c0 > 1e-13)) continue;
            const double gv = g.value(0.5 * (c0 + c1));
            if (gv == 0.0) continue;
            const double off_lo = c0 - t0;
            const double off_hi = s_hi - c1;
            auto eval_at = [&](double from_lo, double from_hi) {
                const cplx upper = eval_(y_hi, atom.position, s_hi, from_hi);
                const cplx lower = eval_(atom.position, p_.x0, t0 + from_lo, from_lo);
                const cplx chi = prev != nullptr ? (*prev)(t0 + from_lo) : cplx(1.0, 0.0);
                return upper * lower * chi / k0;
            };
            auto fa = [&](double sig) {
                const double from_lo = off_lo + sig;
                return eval_at(from_lo, w_full - from_lo);
            };
            auto fb = [&](double sig) {
                const double from_hi = off_hi + sig;
                return eval_at(w_full - from_hi, from_hi);
            };
            const double seg_ca = r == 0 ? ca : 0.0;
            const double seg_cb = r + 2 == cuts.size() ? cb : 0.0;
            total += gv * osc_integrate(fa, fb, c1 - c0, seg_ca, seg_cb, opt).value;
        }
        return total;
    }

    signed_measure nu_;
    oscillator_problem p_;
    shifted_test_function f_;
    series_settings set_;
    std::vector<detail::series_atom> atoms_;
    detail::gap_evaluator eval_;
    cplx prefactor_{1.0, 0.0};
    std::vector<double> grid_;
    std::vector<std::vector<detail::chi_interp>> levels_;
};

inline cplx series_term(int n, const signed_measure& nu, const oscillator_problem& p,
                        const shifted_test_function& f, const series_settings& settings = {}) {
    dyson_engine engine(nu, p, f, settings);
    return engine.term(n);
}

// Accumulates series terms until the ratio-summed C_n tail certificate drops
// below tol; throws max_order_exceeded (carrying everything computed) when no
// order up to max_order certifies.
inline series_result propagator_series(const signed_measure& nu, const oscillator_problem& p,
                                       const shifted_test_function& f, double tol,
                                       int max_order, const series_settings& settings = {}) {
    if (!(tol > 0.0)) throw domain_error("propagator_series: need tol > 0");
    if (max_order < 0) throw domain_error("propagator_series: need max_order >= 0");
    detail::require_same_window(nu.window(), p.window, "propagator_series");
    const double len = p.window.length();
    const double gamma = std::min(settings.beta / (2.0 * settings.q), 1.0);
    series_result out;
    const auto summary = marginals(nu);
    if (nu.is_zero() || summary.nu_x_total == 0.0) {
        const auto bp =
            make_bound_params(gamma, settings.q, eq11_constant(p.k, len), 0.0);
        out.terms = {t_transform_harmonic(p, f)};
        out.partial_sums = out.terms;
        out.tail_bounds = {tail_bound_cn(0, bp, 0.0, len, p.x0, p.x)};
        out.truncation_order = 0;
        out.certified_error = 0.0;
        return out;
    }
    if (!(gamma * settings.q < settings.beta) ||
        !check_condition_i(nu, settings.beta, summary.tail_radius + 1.0))
        throw tail_not_certifiable(
            "propagator_series: no admissible growth parameters for this measure");
    const auto bp = make_bound_params(gamma, settings.q, eq11_constant(p.k, len),
                                      q_constant(nu, gamma, settings.q));
    auto cn = [&](int n) {
        return tail_bound_cn(n, bp, summary.nu_t_density_sup, len, p.x0, p.x);
    };
    int n_star = -1;
    double certified = std::numeric_limits<double>::infinity();
    for (int n = 0; n <= max_order; ++n) {
        const double c1 = cn(n + 1);
        const double rho = cn(n + 2) / c1;
        if (rho < 0.5 && c1 / (1.0 - rho) <= tol) {
            n_star = n;
            certified = c1 / (1.0 - rho);
            break;
        }
    }
    dyson_engine engine(nu, p, f, settings);
    const int top = n_star >= 0 ? n_star : max_order;
    cplx sum = 0.0;
    for (int n = 0; n <= top; ++n) {
        out.terms.push_back(engine.term(n));
        sum += out.terms.back();
        out.partial_sums.push_back(sum);
        out.tail_bounds.push_back(cn(n));
    }
    out.truncation_order = top;
    if (n_star < 0) {
        const double c1 = cn(max_order + 1);
        const double rho = cn(max_order + 2) / c1;
        out.certified_error = rho < 0.5 ? c1 / (1.0 - rho) : certified;
        throw max_order_exceeded(
            "propagator_series: certified tail still above tolerance at max_order", out);
    }
    out.certified_error = certified;
    return out;
}

namespace detail {

struct volterra_run_params {
    int m_panels = 125;
    double dtheta = 0.4;
    double theta_max = 800.0;
    double theta_lo = 3.0;
    // -1 solves the discretized equation; r >= 1 returns the value assembled
    // from the (r-1)-th Picard iterate, so successive r differ by exactly one
    // series order of the same discretization.
    int iterations = -1;
};

inline std::vector<double> theta_ladder(double theta_max, double theta_lo, double dtheta) {
    std::vector<double> th;
    for (int m = 0;; ++m) {
        const double v = theta_max - m * dtheta;
        if (v <= theta_lo - 0.5 * dtheta) break;
        th.push_back(v);
    }
    return th;
}

// Product-integration solve of psi(s) = K(a,s|x0,t0) - i c (K g psi-integral)
// on phase-graded panels, with moment-fitted layers at both window ends and a
// sqrt substitution on the panels adjacent to each row time.
inline volterra_result volterra_run(const oscillator_problem& p, double a, double c,
                                    const piecewise_constant_density& g,
                                    const gap_evaluator& eval,
                                    const volterra_run_params& vp) {
    const double t0 = p.window.t0, t = p.window.t, dt = p.window.length();
    const double ca = 0.5 * (a - p.x0) * (a - p.x0);
    const double cb = 0.5 * (p.x - a) * (p.x - a);
    const cplx ic(0.0, c);

    std::vector<double> cand;
    const auto th = theta_ladder(vp.theta_max, vp.theta_lo, vp.dtheta);
    double sig_split_a, sig_split_b;
    if (ca > 0.0) {
        sig_split_a = ca / vp.theta_max;
        for (double v : th) cand.push_back(t0 + ca / v);
    } else {
        sig_split_a = 1e-4 * dt;
        for (double s = sig_split_a; s < 0.05 * dt; s *= 1.6) cand.push_back(t0 + s);
    }
    const double lo = cand.back();
    if (cb > 0.0) {
        sig_split_b = cb / vp.theta_max;
        for (double v : th) cand.push_back(t - cb / v);
    } else {
        sig_split_b = 1e-4 * dt;
        for (double s = sig_split_b; s < 0.05 * dt; s *= 1.6) cand.push_back(t - s);
    }
    const double hi = cand.back();
    if (!(lo < hi)) throw singular_grid("volterra_run: window too short for the end layers");
    for (int j = 1; j < vp.m_panels; ++j)
        cand.push_back(lo + (hi - lo) * j / vp.m_panels);
    for (double b : g.breakpoints())
        if (b > t0 + sig_split_a + 1e-12 && b < t - sig_split_b - 1e-12) cand.push_back(b);
    std::sort(cand.begin(), cand.end());
    std::vector<double> edges;
    for (double v : cand)
        if (edges.empty() || v - edges.back() > 1e-13) edges.push_back(v);
    const std::size_t np = edges.size() - 1;
    if (np < 8) throw singular_grid("volterra_run: degenerate panel set");

    std::vector<double> mids(np);
    for (std::size_t i = 0; i < np; ++i) mids[i] = 0.5 * (edges[i] + edges[i + 1]);
    const gl_rule& g6 = gauss_legendre_rule(6);
    const gl_rule& g12 = gauss_legendre_rule(12);
    std::vector<double> nodes(6 * np), wts(6 * np);
    for (std::size_t i = 0; i < np; ++i) {
        const double half = 0.5 * (edges[i + 1] - edges[i]);
        for (int q = 0; q < 6; ++q) {
            nodes[6 * i + q] = mids[i] + half * g6.nodes[q];
            wts[6 * i + q] = half * g6.weights[q];
        }
    }
    if (!(nodes.front() > t0) || !(nodes.back() < t))
        throw singular_grid("volterra_run: quadrature node at a window endpoint");

    std::vector<double> gw(6 * np);
    for (std::size_t q = 0; q < 6 * np; ++q) gw[q] = wts[q] * g.value(nodes[q]);

    std::vector<cplx> kh_mid(np);
    for (std::size_t i = 0; i < np; ++i) kh_mid[i] = eval(a, p.x0, mids[i], mids[i] - t0);

    std::vector<cplx> w_self(np);
    for (std::size_t i = 0; i < np; ++i) {
        const double vh = std::sqrt(mids[i] - edges[i]);
        cplx acc = 0.0;
        for (int q = 0; q < 12; ++q) {
            const double vn = 0.5 * vh + 0.5 * vh * g12.nodes[q];
            acc += g12.weights[q] * 2.0 * vn * eval(a, a, mids[i], vn * vn) *
                   g.value(mids[i] - vn * vn);
        }
        w_self[i] = 0.5 * vh * acc;
    }

    double err_layers = 0.0;
    auto layer_row = [&](std::size_t i, const cplx& slope) {
        auto fs = [&](double sig) {
            return eval(a, a, mids[i], (mids[i] - t0) - sig) *
                   eval(a, p.x0, t0 + sig, sig) * (1.0 + slope * sig) * g.value(t0 + sig);
        };
        const auto r = layer_tail(fs, ca, sig_split_a);
        err_layers = std::max(err_layers, std::abs(r.second));
        return r.first;
    };
    auto flat_block = [&](std::size_t i, const std::vector<cplx>& psig) {
        cplx acc = 0.0;
        const std::size_t nblk = 6 * (i - 1);
        const double m_i = mids[i];
        for (std::size_t q = 0; q < nblk; ++q)
            acc += psig[q] * eval(a, a, m_i, m_i - nodes[q]);
        return acc;
    };
    auto adjacent_weight = [&](std::size_t i) {
        const double v_out = std::sqrt(mids[i] - edges[i - 1]);
        const double v_in = std::sqrt(mids[i] - edges[i]);
        const double vmid = 0.5 * (v_out + v_in), vhal = 0.5 * (v_out - v_in);
        cplx acc = 0.0;
        for (int q = 0; q < 12; ++q) {
            const double vn = vmid + vhal * g12.nodes[q];
            acc += g12.weights[q] * 2.0 * vn * eval(a, a, mids[i], vn * vn) *
                   g.value(mids[i] - vn * vn);
        }
        return vhal * acc;
    };

    std::vector<cplx> psi(np), psi_flat(6 * np), psig(6 * np);
    auto fill_flat = [&](const std::vector<cplx>& src) {
        for (std::size_t i = 0; i < np; ++i)
            for (int q = 0; q < 6; ++q) {
                psi_flat[6 * i + q] = src[i];
                psig[6 * i + q] = gw[6 * i + q] * src[i];
            }
    };
    cplx chi_slope(0.0, 0.0);
    if (vp.iterations < 0) {
        for (std::size_t i = 0; i < np; ++i) {
            cplx acc = layer_row(i, chi_slope);
            if (i >= 2) acc += flat_block(i, psig);
            if (i >= 1) acc += adjacent_weight(i) * psi[i - 1];
            psi[i] = (kh_mid[i] - ic * acc) / (1.0 + ic * w_self[i]);
            for (int q = 0; q < 6; ++q) {
                psi_flat[6 * i + q] = psi[i];
                psig[6 * i + q] = gw[6 * i + q] * psi[i];
            }
            if (i == 0) chi_slope = (psi[0] / kh_mid[0] - 1.0) / (mids[0] - t0);
        }
    } else {
        psi = kh_mid;
        fill_flat(psi);
        for (int it = 1; it < vp.iterations; ++it) {
            const cplx slope_prev = (psi[0] / kh_mid[0] - 1.0) / (mids[0] - t0);
            std::vector<cplx> next(np);
            for (std::size_t i = 0; i < np; ++i) {
                cplx acc = layer_row(i, slope_prev);
                if (i >= 2) acc += flat_block(i, psig);
                if (i >= 1) acc += adjacent_weight(i) * psi[i - 1];
                acc += w_self[i] * psi[i];
                next[i] = kh_mid[i] - ic * acc;
            }
            psi = std::move(next);
            fill_flat(psi);
        }
        chi_slope = (psi[0] / kh_mid[0] - 1.0) / (mids[0] - t0);
    }

    cplx acc_fin = 0.0;
    double influence = 0.0;
    for (std::size_t q = 0; q < 6 * np; ++q) {
        const cplx kv = eval(p.x, a, t, t - nodes[q]) * g.value(nodes[q]);
        acc_fin += wts[q] * kv * psi_flat[q];
        influence += std::abs(wts[q]) * std::abs(kv);
    }
    influence *= std::abs(c);
    auto fs_a = [&](double sig) {
        return eval(p.x, a, t, dt - sig) * eval(a, p.x0, t0 + sig, sig) *
               (1.0 + chi_slope * sig) * g.value(t0 + sig);
    };
    const auto lay_a = layer_tail(fs_a, ca, sig_split_a);
    const cplx dpsi = (psi[np - 1] - psi[np - 2]) / (mids[np - 1] - mids[np - 2]);
    auto fs_b = [&](double sig) {
        const cplx near_t = psi[np - 1] + dpsi * ((t - sig) - mids[np - 1]);
        return eval(p.x, a, t, sig) * near_t * g.value(t - sig);
    };
    const auto lay_b = layer_tail(fs_b, cb, sig_split_b);

    const cplx value = eval(p.x, p.x0, t, dt) - ic * (acc_fin + lay_a.first + lay_b.first);
    const double err = influence * std::abs(c) * err_layers +
                       std::abs(c) * (std::abs(lay_a.second) + std::abs(lay_b.second));
    return {value, err};
}

}  // namespace detail

// Independent reference for single-atom measures: Richardson-extrapolated
// product-integration solve of the resummed second-kind Volterra equation.
inline volterra_result volterra_oracle(const signed_measure& nu, const oscillator_problem& p,
                                       const shifted_test_function& f, int grid) {
    if (grid < 100) throw domain_error("volterra_oracle: need grid >= 100");
    detail::require_same_window(nu.window(), p.window, "volterra_oracle");
    if (nu.components().size() != 1 || !nu.components()[0].spatial.is_atom())
        throw domain_error("volterra_oracle: needs exactly one spatial-atom component");
    const auto& comp = nu.components()[0];
    const double a = comp.spatial.atom_position();
    const double c = comp.coefficient;
    if (c == 0.0) return {t_transform_harmonic(p, f), 0.0};
    const detail::gap_evaluator eval{p.k, f.is_zero() ? nullptr : &f};
    const cplx pref = detail::window_prefactor(p, f);
    cplx v[3];
    double run_err = 0.0;
    for (int j = 0; j < 3; ++j) {
        const int kappa = 1 << j;
        detail::volterra_run_params vp;
        vp.m_panels = (grid / 4) * kappa;
        vp.dtheta = 0.4 / kappa;
        const auto r = detail::volterra_run(p, a, c, comp.temporal, eval, vp);
        v[j] = r.value;
        if (j == 2) run_err = r.err;
    }
    const cplx r1 = (4.0 * v[1] - v[0]) / 3.0;
    const cplx r2 = (4.0 * v[2] - v[1]) / 3.0;
    const cplx rr = (16.0 * r2 - r1) / 15.0;
    const double err = std::abs(r2 - r1) + run_err;
    return {pref * rr, std::abs(pref) * err};
}

}  // namespace oscprop
