#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "oscprop/errors.hpp"
#include "oscprop/numerics.hpp"

namespace oscprop {

struct time_window {
    double t0;
    double t;

    time_window(double t0_, double t_) : t0(t0_), t(t_) {
        if (!(t > t0)) throw invalid_window("time_window: need t > t0");
    }

    double length() const { return t - t0; }
};

// Compactly supported C^1 piecewise cubic.  Piece j covers
// [breakpoints[j], breakpoints[j+1]] with local coefficients (c0, c1, c2, c3)
// in tau = t - breakpoints[j].
class test_function {
  public:
    test_function() = default;

    test_function(std::vector<double> breakpoints,
                  std::vector<std::array<double, 4>> coefficients)
        : breaks_(std::move(breakpoints)), coef_(std::move(coefficients)) {
        if (breaks_.size() != coef_.size() + 1 || coef_.empty())
            throw domain_error("test_function: need m+1 breakpoints for m pieces");
        for (std::size_t j = 0; j + 1 < breaks_.size(); ++j)
            if (!(breaks_[j] < breaks_[j + 1]))
                throw domain_error("test_function: breakpoints must increase");
        double scale = 1.0;
        for (const auto& c : coef_)
            for (double v : c) scale = std::max(scale, std::abs(v));
        const double tol = 1e-12 * scale;
        for (std::size_t j = 0; j + 1 < coef_.size(); ++j) {
            const double h = breaks_[j + 1] - breaks_[j];
            if (std::abs(piece_value(j, h) - coef_[j + 1][0]) > tol ||
                std::abs(piece_deriv(j, h) - coef_[j + 1][1]) > tol)
                throw domain_error("test_function: not C1 at an interior breakpoint");
        }
        const double hl = breaks_.back() - breaks_[breaks_.size() - 2];
        if (std::abs(coef_.front()[0]) > tol ||
            std::abs(piece_value(coef_.size() - 1, hl)) > tol)
            throw domain_error("test_function: must vanish at support ends");
    }

    static test_function hermite(const std::vector<double>& knots,
                                 const std::vector<double>& values,
                                 const std::vector<double>& slopes) {
        if (knots.size() < 2 || values.size() != knots.size() || slopes.size() != knots.size())
            throw domain_error("test_function::hermite: inconsistent array sizes");
        std::vector<std::array<double, 4>> coef(knots.size() - 1);
        for (std::size_t j = 0; j + 1 < knots.size(); ++j) {
            const double h = knots[j + 1] - knots[j];
            if (!(h > 0.0)) throw domain_error("test_function::hermite: knots must increase");
            const double v0 = values[j], v1 = values[j + 1];
            const double m0 = slopes[j], m1 = slopes[j + 1];
            coef[j][0] = v0;
            coef[j][1] = m0;
            coef[j][2] = (3.0 * (v1 - v0) / h - 2.0 * m0 - m1) / h;
            coef[j][3] = (m0 + m1 - 2.0 * (v1 - v0) / h) / (h * h);
        }
        return test_function(knots, std::move(coef));
    }

    bool is_zero() const {
        for (const auto& c : coef_)
            for (double v : c)
                if (v != 0.0) return false;
        return true;
    }

    double value(double t) const {
        const int j = piece_index(t);
        if (j < 0) return 0.0;
        return piece_value(j, t - breaks_[j]);
    }

    double deriv(double t) const {
        const int j = piece_index(t);
        if (j < 0) return 0.0;
        return piece_deriv(j, t - breaks_[j]);
    }

    double operator()(double t) const { return value(t); }

    const std::vector<double>& breakpoints() const { return breaks_; }
    const std::vector<std::array<double, 4>>& coefficients() const { return coef_; }

    double support_lo() const { return breaks_.empty() ? 0.0 : breaks_.front(); }
    double support_hi() const { return breaks_.empty() ? 0.0 : breaks_.back(); }

  private:
    int piece_index(double t) const {
        if (breaks_.empty() || t < breaks_.front() || t > breaks_.back()) return -1;
        std::size_t lo = 0, hi = breaks_.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (t < breaks_[mid])
                hi = mid;
            else
                lo = mid;
        }
        return static_cast<int>(lo);
    }

    double piece_value(std::size_t j, double tau) const {
        const auto& c = coef_[j];
        return c[0] + tau * (c[1] + tau * (c[2] + tau * c[3]));
    }

    double piece_deriv(std::size_t j, double tau) const {
        const auto& c = coef_[j];
        return c[1] + tau * (2.0 * c[2] + tau * 3.0 * c[3]);
    }

    std::vector<double> breaks_;
    std::vector<std::array<double, 4>> coef_;
};

struct indicator_shift {
    double lam;
    double lo;
    double hi;
    bool closed_right = false;
};

// Test function plus a stack of scaled interval indicators lam * 1_[lo, hi).
class shifted_test_function {
  public:
    shifted_test_function() = default;
    shifted_test_function(test_function f) : base_(std::move(f)) {}

    shifted_test_function with_shift(double lam, double lo, double hi,
                                     bool closed_right = false) const {
        if (!(lo < hi)) throw domain_error("with_shift: need lo < hi");
        shifted_test_function out = *this;
        out.shifts_.push_back({lam, lo, hi, closed_right});
        return out;
    }

    double value(double t) const {
        double v = base_.value(t);
        for (const auto& s : shifts_)
            if (t >= s.lo && (t < s.hi || (s.closed_right && t == s.hi))) v += s.lam;
        return v;
    }

    double deriv(double t) const { return base_.deriv(t); }

    double operator()(double t) const { return value(t); }

    bool is_zero() const {
        if (!base_.is_zero()) return false;
        for (const auto& s : shifts_)
            if (s.lam != 0.0) return false;
        return true;
    }

    const test_function& base() const { return base_; }
    const std::vector<indicator_shift>& shifts() const { return shifts_; }

    // Sorted subdivision of [a, b] at every breakpoint and shift boundary.
    std::vector<double> cuts(double a, double b) const {
        std::vector<double> c{a, b};
        for (double x : base_.breakpoints())
            if (x > a && x < b) c.push_back(x);
        for (const auto& s : shifts_) {
            if (s.lo > a && s.lo < b) c.push_back(s.lo);
            if (s.hi > a && s.hi < b) c.push_back(s.hi);
        }
        std::sort(c.begin(), c.end());
        c.erase(std::unique(c.begin(), c.end()), c.end());
        return c;
    }

    // Hull of the base support and all shift intervals.
    std::pair<double, double> support_hull() const {
        bool any = false;
        double lo = 0.0, hi = 0.0;
        if (!base_.breakpoints().empty()) {
            lo = base_.support_lo();
            hi = base_.support_hi();
            any = true;
        }
        for (const auto& s : shifts_) {
            if (!any) {
                lo = s.lo;
                hi = s.hi;
                any = true;
            } else {
                lo = std::min(lo, s.lo);
                hi = std::max(hi, s.hi);
            }
        }
        return {lo, hi};
    }

  private:
    test_function base_;
    std::vector<indicator_shift> shifts_;
};

template <class F>
double integrate_piecewise(const shifted_test_function& f, double a, double b, F&& g,
                           int order = 8) {
    if (!(b > a)) return 0.0;
    const auto c = f.cuts(a, b);
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < c.size(); ++j)
        acc += gauss_legendre([&](double s) { return cplx(g(s), 0.0); }, c[j], c[j + 1], order)
                   .real();
    return acc;
}

inline double integral(const shifted_test_function& f, double a, double b) {
    return integrate_piecewise(f, a, b, [&](double s) { return f.value(s); });
}

inline double l2sq(const shifted_test_function& f, double a, double b) {
    return integrate_piecewise(f, a, b, [&](double s) {
        const double v = f.value(s);
        return v * v;
    });
}

inline double l2sq_full(const shifted_test_function& f) {
    const auto [lo, hi] = f.support_hull();
    if (!(hi > lo)) return 0.0;
    return l2sq(f, lo, hi);
}

struct norm_bundle {
    double sup_f;
    double sup_fprime;
    double l2_full;
    double l2_window;
    double l2_off_window;
    double triple;
};

namespace detail {

inline void push_if_inside(std::vector<double>& taus, double tau, double lo, double hi) {
    if (tau > lo && tau < hi) taus.push_back(tau);
}

}  // namespace detail

// Window sups are exact: candidates are piece ends clipped to the window and
// interior critical points of f and f'.
inline norm_bundle norms(const test_function& f, const time_window& w) {
    double sup_f = 0.0, sup_fp = 0.0;
    const auto& br = f.breakpoints();
    const auto& cf = f.coefficients();
    for (std::size_t j = 0; j + 1 < br.size(); ++j) {
        const double lo = std::max(br[j], w.t0), hi = std::min(br[j + 1], w.t);
        if (!(hi > lo)) continue;
        const auto& c = cf[j];
        std::vector<double> taus{lo - br[j], hi - br[j]};
        const double tlo = lo - br[j], thi = hi - br[j];
        if (c[3] != 0.0) {
            const double disc = 4.0 * c[2] * c[2] - 12.0 * c[3] * c[1];
            if (disc >= 0.0) {
                const double r = std::sqrt(disc);
                detail::push_if_inside(taus, (-2.0 * c[2] + r) / (6.0 * c[3]), tlo, thi);
                detail::push_if_inside(taus, (-2.0 * c[2] - r) / (6.0 * c[3]), tlo, thi);
            }
            detail::push_if_inside(taus, -c[2] / (3.0 * c[3]), tlo, thi);
        } else if (c[2] != 0.0) {
            detail::push_if_inside(taus, -c[1] / (2.0 * c[2]), tlo, thi);
        }
        for (double tau : taus) {
            const double v = c[0] + tau * (c[1] + tau * (c[2] + tau * c[3]));
            const double d = c[1] + tau * (2.0 * c[2] + tau * 3.0 * c[3]);
            sup_f = std::max(sup_f, std::abs(v));
            sup_fp = std::max(sup_fp, std::abs(d));
        }
    }
    const shifted_test_function sf(f);
    const double full_sq = l2sq_full(sf);
    const double win_sq = l2sq(sf, w.t0, w.t);
    const double off_sq = std::max(0.0, full_sq - win_sq);
    norm_bundle nb;
    nb.sup_f = sup_f;
    nb.sup_fprime = sup_fp;
    nb.l2_full = std::sqrt(full_sq);
    nb.l2_window = std::sqrt(win_sq);
    nb.l2_off_window = std::sqrt(off_sq);
    nb.triple = sup_f + sup_fp + nb.l2_full;
    return nb;
}

}  // namespace oscprop
