#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "oscprop/errors.hpp"
#include "oscprop/numerics.hpp"
#include "oscprop/test_function.hpp"

namespace oscprop {

// Nonnegative step density: values[j] on [breakpoints[j], breakpoints[j+1]),
// last piece closed on the right.
class piecewise_constant_density {
  public:
    piecewise_constant_density() = default;

    piecewise_constant_density(std::vector<double> breakpoints, std::vector<double> values)
        : breaks_(std::move(breakpoints)), vals_(std::move(values)) {
        if (breaks_.size() != vals_.size() + 1 || vals_.empty())
            throw domain_error(
                "piecewise_constant_density: need m+1 breakpoints for m values");
        for (std::size_t j = 0; j + 1 < breaks_.size(); ++j)
            if (!(breaks_[j] < breaks_[j + 1]))
                throw domain_error("piecewise_constant_density: breakpoints must increase");
        for (double v : vals_)
            if (!(v >= 0.0))
                throw domain_error("piecewise_constant_density: values must be nonnegative");
    }

    static piecewise_constant_density uniform(double lo, double hi, double value = 1.0) {
        return piecewise_constant_density({lo, hi}, {value});
    }

    double value(double u) const {
        if (breaks_.empty() || u < breaks_.front() || u > breaks_.back()) return 0.0;
        std::size_t lo = 0, hi = breaks_.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (u < breaks_[mid])
                hi = mid;
            else
                lo = mid;
        }
        return vals_[lo];
    }

    double total() const {
        double acc = 0.0;
        for (std::size_t j = 0; j < vals_.size(); ++j)
            acc += vals_[j] * (breaks_[j + 1] - breaks_[j]);
        return acc;
    }

    double sup() const {
        double s = 0.0;
        for (double v : vals_) s = std::max(s, v);
        return s;
    }

    double lo() const { return breaks_.front(); }
    double hi() const { return breaks_.back(); }
    const std::vector<double>& breakpoints() const { return breaks_; }
    const std::vector<double>& values() const { return vals_; }

    // Integral of values(x) * fn(x) over the support, one rule per piece.
    template <class F>
    double integrate(F&& fn, int order = 32) const {
        double acc = 0.0;
        for (std::size_t j = 0; j < vals_.size(); ++j) {
            if (vals_[j] == 0.0) continue;
            acc += vals_[j] *
                   gauss_legendre([&](double u) { return cplx(fn(u), 0.0); }, breaks_[j],
                                  breaks_[j + 1], order)
                       .real();
        }
        return acc;
    }

    // Mass of {|x| > r}.
    double mass_outside(double r) const {
        double acc = 0.0;
        for (std::size_t j = 0; j < vals_.size(); ++j) {
            const double a = breaks_[j], b = breaks_[j + 1];
            double len = 0.0;
            if (b > r) len += b - std::max(a, r);
            if (a < -r) len += std::min(b, -r) - a;
            acc += vals_[j] * std::min(len, b - a);
        }
        return acc;
    }

  private:
    std::vector<double> breaks_;
    std::vector<double> vals_;
};

struct spatial_atom {
    double position;
};

// Spatial factor of a measure component: a point mass or a step density.
class spatial_part {
  public:
    static spatial_part atom(double position) {
        spatial_part s;
        s.part_ = spatial_atom{position};
        return s;
    }

    static spatial_part density(piecewise_constant_density d) {
        spatial_part s;
        s.part_ = std::move(d);
        return s;
    }

    bool is_atom() const { return std::holds_alternative<spatial_atom>(part_); }

    double atom_position() const {
        if (!is_atom()) throw domain_error("spatial_part: not an atom");
        return std::get<spatial_atom>(part_).position;
    }

    const piecewise_constant_density& density() const {
        if (is_atom()) throw domain_error("spatial_part: not a density");
        return std::get<piecewise_constant_density>(part_);
    }

    double total() const { return is_atom() ? 1.0 : density().total(); }

    double radius() const {
        if (is_atom()) return std::abs(atom_position());
        const auto& d = density();
        return std::max(std::abs(d.lo()), std::abs(d.hi()));
    }

    double tail_mass(double r) const {
        if (is_atom()) return std::abs(atom_position()) > r ? 1.0 : 0.0;
        return density().mass_outside(r);
    }

    // Integral of exp(c x^2) against the spatial factor.
    double exp_weight(double c) const {
        if (is_atom()) {
            const double a = atom_position();
            return std::exp(c * a * a);
        }
        return density().integrate([&](double x) { return std::exp(c * x * x); });
    }

  private:
    std::variant<spatial_atom, piecewise_constant_density> part_;
};

struct measure_component {
    double coefficient;
    spatial_part spatial;
    piecewise_constant_density temporal;
};

class signed_measure {
  public:
    signed_measure(time_window w, std::vector<measure_component> components)
        : window_(w), comps_(std::move(components)) {
        for (const auto& c : comps_)
            if (c.temporal.lo() < window_.t0 || c.temporal.hi() > window_.t)
                throw domain_error(
                    "signed_measure: temporal density must live inside the window");
    }

    const time_window& window() const { return window_; }
    const std::vector<measure_component>& components() const { return comps_; }

    bool is_zero() const {
        for (const auto& c : comps_)
            if (c.coefficient != 0.0) return false;
        return true;
    }

    signed_measure scaled(double factor) const {
        signed_measure out = *this;
        for (auto& c : out.comps_) c.coefficient *= factor;
        return out;
    }

  private:
    time_window window_;
    std::vector<measure_component> comps_;
};

struct marginal_summary {
    double nu_x_total;
    double nu_t_density_sup;
    std::optional<double> gaussian_tail_beta;
    double tail_radius;
};

// Component-wise total variation: opposite-sign overlaps are summed, not
// cancelled, which can only overestimate |nu|.
inline marginal_summary marginals(const signed_measure& nu) {
    marginal_summary m{0.0, 0.0, std::nullopt, 0.0};
    std::vector<double> tb;
    for (const auto& c : nu.components()) {
        m.nu_x_total += std::abs(c.coefficient) * c.spatial.total() * c.temporal.total();
        m.tail_radius = std::max(m.tail_radius, c.spatial.radius());
        for (double b : c.temporal.breakpoints()) tb.push_back(b);
    }
    std::sort(tb.begin(), tb.end());
    tb.erase(std::unique(tb.begin(), tb.end()), tb.end());
    for (std::size_t j = 0; j + 1 < tb.size(); ++j) {
        const double mid = 0.5 * (tb[j] + tb[j + 1]);
        double d = 0.0;
        for (const auto& c : nu.components())
            d += std::abs(c.coefficient) * c.spatial.total() * c.temporal.value(mid);
        m.nu_t_density_sup = std::max(m.nu_t_density_sup, d);
    }
    return m;
}

// Gaussian spatial tail check: |nu|_x({|x| > r}) < exp(-beta r^2) for all
// r > radius, evaluated on a log grid plus points bracketing every atom
// radius and density edge (where the step tail attains its suprema).
inline bool check_condition_i(const signed_measure& nu, double beta, double radius) {
    if (!(beta > 0.0) || !(radius > 0.0)) return false;
    double maxrad = 0.0;
    for (const auto& c : nu.components())
        if (c.coefficient != 0.0) maxrad = std::max(maxrad, c.spatial.radius());
    if (maxrad <= radius) return true;
    auto tail = [&](double r) {
        double acc = 0.0;
        for (const auto& c : nu.components())
            acc += std::abs(c.coefficient) * c.temporal.total() * c.spatial.tail_mass(r);
        return acc;
    };
    std::vector<double> grid;
    const double lo = radius * (1.0 + 1e-9);
    const int n_grid = 200;
    for (int i = 0; i <= n_grid; ++i)
        grid.push_back(lo * std::exp(std::log(maxrad / lo) * i / n_grid));
    auto bracket = [&](double r) {
        grid.push_back(r * (1.0 - 1e-9));
        grid.push_back(r * (1.0 + 1e-9));
    };
    for (const auto& c : nu.components()) {
        if (c.coefficient == 0.0) continue;
        if (c.spatial.is_atom()) {
            bracket(std::abs(c.spatial.atom_position()));
        } else {
            for (double b : c.spatial.density().breakpoints()) bracket(std::abs(b));
        }
    }
    for (double r : grid) {
        if (!(r > radius) || r > maxrad) continue;
        if (!(tail(r) < std::exp(-beta * r * r))) return false;
    }
    return true;
}

// Q = (integral of exp(gamma q x^2) against |nu|)^(1/q).
inline double q_constant(const signed_measure& nu, double gamma, double q) {
    if (!(q > 2.0)) throw domain_error("q_constant: need q > 2");
    if (!(gamma > 0.0)) throw domain_error("q_constant: need gamma > 0");
    double acc = 0.0;
    for (const auto& c : nu.components())
        acc += std::abs(c.coefficient) * c.temporal.total() * c.spatial.exp_weight(gamma * q);
    return std::pow(acc, 1.0 / q);
}

}  // namespace oscprop
