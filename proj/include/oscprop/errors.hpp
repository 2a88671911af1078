#pragma once

#include <stdexcept>
#include <string>

namespace oscprop {

struct error : std::runtime_error {
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

struct invalid_window : error {
    explicit invalid_window(const std::string& msg) : error(msg) {}
};

struct frequency_out_of_range : error {
    explicit frequency_out_of_range(const std::string& msg) : error(msg) {}
};

struct invalid_pins : error {
    explicit invalid_pins(const std::string& msg) : error(msg) {}
};

struct window_not_contained : error {
    explicit window_not_contained(const std::string& msg) : error(msg) {}
};

struct domain_error : error {
    explicit domain_error(const std::string& msg) : error(msg) {}
};

struct divergent_integral : error {
    explicit divergent_integral(const std::string& msg) : error(msg) {}
};

struct degenerate_quadratic : error {
    explicit degenerate_quadratic(const std::string& msg) : error(msg) {}
};

struct not_quadratic : error {
    explicit not_quadratic(const std::string& msg) : error(msg) {}
};

struct quadrature_not_converged : error {
    explicit quadrature_not_converged(const std::string& msg) : error(msg) {}
};

struct singular_grid : error {
    explicit singular_grid(const std::string& msg) : error(msg) {}
};

struct tail_not_certifiable : error {
    explicit tail_not_certifiable(const std::string& msg) : error(msg) {}
};

}  // namespace oscprop
