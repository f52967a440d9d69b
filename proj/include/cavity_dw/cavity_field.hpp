#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "cavity_dw/errors.hpp"
#include "cavity_dw/grid.hpp"
#include "cavity_dw/units.hpp"

namespace cavity_dw {

struct CavityState {
    double n_ss = 0.0;
    double y_overlap = 0.0;
};

// U(x) = U0 exp(-(x - offset)^2 / delta_x^2) sampled on the grid.
inline std::vector<double> mode_function(const Grid& grid, const ModelParams& p) {
    std::vector<double> u(grid.size());
    const auto x = grid.x();
    const double inv_w2 = 1.0 / (p.delta_x * p.delta_x);
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double d = x[j] - p.barrier_offset;
        u[j] = p.u0 * std::exp(-d * d * inv_w2);
    }
    return u;
}

namespace detail {

// Quadrature of |psi|^2 U without the normalization precondition.
inline double weighted_density(const OrderParameter& psi, const std::vector<double>& mode) {
    double s = 0.0;
    const auto v = psi.values();
    for (std::size_t j = 0; j < v.size(); ++j) s += std::norm(v[j]) * mode[j];
    return s * psi.grid().dx();
}

}  // namespace detail

// Y = int |psi|^2 U(x) dx (trapezoid on the uniform periodic grid).
inline double overlap_y(const OrderParameter& psi, const ModelParams& p) {
    detail::require(psi.is_normalized(1e-8), "overlap_y requires a normalized order parameter");
    return detail::weighted_density(psi, mode_function(psi.grid(), p));
}

// n_ss = eta^2 / (kappa^2 + (delta_c - N y)^2).
inline double steady_state_photon_number(double y, const ModelParams& p) {
    const double detuning = p.delta_c - p.n_atoms * y;
    return p.eta * p.eta / (p.kappa * p.kappa + detuning * detuning);
}

inline CavityState cavity_state(const OrderParameter& psi, const ModelParams& p) {
    const double y = overlap_y(psi, p);
    return {steady_state_photon_number(y, p), y};
}

// V_eff(x) = x^2/2 + n_ss U(x).
inline std::vector<double> effective_potential(const Grid& grid, double n_ss, const ModelParams& p) {
    detail::require(n_ss >= 0.0, "photon number must be >= 0");
    std::vector<double> v = mode_function(grid, p);
    const auto x = grid.x();
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = 0.5 * x[j] * x[j] + n_ss * v[j];
    return v;
}

// Minima +-x0 of V_eff for a barrier centred at the trap centre; empty when the
// barrier is too weak to form a double well (2 U0 n_ss / delta_x^2 <= 1).
inline std::optional<double> well_minimum_position(double n_ss, const ModelParams& p) {
    const double arg = 2.0 * p.u0 * n_ss / (p.delta_x * p.delta_x);
    if (!(arg > 1.0)) return std::nullopt;
    return p.delta_x * std::sqrt(std::log(arg));
}

// Y of a centred Gaussian whose density has width sigma: U0 / sqrt(1 + sigma^2/delta_x^2).
inline double gaussian_overlap(double sigma, const ModelParams& p) {
    detail::require(sigma > 0.0, "sigma must be > 0");
    return p.u0 / std::sqrt(1.0 + sigma * sigma / (p.delta_x * p.delta_x));
}

// Pump at which the barrier n_ss U0 reaches one trap quantum for a Gaussian state of width sigma.
inline double critical_pump_estimate(const ModelParams& p, double sigma_guess = 1.0) {
    detail::require(p.u0 > 0.0, "critical pump estimate needs a repulsive barrier (u0 > 0)");
    const double y = gaussian_overlap(sigma_guess, p);
    const double detuning = p.delta_c - p.n_atoms * y;
    return std::sqrt((p.kappa * p.kappa + detuning * detuning) / p.u0);
}

// Coupling U0 that puts a Gaussian state of width sigma on cavity resonance (delta_c = N Y).
inline double resonance_coupling(const ModelParams& p, double sigma = 1.0) {
    detail::require(sigma > 0.0, "sigma must be > 0");
    return (p.delta_c / p.n_atoms) * std::sqrt(1.0 + sigma * sigma / (p.delta_x * p.delta_x));
}

}  // namespace cavity_dw
