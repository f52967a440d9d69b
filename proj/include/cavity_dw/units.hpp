#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "cavity_dw/errors.hpp"

// Internal unit system: hbar = m = omega = 1. Lengths in a_ho = sqrt(hbar/(m omega)),
// times in 1/omega, energies and rates in hbar*omega (resp. omega).
namespace cavity_dw {

inline constexpr double kHbar = 1.054571817e-34;       // J s
inline constexpr double kAtomicMassUnit = 1.66053906660e-27;  // kg

struct ModelParams {
    double kappa = 500.0;
    double delta_c = 500.0;
    double u0 = 5.0;
    double eta = 0.0;
    double delta_x = 0.5;
    double g_coll = 0.0;
    double n_atoms = 1.0e4;
    double barrier_offset = 0.0;

    void validate() const {
        auto finite = [](double v) { return std::isfinite(v); };
        detail::require(finite(kappa) && kappa > 0.0, "kappa must be > 0");
        detail::require(finite(eta) && eta >= 0.0, "eta must be >= 0");
        detail::require(finite(delta_x) && delta_x > 0.0, "delta_x must be > 0");
        detail::require(finite(n_atoms) && n_atoms > 0.0, "n_atoms must be > 0");
        detail::require(finite(delta_c) && finite(u0) && finite(g_coll) && finite(barrier_offset),
                        "model parameters must be finite");
    }

    // eta^2/kappa^2, the empty-cavity (and resonant) photon number.
    double max_photon_number() const { return eta * eta / (kappa * kappa); }

    ModelParams with_eta(double new_eta) const {
        ModelParams p = *this;
        p.eta = new_eta;
        return p;
    }
};

// Laboratory scales fixing the map between SI and oscillator units.
struct PhysicalScales {
    double kappa_rad_per_s = 2.0 * std::numbers::pi * 1.3e6;
    double omega_ratio = 500.0;  // kappa / omega
    double mass_kg = 87.0 * kAtomicMassUnit;

    void validate() const {
        detail::require(std::isfinite(kappa_rad_per_s) && kappa_rad_per_s > 0.0,
                        "kappa_rad_per_s must be > 0");
        detail::require(std::isfinite(omega_ratio) && omega_ratio > 0.0, "omega_ratio must be > 0");
        detail::require(std::isfinite(mass_kg) && mass_kg > 0.0, "mass must be > 0");
    }

    double omega_rad_per_s() const { return kappa_rad_per_s / omega_ratio; }
    double time_unit_s() const { return 1.0 / omega_rad_per_s(); }
    double length_unit_m() const { return std::sqrt(kHbar / (mass_kg * omega_rad_per_s())); }

    double seconds_to_time(double seconds) const { return seconds / time_unit_s(); }
    double time_to_seconds(double t) const { return t * time_unit_s(); }
    double meters_to_length(double meters) const { return meters / length_unit_m(); }
    double length_to_meters(double x) const { return x * length_unit_m(); }
};

// Parameters as quoted in figure captions: rates in units of kappa, lengths in a_ho.
struct CaptionParams {
    PhysicalScales scales;
    double delta_c_kappa = 1.0;
    double u0_kappa = 0.01;
    double eta_kappa = 0.0;
    double delta_x = 0.5;
    double g_coll = 0.0;
    double n_atoms = 1.0e4;
    double barrier_offset = 0.0;
};

inline ModelParams to_oscillator_units(const CaptionParams& raw) {
    raw.scales.validate();
    detail::require(raw.eta_kappa >= 0.0, "eta must be >= 0");
    const double k = raw.scales.omega_ratio;
    ModelParams p;
    p.kappa = k;
    p.delta_c = raw.delta_c_kappa * k;
    p.u0 = raw.u0_kappa * k;
    p.eta = raw.eta_kappa * k;
    p.delta_x = raw.delta_x;
    p.g_coll = raw.g_coll;
    p.n_atoms = raw.n_atoms;
    p.barrier_offset = raw.barrier_offset;
    p.validate();
    return p;
}

inline CaptionParams from_oscillator_units(const ModelParams& p, const PhysicalScales& scales) {
    p.validate();
    scales.validate();
    detail::require(std::abs(p.kappa - scales.omega_ratio) <= 1e-12 * scales.omega_ratio,
                    "kappa inconsistent with omega_ratio of the supplied scales");
    CaptionParams raw;
    raw.scales = scales;
    raw.delta_c_kappa = p.delta_c / p.kappa;
    raw.u0_kappa = p.u0 / p.kappa;
    raw.eta_kappa = p.eta / p.kappa;
    raw.delta_x = p.delta_x;
    raw.g_coll = p.g_coll;
    raw.n_atoms = p.n_atoms;
    raw.barrier_offset = p.barrier_offset;
    return raw;
}

}  // namespace cavity_dw
