#pragma once

#include <cmath>

#include "cavity_dw/units.hpp"

namespace cavity_dw::fixtures {

// Caption parameter sets, rates in units of kappa.
inline ModelParams caption(double eta_kappa, double u0_kappa, double delta_c_kappa = 1.0, double delta_x = 0.5,
                           double n_atoms = 1.0e4) {
    CaptionParams c;
    c.eta_kappa = eta_kappa;
    c.u0_kappa = u0_kappa;
    c.delta_c_kappa = delta_c_kappa;
    c.delta_x = delta_x;
    c.n_atoms = n_atoms;
    return to_oscillator_units(c);
}

inline ModelParams fig3(double eta_kappa = 0.0) { return caption(eta_kappa, 1.0 / 100.0); }
inline ModelParams fig3b(double eta_kappa = 0.0) { return caption(eta_kappa, std::sqrt(5.0) / 1.0e4); }
inline ModelParams fig4(double eta_kappa = 25.0) { return caption(eta_kappa, 1.0 / 200.0); }
inline ModelParams fig5() { return caption(40.0, 3.0 * std::sqrt(5.0) / 1.0e4, 3.0); }
inline ModelParams fig6() { return caption(100.0, 1.0 / 200.0); }

// Delta_x = 0.1 um for Rb-87 with omega = kappa/500, kappa = 2 pi 1.3 MHz.
inline double fig10_delta_x() { return PhysicalScales{}.meters_to_length(0.1e-6); }

inline ModelParams fig10(double n_bar) { return caption(2.0, 0.2, 1.0, fig10_delta_x(), n_bar); }

}  // namespace cavity_dw::fixtures
