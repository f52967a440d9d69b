#pragma once

#include <gsl/gsl_errno.h>
#include <gsl/gsl_min.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "cavity_dw/cavity_field.hpp"
#include "cavity_dw/errors.hpp"
#include "cavity_dw/gpe.hpp"
#include "cavity_dw/grid.hpp"
#include "cavity_dw/units.hpp"

// Double-peaked Gaussian ansatz psi(x) = C [exp(-(x+x0)^2/2s^2) + exp(-(x-x0)^2/2s^2)].
namespace cavity_dw {

enum class Branch { single_peak, double_peak };

inline const char* to_string(Branch b) { return b == Branch::single_peak ? "single_peak" : "double_peak"; }

struct VariationalPoint {
    double sigma = 1.0;
    double x0 = 0.0;
    double energy = 0.0;
    double n_ss = 0.0;
    Branch branch = Branch::single_peak;
    bool is_global = false;
};

// Closed-form pieces of the ansatz energy. All integrals are Gaussian.
struct AnsatzIntegrals {
    double norm_c = 0.0;   // C
    double kinetic = 0.0;  // (1/2) int |psi'|^2
    double harmonic = 0.0; // (1/2) int x^2 |psi|^2
    double quartic = 0.0;  // int |psi|^4
    double mode_overlap = 0.0;  // int |psi|^2 exp(-(x-offset)^2/delta_x^2)
};

inline AnsatzIntegrals ansatz_integrals(double sigma, double x0, const ModelParams& p) {
    detail::require(sigma > 0.0 && std::isfinite(sigma) && std::isfinite(x0), "ansatz needs sigma > 0");
    const double pi = std::numbers::pi;
    const double sqrt_pi = std::sqrt(pi);
    const double s2 = sigma * sigma;
    const double a2 = x0 * x0;
    const double s = std::exp(-a2 / s2);  // <g+|g-> / <g+|g+>

    AnsatzIntegrals out;
    const double c2 = 1.0 / (2.0 * sigma * sqrt_pi * (1.0 + s));
    out.norm_c = std::sqrt(c2);
    out.kinetic = c2 * sqrt_pi * (0.5 / sigma + s * (0.5 / sigma - a2 / (sigma * s2)));
    out.harmonic = c2 * sigma * sqrt_pi * (0.5 * s2 + a2 + 0.5 * s * s2);
    out.quartic = c2 * c2 * sigma * std::sqrt(0.5 * pi) *
                  (2.0 + 8.0 * std::exp(-1.5 * a2 / s2) + 6.0 * std::exp(-2.0 * a2 / s2));

    const double w2 = p.delta_x * p.delta_x;
    const double pref = sigma * p.delta_x * sqrt_pi / std::sqrt(s2 + w2);
    const auto gauss_mode = [&](double center) {
        const double d = center - p.barrier_offset;
        return pref * std::exp(-d * d / (s2 + w2));
    };
    out.mode_overlap = c2 * (gauss_mode(x0) + gauss_mode(-x0) + 2.0 * s * gauss_mode(0.0));
    return out;
}

// Y(sigma, x0) including the cross term.
inline double ansatz_overlap_y(double sigma, double x0, const ModelParams& p) {
    return p.u0 * ansatz_integrals(sigma, x0, p).mode_overlap;
}

inline double variational_energy(double sigma, double x0, const ModelParams& p) {
    const auto in = ansatz_integrals(sigma, x0, p);
    const double y = p.u0 * in.mode_overlap;
    const double cavity =
        -(p.eta * p.eta / (p.kappa * p.n_atoms)) * std::atan((p.delta_c - p.n_atoms * y) / p.kappa);
    return in.kinetic + in.harmonic + 0.5 * p.g_coll * p.n_atoms * in.quartic + cavity;
}

// Ansatz sampled on the grid and normalized with the discrete norm.
inline OrderParameter ansatz_density(double sigma, double x0, const Grid& grid) {
    detail::require(sigma > 0.0, "ansatz needs sigma > 0");
    return normalize(OrderParameter::sample(grid, [&](double x) {
        const double a = (x + x0) / sigma;
        const double b = (x - x0) / sigma;
        return std::exp(-0.5 * a * a) + std::exp(-0.5 * b * b);
    }));
}

// dE/d(sigma, x0) by grid quadrature: dE/dtheta = 2 Re <d psi/d theta | H[psi] psi>,
// with d psi / d theta taken analytically from the ansatz.
inline std::array<double, 2> variational_gradient_quadrature(double sigma, double x0, const ModelParams& p,
                                                             const Grid& grid) {
    const double s2 = sigma * sigma;
    const double s = std::exp(-x0 * x0 / s2);
    const double c = 1.0 / std::sqrt(2.0 * sigma * std::sqrt(std::numbers::pi) * (1.0 + s));
    const double dlnc_dsigma = -0.5 / sigma - 0.5 * (s * 2.0 * x0 * x0 / (s2 * sigma)) / (1.0 + s);
    const double dlnc_dx0 = -0.5 * (-s * 2.0 * x0 / s2) / (1.0 + s);

    const auto x = grid.x();
    std::vector<Complex> psi(grid.size());
    std::vector<double> d_sigma(grid.size());
    std::vector<double> d_x0(grid.size());
    for (std::size_t j = 0; j < psi.size(); ++j) {
        const double up = x[j] - x0;
        const double dn = x[j] + x0;
        const double gp = std::exp(-0.5 * up * up / s2);
        const double gm = std::exp(-0.5 * dn * dn / s2);
        const double g = gp + gm;
        psi[j] = c * g;
        d_sigma[j] = c * (dlnc_dsigma * g + (gp * up * up + gm * dn * dn) / (s2 * sigma));
        d_x0[j] = c * (dlnc_dx0 * g + (gp * up - gm * dn) / s2);
    }
    GpePropagator prop(grid, p);
    const auto h = prop.apply_hamiltonian(psi, p.eta);
    double gs = 0.0;
    double gx = 0.0;
    for (std::size_t j = 0; j < psi.size(); ++j) {
        gs += d_sigma[j] * h[j].real();
        gx += d_x0[j] * h[j].real();
    }
    return {2.0 * gs * grid.dx(), 2.0 * gx * grid.dx()};
}

// The ansatz density has a local minimum at the origin iff psi''(0) > 0, i.e. x0 > sigma.
inline Branch classify_branch(double sigma, double x0) {
    return std::abs(x0) > sigma ? Branch::double_peak : Branch::single_peak;
}

inline double branch_photon_number(double sigma, double x0, const ModelParams& p) {
    return steady_state_photon_number(ansatz_overlap_y(sigma, x0, p), p);
}

enum class SeedGrid { coarse, fine };

struct BranchSearchOptions {
    SeedGrid seeds = SeedGrid::coarse;
    double simplex_size_tol = 1e-7;
    std::size_t max_iterations = 20000;
    double dedup_tol = 1e-3;
};

// 2x2 central-difference Hessian of E(sigma, x0).
inline std::array<double, 3> variational_hessian(double sigma, double x0, const ModelParams& p, double h = 1e-4) {
    const auto e = [&](double s, double a) { return variational_energy(s, a, p); };
    const double e0 = e(sigma, x0);
    const double hss = (e(sigma + h, x0) - 2.0 * e0 + e(sigma - h, x0)) / (h * h);
    const double hxx = (e(sigma, x0 + h) - 2.0 * e0 + e(sigma, x0 - h)) / (h * h);
    const double hsx =
        (e(sigma + h, x0 + h) - e(sigma + h, x0 - h) - e(sigma - h, x0 + h) + e(sigma - h, x0 - h)) / (4.0 * h * h);
    return {hss, hsx, hxx};
}

// Positive-definite Hessian for split states. At x0 = 0 the energy is even in x0 and may
// start at fourth order, so there the x0 direction is checked by a finite displacement.
inline bool is_local_minimum(double sigma, double x0, const ModelParams& p) {
    const auto [hss, hsx, hxx] = variational_hessian(sigma, x0, p);
    if (x0 > 1e-3) return hss > 0.0 && hss * hxx - hsx * hsx > 0.0;
    const double e0 = variational_energy(sigma, 0.0, p);
    return hss > 0.0 && variational_energy(sigma, 1e-2, p) - e0 > -1e-14 * std::max(1.0, std::abs(e0));
}

namespace detail {

struct SimplexContext {
    const ModelParams* params;
};

inline double simplex_objective(const gsl_vector* v, void* ctx) {
    const auto* c = static_cast<const SimplexContext*>(ctx);
    const double sigma = std::exp(gsl_vector_get(v, 0));
    const double x0 = std::sqrt(std::abs(gsl_vector_get(v, 1)));
    if (!(sigma > 1e-3 && sigma < 1e3)) return 1e300;
    const double e = variational_energy(sigma, x0, *c->params);
    return std::isfinite(e) ? e : 1e300;
}

inline double centred_objective(double sigma, void* ctx) {
    return variational_energy(sigma, 0.0, *static_cast<const ModelParams*>(ctx));
}

// Brent minimum of E(sigma, 0) bracketed around sigma; empty if the bracket is invalid.
inline std::optional<double> minimize_centred_sigma(double sigma, const ModelParams& p) {
    ModelParams q = p;
    gsl_function f{&centred_objective, &q};
    gsl_min_fminimizer* m = gsl_min_fminimizer_alloc(gsl_min_fminimizer_brent);
    std::optional<double> out;
    if (gsl_min_fminimizer_set(m, &f, sigma, 0.5 * sigma, 2.0 * sigma) == GSL_SUCCESS) {
        for (int it = 0; it < 200; ++it) {
            if (gsl_min_fminimizer_iterate(m) != GSL_SUCCESS) break;
            const double lo = gsl_min_fminimizer_x_lower(m);
            const double hi = gsl_min_fminimizer_x_upper(m);
            if (gsl_min_test_interval(lo, hi, 1e-12, 0.0) == GSL_SUCCESS) break;
        }
        out = gsl_min_fminimizer_x_minimum(m);
    }
    gsl_min_fminimizer_free(m);
    return out;
}

// Local minimum from one start, searched in (ln sigma, x0^2) where the energy is analytic;
// empty when the simplex does not converge.
inline std::optional<std::pair<double, double>> simplex_minimize(double sigma0, double x00, const ModelParams& p,
                                                                 const BranchSearchOptions& opt) {
    gsl_set_error_handler_off();
    SimplexContext ctx{&p};
    gsl_multimin_function f{&simplex_objective, 2, &ctx};
    gsl_vector* start = gsl_vector_alloc(2);
    gsl_vector* step = gsl_vector_alloc(2);
    gsl_vector_set(start, 0, std::log(sigma0));
    gsl_vector_set(start, 1, x00 * x00);
    gsl_vector_set(step, 0, 0.1);
    gsl_vector_set(step, 1, 0.1);
    gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2);
    gsl_multimin_fminimizer_set(m, &f, start, step);
    bool converged = false;
    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
        if (gsl_multimin_fminimizer_iterate(m) != GSL_SUCCESS) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), opt.simplex_size_tol) == GSL_SUCCESS) {
            converged = true;
            break;
        }
    }
    std::optional<std::pair<double, double>> out;
    if (converged) {
        double sigma = std::exp(gsl_vector_get(m->x, 0));
        double x0 = std::sqrt(std::abs(gsl_vector_get(m->x, 1)));
        const double e_at = variational_energy(sigma, x0, p);
        // Near x0 = 0 the valley is quartic; settle on the centred state when it is no higher.
        if (x0 < 1e-2) {
            const auto s0 = minimize_centred_sigma(sigma, p);
            if (s0 && variational_energy(*s0, 0.0, p) <= e_at + 1e-14 * std::max(1.0, std::abs(e_at))) {
                sigma = *s0;
                x0 = 0.0;
            }
        }
        out = std::pair{sigma, x0};
    }
    gsl_multimin_fminimizer_free(m);
    gsl_vector_free(step);
    gsl_vector_free(start);
    return out;
}

}  // namespace detail

// Multi-start local minimization of E(sigma, x0). Results are ordered by (energy, sigma, x0);
// the lowest is flagged global. Saddles and duplicates are discarded.
inline std::vector<VariationalPoint> find_branches(const ModelParams& p, const BranchSearchOptions& opt = {}) {
    p.validate();
    const double ds = opt.seeds == SeedGrid::coarse ? 0.3 : 0.15;
    const double dx = opt.seeds == SeedGrid::coarse ? 0.5 : 0.25;
    std::vector<VariationalPoint> found;
    for (int i = 1; i * ds <= 3.0 + 1e-12; ++i) {
        for (int j = 0; j * dx <= 5.0 + 1e-12; ++j) {
            const auto m = detail::simplex_minimize(i * ds, j * dx, p, opt);
            if (!m) continue;
            const auto [sigma, x0] = *m;
            const bool dup = std::any_of(found.begin(), found.end(), [&](const VariationalPoint& q) {
                return std::abs(q.sigma - sigma) < opt.dedup_tol && std::abs(q.x0 - x0) < opt.dedup_tol;
            });
            if (dup) continue;
            if (!is_local_minimum(sigma, x0, p)) continue;
            found.push_back({sigma, x0, variational_energy(sigma, x0, p), branch_photon_number(sigma, x0, p),
                             classify_branch(sigma, x0), false});
        }
    }
    if (found.empty()) throw NumericalError("variational search found no local minimum");
    std::sort(found.begin(), found.end(), [](const VariationalPoint& a, const VariationalPoint& b) {
        return std::tie(a.energy, a.sigma, a.x0) < std::tie(b.energy, b.sigma, b.x0);
    });
    found.front().is_global = true;
    return found;
}

struct SweepRow {
    double eta = 0.0;
    std::vector<VariationalPoint> branches;
    double n_ss_gpe = 0.0;
    double energy_gpe = 0.0;
    double gpe_center_amplitude = 0.0;
    double gpe_peak_amplitude = 0.0;
    bool gpe_double_peak = false;
};

struct SweepFailure {
    double eta = 0.0;
    std::string message;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SweepFailure> failures;
};

struct SweepOptions {
    BranchSearchOptions branches;
    GroundStateOptions ground_state;
    bool with_gpe = true;
};

// GPE ground state relaxed from the default Gaussian and from every supplied variational
// branch. Each seed is first relaxed over a short imaginary-time window at the initial step;
// only the lowest-energy candidate is converged fully.
inline GroundStateResult global_ground_state(const ModelParams& p, const Grid& grid,
                                             const std::vector<VariationalPoint>& branches,
                                             const GroundStateOptions& opt = {}, double screen_tau = 10.0) {
    std::vector<OrderParameter> seeds{gaussian_state(grid, 0.0, 1.0)};
    for (const auto& b : branches) seeds.push_back(ansatz_density(b.sigma, b.x0, grid));
    if (seeds.size() == 1) return ground_state_imaginary_time(p, grid, seeds.front(), opt);

    GpePropagator prop(grid, p);
    const auto steps = static_cast<std::size_t>(std::ceil(screen_tau / opt.dtau));
    std::optional<OrderParameter> best;
    double best_e = std::numeric_limits<double>::infinity();
    for (const auto& seed : seeds) {
        std::vector<Complex> psi(seed.values().begin(), seed.values().end());
        for (std::size_t s = 0; s < steps; ++s) prop.step(psi, opt.dtau, TimeMode::imaginary, FieldMode::self_consistent());
        const double e = prop.energy(psi, p.eta);
        if (e < best_e) {
            best_e = e;
            best = OrderParameter(grid, std::move(psi));
        }
    }
    return ground_state_imaginary_time(p, grid, *best, opt);
}

// Variational branches and the GPE ground state at each pump value. The GPE is relaxed from
// the default Gaussian and from every variational branch; the lowest-energy result is kept.
inline SweepResult sweep_pump(const ModelParams& p, const std::vector<double>& eta_values, const Grid& grid,
                              const SweepOptions& opt = {}) {
    detail::require(!eta_values.empty(), "sweep needs at least one pump value");
    for (std::size_t i = 1; i < eta_values.size(); ++i) {
        detail::require(eta_values[i] > eta_values[i - 1], "pump values must be ascending");
    }
    SweepResult out;
    for (const double eta : eta_values) {
        const ModelParams q = p.with_eta(eta);
        SweepRow row;
        row.eta = eta;
        try {
            row.branches = find_branches(q, opt.branches);
            if (opt.with_gpe) {
                const auto best = global_ground_state(q, grid, row.branches, opt.ground_state);
                row.n_ss_gpe = best.n_ss;
                row.energy_gpe = best.energy;
                const auto amp = best.psi.amplitude();
                const std::size_t c = grid.size() / 2;
                row.gpe_center_amplitude = amp[c];
                row.gpe_peak_amplitude = *std::max_element(amp.begin(), amp.end());
                // Even states: either peaked at the origin or dipped there between two peaks.
                row.gpe_double_peak = row.gpe_center_amplitude < 0.95 * row.gpe_peak_amplitude;
            }
            out.rows.push_back(std::move(row));
        } catch (const NumericalError& e) {
            out.failures.push_back({eta, e.what()});
        }
    }
    return out;
}

}  // namespace cavity_dw
