#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cavity_dw/cavity_field.hpp"
#include "cavity_dw/errors.hpp"
#include "cavity_dw/grid.hpp"
#include "cavity_dw/units.hpp"

namespace cavity_dw {

enum class TimeMode { real, imaginary };

enum class Parity { none, even, odd };

// Either follow the atoms adiabatically (n_ss recomputed every step) or hold n_ss fixed.
struct FieldMode {
    std::optional<double> frozen_n_ss;

    static FieldMode self_consistent() { return {}; }
    static FieldMode frozen(double n_ss) { return {n_ss}; }
    bool is_frozen() const { return frozen_n_ss.has_value(); }
};

// Piecewise-linear pump amplitude eta(t), clamped to the end values outside the knots.
class PumpSchedule {
public:
    PumpSchedule() = default;
    explicit PumpSchedule(std::vector<std::pair<double, double>> knots) : knots_(std::move(knots)) {
        detail::require(!knots_.empty(), "pump schedule needs at least one knot");
        for (std::size_t i = 0; i < knots_.size(); ++i) {
            detail::require(std::isfinite(knots_[i].first) && std::isfinite(knots_[i].second) &&
                                knots_[i].second >= 0.0,
                            "pump schedule knots must be finite with eta >= 0");
            if (i > 0) detail::require(knots_[i].first > knots_[i - 1].first, "pump schedule times must increase");
        }
    }

    static PumpSchedule linear_ramp(double t0, double eta0, double t1, double eta1) {
        return PumpSchedule({{t0, eta0}, {t1, eta1}});
    }

    bool empty() const { return knots_.empty(); }

    double at(double t) const {
        if (t <= knots_.front().first) return knots_.front().second;
        if (t >= knots_.back().first) return knots_.back().second;
        auto hi = std::upper_bound(knots_.begin(), knots_.end(), t,
                                   [](double v, const auto& knot) { return v < knot.first; });
        auto lo = hi - 1;
        const double w = (t - lo->first) / (hi->first - lo->first);
        return lo->second + w * (hi->second - lo->second);
    }

private:
    std::vector<std::pair<double, double>> knots_;
};

// Split-step Fourier propagator for the cavity-coupled GPE. Owns its transform
// workspace; one instance per run.
class GpePropagator {
public:
    GpePropagator(Grid grid, const ModelParams& p)
        : grid_(std::move(grid)), params_(p), fft_(grid_.size()), mode_(mode_function(grid_, p)),
          harmonic_(grid_.size()) {
        p.validate();
        const auto x = grid_.x();
        for (std::size_t j = 0; j < harmonic_.size(); ++j) harmonic_[j] = 0.5 * x[j] * x[j];
    }

    const Grid& grid() const { return grid_; }
    const ModelParams& params() const { return params_; }
    const std::vector<double>& mode() const { return mode_; }
    SpectralTransform& transform() { return fft_; }

    // Steady-state photon number of the (possibly unnormalized) state at pump eta.
    double photon_number(std::span<const Complex> psi, double eta) const {
        double weighted = 0.0;
        double total = 0.0;
        for (std::size_t j = 0; j < psi.size(); ++j) {
            const double d = std::norm(psi[j]);
            weighted += d * mode_[j];
            total += d;
        }
        return steady_state_photon_number(weighted / total, params_.with_eta(eta));
    }

    // One Strang step: half kinetic, potential, half kinetic. The field is evaluated on
    // the density entering the potential sub-step, which that sub-step leaves unchanged.
    // Returns the photon number used.
    double step(std::vector<Complex>& psi, double dt, TimeMode mode, const FieldMode& field,
                std::optional<double> eta = std::nullopt) {
        detail::require(dt > 0.0 && std::isfinite(dt), "time step must be > 0");
        detail::require(psi.size() == grid_.size(), "state size does not match grid");
        prepare_kinetic(dt, mode);

        half_kinetic(psi);

        const double eta_now = eta.value_or(params_.eta);
        double total = 0.0;
        for (const auto& v : psi) total += std::norm(v);
        double n_ss = field.is_frozen() ? *field.frozen_n_ss : photon_number(psi, eta_now);
        double g_n = params_.g_coll * params_.n_atoms / (total * grid_.dx());
        if (mode == TimeMode::real) {
            for (std::size_t j = 0; j < psi.size(); ++j) {
                const double v = harmonic_[j] + n_ss * mode_[j] + g_n * std::norm(psi[j]);
                psi[j] *= Complex(std::cos(v * dt), -std::sin(v * dt));
            }
        } else {
            // The imaginary potential step reshapes the density, so the field is taken at the
            // midpoint of the sub-step (density after a trial half step).
            auto& mid = density_;
            mid.resize(psi.size());
            double weighted = 0.0;
            double mid_total = 0.0;
            for (std::size_t j = 0; j < psi.size(); ++j) {
                const double d = std::norm(psi[j]);
                mid[j] = d * std::exp(-(harmonic_[j] + n_ss * mode_[j] + g_n * d) * dt);
                weighted += mid[j] * mode_[j];
                mid_total += mid[j];
            }
            if (!field.is_frozen())
                n_ss = steady_state_photon_number(weighted / mid_total, params_.with_eta(eta_now));
            g_n = params_.g_coll * params_.n_atoms / (mid_total * grid_.dx());
            for (std::size_t j = 0; j < psi.size(); ++j) {
                const double v = harmonic_[j] + n_ss * mode_[j] + g_n * mid[j];
                psi[j] *= std::exp(-v * dt);
            }
        }

        half_kinetic(psi);

        double norm2 = 0.0;
        for (const auto& v : psi) norm2 += std::norm(v);
        norm2 *= grid_.dx();
        if (!std::isfinite(norm2) || norm2 <= 0.0) {
            throw NumericalError("GPE step produced a non-finite or vanishing state (n_ss = " +
                                 std::to_string(n_ss) + ", dt = " + std::to_string(dt) + ")");
        }
        if (mode == TimeMode::imaginary) {
            const double s = 1.0 / std::sqrt(norm2);
            for (auto& v : psi) v *= s;
        }
        return n_ss;
    }

    // H[psi] psi for the instantaneous self-consistent field at pump eta.
    std::vector<Complex> apply_hamiltonian(std::span<const Complex> psi, double eta) {
        std::vector<Complex> kin(psi.begin(), psi.end());
        fft_.forward(kin);
        const auto k = grid_.k();
        for (std::size_t j = 0; j < kin.size(); ++j) kin[j] *= 0.5 * k[j] * k[j];
        fft_.inverse(kin);
        const double n_ss = photon_number(psi, eta);
        double total = 0.0;
        for (const auto& v : psi) total += std::norm(v);
        const double g_n = params_.g_coll * params_.n_atoms / (total * grid_.dx());
        for (std::size_t j = 0; j < kin.size(); ++j) {
            kin[j] += (harmonic_[j] + n_ss * mode_[j] + g_n * std::norm(psi[j])) * psi[j];
        }
        return kin;
    }

    // Energy per atom of a normalized state at pump eta.
    double energy(std::span<const Complex> psi, double eta) {
        std::vector<Complex> v(psi.begin(), psi.end());
        fft_.forward(v);
        const auto k = grid_.k();
        const std::size_t n = v.size();
        double kinetic = 0.0;
        for (std::size_t j = 0; j < n; ++j) kinetic += 0.5 * k[j] * k[j] * std::norm(v[j]);
        kinetic *= grid_.dx() / static_cast<double>(n);

        double potential = 0.0;
        double quartic = 0.0;
        double weighted = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = std::norm(psi[j]);
            potential += harmonic_[j] * d;
            quartic += d * d;
            weighted += mode_[j] * d;
        }
        const double dx = grid_.dx();
        const double y = weighted * dx;
        const double cavity = -(eta * eta / (params_.kappa * params_.n_atoms)) *
                              std::atan((params_.delta_c - params_.n_atoms * y) / params_.kappa);
        return kinetic + potential * dx + 0.5 * params_.g_coll * params_.n_atoms * quartic * dx + cavity;
    }

    // ||(H - mu) psi|| with mu = <psi|H|psi>.
    double residual(std::span<const Complex> psi, double eta) {
        const auto h = apply_hamiltonian(psi, eta);
        Complex mu = 0.0;
        for (std::size_t j = 0; j < psi.size(); ++j) mu += std::conj(psi[j]) * h[j];
        mu *= grid_.dx();
        double r = 0.0;
        for (std::size_t j = 0; j < psi.size(); ++j) r += std::norm(h[j] - mu * psi[j]);
        return std::sqrt(r * grid_.dx());
    }

private:
    void prepare_kinetic(double dt, TimeMode mode) {
        if (kinetic_dt_ == dt && kinetic_mode_ == mode && !kinetic_.empty()) return;
        kinetic_.resize(grid_.size());
        const auto k = grid_.k();
        for (std::size_t j = 0; j < kinetic_.size(); ++j) {
            const double a = 0.25 * k[j] * k[j] * dt;
            kinetic_[j] = mode == TimeMode::real ? Complex(std::cos(a), -std::sin(a)) : Complex(std::exp(-a), 0.0);
        }
        kinetic_dt_ = dt;
        kinetic_mode_ = mode;
    }

    void half_kinetic(std::vector<Complex>& psi) {
        fft_.forward(psi);
        for (std::size_t j = 0; j < psi.size(); ++j) psi[j] *= kinetic_[j];
        fft_.inverse(psi);
    }

    Grid grid_;
    ModelParams params_;
    SpectralTransform fft_;
    std::vector<double> mode_;
    std::vector<double> harmonic_;
    std::vector<Complex> kinetic_;
    std::vector<double> density_;
    double kinetic_dt_ = 0.0;
    TimeMode kinetic_mode_ = TimeMode::real;
};

// Single Strang step on a normalized order parameter.
inline OrderParameter step(const OrderParameter& psi, double dt, const ModelParams& p, TimeMode mode,
                           const FieldMode& field = FieldMode::self_consistent()) {
    GpePropagator prop(psi.grid(), p);
    std::vector<Complex> v(psi.values().begin(), psi.values().end());
    prop.step(v, dt, mode, field);
    return OrderParameter(psi.grid(), std::move(v));
}

// E/N = int [ |psi'|^2/2 + x^2 |psi|^2/2 + (gN/2)|psi|^4 ] dx - (eta^2/(kappa N)) atan((delta_c - N Y)/kappa).
inline double energy_functional(const OrderParameter& psi, const ModelParams& p) {
    detail::require(psi.is_normalized(1e-8), "energy_functional requires a normalized order parameter");
    GpePropagator prop(psi.grid(), p);
    return prop.energy(psi.values(), p.eta);
}

// Z = 1 - 2 int_{x < offset} |psi|^2 dx. The periodic boundary sample and a sample sitting
// exactly on the offset carry zero weight, so mirror images give exactly opposite values.
inline double inversion(std::span<const Complex> psi, const Grid& grid, double offset) {
    const auto x = grid.x();
    double z = 0.0;
    for (std::size_t j = 1; j < psi.size(); ++j) {
        const double d = std::norm(psi[j]);
        if (x[j] > offset) {
            z += d;
        } else if (x[j] < offset) {
            z -= d;
        }
    }
    return z * grid.dx();
}

inline double inversion(const OrderParameter& psi, const ModelParams& p) {
    detail::require(psi.is_normalized(1e-8), "inversion requires a normalized order parameter");
    return inversion(psi.values(), psi.grid(), p.barrier_offset);
}

inline OrderParameter gaussian_state(const Grid& grid, double center, double width) {
    detail::require(width > 0.0, "gaussian width must be > 0");
    return normalize(OrderParameter::sample(grid, [&](double x) {
        const double d = (x - center) / width;
        return std::exp(-0.5 * d * d);
    }));
}

struct GroundStateOptions {
    double dtau = 1e-3;
    double tol = 1e-10;
    std::size_t check_every = 100;
    std::size_t max_steps = 2'000'000;
    Parity parity = Parity::none;
    // The imaginary-time Strang fixed point carries an O(dtau^2) residual; when the energy
    // has settled but the residual has not, dtau is halved down to this floor.
    double dtau_min = 1.0 / 64.0 * 1e-3;
};

struct GroundStateResult {
    OrderParameter psi;
    double n_ss = 0.0;
    double energy = 0.0;
    double residual = 0.0;
    std::size_t iterations = 0;
    double final_dtau = 0.0;
};

class GroundStateNotConverged : public NumericalError {
public:
    GroundStateNotConverged(const std::string& what, GroundStateResult last)
        : NumericalError(what), last_(std::move(last)) {}
    const GroundStateResult& last() const { return last_; }

private:
    GroundStateResult last_;
};

namespace detail {

inline void project_parity(std::vector<Complex>& psi, const Grid& grid, Parity parity) {
    if (parity == Parity::none) return;
    const double sign = parity == Parity::even ? 1.0 : -1.0;
    std::vector<Complex> out(psi.size());
    for (std::size_t j = 0; j < psi.size(); ++j) out[j] = 0.5 * (psi[j] + sign * psi[grid.mirror_index(j)]);
    double n2 = 0.0;
    for (const auto& v : out) n2 += std::norm(v);
    n2 *= grid.dx();
    if (!(n2 > 0.0)) throw NumericalError("parity projection annihilated the state");
    const double s = 1.0 / std::sqrt(n2);
    for (auto& v : out) v *= s;
    psi = std::move(out);
}

}  // namespace detail

// Imaginary-time relaxation with the photon number updated every step.
inline GroundStateResult ground_state_imaginary_time(const ModelParams& p, const Grid& grid,
                                                     std::optional<OrderParameter> init = std::nullopt,
                                                     const GroundStateOptions& opt = {}) {
    detail::require(opt.tol > 0.0 && opt.dtau > 0.0 && opt.check_every > 0, "invalid ground-state options");
    detail::require(opt.parity == Parity::none || p.barrier_offset == 0.0,
                    "parity projection needs a barrier centred at the trap centre");
    GpePropagator prop(grid, p);
    OrderParameter start = init ? normalize(*init) : gaussian_state(grid, 0.0, 1.0);
    detail::require(start.grid() == grid, "initial state lives on a different grid");
    std::vector<Complex> psi = std::move(start).release();
    detail::project_parity(psi, grid, opt.parity);

    double dtau = opt.dtau;
    double e_prev = prop.energy(psi, p.eta);
    double res = std::numeric_limits<double>::infinity();
    double res_prev = std::numeric_limits<double>::infinity();
    std::size_t it = 0;
    const double res_target = std::sqrt(opt.tol);
    while (it < opt.max_steps) {
        for (std::size_t s = 0; s < opt.check_every; ++s) {
            prop.step(psi, dtau, TimeMode::imaginary, FieldMode::self_consistent());
            detail::project_parity(psi, grid, opt.parity);
        }
        it += opt.check_every;
        const double span = static_cast<double>(opt.check_every) * dtau;
        const double e = prop.energy(psi, p.eta);
        const double rate = std::abs(e - e_prev) / span;
        e_prev = e;
        if (rate >= opt.tol) {
            res_prev = std::numeric_limits<double>::infinity();
            continue;
        }
        res = prop.residual(psi, p.eta);
        if (res < res_target) {
            OrderParameter out(grid, std::move(psi));
            const double n_ss = prop.photon_number(out.values(), p.eta);
            return {std::move(out), n_ss, e, res, it, dtau};
        }
        // Residual no longer decaying: the splitting floor (~dtau^2) has been reached.
        const bool stalled = std::log(res_prev / res) / span < 0.1;
        res_prev = res;
        if (!stalled) continue;
        if (dtau <= opt.dtau_min) break;
        dtau = std::clamp(dtau * std::sqrt(0.25 * res_target / res), opt.dtau_min, 0.5 * dtau);
        res_prev = std::numeric_limits<double>::infinity();
    }
    res = prop.residual(psi, p.eta);
    OrderParameter out(grid, std::move(psi));
    const double n_ss = prop.photon_number(out.values(), p.eta);
    GroundStateResult last{std::move(out), n_ss, e_prev, res, it, dtau};
    throw GroundStateNotConverged("imaginary-time relaxation did not converge after " + std::to_string(it) +
                                      " steps (residual " + std::to_string(res) + ")",
                                  std::move(last));
}

struct LocalizedModes {
    GroundStateResult symmetric;
    GroundStateResult antisymmetric;
    OrderParameter left;
    OrderParameter right;
};

// psi_L,R = (psi_sym -+ psi_asym)/sqrt(2) from the even ground state and the lowest odd state.
inline LocalizedModes localized_modes(const ModelParams& p, const Grid& grid, const GroundStateOptions& opt = {}) {
    detail::require(p.barrier_offset == 0.0, "localized modes need a barrier centred at the trap centre");
    GroundStateOptions even = opt;
    even.parity = Parity::even;
    GroundStateOptions odd = opt;
    odd.parity = Parity::odd;
    auto sym = ground_state_imaginary_time(p, grid, std::nullopt, even);
    auto asym = ground_state_imaginary_time(p, grid, gaussian_state(grid, 1.0, 1.0), odd);

    std::vector<Complex> s(sym.psi.values().begin(), sym.psi.values().end());
    std::vector<Complex> a(asym.psi.values().begin(), asym.psi.values().end());
    // Fix the arbitrary global phases: psi_sym real-positive at its peak, psi_asym positive on the right.
    const auto fix_phase = [](std::vector<Complex>& v, std::size_t ref) {
        const Complex ph = std::abs(v[ref]) > 0.0 ? std::conj(v[ref]) / std::abs(v[ref]) : Complex(1.0);
        for (auto& c : v) c *= ph;
    };
    const auto peak_of = [&](const std::vector<Complex>& v, bool right_half) {
        std::size_t best = right_half ? v.size() / 2 : 0;
        for (std::size_t j = right_half ? v.size() / 2 : 0; j < v.size(); ++j) {
            if (std::abs(v[j]) > std::abs(v[best])) best = j;
        }
        return best;
    };
    fix_phase(s, peak_of(s, false));
    fix_phase(a, peak_of(a, true));

    const double r = 1.0 / std::sqrt(2.0);
    std::vector<Complex> left(s.size());
    std::vector<Complex> right(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
        left[j] = (s[j] - a[j]) * r;
        right[j] = (s[j] + a[j]) * r;
    }
    sym.psi = OrderParameter(grid, std::move(s));
    asym.psi = OrderParameter(grid, std::move(a));
    return {std::move(sym), std::move(asym), OrderParameter(grid, std::move(left)),
            OrderParameter(grid, std::move(right))};
}

struct EvolveOptions {
    double dt = 5e-4;
    std::size_t sample_every = 20;  // steps between recorded samples
    double snapshot_every = 0.0;    // time between snapshots, 0 = none
    std::optional<PumpSchedule> schedule;
    double edge_density_limit = 1e-12;
};

struct Snapshot {
    double time = 0.0;
    OrderParameter psi;
};

struct PropagationResult {
    std::vector<double> times;
    std::vector<double> inversion;
    std::vector<double> photon_number;
    std::vector<double> energy;
    std::vector<double> eta;
    std::vector<Snapshot> snapshots;
    double max_norm_error = 0.0;
    double max_edge_density = 0.0;
    OrderParameter final_state;
};

class PropagationError : public NumericalError {
public:
    PropagationError(const std::string& what, PropagationResult partial)
        : NumericalError(what), partial_(std::move(partial)) {}
    const PropagationResult& partial() const { return partial_; }

private:
    PropagationResult partial_;
};

// Real-time self-consistent evolution. With a schedule, eta is taken at the middle of each step.
inline PropagationResult evolve(const OrderParameter& psi0, double t_final, const ModelParams& p,
                                const EvolveOptions& opt = {}) {
    detail::require(t_final > 0.0 && std::isfinite(t_final), "t_final must be > 0");
    detail::require(opt.dt > 0.0 && opt.sample_every > 0, "invalid evolve options");
    detail::require(psi0.is_normalized(1e-8), "evolve requires a normalized initial state");
    const Grid& grid = psi0.grid();
    GpePropagator prop(grid, p);
    const auto eta_at = [&](double t) { return opt.schedule ? opt.schedule->at(t) : p.eta; };

    const auto n_steps = static_cast<std::size_t>(std::llround(t_final / opt.dt));
    detail::require(n_steps > 0, "t_final shorter than one time step");
    const std::size_t snapshot_stride =
        opt.snapshot_every > 0.0
            ? std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opt.snapshot_every / opt.dt)))
            : 0;

    PropagationResult out{{}, {}, {}, {}, {}, {}, 0.0, 0.0, psi0};
    std::vector<Complex> psi(psi0.values().begin(), psi0.values().end());
    const std::size_t n = psi.size();

    const auto record = [&](double t) {
        const double eta = eta_at(t);
        out.times.push_back(t);
        out.inversion.push_back(inversion(psi, grid, p.barrier_offset));
        out.photon_number.push_back(prop.photon_number(psi, eta));
        out.energy.push_back(prop.energy(psi, eta));
        out.eta.push_back(eta);
        double n2 = 0.0;
        for (const auto& v : psi) n2 += std::norm(v);
        out.max_norm_error = std::max(out.max_norm_error, std::abs(n2 * grid.dx() - 1.0));
        const double edge = std::max(std::norm(psi[0]), std::norm(psi[n - 1]));
        out.max_edge_density = std::max(out.max_edge_density, edge);
        if (!(edge <= opt.edge_density_limit)) {
            out.final_state = OrderParameter(grid, psi);
            throw PropagationError("density at the grid boundary reached " + std::to_string(edge) + " at t = " +
                                       std::to_string(t) + "; enlarge x_max",
                                   std::move(out));
        }
    };

    record(0.0);
    if (snapshot_stride) out.snapshots.push_back({0.0, OrderParameter(grid, psi)});
    for (std::size_t s = 1; s <= n_steps; ++s) {
        const double t_mid = (static_cast<double>(s) - 0.5) * opt.dt;
        try {
            prop.step(psi, opt.dt, TimeMode::real, FieldMode::self_consistent(), eta_at(t_mid));
        } catch (const NumericalError& e) {
            out.final_state = OrderParameter(grid, psi);
            throw PropagationError(e.what(), std::move(out));
        }
        const double t = static_cast<double>(s) * opt.dt;
        if (s % opt.sample_every == 0 || s == n_steps) record(t);
        if (snapshot_stride && s % snapshot_stride == 0) out.snapshots.push_back({t, OrderParameter(grid, psi)});
    }
    out.final_state = OrderParameter(grid, std::move(psi));
    return out;
}

}  // namespace cavity_dw
