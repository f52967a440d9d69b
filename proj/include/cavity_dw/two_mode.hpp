#pragma once

#include <gsl/gsl_errno.h>
#include <gsl/gsl_min.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cavity_dw/cavity_field.hpp"
#include "cavity_dw/errors.hpp"
#include "cavity_dw/units.hpp"

// Two-mode (left/right Gaussian) description of the cavity double well beyond mean field.
namespace cavity_dw {

enum class InitialWell { left, right };

// Inversion of a two-level system H = [[E_L, -J], [-J, E_R]], delta = E_L - E_R, started in
// the right well. Uses the exact 2x2 propagator
//   exp(-iHt) = exp(-i a t) [cos(W t) 1 - i sin(W t)/W (H - a 1)],  a = (E_L+E_R)/2,
// W = sqrt(J^2 + delta^2/4).
inline double two_level_inversion(double coupling, double delta, double t) {
    const double w = std::sqrt(coupling * coupling + 0.25 * delta * delta);
    if (w == 0.0) return 1.0;
    const double c = std::cos(w * t);
    const double sw = std::sin(w * t) / w;
    // Column of the propagator acting on |R> = (0, 1), up to the common phase.
    const std::complex<double> amp_left(0.0, sw * coupling);             // -i sw * (-J)
    const std::complex<double> amp_right(c, sw * 0.5 * delta);           // c - i sw * (E_R - a)
    return std::norm(amp_right) - std::norm(amp_left);
}

struct TwoModeCoefficients {
    double e0 = 0.0;
    double e1 = 0.0;
    double j0 = 0.0;
    double j1 = 0.0;
    double s0 = 0.0;
    double s1 = 0.0;
    double sigma = 0.0;
    double x0 = 0.0;
    double n_ss = 0.0;
};

// Closed-form overlap integrals for Gaussians of width sigma centred at -+x0, with
// orthogonality of the two well functions imposed by hand.
inline TwoModeCoefficients overlap_coefficients(double sigma, double x0, const ModelParams& p) {
    detail::require(sigma > 0.0 && x0 >= 0.0, "overlap coefficients need sigma > 0 and x0 >= 0");
    const double s2 = sigma * sigma;
    const double w2 = p.delta_x * p.delta_x;
    const double split = std::exp(-x0 * x0 / s2);
    const double width_ratio = p.delta_x / std::sqrt(w2 + s2);
    TwoModeCoefficients c;
    c.e0 = 1.0 / (4.0 * s2);
    c.e1 = c.e0 * split;
    c.j0 = width_ratio * std::exp(-x0 * x0 / (w2 + s2));
    c.j1 = width_ratio * split;
    c.s0 = 0.5 * (x0 * x0 + 0.5 * s2);
    c.s1 = 0.25 * s2 * split;
    c.sigma = sigma;
    c.x0 = x0;
    return c;
}

// Ground-state energy per atom within the two-mode ansatz.
inline double two_mode_energy(double sigma, double x0, const ModelParams& p) {
    const auto c = overlap_coefficients(sigma, x0, p);
    const double arg = (p.delta_c - p.u0 * p.n_atoms * (c.j0 + c.j1)) / p.kappa;
    return c.e0 + c.e1 + c.s0 + c.s1 - (p.eta * p.eta / (p.kappa * p.n_atoms)) * std::atan(arg);
}

class TwoModeModel {
public:
    TwoModeModel(TwoModeCoefficients coeffs, ModelParams params) : coeffs_(coeffs), params_(params) {}

    const TwoModeCoefficients& coeffs() const { return coeffs_; }
    const ModelParams& params() const { return params_; }

    // t(N) = -E1 - S1 - eta^2 U0 J1 / (kappa^2 + (delta_c - U0 J0 N)^2)
    double t_of_n(double n) const {
        const double d = params_.delta_c - params_.u0 * coeffs_.j0 * n;
        return -coeffs_.e1 - coeffs_.s1 -
               params_.eta * params_.eta * params_.u0 * coeffs_.j1 / (params_.kappa * params_.kappa + d * d);
    }

    // f(N) with the sign of the energy functional: -(eta^2/kappa) atan((delta_c - U0 J0 N)/kappa).
    double f_of_n(double n) const {
        const double d = params_.delta_c - params_.u0 * coeffs_.j0 * n;
        return -(params_.eta * params_.eta / params_.kappa) * std::atan(d / params_.kappa);
    }

private:
    TwoModeCoefficients coeffs_;
    ModelParams params_;
};

inline double tunneling_t(double n, const TwoModeModel& model) {
    detail::require(n >= 0.0, "atom number must be >= 0");
    return model.t_of_n(n);
}

struct SelfConsistentOptions {
    double sigma_min = 0.02;
    double sigma_max = 10.0;
    std::size_t sigma_scan = 400;
    double rel_tol = 1e-10;
    double residual_tol = 1e-8;
    std::size_t max_iterations = 400;
    double mixing = 0.5;
    double dedup_rel = 1e-6;
};

struct SelfConsistentReport {
    std::vector<TwoModeModel> models;
    std::vector<std::string> skipped;
};

namespace detail {

struct SigmaContext {
    double x0;
    const ModelParams* params;
};

inline double sigma_objective(double sigma, void* ctx) {
    const auto* c = static_cast<const SigmaContext*>(ctx);
    return two_mode_energy(sigma, c->x0, *c->params);
}

// Global minimum over sigma of the two-mode energy at fixed x0: log-spaced scan, then Brent.
inline double minimize_sigma(double x0, const ModelParams& p, const SelfConsistentOptions& opt) {
    const std::size_t n = std::max<std::size_t>(opt.sigma_scan, 3);
    const double lmin = std::log(opt.sigma_min);
    const double lmax = std::log(opt.sigma_max);
    std::vector<double> grid(n);
    std::size_t best = 0;
    double best_e = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        grid[i] = std::exp(lmin + (lmax - lmin) * static_cast<double>(i) / static_cast<double>(n - 1));
        const double e = two_mode_energy(grid[i], x0, p);
        if (e < best_e) {
            best_e = e;
            best = i;
        }
    }
    if (best == 0 || best == n - 1) return grid[best];

    gsl_set_error_handler_off();
    SigmaContext ctx{x0, &p};
    gsl_function f{&sigma_objective, &ctx};
    gsl_min_fminimizer* m = gsl_min_fminimizer_alloc(gsl_min_fminimizer_brent);
    double sigma = grid[best];
    if (gsl_min_fminimizer_set_with_values(m, &f, grid[best], best_e, grid[best - 1],
                                           two_mode_energy(grid[best - 1], x0, p), grid[best + 1],
                                           two_mode_energy(grid[best + 1], x0, p)) == GSL_SUCCESS) {
        for (int it = 0; it < 200; ++it) {
            if (gsl_min_fminimizer_iterate(m) != GSL_SUCCESS) break;
            const double lo = gsl_min_fminimizer_x_lower(m);
            const double hi = gsl_min_fminimizer_x_upper(m);
            sigma = gsl_min_fminimizer_x_minimum(m);
            if (gsl_min_test_interval(lo, hi, 1e-13, 1e-13) == GSL_SUCCESS) break;
        }
    }
    gsl_min_fminimizer_free(m);
    return sigma;
}

}  // namespace detail

// One pass of the self-consistency map n_ss -> (x0, sigma) -> n_ss'. The cavity overlap
// keeps J0 only. Empty when n_ss gives no double well.
struct FixedPointStep {
    double x0 = 0.0;
    double sigma = 0.0;
    double n_ss_next = 0.0;
};

inline std::optional<FixedPointStep> self_consistency_map(double n_ss, const ModelParams& p,
                                                          const SelfConsistentOptions& opt = {}) {
    const auto x0 = well_minimum_position(n_ss, p);
    if (!x0) return std::nullopt;
    const double sigma = detail::minimize_sigma(*x0, p, opt);
    const auto c = overlap_coefficients(sigma, *x0, p);
    const double d = p.delta_c - p.u0 * c.j0 * p.n_atoms;
    return FixedPointStep{*x0, sigma, p.eta * p.eta / (p.kappa * p.kappa + d * d)};
}

inline std::vector<double> default_n_ss_guesses(const ModelParams& p, std::size_t count = 8) {
    const double hi = 0.99 * p.max_photon_number();
    std::vector<double> g;
    if (!(hi > 0.01)) return {0.01};
    for (std::size_t i = 0; i < count; ++i) {
        g.push_back(0.01 * std::pow(hi / 0.01, static_cast<double>(i) / static_cast<double>(count - 1)));
    }
    return g;
}

inline SelfConsistentReport self_consistent_model(const ModelParams& p, const std::vector<double>& n_ss_guesses,
                                                  const SelfConsistentOptions& opt = {}) {
    p.validate();
    detail::require(!n_ss_guesses.empty(), "self-consistent search needs at least one guess");
    SelfConsistentReport report;
    for (const double guess : n_ss_guesses) {
        double n = guess;
        bool converged = false;
        bool domain_error = false;
        for (std::size_t it = 0; it < opt.max_iterations && !converged; ++it) {
            const auto step = self_consistency_map(n, p, opt);
            if (!step) {
                domain_error = true;
                break;
            }
            // Plain iteration first; damped updates for the second half of the budget.
            const double w = it < opt.max_iterations / 2 ? 1.0 : opt.mixing;
            const double next = (1.0 - w) * n + w * step->n_ss_next;
            converged = std::abs(next - n) <= opt.rel_tol * std::abs(n);
            n = next;
        }
        if (domain_error) {
            report.skipped.push_back("guess " + std::to_string(guess) +
                                     ": photon number too small for a double well (2 U0 n_ss <= delta_x^2)");
            continue;
        }
        if (!converged) {
            report.skipped.push_back("guess " + std::to_string(guess) + ": fixed-point iteration did not converge");
            continue;
        }
        const auto step = self_consistency_map(n, p, opt);
        if (!step || std::abs(step->n_ss_next - n) > opt.residual_tol * n) {
            report.skipped.push_back("guess " + std::to_string(guess) + ": fixed-point residual above tolerance");
            continue;
        }
        const bool dup = std::any_of(report.models.begin(), report.models.end(), [&](const TwoModeModel& m) {
            return std::abs(m.coeffs().n_ss - n) <= opt.dedup_rel * n;
        });
        if (dup) continue;
        auto c = overlap_coefficients(step->sigma, step->x0, p);
        c.n_ss = n;
        report.models.emplace_back(c, p);
    }
    std::sort(report.models.begin(), report.models.end(), [](const TwoModeModel& a, const TwoModeModel& b) {
        return a.coeffs().n_ss < b.coeffs().n_ss;
    });
    return report;
}

// E_k = (E0 + S0) N + f(N) - t(N) (N - 2k), k = 0..N.
inline std::vector<double> spectrum(int n, const TwoModeModel& model) {
    detail::require(n >= 0, "atom number must be >= 0");
    const auto& c = model.coeffs();
    const double nn = static_cast<double>(n);
    const double base = (c.e0 + c.s0) * nn + model.f_of_n(nn);
    const double t = model.t_of_n(nn);
    std::vector<double> e(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) e[static_cast<std::size_t>(k)] = base - t * (nn - 2.0 * k);
    return e;
}

namespace detail {

// ln P(n) for a Poisson distribution of mean n_bar.
inline double log_poisson(int n, double n_bar) {
    return -n_bar + n * std::log(n_bar) - std::lgamma(static_cast<double>(n) + 1.0);
}

// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace detail

inline int default_n_max(double n_bar) {
    return static_cast<int>(std::ceil(n_bar + 10.0 * std::sqrt(n_bar) + 10.0));
}

struct CollapseRevivalTrace {
    std::vector<double> times;
    std::vector<double> inversion;  // Z_MB(t)
    std::vector<double> envelope;   // |sum_n P(n) n exp(2i t(n) t)| / n_bar
    double tail_mass = 0.0;         // Poisson mass beyond n_max
    bool truncated = false;         // tail_mass > 1e-12
};

// Z_MB(t) = (1/n_bar) sum_n P(n) n cos(2 t(n) t) for a coherent state in one well.
inline CollapseRevivalTrace collapse_revival_inversion(double n_bar, const std::vector<double>& times,
                                                       const TwoModeModel& model, std::optional<int> n_max = {},
                                                       InitialWell well = InitialWell::right) {
    detail::require(n_bar > 0.0, "mean atom number must be > 0");
    const int top = n_max.value_or(default_n_max(n_bar));
    detail::require(top >= 0, "n_max must be >= 0");

    std::vector<double> weight(static_cast<std::size_t>(top) + 1);
    std::vector<double> omega(weight.size());
    for (int n = 0; n <= top; ++n) {
        weight[static_cast<std::size_t>(n)] = std::exp(detail::log_poisson(n, n_bar)) * n / n_bar;
        omega[static_cast<std::size_t>(n)] = 2.0 * model.t_of_n(static_cast<double>(n));
    }
    double tail = 0.0;
    for (int n = top + 1;; ++n) {
        const double pn = std::exp(detail::log_poisson(n, n_bar));
        tail += pn;
        if (n > n_bar && pn < 1e-18 * std::max(tail, 1e-300)) break;
        if (pn == 0.0 && n > n_bar) break;
    }

    const double sign = well == InitialWell::right ? 1.0 : -1.0;
    CollapseRevivalTrace out;
    out.times = times;
    out.tail_mass = tail;
    out.truncated = tail > 1e-12;
    out.inversion.reserve(times.size());
    out.envelope.reserve(times.size());
    for (const double t : times) {
        detail::CompensatedSum re;
        detail::CompensatedSum im;
        for (std::size_t n = 0; n < weight.size(); ++n) {
            re.add(weight[n] * std::cos(omega[n] * t));
            im.add(weight[n] * std::sin(omega[n] * t));
        }
        out.inversion.push_back(sign * re.value());
        out.envelope.push_back(std::hypot(re.value(), im.value()));
    }
    return out;
}

// T_r = pi / |dt/dN| at n_bar (central difference, step 1); +inf when the slope vanishes.
inline double revival_time(double n_bar, const TwoModeModel& model) {
    detail::require(n_bar >= 1.0, "revival time needs n_bar >= 1");
    const double slope = 0.5 * (model.t_of_n(n_bar + 1.0) - model.t_of_n(n_bar - 1.0));
    if (slope == 0.0 || !std::isfinite(slope)) return std::numeric_limits<double>::infinity();
    return std::numbers::pi / std::abs(slope);
}

struct FockEvolution {
    std::vector<double> inversion;  // (<n_R> - <n_L>) / n
    std::vector<double> norm;
};

// Brute-force propagation of |all n atoms in one well> under the (n+1)-dimensional
// two-mode Hamiltonian in the basis |k, n-k> (k atoms left), by dense diagonalization.
inline FockEvolution exact_fock_evolution(int n, const TwoModeModel& model, const std::vector<double>& times,
                                          InitialWell well = InitialWell::right) {
    detail::require(n >= 1 && n <= 12, "exact Fock evolution supports 1 <= n <= 12");
    const int dim = n + 1;
    const double nn = static_cast<double>(n);
    const double t = model.t_of_n(nn);

    // Sector-constant diagonal (E0 + S0) n + f(n) omitted: a global phase.
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (int k = 0; k <= n; ++k) {
        if (k > 0) {
            // <k-1, n-k+1| (b_R^+ b_L + b_L^+ b_R) |k, n-k> = sqrt(k (n-k+1))
            const double b = std::sqrt(static_cast<double>(k) * static_cast<double>(n - k + 1));
            h(k - 1, k) = -t * b;
            h(k, k - 1) = -t * b;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    if (eig.info() != Eigen::Success) throw NumericalError("Fock Hamiltonian diagonalization failed");
    const Eigen::MatrixXd& v = eig.eigenvectors();
    const Eigen::VectorXd& e = eig.eigenvalues();

    Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(dim);
    psi0(well == InitialWell::right ? 0 : n) = 1.0;
    const Eigen::VectorXcd coeff = v.transpose().cast<std::complex<double>>() * psi0;

    FockEvolution out;
    for (const double time : times) {
        Eigen::VectorXcd phased(dim);
        for (int i = 0; i < dim; ++i) phased(i) = coeff(i) * std::exp(std::complex<double>(0.0, -e(i) * time));
        const Eigen::VectorXcd psi = v.cast<std::complex<double>>() * phased;
        double imbalance = 0.0;
        double norm = 0.0;
        for (int k = 0; k <= n; ++k) {
            const double pk = std::norm(psi(k));
            norm += pk;
            imbalance += pk * (static_cast<double>(n - k) - static_cast<double>(k));
        }
        out.inversion.push_back(imbalance / nn);
        out.norm.push_back(norm);
    }
    return out;
}

// First time the envelope drops below threshold_fraction of its initial value; +inf if never.
inline double collapse_time(const std::vector<double>& times, const std::vector<double>& envelope,
                            double threshold_fraction = 1.0 / std::numbers::e) {
    detail::require(!times.empty() && times.size() == envelope.size(), "collapse_time needs matching samples");
    const double thr = threshold_fraction * envelope.front();
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (envelope[i] < thr) return times[i];
    }
    return std::numeric_limits<double>::infinity();
}

struct Revival {
    double onset = 0.0;   // envelope first back above the fraction after the collapse
    double center = 0.0;  // local envelope maximum following the onset
    double peak = 0.0;    // envelope value at the center, relative to the initial amplitude
};

// First revival after the collapse: the envelope must recover above recover_fraction of its
// initial amplitude.
inline std::optional<Revival> first_revival(const std::vector<double>& times, const std::vector<double>& envelope,
                                            double recover_fraction = 0.5,
                                            double collapse_fraction = 1.0 / std::numbers::e) {
    const double tc = collapse_time(times, envelope, collapse_fraction);
    if (!std::isfinite(tc)) return std::nullopt;
    const double a0 = envelope.front();
    std::size_t i = 0;
    while (i < times.size() && times[i] < tc) ++i;
    while (i < times.size() && envelope[i] < recover_fraction * a0) ++i;
    if (i >= times.size()) return std::nullopt;
    Revival r;
    r.onset = times[i];
    while (i + 1 < times.size() && envelope[i + 1] >= envelope[i]) ++i;
    r.center = times[i];
    r.peak = envelope[i] / a0;
    return r;
}

}  // namespace cavity_dw
