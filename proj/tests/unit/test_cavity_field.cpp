#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cavity_dw/cavity_field.hpp"
#include "cavity_dw/gpe.hpp"
#include "cavity_dw/two_mode.hpp"
#include "cavity_dw/variational.hpp"
#include "fixtures.hpp"

using namespace cavity_dw;

namespace {

ModelParams basic(double u0, double delta_x) {
    ModelParams p;
    p.kappa = 500.0;
    p.delta_c = 500.0;
    p.u0 = u0;
    p.delta_x = delta_x;
    p.n_atoms = 1e4;
    return p;
}

}  // namespace

TEST(OverlapY, GaussianAtHalfWidth) {
    const auto g = make_grid(1024, 12);
    for (double sigma : {0.6, 1.0, 1.4}) {
        const auto p = basic(3.0, 0.5 * sigma);
        const double y = overlap_y(gaussian_state(g, 0.0, sigma), p);
        EXPECT_NEAR(y, p.u0 / std::sqrt(5.0), 1e-10 * p.u0);
        EXPECT_NEAR(gaussian_overlap(sigma, p), p.u0 / std::sqrt(5.0), 1e-14 * p.u0);
    }
}

TEST(OverlapY, FarDisplacedDensityVanishes) {
    const auto g = make_grid(1024, 12);
    const auto p = basic(5.0, 0.5);
    const double y = overlap_y(gaussian_state(g, 20.0 * p.delta_x, 0.5), p);
    EXPECT_LT(y, 1e-15 * p.u0);
}

TEST(OverlapY, DoublePeakAnsatzMatchesOverlapIntegrals) {
    const auto g = make_grid(1024, 12);
    const auto p = basic(5.0, 0.5);
    for (auto [sigma, x0] : {std::pair{0.5, 1.5}, std::pair{0.4, 2.0}, std::pair{0.8, 1.0}}) {
        const double y = overlap_y(ansatz_density(sigma, x0, g), p);
        const auto c = overlap_coefficients(sigma, x0, p);
        // Ansatz = (psi_L + psi_R)/sqrt(2(1+s)) with s = <psi_L|psi_R>.
        const double s = std::exp(-x0 * x0 / (sigma * sigma));
        EXPECT_NEAR(y, p.u0 * (c.j0 + c.j1) / (1.0 + s), 1e-10 * p.u0);
        EXPECT_NEAR(y, ansatz_overlap_y(sigma, x0, p), 1e-10 * p.u0);
    }
    // Well separated: the normalization correction drops out.
    const auto c = overlap_coefficients(0.5, 3.0, p);
    EXPECT_NEAR(overlap_y(ansatz_density(0.5, 3.0, g), p), p.u0 * (c.j0 + c.j1), 1e-10 * p.u0);
}

TEST(OverlapY, RejectsUnnormalized) {
    const auto g = make_grid(512, 12);
    const auto psi = OrderParameter::sample(g, [](double x) { return 2.0 * std::exp(-x * x); });
    EXPECT_THROW(overlap_y(psi, basic(1.0, 0.5)), InvalidArgument);
}

TEST(OverlapY, BoundedByU0) {
    const auto g = make_grid(1024, 12);
    const auto p = basic(5.0, 0.5);
    for (double w : {0.05, 0.2, 1.0, 3.0}) {
        for (double c : {-2.0, 0.0, 0.7}) {
            const double y = overlap_y(gaussian_state(g, c, w), p);
            EXPECT_GE(y, 0.0);
            EXPECT_LT(y, p.u0);
        }
    }
}

TEST(PhotonNumber, Formula) {
    ModelParams p;
    p.kappa = 500.0;
    p.eta = 500.0;
    p.delta_c = 0.0;
    EXPECT_DOUBLE_EQ(steady_state_photon_number(0.0, p), 1.0);
}

TEST(PhotonNumber, MaximalAtResonance) {
    auto p = fixtures::fig3(7.0);
    const double y_res = p.delta_c / p.n_atoms;
    EXPECT_DOUBLE_EQ(steady_state_photon_number(y_res, p), p.max_photon_number());
    double prev = steady_state_photon_number(y_res, p);
    for (int i = 1; i <= 50; ++i) {
        const double up = steady_state_photon_number(y_res + i * 1e-3, p);
        const double dn = steady_state_photon_number(y_res - i * 1e-3, p);
        EXPECT_LT(up, prev);
        EXPECT_NEAR(up, dn, 1e-12 * up);
        prev = up;
    }
}

TEST(PhotonNumber, Fig3GaussianIsSuppressed) {
    const auto p = fixtures::fig3(1.0);
    const double y = gaussian_overlap(1.0, p);
    EXPECT_NEAR(p.n_atoms * y / p.kappa, 100.0 / std::sqrt(5.0), 1e-12);
    const double expected = 1.0 / (1.0 + std::pow(1.0 - 100.0 / std::sqrt(5.0), 2));
    EXPECT_NEAR(steady_state_photon_number(y, p), expected, 1e-14);
    EXPECT_NEAR(1.0 / expected, 1912.0, 1.0);
}

TEST(EffectivePotential, HarmonicWithoutField) {
    const auto g = make_grid(512, 12);
    const auto v = effective_potential(g, 0.0, basic(5.0, 0.5));
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_DOUBLE_EQ(v[j], 0.5 * g.x()[j] * g.x()[j]);
}

TEST(EffectivePotential, BarrierHeight) {
    const auto g = make_grid(512, 12);
    const auto p = basic(2.5, 0.5);
    const auto v = effective_potential(g, 40.0, p);
    EXPECT_DOUBLE_EQ(v[256], 40.0 * 2.5);
    EXPECT_THROW(effective_potential(g, -1.0, p), InvalidArgument);
}

TEST(EffectivePotential, MinimaMatchWellPosition) {
    const auto g = make_grid(1024, 12);
    const auto p = basic(2.5, 0.5);
    for (double n : {5.0, 100.0, 1e4}) {
        const auto v = effective_potential(g, n, p);
        const auto it = std::min_element(v.begin() + 512, v.end());
        const double x_min = g.x()[static_cast<std::size_t>(it - v.begin())];
        const auto x0 = well_minimum_position(n, p);
        ASSERT_TRUE(x0.has_value());
        EXPECT_NEAR(x_min, *x0, g.dx());
    }
}

TEST(WellMinimum, Examples) {
    auto p = basic(2.5, 0.5);
    const auto x0 = well_minimum_position(1e4, p);
    ASSERT_TRUE(x0.has_value());
    EXPECT_NEAR(*x0, 0.5 * std::sqrt(std::log(2.0 * 2.5e4 / 0.25)), 1e-14);
    EXPECT_NEAR(*x0, 1.75, 0.005);
    // 2 U0 n = delta_x^2 -> boundary of the double-well domain.
    EXPECT_FALSE(well_minimum_position(0.25 / (2.0 * 2.5), p).has_value());
    const auto edge = well_minimum_position(0.25 / (2.0 * 2.5) * (1.0 + 1e-12), p);
    ASSERT_TRUE(edge.has_value());
    EXPECT_NEAR(*edge, 0.0, 1e-5);
    EXPECT_FALSE(well_minimum_position(0.01, p).has_value());
}

TEST(CriticalPump, ClosedForm) {
    const auto p = fixtures::fig3();
    const double y = p.u0 / std::sqrt(5.0);
    const double eta_c = critical_pump_estimate(p);
    EXPECT_NEAR(eta_c, std::sqrt((p.kappa * p.kappa + std::pow(p.delta_c - p.n_atoms * y, 2)) / p.u0), 1e-9);
    // n_ss(eta_c) U0 = 1 for the sigma = 1 Gaussian.
    EXPECT_NEAR(steady_state_photon_number(y, p.with_eta(eta_c)) * p.u0, 1.0, 1e-12);
    EXPECT_NEAR(eta_c / p.kappa, std::sqrt((1.0 + std::pow(1.0 - 100.0 / std::sqrt(5.0), 2)) / 0.01) / std::sqrt(500.0),
                1e-9);
}

TEST(CriticalPump, MinimumAtResonance) {
    auto p = fixtures::fig3();
    p.delta_c = p.n_atoms * gaussian_overlap(1.0, p);
    EXPECT_NEAR(critical_pump_estimate(p), p.kappa / std::sqrt(p.u0), 1e-9);
}

TEST(CriticalPump, GrowsLikeNSqrtU0) {
    auto p = fixtures::fig3();
    const auto ratio = [&](double u0) {
        auto q = p;
        q.u0 = u0;
        return critical_pump_estimate(q) / (q.n_atoms * std::sqrt(q.u0));
    };
    const double a = ratio(1e3);
    const double b = ratio(1e5);
    EXPECT_NEAR(a / b, 1.0, 1e-2);
    EXPECT_NEAR(b, 1.0 / std::sqrt(5.0), 1e-3);
}

TEST(ResonanceCoupling, Sqrt5KappaOverN) {
    const auto p = fixtures::fig3();
    const double u = resonance_coupling(p);
    EXPECT_NEAR(u / p.kappa, std::sqrt(5.0) / 1e4, 1e-18);
    EXPECT_NEAR(u / p.kappa, 0.000224, 5e-7);
}

TEST(CavityScaling, EffectivePotentialInvariant) {
    const auto g = make_grid(1024, 12);
    const auto p = fixtures::fig4();
    const auto psi = gaussian_state(g, 0.3, 0.9);
    const double n1 = cavity_state(psi, p).n_ss;
    const auto v1 = effective_potential(g, n1, p);
    for (double lambda : {2.0, 10.0}) {
        auto q = p;
        q.n_atoms *= lambda;
        q.u0 /= lambda;
        q.eta *= std::sqrt(lambda);
        const auto v2 = effective_potential(g, cavity_state(psi, q).n_ss, q);
        for (std::size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(v1[j], v2[j], 1e-12 * std::max(1.0, std::abs(v1[j])));
    }
}
