#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cavity_dw/cavity_field.hpp"
#include "cavity_dw/gpe.hpp"
#include "cavity_dw/variational.hpp"
#include "fixtures.hpp"

using namespace cavity_dw;

namespace {

double probability_right(const OrderParameter& psi) {
    double s = 0.0;
    for (std::size_t j = 0; j < psi.size(); ++j) {
        const double x = psi.grid().x()[j];
        if (x > 0.0) s += std::norm(psi[j]);
        if (x == 0.0) s += 0.5 * std::norm(psi[j]);
    }
    return s * psi.grid().dx();
}

}  // namespace

TEST(Ansatz, SingleGaussianAmplitude) {
    const auto g = make_grid(1024, 12);
    for (double sigma : {0.5, 1.0, 1.7}) {
        const auto psi = ansatz_density(sigma, 0.0, g);
        const double c = 1.0 / (2.0 * std::pow(std::numbers::pi, 0.25) * std::sqrt(sigma));
        // Both terms coincide at x0 = 0, so psi(0) = 2C.
        EXPECT_NEAR(psi[512].real(), 2.0 * c, 1e-12);
        EXPECT_NEAR(ansatz_integrals(sigma, 0.0, ModelParams{}).norm_c, c, 1e-14);
    }
}

TEST(Ansatz, DiscreteNorm) {
    const auto g = make_grid(1024, 12);
    for (auto [s, a] : {std::pair{0.3, 0.0}, std::pair{1.0, 2.0}, std::pair{2.0, 4.0}, std::pair{0.7, 0.35}}) {
        EXPECT_NEAR(ansatz_density(s, a, g).norm_squared(), 1.0, 1e-10);
    }
}

TEST(Ansatz, SeparatedPeaksCarryHalfEach) {
    const auto g = make_grid(1024, 12);
    const double sigma = 0.6;
    const auto psi = ansatz_density(sigma, 5.0 * sigma, g);
    EXPECT_NEAR(probability_right(psi), 0.5, 1e-9);
}

TEST(VariationalEnergy, HarmonicLimit) {
    ModelParams p;
    for (double sigma : {0.5, 1.0, 2.0}) {
        EXPECT_NEAR(variational_energy(sigma, 0.0, p), 0.25 * (1.0 / (sigma * sigma) + sigma * sigma), 1e-14);
    }
}

TEST(VariationalEnergy, MatchesGridFunctional) {
    const auto g = make_grid(1024, 12);
    auto p = fixtures::fig3(0.0);
    for (auto [s, a] : {std::pair{1.0, 0.0}, std::pair{0.5, 1.5}, std::pair{1.3, 0.9}, std::pair{0.8, 3.0}}) {
        EXPECT_NEAR(variational_energy(s, a, p), energy_functional(ansatz_density(s, a, g), p), 1e-8);
    }
}

TEST(VariationalEnergy, OverlapWithHalfWidthMode) {
    ModelParams p;
    for (double sigma : {0.4, 1.0, 2.0}) {
        p.delta_x = sigma / 2.0;
        EXPECT_NEAR(ansatz_overlap_y(sigma, 0.0, p), p.u0 / std::sqrt(5.0), 1e-15);
    }
}

TEST(FindBranches, HarmonicLimit) {
    const auto b = find_branches(fixtures::fig3(0.0));
    ASSERT_EQ(b.size(), 1u);
    EXPECT_NEAR(b[0].sigma, 1.0, 1e-5);
    EXPECT_NEAR(b[0].x0, 0.0, 1e-5);
    EXPECT_NEAR(b[0].energy, 0.5, 1e-10);
    EXPECT_TRUE(b[0].is_global);
    EXPECT_EQ(b[0].branch, Branch::single_peak);
}

TEST(FindBranches, Fig3HasBistableWindow) {
    bool found = false;
    for (double eta_k = 2.0; eta_k <= 12.0 && !found; eta_k += 0.5) {
        const auto b = find_branches(fixtures::fig3(eta_k));
        if (b.size() >= 2) {
            found = true;
            EXPECT_GT(std::abs(std::log(b[0].n_ss / b[1].n_ss)), std::log(2.0)) << "eta/kappa = " << eta_k;
            EXPECT_TRUE(b[0].is_global);
            EXPECT_LE(b[0].energy, b[1].energy);
        }
    }
    EXPECT_TRUE(found);
}

TEST(FindBranches, Fig3bIsSingleValued) {
    for (double eta_k : {0.1, 1.0, 3.0, 10.0, 30.0, 100.0}) {
        EXPECT_EQ(find_branches(fixtures::fig3b(eta_k)).size(), 1u) << "eta/kappa = " << eta_k;
    }
}

TEST(FindBranches, SmallPumpLimit) {
    const auto p = fixtures::fig3(0.01);
    const auto b = find_branches(p);
    ASSERT_EQ(b.size(), 1u);
    const double y = p.u0 * p.delta_x / std::sqrt(p.delta_x * p.delta_x + 1.0);
    const double expected = p.eta * p.eta / (p.kappa * p.kappa + std::pow(p.delta_c - p.n_atoms * y, 2));
    EXPECT_NEAR(b[0].n_ss / expected, 1.0, 1e-6);
}

TEST(FindBranches, BranchesAreLocalMinima) {
    for (double eta_k : {1.0, 4.0, 6.0, 20.0}) {
        for (const auto& b : find_branches(fixtures::fig3(eta_k))) {
            const auto [hss, hsx, hxx] = variational_hessian(b.sigma, b.x0, fixtures::fig3(eta_k));
            EXPECT_GT(hss, 0.0);
            if (b.x0 > 1e-3) EXPECT_GT(hss * hxx - hsx * hsx, 0.0);
        }
    }
}

TEST(FindBranches, PhotonNumberIsSelfConsistent) {
    const auto g = make_grid(1024, 12);
    for (double eta_k : {2.0, 5.0, 20.0}) {
        const auto p = fixtures::fig3(eta_k);
        for (const auto& b : find_branches(p)) {
            const double grid_n = steady_state_photon_number(overlap_y(ansatz_density(b.sigma, b.x0, g), p), p);
            EXPECT_NEAR(b.n_ss / grid_n, 1.0, 1e-10);
        }
    }
}

TEST(VariationalGradient, QuadratureMatchesFiniteDifference) {
    const auto g = make_grid(1024, 12);
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> sig(0.4, 2.0);
    std::uniform_real_distribution<double> pos(0.0, 3.0);
    std::uniform_real_distribution<double> pump(0.0, 20.0);
    const double h = 1e-5;
    for (int i = 0; i < 20; ++i) {
        const double s = sig(rng);
        const double a = pos(rng);
        const auto p = fixtures::fig3(pump(rng));
        const auto q = variational_gradient_quadrature(s, a, p, g);
        const double ds = (variational_energy(s + h, a, p) - variational_energy(s - h, a, p)) / (2.0 * h);
        const double da = (variational_energy(s, a + h, p) - variational_energy(s, a - h, p)) / (2.0 * h);
        const double scale = std::max({std::abs(ds), std::abs(da), 1.0});
        EXPECT_NEAR(q[0], ds, 1e-5 * scale) << "sigma " << s << " x0 " << a;
        EXPECT_NEAR(q[1], da, 1e-5 * scale) << "sigma " << s << " x0 " << a;
    }
}

TEST(VariationalEnergy, ArctanTermIsMonotoneInPump) {
    // Off resonance the arctan coefficient -atan((delta_c - N Y)/kappa) fixes the sign of dE/d(eta^2).
    for (auto [s, a] : {std::pair{1.0, 0.0}, std::pair{0.5, 2.0}, std::pair{0.8, 4.0}}) {
        const auto p1 = fixtures::fig3(2.0);
        const auto p2 = fixtures::fig3(5.0);
        const double y = ansatz_overlap_y(s, a, p1);
        const double coefficient = -std::atan((p1.delta_c - p1.n_atoms * y) / p1.kappa);
        const double de = variational_energy(s, a, p2) - variational_energy(s, a, p1);
        EXPECT_EQ(std::signbit(de), std::signbit(coefficient));
    }
}

TEST(SweepPump, RejectsUnsortedInput) {
    const auto g = make_grid(256, 10);
    EXPECT_THROW(sweep_pump(fixtures::fig3(), {2.0, 1.0}, g), InvalidArgument);
    EXPECT_THROW(sweep_pump(fixtures::fig3(), {}, g), InvalidArgument);
}

TEST(SweepPump, LowPumpRowsAgreeWithGpe) {
    const auto g = make_grid(1024, 12);
    const auto p = fixtures::fig3();
    const auto res = sweep_pump(p, {0.5 * p.kappa, 1.0 * p.kappa}, g);
    ASSERT_EQ(res.rows.size(), 2u);
    EXPECT_TRUE(res.failures.empty());
    for (const auto& r : res.rows) {
        EXPECT_NEAR(r.branches.front().n_ss / r.n_ss_gpe, 1.0, 0.1);
        EXPECT_FALSE(r.gpe_double_peak);
    }
}
