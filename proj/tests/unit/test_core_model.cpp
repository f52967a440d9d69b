#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "cavity_dw/grid.hpp"
#include "cavity_dw/units.hpp"
#include "fixtures.hpp"

using namespace cavity_dw;

TEST(Units, KappaMapsToOmegaRatio) {
    CaptionParams c;  // kappa = 2 pi 1.3 MHz, omega = kappa/500
    c.delta_x = 0.5;
    const auto p = to_oscillator_units(c);
    EXPECT_DOUBLE_EQ(p.kappa, 500.0);
    EXPECT_DOUBLE_EQ(p.delta_x, 0.5);
}

TEST(Units, OmegaIsOne) {
    const PhysicalScales s;
    EXPECT_DOUBLE_EQ(s.omega_rad_per_s() * s.time_unit_s(), 1.0);
    CaptionParams c;
    c.eta_kappa = 1.0 / 500.0;  // eta = omega
    EXPECT_NEAR(to_oscillator_units(c).eta, 1.0, 1e-15);
}

TEST(Units, HundredTimeUnitsIsAboutSixMilliseconds) {
    const PhysicalScales s;
    EXPECT_NEAR(s.time_to_seconds(100.0) * 1e3, 6.12, 0.01);
    EXPECT_NEAR(s.time_to_seconds(100.0), 100.0 * 500.0 / (2.0 * std::numbers::pi * 1.3e6), 1e-15);
}

TEST(Units, CaptionRatesScaleWithOmegaRatio) {
    const auto p = fixtures::fig3(25.0);
    EXPECT_DOUBLE_EQ(p.eta, 25.0 * 500.0);
    EXPECT_DOUBLE_EQ(p.u0, 5.0);
    EXPECT_DOUBLE_EQ(p.delta_c, 500.0);
}

TEST(Units, HundredNanometresInOscillatorLengths) {
    EXPECT_NEAR(fixtures::fig10_delta_x(), 0.473, 0.002);
}

TEST(Units, RoundTrip) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.01, 50.0);
    for (int i = 0; i < 20; ++i) {
        CaptionParams c;
        c.scales.omega_ratio = u(rng) * 20.0;
        c.scales.kappa_rad_per_s = u(rng) * 1e6;
        c.delta_c_kappa = u(rng) - 25.0;
        c.u0_kappa = u(rng) * 1e-3;
        c.eta_kappa = u(rng);
        c.delta_x = u(rng) * 0.1;
        c.n_atoms = u(rng) * 1e3;
        const auto back = from_oscillator_units(to_oscillator_units(c), c.scales);
        EXPECT_NEAR(back.delta_c_kappa, c.delta_c_kappa, 1e-12 * std::abs(c.delta_c_kappa));
        EXPECT_NEAR(back.u0_kappa, c.u0_kappa, 1e-12 * c.u0_kappa);
        EXPECT_NEAR(back.eta_kappa, c.eta_kappa, 1e-12 * c.eta_kappa);
        EXPECT_EQ(back.delta_x, c.delta_x);
        EXPECT_EQ(back.n_atoms, c.n_atoms);
        const PhysicalScales& s = c.scales;
        const double t = u(rng);
        EXPECT_NEAR(s.seconds_to_time(s.time_to_seconds(t)), t, 1e-12 * t);
        EXPECT_NEAR(s.meters_to_length(s.length_to_meters(t)), t, 1e-12 * t);
    }
}

TEST(Units, RejectsNonPositiveRates) {
    CaptionParams c;
    c.scales.omega_ratio = 0.0;
    EXPECT_THROW(to_oscillator_units(c), InvalidArgument);
    c = CaptionParams{};
    c.scales.kappa_rad_per_s = -1.0;
    EXPECT_THROW(to_oscillator_units(c), InvalidArgument);
    c = CaptionParams{};
    c.eta_kappa = -1.0;
    EXPECT_THROW(to_oscillator_units(c), InvalidArgument);
    ModelParams p;
    p.kappa = 0.0;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p = ModelParams{};
    p.delta_x = -0.1;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p = ModelParams{};
    p.n_atoms = 0.0;
    EXPECT_THROW(p.validate(), InvalidArgument);
}

TEST(Grid, Spacing) {
    EXPECT_DOUBLE_EQ(make_grid(1024, 12).dx(), 0.0234375);
    EXPECT_DOUBLE_EQ(make_grid(512, 12).dx(), 0.046875);
    const auto g = make_grid(1024, 12);
    EXPECT_DOUBLE_EQ(g.x()[0], -12.0);
    EXPECT_DOUBLE_EQ(g.x()[512], 0.0);
    EXPECT_DOUBLE_EQ(g.k()[1], 2.0 * std::numbers::pi / 24.0);
    EXPECT_DOUBLE_EQ(g.k()[1023], -2.0 * std::numbers::pi / 24.0);
}

TEST(Grid, RejectsInvalid) {
    EXPECT_THROW(make_grid(100, 12), InvalidArgument);
    EXPECT_THROW(make_grid(128, 12), InvalidArgument);
    EXPECT_THROW(make_grid(1024, 8), InvalidArgument);
    EXPECT_THROW(make_grid(256, 20), InvalidArgument);  // dx = 0.156
}

TEST(Grid, MirrorIndex) {
    const auto g = make_grid(256, 10);
    for (std::size_t j = 1; j < g.size(); ++j) EXPECT_DOUBLE_EQ(g.x()[g.mirror_index(j)], -g.x()[j]);
}

TEST(Normalize, ConstantFunction) {
    const auto g = make_grid(1024, 12);
    const auto psi = normalize(OrderParameter::sample(g, [](double) { return 2.0; }));
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(psi[j].real(), 1.0 / std::sqrt(24.0), 1e-15);
}

TEST(Normalize, Idempotent) {
    const auto g = make_grid(1024, 12);
    const auto a = normalize(OrderParameter::sample(g, [](double x) { return std::exp(-x * x) * (1.0 + 0.3 * x); }));
    const auto b = normalize(a);
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(std::abs(a[j] - b[j]), 0.0, 1e-14);
    EXPECT_TRUE(b.is_normalized(1e-14));
}

TEST(Normalize, ScaleInvariant) {
    const auto g = make_grid(512, 12);
    const auto f = [](double x) { return std::exp(-0.5 * (x - 1.0) * (x - 1.0)); };
    const auto a = normalize(OrderParameter::sample(g, f));
    const Complex c(-3.0, 4.0);
    const auto b = normalize(OrderParameter::sample(g, [&](double x) { return c * f(x); }));
    const Complex phase = c / std::abs(c);
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(std::abs(b[j] - phase * a[j]), 0.0, 1e-14);
}

TEST(Normalize, GaussianMatchesAnalytic) {
    const auto g = make_grid(1024, 12);
    const auto psi = normalize(OrderParameter::sample(g, [](double x) { return std::exp(-0.5 * x * x); }));
    const double c = std::pow(std::numbers::pi, -0.25);
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double x = g.x()[j];
        EXPECT_NEAR(psi[j].real(), c * std::exp(-0.5 * x * x), 1e-8);
    }
}

TEST(Normalize, RejectsZero) {
    const auto g = make_grid(256, 10);
    EXPECT_THROW(normalize(OrderParameter::sample(g, [](double) { return 0.0; })), InvalidArgument);
}

TEST(SpectralTransform, RoundTripIsIdentity) {
    const std::size_t n = 1024;
    SpectralTransform fft(n);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> d;
    std::vector<Complex> v(n);
    for (auto& c : v) c = Complex(d(rng), d(rng));
    auto w = v;
    fft.forward(w);
    fft.inverse(w);
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(std::abs(w[j] - v[j]), 0.0, 1e-12);
}

TEST(SpectralTransform, DerivativeOfGaussian) {
    const auto g = make_grid(1024, 12);
    SpectralTransform fft(g.size());
    const auto psi = OrderParameter::sample(g, [](double x) { return std::exp(-0.5 * x * x); });
    const auto d = spectral_derivative(psi, fft);
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double x = g.x()[j];
        EXPECT_NEAR(d[j].real(), -x * std::exp(-0.5 * x * x), 1e-11);
    }
}
