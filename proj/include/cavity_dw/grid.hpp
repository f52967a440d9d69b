#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cavity_dw/errors.hpp"

namespace cavity_dw {

using Complex = std::complex<double>;

inline constexpr std::size_t kDefaultGridPoints = 1024;
inline constexpr double kDefaultGridHalfWidth = 12.0;

// Uniform periodic grid x_j = -x_max + j*dx, dx = 2 x_max / n, together with the
// DFT-conjugate wavenumbers. Copies share the immutable sample arrays.
class Grid {
public:
    Grid(std::size_t n_points, double x_max) {
        const bool pow2 = n_points != 0 && (n_points & (n_points - 1)) == 0;
        detail::require(pow2 && n_points >= 256,
                        "grid n_points must be a power of two >= 256, got " + std::to_string(n_points));
        detail::require(std::isfinite(x_max) && x_max >= 10.0,
                        "grid x_max must be >= 10, got " + std::to_string(x_max));
        const double dx = 2.0 * x_max / static_cast<double>(n_points);
        detail::require(dx < 0.1, "grid spacing must be < 0.1, got " + std::to_string(dx));

        auto data = std::make_shared<Data>();
        data->x_max = x_max;
        data->dx = dx;
        data->x.resize(n_points);
        data->k.resize(n_points);
        const double dk = 2.0 * std::numbers::pi / (2.0 * x_max);
        const auto n = static_cast<std::ptrdiff_t>(n_points);
        for (std::ptrdiff_t j = 0; j < n; ++j) {
            data->x[j] = -x_max + static_cast<double>(j) * dx;
            data->k[j] = dk * static_cast<double>(j < n / 2 ? j : j - n);
        }
        data_ = std::move(data);
    }

    std::size_t size() const { return data_->x.size(); }
    double x_max() const { return data_->x_max; }
    double dx() const { return data_->dx; }
    double length() const { return 2.0 * data_->x_max; }
    std::span<const double> x() const { return data_->x; }
    std::span<const double> k() const { return data_->k; }

    // Index of the sample at -x_j (periodic images identified).
    std::size_t mirror_index(std::size_t j) const { return (size() - j) % size(); }

    bool operator==(const Grid& other) const {
        return data_ == other.data_ || (size() == other.size() && x_max() == other.x_max());
    }

private:
    struct Data {
        double x_max = 0.0;
        double dx = 0.0;
        std::vector<double> x;
        std::vector<double> k;
    };
    std::shared_ptr<const Data> data_;
};

inline Grid make_grid(std::size_t n_points = kDefaultGridPoints, double x_max = kDefaultGridHalfWidth) {
    return Grid(n_points, x_max);
}

// Complex samples of a wavefunction on a Grid.
class OrderParameter {
public:
    OrderParameter(Grid grid, std::vector<Complex> values) : grid_(std::move(grid)), values_(std::move(values)) {
        detail::require(values_.size() == grid_.size(), "order parameter size does not match grid");
    }

    template <class F>
    static OrderParameter sample(const Grid& grid, F&& f) {
        std::vector<Complex> v(grid.size());
        const auto x = grid.x();
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = Complex(f(x[j]));
        return OrderParameter(grid, std::move(v));
    }

    const Grid& grid() const { return grid_; }
    std::span<const Complex> values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    const Complex& operator[](std::size_t j) const { return values_[j]; }

    // Discrete norm sum |psi_j|^2 dx (trapezoid on the periodic grid).
    double norm_squared() const {
        double s = 0.0;
        for (const auto& v : values_) s += std::norm(v);
        return s * grid_.dx();
    }

    bool is_normalized(double tol = 1e-10) const { return std::abs(norm_squared() - 1.0) <= tol; }

    std::vector<double> density() const {
        std::vector<double> d(values_.size());
        std::transform(values_.begin(), values_.end(), d.begin(), [](const Complex& v) { return std::norm(v); });
        return d;
    }

    std::vector<double> amplitude() const {
        std::vector<double> a(values_.size());
        std::transform(values_.begin(), values_.end(), a.begin(), [](const Complex& v) { return std::abs(v); });
        return a;
    }

    std::vector<Complex> release() && { return std::move(values_); }

private:
    Grid grid_;
    std::vector<Complex> values_;
};

inline OrderParameter normalize(const OrderParameter& psi) {
    const double n2 = psi.norm_squared();
    detail::require(n2 > 0.0 && std::isfinite(n2), "cannot normalize a zero (or non-finite) wavefunction");
    const double scale = 1.0 / std::sqrt(n2);
    std::vector<Complex> v(psi.values().begin(), psi.values().end());
    for (auto& c : v) c *= scale;
    return OrderParameter(psi.grid(), std::move(v));
}

// <a|b> with the grid quadrature.
inline Complex inner_product(const OrderParameter& a, const OrderParameter& b) {
    detail::require(a.grid() == b.grid(), "inner product of order parameters on different grids");
    Complex s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += std::conj(a[j]) * b[j];
    return s * a.grid().dx();
}

// psi(x) -> psi(-x).
inline OrderParameter mirror(const OrderParameter& psi) {
    std::vector<Complex> v(psi.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = psi[psi.grid().mirror_index(j)];
    return OrderParameter(psi.grid(), std::move(v));
}

// In-place 1-D complex DFT backed by FFTW. Inverse is scaled by 1/n so that
// inverse(forward(f)) == f. Plans act on owned aligned buffers, which keeps results
// bit-reproducible run to run.
class SpectralTransform {
public:
    explicit SpectralTransform(std::size_t n) : n_(n) {
        detail::require(n > 0, "transform size must be positive");
        std::lock_guard lock(planner_mutex());
        buffer_ = fftw_alloc_complex(n_);
        if (buffer_ == nullptr) throw NumericalError("fftw_alloc_complex failed");
        const int len = static_cast<int>(n_);
        forward_ = fftw_plan_dft_1d(len, buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
        inverse_ = fftw_plan_dft_1d(len, buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE);
        if (forward_ == nullptr || inverse_ == nullptr) {
            release();
            throw NumericalError("FFTW planning failed");
        }
    }

    SpectralTransform(const SpectralTransform&) = delete;
    SpectralTransform& operator=(const SpectralTransform&) = delete;
    SpectralTransform(SpectralTransform&& other) noexcept { swap(other); }
    SpectralTransform& operator=(SpectralTransform&& other) noexcept {
        if (this != &other) {
            release();
            swap(other);
        }
        return *this;
    }
    ~SpectralTransform() { release(); }

    std::size_t size() const { return n_; }

    void forward(std::span<Complex> data) { run(forward_, data, 1.0); }
    void inverse(std::span<Complex> data) { run(inverse_, data, 1.0 / static_cast<double>(n_)); }

private:
    static std::mutex& planner_mutex() {
        static std::mutex m;
        return m;
    }

    void run(fftw_plan plan, std::span<Complex> data, double scale) {
        detail::require(data.size() == n_, "transform size mismatch");
        auto* buf = reinterpret_cast<Complex*>(buffer_);
        std::copy(data.begin(), data.end(), buf);
        fftw_execute(plan);
        if (scale == 1.0) {
            std::copy(buf, buf + n_, data.begin());
        } else {
            for (std::size_t j = 0; j < n_; ++j) data[j] = buf[j] * scale;
        }
    }

    void swap(SpectralTransform& other) noexcept {
        std::swap(n_, other.n_);
        std::swap(buffer_, other.buffer_);
        std::swap(forward_, other.forward_);
        std::swap(inverse_, other.inverse_);
    }

    void release() noexcept {
        if (forward_ == nullptr && inverse_ == nullptr && buffer_ == nullptr) return;
        std::lock_guard lock(planner_mutex());
        if (forward_ != nullptr) fftw_destroy_plan(forward_);
        if (inverse_ != nullptr) fftw_destroy_plan(inverse_);
        if (buffer_ != nullptr) fftw_free(buffer_);
        forward_ = inverse_ = nullptr;
        buffer_ = nullptr;
    }

    std::size_t n_ = 0;
    fftw_complex* buffer_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
};

// Spectral first derivative d psi / dx.
inline std::vector<Complex> spectral_derivative(const OrderParameter& psi, SpectralTransform& fft) {
    std::vector<Complex> v(psi.values().begin(), psi.values().end());
    fft.forward(v);
    const auto k = psi.grid().k();
    const std::size_t n = v.size();
    for (std::size_t j = 0; j < n; ++j) v[j] *= Complex(0.0, k[j]);
    // The Nyquist mode has no well-defined odd derivative.
    v[n / 2] = 0.0;
    fft.inverse(v);
    return v;
}

}  // namespace cavity_dw
