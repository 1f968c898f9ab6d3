#pragma once

#include <chemosteer/grid.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace chemosteer {

/// Scalar field sampled at cell centres on time levels 0..M, stored level-major.
class SpaceTimeField {
public:
    SpaceTimeField() = default;
    SpaceTimeField(std::size_t n_levels, std::size_t n_cells, double fill = 0.0)
        : levels_(n_levels), cells_(n_cells), data_(n_levels * n_cells, fill) {}

    [[nodiscard]] std::size_t n_levels() const noexcept { return levels_; }
    [[nodiscard]] std::size_t n_cells() const noexcept { return cells_; }

    double& operator()(std::size_t k, std::size_t i) noexcept { return data_[k * cells_ + i]; }
    double operator()(std::size_t k, std::size_t i) const noexcept { return data_[k * cells_ + i]; }

    [[nodiscard]] std::span<double> level(std::size_t k) noexcept { return {data_.data() + k * cells_, cells_}; }
    [[nodiscard]] std::span<const double> level(std::size_t k) const noexcept {
        return {data_.data() + k * cells_, cells_};
    }
    void set_level(std::size_t k, std::span<const double> values) {
        std::copy(values.begin(), values.end(), data_.begin() + static_cast<std::ptrdiff_t>(k * cells_));
    }

    [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }
    [[nodiscard]] std::vector<double>& data() noexcept { return data_; }

    [[nodiscard]] double sup_norm() const noexcept {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }
    [[nodiscard]] bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    bool operator==(const SpaceTimeField&) const = default;

private:
    std::size_t levels_ = 0;
    std::size_t cells_ = 0;
    std::vector<double> data_;
};

/// Face-sampled drift B = chi dv/dx on time levels 0..M. Boundary faces are held at zero.
class DriftField {
public:
    DriftField() = default;
    DriftField(std::size_t n_levels, std::size_t n_cells)
        : levels_(n_levels), faces_(n_cells + 1), data_(n_levels * (n_cells + 1), 0.0) {}

    [[nodiscard]] static DriftField zero(const DomainSpec& domain, const TimeGrid& time) {
        return DriftField(time.n_levels(), domain.n_cells());
    }

    [[nodiscard]] std::size_t n_levels() const noexcept { return levels_; }
    [[nodiscard]] std::size_t n_faces() const noexcept { return faces_; }
    [[nodiscard]] std::size_t n_cells() const noexcept { return faces_ - 1; }

    double operator()(std::size_t k, std::size_t j) const noexcept { return data_[k * faces_ + j]; }

    [[nodiscard]] std::span<const double> level(std::size_t k) const noexcept {
        return {data_.data() + k * faces_, faces_};
    }

    /// Writes interior faces 1..N-1 of level k from a full face vector; the two
    /// boundary entries of `faces` are ignored.
    void set_level(std::size_t k, std::span<const double> faces) {
        double* row = data_.data() + k * faces_;
        for (std::size_t j = 1; j + 1 < faces_; ++j) row[j] = faces[j];
        row[0] = 0.0;
        row[faces_ - 1] = 0.0;
    }
    void set_interior(std::size_t k, std::size_t j, double value) noexcept {
        if (j > 0 && j + 1 < faces_) data_[k * faces_ + j] = value;
    }

    /// Drift used on step k -> k+1: average of the two bounding levels.
    void step_drift(std::size_t k, std::span<double> out) const noexcept {
        const double* a = data_.data() + k * faces_;
        const double* b = data_.data() + (k + 1) * faces_;
        for (std::size_t j = 0; j < faces_; ++j) out[j] = 0.5 * (a[j] + b[j]);
    }

    [[nodiscard]] double sup_norm() const noexcept {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    bool operator==(const DriftField&) const = default;

private:
    std::size_t levels_ = 0;
    std::size_t faces_ = 0;
    std::vector<double> data_;
};

// Discrete inner products and norms. L2(Omega) uses the cell quadrature sum h v_i w_i;
// L2(Q) adds the right-endpoint rule over levels 1..M, matching where controls live.

inline double dot_omega(std::span<const double> a, std::span<const double> b, double h) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return h * s;
}

inline double norm_omega(std::span<const double> a, double h) noexcept { return std::sqrt(dot_omega(a, a, h)); }

inline double sup_norm(std::span<const double> a) noexcept {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

inline double dot_q(const SpaceTimeField& a, const SpaceTimeField& b, double h, double dt) noexcept {
    double s = 0.0;
    for (std::size_t k = 1; k < a.n_levels(); ++k) s += dot_omega(a.level(k), b.level(k), h);
    return dt * s;
}

inline double norm_q(const SpaceTimeField& a, double h, double dt) noexcept { return std::sqrt(dot_q(a, a, h, dt)); }

inline double mass(std::span<const double> a, double h) noexcept {
    double s = 0.0;
    for (double v : a) s += v;
    return h * s;
}

}  // namespace chemosteer
