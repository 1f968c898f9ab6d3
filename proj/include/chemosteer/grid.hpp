#pragma once

/**
 * @file grid.hpp
 * @brief Cell-centred grid on (0,1), uniform time grid, control-region mask and
 *        the auxiliary function beta used by the Carleman weights.
 *
 * Cells i = 0..N-1 have width h = 1/N and centres x_i = (i + 1/2) h.
 * Faces j = 0..N sit at x = j h; faces 0 and N are the boundary.
 */

#include <chemosteer/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace chemosteer {

/// Open subinterval (a, b) of the unit interval.
struct Interval {
    double a = 0.0;
    double b = 1.0;

    [[nodiscard]] bool contains(double x) const noexcept { return a < x && x < b; }
    [[nodiscard]] double length() const noexcept { return b - a; }
};

class DomainSpec {
public:
    DomainSpec(std::size_t n_cells, Interval omega, double x0) : n_(n_cells), omega_(omega), x0_(x0) {
        if (n_cells < 8) {
            throw InvalidInput("n_cells must be at least 8, got " + std::to_string(n_cells));
        }
        if (!(std::isfinite(omega.a) && std::isfinite(omega.b)) || !(0.0 < omega.a && omega.a < omega.b &&
                                                                     omega.b < 1.0)) {
            throw InvalidInput("control region must satisfy 0 < a < b < 1");
        }
        h_ = 1.0 / static_cast<double>(n_cells);
        if (omega.length() < 2.0 * h_) {
            throw InvalidInput("control region narrower than two cells");
        }
        if (!omega.contains(x0)) {
            throw InvalidInput("x0 must lie inside the control region");
        }
        mask_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            mask_[i] = omega_.contains(center(i)) ? 1.0 : 0.0;
        }
    }

    [[nodiscard]] std::size_t n_cells() const noexcept { return n_; }
    [[nodiscard]] std::size_t n_faces() const noexcept { return n_ + 1; }
    [[nodiscard]] double h() const noexcept { return h_; }
    [[nodiscard]] const Interval& omega() const noexcept { return omega_; }
    [[nodiscard]] double x0() const noexcept { return x0_; }

    [[nodiscard]] double center(std::size_t i) const noexcept { return (static_cast<double>(i) + 0.5) * h_; }
    [[nodiscard]] double face(std::size_t j) const noexcept {
        return j == n_ ? 1.0 : static_cast<double>(j) * h_;
    }

    /// 1.0 for cells whose centre lies in omega, 0.0 otherwise.
    [[nodiscard]] const std::vector<double>& mask() const noexcept { return mask_; }
    [[nodiscard]] bool in_omega(std::size_t i) const noexcept { return mask_[i] != 0.0; }
    [[nodiscard]] std::size_t omega_cell_count() const noexcept {
        return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), 1.0));
    }

private:
    std::size_t n_;
    Interval omega_;
    double x0_;
    double h_ = 0.0;
    std::vector<double> mask_;
};

inline DomainSpec build_domain(std::size_t n_cells, Interval omega, double x0) {
    return DomainSpec(n_cells, omega, x0);
}

class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t n_steps) : T_(horizon), m_(n_steps) {
        if (!(std::isfinite(horizon) && horizon > 0.0)) {
            throw InvalidInput("time horizon must be positive");
        }
        if (n_steps < 1) {
            throw InvalidInput("n_steps must be positive");
        }
        dt_ = T_ / static_cast<double>(m_);
    }

    [[nodiscard]] double horizon() const noexcept { return T_; }
    [[nodiscard]] std::size_t n_steps() const noexcept { return m_; }
    [[nodiscard]] std::size_t n_levels() const noexcept { return m_ + 1; }
    [[nodiscard]] double dt() const noexcept { return dt_; }

    [[nodiscard]] double level(std::size_t k) const noexcept {
        return k == m_ ? T_ : static_cast<double>(k) * T_ / static_cast<double>(m_);
    }
    /// Midpoint of step k, i.e. t_{k-1/2}, for k = 1..M.
    [[nodiscard]] double midpoint(std::size_t k) const noexcept {
        return (static_cast<double>(k) - 0.5) * T_ / static_cast<double>(m_);
    }

private:
    double T_;
    std::size_t m_;
    double dt_ = 0.0;
};

/// beta(x) = x(1-x) exp(eta (x - x0)), eta = (2 x0 - 1) / (x0 (1 - x0)).
/// Single interior critical point at x0, zero at both ends.
struct BetaValidation {
    double min_abs_derivative_outside_omega = 0.0;
    double derivative_at_x0 = 0.0;
    double min_interior_value = 0.0;
    int sign_changes = 0;
    bool ok = false;
};

class BetaFunction {
public:
    explicit BetaFunction(const DomainSpec& domain)
        : x0_(domain.x0()), eta_((2.0 * x0_ - 1.0) / (x0_ * (1.0 - x0_))) {
        const std::size_t n = domain.n_cells();
        centers_.resize(n);
        faces_.resize(n + 1);
        center_derivative_.resize(n);
        face_derivative_.resize(n + 1);
        for (std::size_t i = 0; i < n; ++i) {
            centers_[i] = value(domain.center(i));
            center_derivative_[i] = derivative(domain.center(i));
        }
        for (std::size_t j = 0; j <= n; ++j) {
            faces_[j] = value(domain.face(j));
            face_derivative_[j] = derivative(domain.face(j));
        }

        const std::size_t dense = 10 * n + 1;
        const Interval& w = domain.omega();
        BetaValidation report;
        report.min_abs_derivative_outside_omega = std::numeric_limits<double>::infinity();
        report.min_interior_value = std::numeric_limits<double>::infinity();
        sup_ = value(x0_);
        double prev_sign = 0.0;
        for (std::size_t k = 0; k < dense; ++k) {
            const double x = static_cast<double>(k) / static_cast<double>(dense - 1);
            const double b = value(x);
            const double db = derivative(x);
            sup_ = std::max(sup_, b);
            if (k > 0 && k + 1 < dense) {
                report.min_interior_value = std::min(report.min_interior_value, b);
            }
            if (!(w.a < x && x < w.b)) {
                report.min_abs_derivative_outside_omega =
                    std::min(report.min_abs_derivative_outside_omega, std::abs(db));
            }
            const double s = db > 0.0 ? 1.0 : (db < 0.0 ? -1.0 : 0.0);
            if (s != 0.0) {
                if (prev_sign != 0.0 && s != prev_sign) {
                    ++report.sign_changes;
                }
                prev_sign = s;
            }
        }
        report.derivative_at_x0 = derivative(x0_);
        report.ok = report.min_abs_derivative_outside_omega > 0.0 && report.min_interior_value > 0.0 &&
                    report.sign_changes == 1 && std::abs(report.derivative_at_x0) <= 1e-10 &&
                    value(0.0) == 0.0 && value(1.0) == 0.0;
        validation_ = report;
        if (!report.ok) {
            throw SolverError("beta construction failed validation");
        }
    }

    [[nodiscard]] double value(double x) const noexcept { return x * (1.0 - x) * std::exp(eta_ * (x - x0_)); }
    [[nodiscard]] double derivative(double x) const noexcept {
        return std::exp(eta_ * (x - x0_)) * ((1.0 - 2.0 * x) + eta_ * x * (1.0 - x));
    }

    [[nodiscard]] double eta() const noexcept { return eta_; }
    [[nodiscard]] double x0() const noexcept { return x0_; }
    /// max of beta over [0,1].
    [[nodiscard]] double sup_norm() const noexcept { return sup_; }

    [[nodiscard]] const std::vector<double>& at_centers() const noexcept { return centers_; }
    [[nodiscard]] const std::vector<double>& at_faces() const noexcept { return faces_; }
    [[nodiscard]] const std::vector<double>& derivative_at_centers() const noexcept { return center_derivative_; }
    [[nodiscard]] const std::vector<double>& derivative_at_faces() const noexcept { return face_derivative_; }
    [[nodiscard]] const BetaValidation& validation() const noexcept { return validation_; }

private:
    double x0_;
    double eta_;
    double sup_ = 0.0;
    std::vector<double> centers_, faces_, center_derivative_, face_derivative_;
    BetaValidation validation_;
};

inline BetaFunction build_beta(const DomainSpec& domain) { return BetaFunction(domain); }

}  // namespace chemosteer
