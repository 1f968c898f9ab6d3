#pragma once

/**
 * @file parabolic.hpp
 * @brief Implicit Euler for u_t = u_xx - (B u)_x + 1_omega f with zero-flux faces,
 *        and its exact discrete transpose.
 *
 * Step k -> k+1 solves (I - dt A_k) u^{k+1} = u^k + dt 1_omega f^{k+1}, where A_k is the
 * flux-form operator with face flux
 *
 *     F_{i+1/2} = (u_{i+1} - u_i) / h - B_{i+1/2} (u_i + u_{i+1}) / 2,
 *
 * B_{i+1/2} taken as the average of levels k and k+1, and F = 0 on the boundary faces.
 * Every column of A_k sums to zero, so sum_i h u_i is conserved when f = 0.
 *
 * The adjoint runs backwards with phi^M = phi_T and (I - dt A_k)^T phi^k = phi^{k+1}.
 * With this indexing the transpose identities read
 *
 *     <u^M, phi_T> = <u^0, phi^0> + sum_{k=1..M} dt <1_omega f^k, phi^{k-1}>,
 *
 * i.e. control level k pairs with adjoint level k-1 (the implicit end of the
 * backward step covering (t_{k-1}, t_k)).
 */

#include <chemosteer/field.hpp>
#include <chemosteer/grid.hpp>
#include <chemosteer/tridiagonal.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace chemosteer {

/// A_k for a given face drift vector (length N+1, boundary entries ignored).
inline Tridiagonal drift_diffusion_operator(std::span<const double> face_drift, const DomainSpec& domain) {
    const std::size_t n = domain.n_cells();
    const double h = domain.h();
    const double inv_h = 1.0 / h;
    Tridiagonal a(n);
    for (std::size_t j = 1; j < n; ++j) {
        const double b = face_drift[j];
        const double c_right = inv_h - 0.5 * b;
        const double c_left = -inv_h - 0.5 * b;
        const std::size_t left = j - 1;
        const std::size_t right = j;
        a.super[left] += c_right * inv_h;
        a.diag[left] += c_left * inv_h;
        a.sub[right] -= c_left * inv_h;
        a.diag[right] -= c_right * inv_h;
    }
    return a;
}

/// I - dt A_k.
inline Tridiagonal implicit_step_matrix(std::span<const double> face_drift, const DomainSpec& domain, double dt) {
    Tridiagonal a = drift_diffusion_operator(face_drift, domain);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a.sub[i] *= -dt;
        a.super[i] *= -dt;
        a.diag[i] = 1.0 - dt * a.diag[i];
    }
    return a;
}

namespace detail {

inline void check_drift_shape(const DriftField& b, const DomainSpec& domain, const TimeGrid& time) {
    if (b.n_levels() != time.n_levels() || b.n_cells() != domain.n_cells()) {
        throw InvalidInput("drift field shape does not match grid");
    }
}

}  // namespace detail

/// Forward trajectory. `f`, when given, must have M+1 levels; level 0 is ignored and the
/// mask of omega is applied here.
inline SpaceTimeField solve_forward(std::span<const double> u0, const DriftField& b, const SpaceTimeField* f,
                                    const DomainSpec& domain, const TimeGrid& time) {
    detail::check_drift_shape(b, domain, time);
    const std::size_t n = domain.n_cells();
    if (u0.size() != n) throw InvalidInput("initial data has wrong length");
    if (f != nullptr && (f->n_levels() != time.n_levels() || f->n_cells() != n)) {
        throw InvalidInput("control field shape does not match grid");
    }
    const double dt = time.dt();
    const auto& mask = domain.mask();
    SpaceTimeField u(time.n_levels(), n);
    u.set_level(0, u0);
    std::vector<double> faces(n + 1);
    std::vector<double> rhs(n);
    for (std::size_t k = 0; k < time.n_steps(); ++k) {
        const auto prev = u.level(k);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = prev[i];
        if (f != nullptr) {
            const auto fk = f->level(k + 1);
            for (std::size_t i = 0; i < n; ++i) rhs[i] += dt * mask[i] * fk[i];
        }
        b.step_drift(k, faces);
        solve_tridiagonal(implicit_step_matrix(faces, domain, dt), rhs);
        u.set_level(k + 1, rhs);
    }
    return u;
}

inline SpaceTimeField solve_forward(std::span<const double> u0, const DriftField& b, const SpaceTimeField& f,
                                    const DomainSpec& domain, const TimeGrid& time) {
    return solve_forward(u0, b, &f, domain, time);
}

inline SpaceTimeField solve_forward(std::span<const double> u0, const DriftField& b, const DomainSpec& domain,
                                    const TimeGrid& time) {
    return solve_forward(u0, b, nullptr, domain, time);
}

/// Backward trajectory with phi^M = phi_T; the algebraic transpose of solve_forward.
inline SpaceTimeField solve_adjoint(std::span<const double> phi_T, const DriftField& b, const DomainSpec& domain,
                                    const TimeGrid& time) {
    detail::check_drift_shape(b, domain, time);
    const std::size_t n = domain.n_cells();
    if (phi_T.size() != n) throw InvalidInput("terminal datum has wrong length");
    const std::size_t m = time.n_steps();
    SpaceTimeField phi(time.n_levels(), n);
    phi.set_level(m, phi_T);
    std::vector<double> faces(n + 1);
    std::vector<double> rhs(n);
    for (std::size_t k = m; k-- > 0;) {
        const auto next = phi.level(k + 1);
        std::copy(next.begin(), next.end(), rhs.begin());
        b.step_drift(k, faces);
        solve_tridiagonal(implicit_step_matrix(faces, domain, time.dt()).transposed(), rhs);
        phi.set_level(k, rhs);
    }
    return phi;
}

/// Adjoint level paired with control level k (k = 1..M).
inline std::span<const double> adjoint_for_control_level(const SpaceTimeField& phi, std::size_t k) {
    return phi.level(k - 1);
}

/// Bound check for u_inf <= exp(C rho0) (|u0|_inf + |F|_inf), rho0 = (1 + |B|^2)(1 + T).
struct LinfEstimateReport {
    double k0 = 0.0;            ///< |F|_inf + |u0|_inf
    double rho0 = 0.0;
    double u_sup = 0.0;
    double ratio = 0.0;         ///< u_sup / k0 (0 when degenerate)
    double c_hat = 0.0;         ///< ln(ratio) / rho0, -inf when ratio <= 1
    bool degenerate = false;    ///< k0 == 0 and u == 0
    bool inconsistent = false;  ///< k0 == 0 but u != 0
};

inline LinfEstimateReport linf_estimate_report(const SpaceTimeField& u, std::span<const double> u0,
                                               const SpaceTimeField* f, const DriftField& b, const DomainSpec& domain,
                                               const TimeGrid& time) {
    LinfEstimateReport r;
    double f_sup = 0.0;
    if (f != nullptr) {
        const auto& mask = domain.mask();
        for (std::size_t k = 1; k < f->n_levels(); ++k) {
            const auto fk = f->level(k);
            for (std::size_t i = 0; i < fk.size(); ++i) f_sup = std::max(f_sup, std::abs(mask[i] * fk[i]));
        }
    }
    const double b_sup = b.sup_norm();
    r.k0 = f_sup + sup_norm(u0);
    r.rho0 = (1.0 + b_sup * b_sup) * (1.0 + time.horizon());
    r.u_sup = u.sup_norm();
    if (r.k0 == 0.0) {
        r.degenerate = r.u_sup == 0.0;
        r.inconsistent = !r.degenerate;
        r.c_hat = -std::numeric_limits<double>::infinity();
        return r;
    }
    r.ratio = r.u_sup / r.k0;
    r.c_hat = r.ratio <= 1.0 ? -std::numeric_limits<double>::infinity() : std::log(r.ratio) / r.rho0;
    return r;
}

/// Sign structure of I - dt A_k: off-diagonals are non-positive exactly when the cell
/// Peclet number |B| h / 2 is at most one, and then nonnegative data stays nonnegative.
struct PositivityReport {
    double max_cell_peclet = 0.0;
    bool m_matrix = true;
};

inline PositivityReport positivity_report(const DriftField& b, const DomainSpec& domain) {
    PositivityReport r;
    r.max_cell_peclet = 0.5 * b.sup_norm() * domain.h();
    r.m_matrix = r.max_cell_peclet <= 1.0;
    return r;
}

/// Largest per-step L2 growth exponent ln(|u^{k+1}|/|u^k|)/dt against |B|^2/4 from the
/// energy estimate.
struct StabilityReport {
    double max_growth_rate = -std::numeric_limits<double>::infinity();
    double energy_rate_bound = 0.0;
};

inline StabilityReport stability_report(const SpaceTimeField& u, const DriftField& b, const DomainSpec& domain,
                                        const TimeGrid& time) {
    StabilityReport r;
    const double bs = b.sup_norm();
    r.energy_rate_bound = 0.25 * bs * bs;
    for (std::size_t k = 0; k + 1 < u.n_levels(); ++k) {
        const double a = norm_omega(u.level(k), domain.h());
        const double c = norm_omega(u.level(k + 1), domain.h());
        if (a > 0.0 && c > 0.0) r.max_growth_rate = std::max(r.max_growth_rate, std::log(c / a) / time.dt());
    }
    return r;
}

}  // namespace chemosteer
