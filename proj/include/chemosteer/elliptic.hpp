#pragma once

/**
 * @file elliptic.hpp
 * @brief Neumann problem 0 = v'' - gamma v + delta eta on a cell-centred grid and
 *        the face drift B = chi v'.
 *
 * Discretisation: -(v_{i+1} - 2 v_i + v_{i-1}) / h^2 + gamma v_i = delta eta_i with
 * ghost reflection v_{-1} = v_0, v_N = v_{N-1}. The matrix is a symmetric M-matrix,
 * so |v|_inf <= (delta / gamma) |eta|_inf and |v|_2 <= (delta / gamma) |eta|_2.
 */

#include <chemosteer/field.hpp>
#include <chemosteer/grid.hpp>
#include <chemosteer/tridiagonal.hpp>

#include <cmath>
#include <span>
#include <vector>

namespace chemosteer {

struct PhysicsParams {
    double chi = 1.0;
    double gamma = 1.0;
    double delta = 1.0;

    /// chi = 0 is accepted: it decouples the drift and is used for comparison runs.
    void validate() const {
        if (!(std::isfinite(chi) && chi >= 0.0)) throw InvalidInput("chi must be non-negative");
        if (!(std::isfinite(gamma) && gamma > 0.0)) throw InvalidInput("gamma must be positive");
        if (!(std::isfinite(delta) && delta > 0.0)) throw InvalidInput("delta must be positive");
    }
};

inline Tridiagonal elliptic_matrix(const DomainSpec& domain, double gamma) {
    const std::size_t n = domain.n_cells();
    const double inv_h2 = 1.0 / (domain.h() * domain.h());
    Tridiagonal a(n);
    for (std::size_t i = 0; i < n; ++i) {
        double diag = gamma;
        if (i > 0) {
            a.sub[i] = -inv_h2;
            diag += inv_h2;
        }
        if (i + 1 < n) {
            a.super[i] = -inv_h2;
            diag += inv_h2;
        }
        a.diag[i] = diag;
    }
    return a;
}

inline std::vector<double> solve_elliptic(std::span<const double> eta, const PhysicsParams& physics,
                                          const DomainSpec& domain) {
    if (!(std::isfinite(physics.gamma) && physics.gamma > 0.0)) {
        throw InvalidInput("elliptic solve requires gamma > 0");
    }
    if (eta.size() != domain.n_cells()) {
        throw InvalidInput("elliptic solve: source has wrong length");
    }
    std::vector<double> v(eta.size());
    for (std::size_t i = 0; i < eta.size(); ++i) {
        if (!std::isfinite(eta[i])) throw InvalidInput("elliptic solve: non-finite source");
        v[i] = physics.delta * eta[i];
    }
    solve_tridiagonal(elliptic_matrix(domain, physics.gamma), v);
    return v;
}

/// B_{i+1/2} = chi (v_{i+1} - v_i) / h on interior faces, zero on the two boundary faces.
inline std::vector<double> drift_from_v(std::span<const double> v, double chi, const DomainSpec& domain) {
    const std::size_t n = domain.n_cells();
    std::vector<double> b(n + 1, 0.0);
    const double scale = chi / domain.h();
    for (std::size_t j = 1; j < n; ++j) b[j] = scale * (v[j] - v[j - 1]);
    return b;
}

/// Elliptic solve on every level of a space-time field.
inline SpaceTimeField solve_elliptic_levels(const SpaceTimeField& eta, const PhysicsParams& physics,
                                            const DomainSpec& domain) {
    SpaceTimeField v(eta.n_levels(), eta.n_cells());
    const Tridiagonal a = elliptic_matrix(domain, physics.gamma);
    for (std::size_t k = 0; k < eta.n_levels(); ++k) {
        auto row = v.level(k);
        const auto src = eta.level(k);
        for (std::size_t i = 0; i < row.size(); ++i) row[i] = physics.delta * src[i];
        solve_tridiagonal(a, row);
    }
    return v;
}

inline DriftField drift_from_levels(const SpaceTimeField& v, double chi, const DomainSpec& domain) {
    DriftField b(v.n_levels(), domain.n_cells());
    for (std::size_t k = 0; k < v.n_levels(); ++k) b.set_level(k, drift_from_v(v.level(k), chi, domain));
    return b;
}

/// Residual of 0 = v'' - gamma v + delta eta in the discrete operator, per cell (sup norm).
inline double elliptic_residual(std::span<const double> v, std::span<const double> eta,
                                const PhysicsParams& physics, const DomainSpec& domain) {
    const Tridiagonal a = elliptic_matrix(domain, physics.gamma);
    std::vector<double> av(v.size());
    a.multiply(v, av);
    double r = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) r = std::max(r, std::abs(av[i] - physics.delta * eta[i]));
    return r;
}

}  // namespace chemosteer
