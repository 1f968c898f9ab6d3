#pragma once

/**
 * @file hum.hpp
 * @brief Penalised null control of the linear drift equation via the dual Gramian.
 *
 * Minimising  1/2 sum dt h |f|^2 / w  +  1/(2 eps) |u(T)|^2  over controls supported in
 * omega leads to f = 1_omega w phi with phi the adjoint started from phi_T = -u(T)/eps.
 * Eliminating u(T) gives the SPD system  (G + eps I) phi_T = -u_free(T), where
 *
 *     G phi_T = u(T) of the forward run from zero data driven by 1_omega w phi.
 */

#include <chemosteer/carleman.hpp>
#include <chemosteer/field.hpp>
#include <chemosteer/grid.hpp>
#include <chemosteer/parabolic.hpp>

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace chemosteer {

struct HumConfig {
    double epsilon = 1e-6;
    double cg_tol = 1e-10;
    std::size_t cg_max_iters = 1000;

    void validate() const {
        if (!(std::isfinite(epsilon) && epsilon > 0.0)) throw InvalidInput("epsilon must be positive");
        if (!(std::isfinite(cg_tol) && cg_tol > 0.0)) throw InvalidInput("cg_tol must be positive");
    }
};

/// kappa = (1 + |B|^2)(1 + T) + 1/T.
inline double kappa_constant(double b_sup, double horizon) noexcept {
    return (1.0 + b_sup * b_sup) * (1.0 + horizon) + 1.0 / horizon;
}

/// rho0 = (1 + |B|^2)(1 + T).
inline double rho0_constant(double b_sup, double horizon) noexcept {
    return (1.0 + b_sup * b_sup) * (1.0 + horizon);
}

/// f^k = 1_omega w^k phi^{k-1} for k = 1..M; level 0 stays zero.
inline SpaceTimeField feedback_control(const SpaceTimeField& phi, const WeightTables& weights,
                                       const DomainSpec& domain) {
    SpaceTimeField f(phi.n_levels(), phi.n_cells());
    const auto& mask = domain.mask();
    for (std::size_t k = 1; k < phi.n_levels(); ++k) {
        const auto p = adjoint_for_control_level(phi, k);
        const auto w = weights.w.level(k);
        auto out = f.level(k);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = mask[i] * w[i] * p[i];
    }
    return f;
}

/// sum_k dt sum_{omega} h w (phi^{k-1})^2: the quadratic form of G.
inline double weighted_adjoint_energy(const SpaceTimeField& phi, const WeightTables& weights,
                                      const DomainSpec& domain, const TimeGrid& time) {
    const auto& mask = domain.mask();
    double s = 0.0;
    for (std::size_t k = 1; k < phi.n_levels(); ++k) {
        const auto p = adjoint_for_control_level(phi, k);
        const auto w = weights.w.level(k);
        for (std::size_t i = 0; i < p.size(); ++i) s += mask[i] * w[i] * p[i] * p[i];
    }
    return time.dt() * domain.h() * s;
}

/// The map phi_T -> u(T) bundled with the data it depends on.
class Gramian {
public:
    Gramian(const DriftField& b, const WeightTables& weights, const DomainSpec& domain, const TimeGrid& time)
        : b_(&b), w_(&weights), domain_(&domain), time_(&time), zero_(domain.n_cells(), 0.0) {}

    [[nodiscard]] std::vector<double> apply(std::span<const double> phi_T) const {
        const SpaceTimeField phi = solve_adjoint(phi_T, *b_, *domain_, *time_);
        const SpaceTimeField f = feedback_control(phi, *w_, *domain_);
        const SpaceTimeField u = solve_forward(zero_, *b_, f, *domain_, *time_);
        const auto last = u.level(time_->n_steps());
        return {last.begin(), last.end()};
    }

    [[nodiscard]] const DomainSpec& domain() const noexcept { return *domain_; }
    [[nodiscard]] const TimeGrid& time() const noexcept { return *time_; }
    [[nodiscard]] const DriftField& drift() const noexcept { return *b_; }
    [[nodiscard]] const WeightTables& weights() const noexcept { return *w_; }

private:
    const DriftField* b_;
    const WeightTables* w_;
    const DomainSpec* domain_;
    const TimeGrid* time_;
    std::vector<double> zero_;
};

inline std::vector<double> gramian_apply(std::span<const double> phi_T, const DriftField& b,
                                         const WeightTables& weights, const DomainSpec& domain,
                                         const TimeGrid& time) {
    return Gramian(b, weights, domain, time).apply(phi_T);
}

struct CgResult {
    std::vector<double> x;
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
    std::vector<double> residual_history;   ///< |r_k| / |b|
    std::vector<double> objective_history;  ///< 1/2 <Ax,x> - <b,x>; equals 1/2 |e|_A^2 up to a constant
};

/// Conjugate gradient for (G + eps I) x = rhs in the h-weighted inner product.
inline CgResult conjugate_gradient(const Gramian& g, double epsilon, std::span<const double> rhs, double tol,
                                   std::size_t max_iters) {
    const double h = g.domain().h();
    const std::size_t n = rhs.size();
    CgResult out;
    out.x.assign(n, 0.0);
    const double b_norm = norm_omega(rhs, h);
    if (b_norm == 0.0) {
        out.converged = true;
        out.residual_history.push_back(0.0);
        out.objective_history.push_back(0.0);
        return out;
    }
    std::vector<double> r(rhs.begin(), rhs.end());
    std::vector<double> p = r;
    double rr = dot_omega(r, r, h);
    out.residual_history.push_back(1.0);
    out.objective_history.push_back(0.0);
    out.relative_residual = 1.0;
    for (std::size_t it = 0; it < max_iters; ++it) {
        std::vector<double> ap = g.apply(p);
        for (std::size_t i = 0; i < n; ++i) ap[i] += epsilon * p[i];
        const double pap = dot_omega(p, ap, h);
        if (!(pap > 0.0) || !std::isfinite(pap)) break;
        const double step = rr / pap;
        for (std::size_t i = 0; i < n; ++i) {
            out.x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        const double rr_new = dot_omega(r, r, h);
        out.iterations = it + 1;
        out.relative_residual = std::sqrt(rr_new) / b_norm;
        out.residual_history.push_back(out.relative_residual);
        double q = 0.0;
        for (std::size_t i = 0; i < n; ++i) q += out.x[i] * (rhs[i] + r[i]);
        out.objective_history.push_back(-0.5 * h * q);
        if (out.relative_residual <= tol) {
            out.converged = true;
            break;
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    return out;
}

struct HumSolution {
    std::vector<double> phi_T;
    SpaceTimeField f;
    SpaceTimeField u;
    double free_terminal_norm = 0.0;  ///< |u_free(T)|_2
    double terminal_norm = 0.0;       ///< |u(T)|_2
    double weighted_energy = 0.0;     ///< sum dt h f^2 / w over w > 0
    double control_sup = 0.0;         ///< |1_omega f|_inf
    double consistency = 0.0;         ///< |u(T) + eps phi_T|_2
    std::size_t cg_iters = 0;
    double cg_residual = 0.0;
    bool cg_converged = false;
    std::vector<double> cg_residual_history;
    std::vector<double> cg_objective_history;
    double epsilon = 0.0;
    double kappa = 0.0;
};

inline HumSolution solve_penalized(std::span<const double> u0, const DriftField& b, const WeightTables& weights,
                                   const DomainSpec& domain, const TimeGrid& time, const HumConfig& config) {
    config.validate();
    const double h = domain.h();
    const std::size_t m = time.n_steps();
    HumSolution sol;
    sol.epsilon = config.epsilon;
    sol.kappa = kappa_constant(b.sup_norm(), time.horizon());

    const SpaceTimeField u_free = solve_forward(u0, b, domain, time);
    const auto free_T = u_free.level(m);
    sol.free_terminal_norm = norm_omega(free_T, h);
    std::vector<double> rhs(free_T.size());
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = -free_T[i];

    const Gramian g(b, weights, domain, time);
    CgResult cg = conjugate_gradient(g, config.epsilon, rhs, config.cg_tol, config.cg_max_iters);
    sol.phi_T = std::move(cg.x);
    sol.cg_iters = cg.iterations;
    sol.cg_residual = cg.relative_residual;
    sol.cg_converged = cg.converged;
    sol.cg_residual_history = std::move(cg.residual_history);
    sol.cg_objective_history = std::move(cg.objective_history);

    const SpaceTimeField phi = solve_adjoint(sol.phi_T, b, domain, time);
    sol.f = feedback_control(phi, weights, domain);
    sol.u = solve_forward(u0, b, sol.f, domain, time);

    const auto u_T = sol.u.level(m);
    sol.terminal_norm = norm_omega(u_T, h);
    std::vector<double> gap(u_T.size());
    for (std::size_t i = 0; i < gap.size(); ++i) gap[i] = u_T[i] + config.epsilon * sol.phi_T[i];
    sol.consistency = norm_omega(gap, h);

    double energy = 0.0;
    for (std::size_t k = 1; k <= m; ++k) {
        const auto fk = sol.f.level(k);
        const auto wk = weights.w.level(k);
        for (std::size_t i = 0; i < fk.size(); ++i) {
            if (wk[i] > 0.0 && domain.in_omega(i)) energy += fk[i] * fk[i] / wk[i];
        }
    }
    sol.weighted_energy = time.dt() * h * energy;
    sol.control_sup = sol.f.sup_norm();
    return sol;
}

/// Empirical constants for |1_omega f|_inf <= exp(C kappa) |u0|_2 and for the energy bound
/// sum dt h w phi^2 + |u(T)|^2 / eps <= exp(C kappa) |u0|_2^2.
struct ControlBoundReport {
    double u0_norm = 0.0;
    double kappa = 0.0;
    double c_hat_sup = 0.0;
    double c_hat_energy = 0.0;
    double energy_total = 0.0;
    bool degenerate = false;
};

inline ControlBoundReport control_bound_report(const HumSolution& sol, std::span<const double> u0,
                                               const DomainSpec& domain) {
    ControlBoundReport r;
    r.u0_norm = norm_omega(u0, domain.h());
    r.kappa = sol.kappa;
    r.energy_total = sol.weighted_energy + sol.terminal_norm * sol.terminal_norm / sol.epsilon;
    const double ninf = -std::numeric_limits<double>::infinity();
    if (r.u0_norm == 0.0) {
        r.degenerate = true;
        r.c_hat_sup = ninf;
        r.c_hat_energy = ninf;
        return r;
    }
    r.c_hat_sup = sol.control_sup <= r.u0_norm ? ninf : std::log(sol.control_sup / r.u0_norm) / r.kappa;
    const double e_ratio = r.energy_total / (r.u0_norm * r.u0_norm);
    r.c_hat_energy = e_ratio <= 1.0 ? ninf : std::log(e_ratio) / r.kappa;
    return r;
}

}  // namespace chemosteer
