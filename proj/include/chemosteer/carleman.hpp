#pragma once

/**
 * @file carleman.hpp
 * @brief Carleman weight apparatus: parameter selection under the admissibility
 *        constraints and the tables w = exp(delta0 s alpha) at step midpoints.
 *
 *     phi   = exp(lambda beta) / (t (T - t))
 *     alpha = (exp(lambda beta) - exp(2 lambda |beta|_C)) / (t (T - t))
 *     gamma(lambda) = exp(2 lambda |beta|_C),  omega(lambda) = exp(-lambda |beta|_C)
 *
 * Constraints enforced by select_params: omega(lambda) < delta0 - 1 and
 * s >= gamma(lambda) (T + T^2).
 */

#include <chemosteer/field.hpp>
#include <chemosteer/grid.hpp>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace chemosteer {

struct CarlemanConfig {
    double delta0 = 1.9;
    double lambda_scale = 0.25;
    double s_scale = 1.0;
    bool freeze_after_first = false;

    void validate() const {
        if (!(delta0 > 1.0 && delta0 < 2.0)) throw InvalidInput("delta0 must lie in (1, 2)");
        if (!(std::isfinite(lambda_scale) && lambda_scale > 0.0)) throw InvalidInput("lambda_scale must be positive");
        if (!(std::isfinite(s_scale) && s_scale > 0.0)) throw InvalidInput("s_scale must be positive");
    }
};

struct CarlemanParams {
    double lambda = 0.0;
    double s = 0.0;
    double delta0 = 0.0;
    double beta_sup = 0.0;
    double horizon = 0.0;
    double gamma_of_lambda = 0.0;  ///< exp(2 lambda |beta|_C)
    double omega_of_lambda = 0.0;  ///< exp(-lambda |beta|_C)
    double alpha0_mid = 0.0;       ///< min over the closed domain of alpha at t = T/2
    bool lambda_raised = false;
    bool s_raised = false;
    bool underflow_warning = false;  ///< delta0 s |alpha0_mid| > 700

    [[nodiscard]] bool omega_constraint() const noexcept { return omega_of_lambda < delta0 - 1.0; }
    [[nodiscard]] bool s_constraint() const noexcept {
        return s >= gamma_of_lambda * (horizon + horizon * horizon);
    }
    [[nodiscard]] bool certified() const noexcept { return omega_constraint() && s_constraint(); }
};

inline CarlemanParams select_params(double b_sup, double horizon, double delta0, double lambda_scale, double s_scale,
                                    double beta_sup) {
    CarlemanConfig{delta0, lambda_scale, s_scale, false}.validate();
    if (!(std::isfinite(b_sup) && b_sup >= 0.0)) throw InvalidInput("drift bound must be finite and non-negative");
    if (!(std::isfinite(horizon) && horizon > 0.0)) throw InvalidInput("time horizon must be positive");
    if (!(beta_sup > 0.0)) throw InvalidInput("beta sup norm must be positive");

    CarlemanParams p;
    p.delta0 = delta0;
    p.beta_sup = beta_sup;
    p.horizon = horizon;
    const double growth = 1.0 + b_sup * b_sup;

    p.lambda = lambda_scale * growth;
    const double lambda_min = -std::log(delta0 - 1.0) / beta_sup;
    if (!(std::exp(-p.lambda * beta_sup) < delta0 - 1.0)) {
        p.lambda = lambda_min;
        while (!(std::exp(-p.lambda * beta_sup) < delta0 - 1.0)) p.lambda *= 1.0 + 1e-12;
        p.lambda_raised = true;
    }
    p.gamma_of_lambda = std::exp(2.0 * p.lambda * beta_sup);
    p.omega_of_lambda = std::exp(-p.lambda * beta_sup);

    const double tt = horizon + horizon * horizon;
    p.s = s_scale * growth * tt;
    const double s_min = p.gamma_of_lambda * tt;
    if (p.s < s_min) {
        p.s = s_min;
        p.s_raised = true;
    }

    p.alpha0_mid = (1.0 - p.gamma_of_lambda) * 4.0 / (horizon * horizon);
    p.underflow_warning = delta0 * p.s * std::abs(p.alpha0_mid) > 700.0;
    return p;
}

/// Weight tables at step midpoints t_{k-1/2}, stored on levels k = 1..M (level 0 unused, zero).
///
/// Entries whose exponent delta0 s alpha falls below the representable range are stored
/// as exactly 0. The range is taken relative to the largest exponent in the table:
/// w < eps_mach * max(w) cannot change any sum that also contains the peak weight.
struct WeightTables {
    SpaceTimeField alpha;
    SpaceTimeField phi;
    SpaceTimeField w;
    double max_exponent = -std::numeric_limits<double>::infinity();
    double flush_exponent = 0.0;
    std::size_t flushed = 0;
};

inline double alpha_value(const CarlemanParams& p, double beta, double t) noexcept {
    return (std::exp(p.lambda * beta) - p.gamma_of_lambda) / (t * (p.horizon - t));
}

inline WeightTables build_weights(const CarlemanParams& params, const BetaFunction& beta, const DomainSpec& domain,
                                  const TimeGrid& time) {
    if (time.n_steps() < 4) throw InvalidInput("weight tables need at least 4 time steps");
    if (std::abs(time.horizon() - params.horizon) > 1e-14 * params.horizon) {
        throw InvalidInput("Carleman parameters were selected for a different horizon");
    }
    const std::size_t n = domain.n_cells();
    WeightTables tab{SpaceTimeField(time.n_levels(), n), SpaceTimeField(time.n_levels(), n),
                     SpaceTimeField(time.n_levels(), n)};
    const auto& b = beta.at_centers();
    const double scale = params.delta0 * params.s;
    for (std::size_t k = 1; k <= time.n_steps(); ++k) {
        const double t = time.midpoint(k);
        const double tau = t * (params.horizon - t);
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::exp(params.lambda * b[i]);
            const double a = (e - params.gamma_of_lambda) / tau;
            tab.alpha(k, i) = a;
            tab.phi(k, i) = e / tau;
            tab.max_exponent = std::max(tab.max_exponent, scale * a);
        }
    }
    tab.flush_exponent = std::max(tab.max_exponent + std::log(DBL_EPSILON), std::log(DBL_MIN));
    for (std::size_t k = 1; k <= time.n_steps(); ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            const double e = scale * tab.alpha(k, i);
            if (e < tab.flush_exponent) {
                tab.w(k, i) = 0.0;
                ++tab.flushed;
            } else {
                tab.w(k, i) = std::exp(e);
            }
        }
    }
    return tab;
}

/// Per-level check of alpha0 <= alpha <= alpha0 / (1 + omega(lambda)) < 0, alpha0 being
/// the minimum of alpha over the closed interval (attained where beta = 0).
struct WeightChainReport {
    bool alpha_negative = true;
    bool chain_holds = true;
    double worst_lower_violation = 0.0;  ///< max of (alpha0 - alpha)/|alpha0|, <= 0 when fine
    double worst_upper_violation = 0.0;  ///< max of (alpha - alpha0/(1+omega))/|alpha0|
    double max_alpha = -std::numeric_limits<double>::infinity();
};

inline WeightChainReport weight_chain_report(const WeightTables& tab, const CarlemanParams& p,
                                             const TimeGrid& time, double rel_tol = 1e-12) {
    WeightChainReport r;
    r.worst_lower_violation = -std::numeric_limits<double>::infinity();
    r.worst_upper_violation = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= time.n_steps(); ++k) {
        const double t = time.midpoint(k);
        const double alpha0 = (1.0 - p.gamma_of_lambda) / (t * (p.horizon - t));
        const double upper = alpha0 / (1.0 + p.omega_of_lambda);
        for (double a : tab.alpha.level(k)) {
            r.max_alpha = std::max(r.max_alpha, a);
            if (!(a < 0.0)) r.alpha_negative = false;
            r.worst_lower_violation = std::max(r.worst_lower_violation, (alpha0 - a) / std::abs(alpha0));
            r.worst_upper_violation = std::max(r.worst_upper_violation, (a - upper) / std::abs(alpha0));
        }
        if (!(upper < 0.0)) r.chain_holds = false;
    }
    if (r.worst_lower_violation > rel_tol || r.worst_upper_violation > rel_tol) r.chain_holds = false;
    return r;
}

}  // namespace chemosteer
