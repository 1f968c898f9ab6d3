#pragma once

/**
 * @file fixed_point.hpp
 * @brief Picard iteration for the controlled Keller-Segel system.
 *
 * Each outer step maps a state guess xi to the drift B = chi v_x with v solving the
 * elliptic equation per level against xi, then to the penalised null control for the
 * linear drift equation; the resulting state becomes the next guess.
 */

#include <chemosteer/carleman.hpp>
#include <chemosteer/elliptic.hpp>
#include <chemosteer/hum.hpp>
#include <chemosteer/parabolic.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace chemosteer {

enum class InitialGuess { Zero, U0Constant };

struct FixedPointConfig {
    double tol = 1e-8;
    std::size_t max_iters = 30;
    InitialGuess initial_guess = InitialGuess::Zero;

    void validate() const {
        if (!(std::isfinite(tol) && tol > 0.0)) throw InvalidInput("fixed_point.tol must be positive");
    }
};

/// Constant-in-time extension (U0Constant) or zero field.
inline SpaceTimeField initial_state_guess(std::span<const double> u0, InitialGuess guess, const TimeGrid& time) {
    SpaceTimeField xi(time.n_levels(), u0.size());
    if (guess == InitialGuess::U0Constant) {
        for (std::size_t k = 0; k < time.n_levels(); ++k) xi.set_level(k, u0);
    }
    return xi;
}

struct IterationRecord {
    double increment = 0.0;  ///< |xi_{k+1} - xi_k|_{L2(Q)}
    double u_sup = 0.0;
    double terminal_norm = 0.0;
    double drift_sup = 0.0;
    double lambda = 0.0;
    double s = 0.0;
    std::size_t cg_iters = 0;
    bool cg_converged = false;
};

struct VerificationResult {
    SpaceTimeField u;
    double terminal_norm = 0.0;
    std::size_t max_inner_sweeps = 0;
    double max_inner_change = 0.0;  ///< relative sup change of the last inner sweep, worst step
};

struct NonlinearResult {
    SpaceTimeField u, v, f;
    DriftField drift;
    std::optional<HumSolution> last_linear;
    std::optional<CarlemanParams> params;
    std::size_t iterations = 0;
    std::vector<IterationRecord> history;
    bool converged = false;
    bool in_K = false;            ///< final state satisfies |u|_inf <= 1
    bool all_iterates_in_K = true;
    VerificationResult verification;
    double elliptic_residual = 0.0;  ///< sup over levels of the v-equation residual against final u
};

/// Nonlinear forward solve with a prescribed control: per step, the drift is recomputed
/// from the current iterate of u^{k+1} (frozen-coefficient Picard, at most `max_sweeps`).
inline VerificationResult verify_nonlinear(std::span<const double> u0, const SpaceTimeField& f,
                                           const PhysicsParams& physics, const DomainSpec& domain,
                                           const TimeGrid& time, double inner_tol = 1e-10,
                                           std::size_t max_sweeps = 5) {
    const std::size_t n = domain.n_cells();
    const double dt = time.dt();
    const auto& mask = domain.mask();
    VerificationResult out;
    out.u = SpaceTimeField(time.n_levels(), n);
    out.u.set_level(0, u0);
    std::vector<double> faces(n + 1), rhs(n), guess(n);
    for (std::size_t k = 0; k < time.n_steps(); ++k) {
        const auto prev = out.u.level(k);
        const std::vector<double> b_prev = drift_from_v(solve_elliptic(prev, physics, domain), physics.chi, domain);
        std::copy(prev.begin(), prev.end(), guess.begin());
        const auto fk = f.level(k + 1);
        double change = 0.0;
        std::size_t sweeps = 0;
        for (; sweeps < max_sweeps;) {
            const std::vector<double> b_next =
                drift_from_v(solve_elliptic(guess, physics, domain), physics.chi, domain);
            for (std::size_t j = 0; j <= n; ++j) faces[j] = 0.5 * (b_prev[j] + b_next[j]);
            for (std::size_t i = 0; i < n; ++i) rhs[i] = prev[i] + dt * mask[i] * fk[i];
            solve_tridiagonal(implicit_step_matrix(faces, domain, dt), rhs);
            ++sweeps;
            double diff = 0.0;
            double scale = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                diff = std::max(diff, std::abs(rhs[i] - guess[i]));
                scale = std::max(scale, std::abs(rhs[i]));
            }
            guess.swap(rhs);
            change = scale > 0.0 ? diff / scale : diff;
            if (change <= inner_tol) break;
        }
        out.max_inner_sweeps = std::max(out.max_inner_sweeps, sweeps);
        out.max_inner_change = std::max(out.max_inner_change, change);
        out.u.set_level(k + 1, guess);
    }
    out.terminal_norm = norm_omega(out.u.level(time.n_steps()), domain.h());
    return out;
}

inline NonlinearResult run_nonlinear(std::span<const double> u0, const PhysicsParams& physics,
                                     const DomainSpec& domain, const TimeGrid& time, const BetaFunction& beta,
                                     const CarlemanConfig& carleman, const HumConfig& hum,
                                     const FixedPointConfig& fp) {
    physics.validate();
    carleman.validate();
    hum.validate();
    fp.validate();
    for (double x : u0) {
        if (!std::isfinite(x)) throw InvalidInput("initial data must be finite");
    }
    const double h = domain.h();
    const double dt = time.dt();

    NonlinearResult res;
    SpaceTimeField xi = initial_state_guess(u0, fp.initial_guess, time);
    std::optional<CarlemanParams> frozen;

    for (std::size_t it = 0; it < fp.max_iters; ++it) {
        const SpaceTimeField v = solve_elliptic_levels(xi, physics, domain);
        DriftField b = drift_from_levels(v, physics.chi, domain);
        const CarlemanParams params =
            (carleman.freeze_after_first && frozen)
                ? *frozen
                : select_params(b.sup_norm(), time.horizon(), carleman.delta0, carleman.lambda_scale,
                                carleman.s_scale, beta.sup_norm());
        if (!frozen) frozen = params;
        const WeightTables weights = build_weights(params, beta, domain, time);
        HumSolution sol = solve_penalized(u0, b, weights, domain, time, hum);

        SpaceTimeField diff = sol.u;
        for (std::size_t q = 0; q < diff.data().size(); ++q) diff.data()[q] -= xi.data()[q];
        const double increment = norm_q(diff, h, dt);
        const double xi_norm = norm_q(xi, h, dt);

        IterationRecord rec;
        rec.increment = increment;
        rec.u_sup = sol.u.sup_norm();
        rec.terminal_norm = sol.terminal_norm;
        rec.drift_sup = b.sup_norm();
        rec.lambda = params.lambda;
        rec.s = params.s;
        rec.cg_iters = sol.cg_iters;
        rec.cg_converged = sol.cg_converged;
        res.history.push_back(rec);
        if (rec.u_sup > 1.0) res.all_iterates_in_K = false;

        res.iterations = it + 1;
        xi = sol.u;
        res.drift = std::move(b);
        res.params = params;
        res.last_linear = std::move(sol);
        if (increment <= fp.tol * std::max(1.0, xi_norm)) {
            res.converged = true;
            break;
        }
    }

    if (res.last_linear) {
        res.u = res.last_linear->u;
        res.f = res.last_linear->f;
    } else {
        res.u = xi;
        res.f = SpaceTimeField(time.n_levels(), domain.n_cells());
        res.drift = DriftField::zero(domain, time);
    }
    res.in_K = res.u.sup_norm() <= 1.0;
    res.v = solve_elliptic_levels(res.u, physics, domain);
    for (std::size_t k = 0; k < time.n_levels(); ++k) {
        res.elliptic_residual =
            std::max(res.elliptic_residual, elliptic_residual(res.v.level(k), res.u.level(k), physics, domain));
    }
    res.verification = verify_nonlinear(u0, res.f, physics, domain, time);
    return res;
}

/// Behaviour of v near the horizon: |v(., t_k)|_2 over the last 10% of levels and the
/// ratio |v(., T)|_2 / max_k |v(., t_k)|_2.
struct RemarkReport {
    std::vector<double> tail_times;
    std::vector<double> tail_norms;
    double final_norm = 0.0;
    double max_norm = 0.0;
    double final_ratio = 0.0;    ///< 0 when v vanishes identically
    double elliptic_gain = 0.0;  ///< delta / gamma, the L2 gain of the discrete elliptic solve
    double final_state_norm = 0.0;
    bool final_bound_holds = true;  ///< |v(T)| <= gain |u(T)|
};

inline RemarkReport remark_check(const NonlinearResult& result, const PhysicsParams& physics,
                                 const DomainSpec& domain, const TimeGrid& time) {
    RemarkReport r;
    const double h = domain.h();
    const std::size_t m = time.n_steps();
    const std::size_t first_tail = m - m / 10;
    for (std::size_t k = 0; k <= m; ++k) {
        const double nv = norm_omega(result.v.level(k), h);
        r.max_norm = std::max(r.max_norm, nv);
        if (k >= first_tail) {
            r.tail_times.push_back(time.level(k));
            r.tail_norms.push_back(nv);
        }
    }
    r.final_norm = norm_omega(result.v.level(m), h);
    r.final_ratio = r.max_norm > 0.0 ? r.final_norm / r.max_norm : 0.0;
    r.elliptic_gain = physics.delta / physics.gamma;
    r.final_state_norm = norm_omega(result.u.level(m), h);
    r.final_bound_holds = r.final_norm <= r.elliptic_gain * r.final_state_norm * (1.0 + 1e-12);
    return r;
}

// ---------------------------------------------------------------------------
// Smallness-threshold sweep
// ---------------------------------------------------------------------------

struct SweepCell {
    double amplitude = 0.0;
    bool evaluated = false;  ///< false for cells skipped after the first failure
    bool converged = false;
    bool in_K = false;
    double terminal_ratio = 0.0;  ///< verification |u(T)|_2 / |u0|_2
    bool success = false;
};

struct SweepRow {
    double horizon = 0.0;
    double kappa0 = 0.0;  ///< 1 + T + 1/T
    std::vector<SweepCell> cells;
    std::optional<double> a_star;
};

struct SweepTable {
    std::vector<SweepRow> rows;
    double c1_hat = 0.0;  ///< least squares through the origin of -ln a* on 1 + T + 1/T
    double fit_rms = 0.0;
    double affine_slope = 0.0;  ///< slope of the affine fit, reported for comparison
    double affine_intercept = 0.0;
    std::size_t fitted_rows = 0;
};

struct SweepSettings {
    std::size_t n_cells = 100;
    std::size_t n_steps = 200;
    Interval omega{0.3, 0.7};
    double x0 = 0.5;
    PhysicsParams physics;
    CarlemanConfig carleman;
    HumConfig hum;
    FixedPointConfig fixed_point;
    double terminal_threshold = 1e-2;  ///< success requires verification ratio below this
};

using InitialShape = std::function<std::vector<double>(const DomainSpec&, double amplitude)>;

inline SweepRow sweep_horizon(double horizon, std::span<const double> amplitudes, const InitialShape& shape,
                              const SweepSettings& s) {
    const DomainSpec domain(s.n_cells, s.omega, s.x0);
    const TimeGrid time(horizon, s.n_steps);
    const BetaFunction beta(domain);
    SweepRow row;
    row.horizon = horizon;
    row.kappa0 = 1.0 + horizon + 1.0 / horizon;
    bool failed = false;
    for (double a : amplitudes) {
        SweepCell cell;
        cell.amplitude = a;
        if (!failed) {
            cell.evaluated = true;
            const std::vector<double> u0 = shape(domain, a);
            const double u0_norm = norm_omega(u0, domain.h());
            try {
                const NonlinearResult r =
                    run_nonlinear(u0, s.physics, domain, time, beta, s.carleman, s.hum, s.fixed_point);
                cell.converged = r.converged;
                cell.in_K = r.in_K && r.all_iterates_in_K;
                cell.terminal_ratio = u0_norm > 0.0 ? r.verification.terminal_norm / u0_norm : 0.0;
                cell.success = cell.converged && cell.in_K && std::isfinite(cell.terminal_ratio) &&
                               cell.terminal_ratio <= s.terminal_threshold;
            } catch (const SolverError&) {
                cell.success = false;
            }
            if (!cell.success) {
                failed = true;
            } else if (a > 0.0) {
                row.a_star = a;
            }
        }
        row.cells.push_back(cell);
    }
    return row;
}

/// Scans amplitudes in increasing order per horizon and stops at the first failure, so the
/// success indicator is monotone by construction. Horizons run concurrently.
inline SweepTable threshold_sweep(std::span<const double> horizons, std::span<const double> amplitudes,
                                  const InitialShape& shape, const SweepSettings& settings) {
    for (std::size_t i = 1; i < amplitudes.size(); ++i) {
        if (!(amplitudes[i] > amplitudes[i - 1])) throw InvalidInput("amplitude grid must be increasing");
    }
    for (double a : amplitudes) {
        if (a < 0.0) throw InvalidInput("amplitudes must be non-negative");
    }
    std::vector<std::future<SweepRow>> jobs;
    jobs.reserve(horizons.size());
    for (double t : horizons) {
        jobs.push_back(std::async(std::launch::async, [t, amplitudes, &shape, &settings] {
            return sweep_horizon(t, amplitudes, shape, settings);
        }));
    }
    SweepTable table;
    for (auto& j : jobs) table.rows.push_back(j.get());

    double sxy = 0.0, sxx = 0.0, sx = 0.0, sy = 0.0;
    std::size_t n = 0;
    for (const auto& row : table.rows) {
        if (!row.a_star) continue;
        const double x = row.kappa0;
        const double y = -std::log(*row.a_star);
        sxy += x * y;
        sxx += x * x;
        sx += x;
        sy += y;
        ++n;
    }
    table.fitted_rows = n;
    if (n > 0 && sxx > 0.0) {
        table.c1_hat = sxy / sxx;
        double sse = 0.0;
        for (const auto& row : table.rows) {
            if (!row.a_star) continue;
            const double e = -std::log(*row.a_star) - table.c1_hat * row.kappa0;
            sse += e * e;
        }
        table.fit_rms = std::sqrt(sse / static_cast<double>(n));
    }
    if (n >= 2) {
        const double nn = static_cast<double>(n);
        const double den = nn * sxx - sx * sx;
        if (den != 0.0) {
            table.affine_slope = (nn * sxy - sx * sy) / den;
            table.affine_intercept = (sy - table.affine_slope * sx) / nn;
        }
    }
    return table;
}

}  // namespace chemosteer
