#pragma once

/**
 * @file diagnostics.hpp
 * @brief Empirical probes: observability ratio sampling and the level-set recursion
 *        Y_{s+1} = c b^s Y_s^{1+eps}.
 */

#include <chemosteer/hum.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace chemosteer {

// ---------------------------------------------------------------------------
// Observability
// ---------------------------------------------------------------------------

/// |phi(., 0)|_2^2 / (sum_k dt sum_omega h w phi^2) for one terminal datum.
/// Returns +inf when the weighted energy vanishes.
inline double observability_ratio(std::span<const double> phi_T, const DriftField& b, const WeightTables& weights,
                                  const DomainSpec& domain, const TimeGrid& time) {
    const SpaceTimeField phi = solve_adjoint(phi_T, b, domain, time);
    const double initial = dot_omega(phi.level(0), phi.level(0), domain.h());
    const double energy = weighted_adjoint_energy(phi, weights, domain, time);
    if (energy == 0.0) return std::numeric_limits<double>::infinity();
    return initial / energy;
}

/// Ratio of the constant mode phi_T = 1 when B = 0, from the tables alone:
/// 1 / (sum_k dt sum_omega h w^k).
inline double constant_mode_ratio(const WeightTables& weights, const DomainSpec& domain, const TimeGrid& time) {
    const auto& mask = domain.mask();
    double s = 0.0;
    for (std::size_t k = 1; k <= time.n_steps(); ++k) {
        const auto w = weights.w.level(k);
        for (std::size_t i = 0; i < w.size(); ++i) s += mask[i] * w[i];
    }
    return 1.0 / (time.dt() * domain.h() * s);
}

/// Unit-norm random terminal datum; sample j of a given seed does not depend on how many
/// samples are drawn, so reports for nested sample counts share their prefix.
inline std::vector<double> random_terminal_datum(std::uint64_t seed, std::size_t sample, const DomainSpec& domain) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(sample), static_cast<std::uint32_t>(sample >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> x(domain.n_cells());
    double nrm = 0.0;
    while (nrm == 0.0) {
        for (double& v : x) v = normal(rng);
        nrm = norm_omega(x, domain.h());
    }
    for (double& v : x) v /= nrm;
    return x;
}

struct ObservabilityOptions {
    std::size_t n_samples = 64;
    std::uint64_t seed = 0;
    std::size_t refine_iters = 0;  ///< generalised power iterations started from the best sample
    double refine_epsilon = 1e-10;
};

struct ObservabilityReport {
    std::size_t samples = 0;
    std::vector<double> ratios;
    double max_ratio = 0.0;
    double median_ratio = 0.0;
    double q90_ratio = 0.0;
    double kappa = 0.0;
    double c_hat = 0.0;  ///< ln(max_ratio) / kappa
    double refined_ratio = 0.0;  ///< 0 unless refinement ran
};

namespace detail {

inline double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double t = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - t) + v[hi] * t;
}

}  // namespace detail

/// Lower bound on the sup over phi_T of the ratio via a few iterations of
/// x <- (G + eps I)^{-1} E^T E x, E: phi_T -> phi(., 0).
inline double refine_observability(std::vector<double> x, const DriftField& b, const WeightTables& weights,
                                   const DomainSpec& domain, const TimeGrid& time, std::size_t iters,
                                   double epsilon) {
    const Gramian g(b, weights, domain, time);
    double best = observability_ratio(x, b, weights, domain, time);
    for (std::size_t it = 0; it < iters; ++it) {
        const SpaceTimeField phi = solve_adjoint(x, b, domain, time);
        const std::vector<double> phi0(phi.level(0).begin(), phi.level(0).end());
        const SpaceTimeField u = solve_forward(phi0, b, domain, time);
        const auto last = u.level(time.n_steps());
        CgResult cg = conjugate_gradient(g, epsilon, last, 1e-12, 4 * domain.n_cells());
        const double nrm = norm_omega(cg.x, domain.h());
        if (!(nrm > 0.0) || !std::isfinite(nrm)) break;
        for (double& v : cg.x) v /= nrm;
        x = std::move(cg.x);
        const double r = observability_ratio(x, b, weights, domain, time);
        if (std::isfinite(r)) best = std::max(best, r);
    }
    return best;
}

inline ObservabilityReport observability_probe(const DriftField& b, const WeightTables& weights,
                                               const DomainSpec& domain, const TimeGrid& time,
                                               const ObservabilityOptions& opt) {
    if (opt.n_samples < 1) throw InvalidInput("observability probe needs at least one sample");
    ObservabilityReport rep;
    rep.samples = opt.n_samples;
    rep.kappa = kappa_constant(b.sup_norm(), time.horizon());
    std::size_t best = 0;
    for (std::size_t j = 0; j < opt.n_samples; ++j) {
        const std::vector<double> x = random_terminal_datum(opt.seed, j, domain);
        const double r = observability_ratio(x, b, weights, domain, time);
        rep.ratios.push_back(r);
        if (r > rep.ratios[best]) best = j;
    }
    rep.max_ratio = rep.ratios[best];
    rep.median_ratio = detail::quantile(rep.ratios, 0.5);
    rep.q90_ratio = detail::quantile(rep.ratios, 0.9);
    rep.c_hat = std::log(rep.max_ratio) / rep.kappa;
    if (opt.refine_iters > 0) {
        rep.refined_ratio = refine_observability(random_terminal_datum(opt.seed, best, domain), b, weights, domain,
                                                 time, opt.refine_iters, opt.refine_epsilon);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Recursion Y_{s+1} = c b^s Y_s^{1+eps}
// ---------------------------------------------------------------------------

struct RecursionSpec {
    double c = 1.0;
    double b = 1.0;
    double eps = 1.0;

    void validate() const {
        if (!(std::isfinite(c) && c > 0.0)) throw InvalidInput("recursion: c must be positive");
        if (!(std::isfinite(eps) && eps > 0.0)) throw InvalidInput("recursion: eps must be positive");
        if (!(std::isfinite(b) && b >= 1.0)) throw InvalidInput("recursion: b must be at least 1");
    }
};

/// c^{-1/eps} b^{-1/eps^2}.
inline double recursion_threshold(const RecursionSpec& spec) {
    spec.validate();
    return std::exp(-std::log(spec.c) / spec.eps - std::log(spec.b) / (spec.eps * spec.eps));
}

enum class RecursionVerdict { Decays, Diverges, Undecided };

inline std::string to_string(RecursionVerdict v) {
    switch (v) {
        case RecursionVerdict::Decays: return "decays";
        case RecursionVerdict::Diverges: return "diverges";
        case RecursionVerdict::Undecided: return "undecided";
    }
    return "undecided";
}

struct RecursionRun {
    std::vector<double> sequence;  ///< Y_0, Y_1, ...
    RecursionVerdict verdict = RecursionVerdict::Undecided;
    std::size_t steps = 0;
};

/// Equality dynamics, evaluated in log coordinates about the critical orbit
/// Y*_s = Y_thr b^{-s/eps}, which solves the recursion exactly. The log-offset
/// d_s = ln(Y_s / Y*_s) then obeys d_{s+1} = (1 + eps) d_s, so a start exactly at the
/// threshold stays on the critical orbit instead of being pushed off it by rounding.
/// "decays" once Y_s < 1e-30 Y_0 with d_s <= 0 (a positive offset only grows, so a
/// temporarily small Y above the orbit is not a decay); "diverges" past the double range.
inline RecursionRun recursion_simulate(const RecursionSpec& spec, double y0, std::size_t n_steps) {
    spec.validate();
    if (!(y0 >= 0.0) || !std::isfinite(y0)) throw InvalidInput("recursion: Y0 must be finite and non-negative");
    RecursionRun run;
    run.sequence.push_back(y0);
    if (y0 == 0.0) {
        run.sequence.resize(n_steps + 1, 0.0);
        run.steps = n_steps;
        run.verdict = RecursionVerdict::Decays;
        return run;
    }
    const double thr = recursion_threshold(spec);
    const double log_thr = std::log(thr);
    const double orbit_rate = std::log(spec.b) / spec.eps;
    const double decay_level = std::log(y0) + std::log(1e-30);
    const double overflow_level = std::log(std::numeric_limits<double>::max());
    double offset = std::log(y0 / thr);
    for (std::size_t s = 1; s <= n_steps; ++s) {
        offset *= 1.0 + spec.eps;
        const double log_y = log_thr - static_cast<double>(s) * orbit_rate + offset;
        run.steps = s;
        if (log_y > overflow_level || std::isnan(log_y)) {
            run.sequence.push_back(std::numeric_limits<double>::infinity());
            run.verdict = RecursionVerdict::Diverges;
            return run;
        }
        run.sequence.push_back(std::exp(log_y));
        if (log_y < decay_level && offset <= 0.0) {
            run.verdict = RecursionVerdict::Decays;
            return run;
        }
    }
    return run;
}

}  // namespace chemosteer
