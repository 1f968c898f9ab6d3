#pragma once

// Built-in invariant suite run by `chemosteer selftest`. Small fixed sizes, seeded inputs.

#include <chemosteer/runner.hpp>

#include <iomanip>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace chemosteer {

struct SelftestOptions {
    bool corrupt_adjoint = false;  ///< fault injection: perturb the adjoint before duality checks
};

struct CheckResult {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double tolerance = 0.0;
};

namespace detail {

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    std::vector<double> x(n);
    for (double& v : x) v = g(rng);
    return x;
}

inline SpaceTimeField random_field(std::mt19937_64& rng, std::size_t levels, std::size_t n) {
    SpaceTimeField f(levels, n);
    std::normal_distribution<double> g(0.0, 1.0);
    for (double& v : f.data()) v = g(rng);
    return f;
}

inline CheckResult at_most(std::string name, double measured, double tol) {
    return {std::move(name), measured <= tol, measured, tol};
}

inline double rel(double a, double b) {
    const double s = std::max(std::abs(a), std::abs(b));
    return s > 0.0 ? std::abs(a - b) / s : 0.0;
}

/// Space error of the elliptic solve for v = cos(pi x) at N, sup norm.
inline double elliptic_mms_error(std::size_t n) {
    const DomainSpec d(n, Interval{0.3, 0.7}, 0.5);
    const PhysicsParams p{1.0, 1.0, 1.0};
    std::vector<double> eta(n), exact(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = d.center(i);
        exact[i] = std::cos(M_PI * x);
        eta[i] = (M_PI * M_PI + 1.0) * exact[i];
    }
    const std::vector<double> v = solve_elliptic(eta, p, d);
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) e = std::max(e, std::abs(v[i] - exact[i]));
    return e;
}

}  // namespace detail

inline std::vector<CheckResult> run_selftest(const SelftestOptions& opt = {}) {
    using namespace detail;
    std::vector<CheckResult> out;
    std::mt19937_64 rng(20240611ULL);

    const DomainSpec domain(24, Interval{0.3, 0.7}, 0.5);
    const TimeGrid time(1.0, 24);
    const double h = domain.h();
    const double dt = time.dt();
    const std::size_t n = domain.n_cells();
    const std::size_t m = time.n_steps();

    // Geometry and beta.
    {
        const BetaFunction beta(domain);
        const auto v = beta.validation();
        out.push_back({"beta_validation", v.ok, v.min_abs_derivative_outside_omega, 0.0});
        const DomainSpec d100(100, Interval{0.3, 0.7}, 0.5);
        out.push_back(at_most("omega_mask_count", std::abs(double(d100.omega_cell_count()) - 40.0), 0.0));
    }

    // Elliptic solver.
    {
        const PhysicsParams p{1.0, 2.0, 3.0};
        const std::vector<double> eta(n, 1.0);
        const std::vector<double> v = solve_elliptic(eta, p, domain);
        double e = 0.0;
        for (double x : v) e = std::max(e, std::abs(x - 1.5));
        out.push_back(at_most("elliptic_constant_solution", e, 1e-12));
        const double ratio = elliptic_mms_error(32) / elliptic_mms_error(64);
        out.push_back({"elliptic_mms_ratio", ratio >= 3.5 && ratio <= 4.5, ratio, 4.0});
        const std::vector<double> faces = drift_from_v(v, 1.0, domain);
        out.push_back(at_most("drift_boundary_zero", std::abs(faces.front()) + std::abs(faces.back()), 0.0));
    }

    // Random drift shared below.
    const DriftField b = random_drift(7, 1, 2.0, domain, time);

    // Forward solver: mass conservation.
    {
        std::vector<double> u0 = random_vector(rng, n);
        for (double& x : u0) x = std::abs(x) + 0.1;
        const SpaceTimeField u = solve_forward(u0, b, domain, time);
        const double m0 = mass(u.level(0), h);
        double drift = 0.0;
        for (std::size_t k = 0; k <= m; ++k) drift = std::max(drift, std::abs(mass(u.level(k), h) - m0) / m0);
        out.push_back(at_most("mass_conservation", drift, 1e-12));
    }

    // Duality, with an optional fault injected into the adjoint.
    {
        double worst_control = 0.0;
        double worst_initial = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            const std::vector<double> u0 = random_vector(rng, n);
            const SpaceTimeField f = random_field(rng, time.n_levels(), n);
            const std::vector<double> phiT = random_vector(rng, n);
            const SpaceTimeField u = solve_forward(u0, b, f, domain, time);
            SpaceTimeField phi = solve_adjoint(phiT, b, domain, time);
            if (opt.corrupt_adjoint) {
                for (double& x : phi.data()) x *= 1.0 + 1e-3;
            }
            const double lhs = dot_omega(u.level(m), phiT, h);
            double rhs = dot_omega(u0, phi.level(0), h);
            const auto& mask = domain.mask();
            double ctrl = 0.0;
            for (std::size_t k = 1; k <= m; ++k) {
                const auto p = adjoint_for_control_level(phi, k);
                for (std::size_t i = 0; i < n; ++i) ctrl += mask[i] * f(k, i) * p[i];
            }
            rhs += dt * h * ctrl;
            const double scale = std::abs(lhs) + std::abs(dot_omega(u0, phi.level(0), h)) + std::abs(dt * h * ctrl);
            worst_control = std::max(worst_control, std::abs(lhs - rhs) / scale);

            const SpaceTimeField u_free = solve_forward(u0, b, domain, time);
            const double l2 = dot_omega(u_free.level(m), phiT, h);
            const double r2 = dot_omega(u0, phi.level(0), h);
            worst_initial = std::max(worst_initial, rel(l2, r2));
        }
        out.push_back(at_most("duality_with_control", worst_control, 1e-12));
        out.push_back(at_most("duality_initial_data", worst_initial, 1e-12));
    }

    // Adjoint preserves constants.
    {
        const std::vector<double> ones(n, 1.0);
        const SpaceTimeField phi = solve_adjoint(ones, b, domain, time);
        double e = 0.0;
        for (double x : phi.data()) e = std::max(e, std::abs(x - 1.0));
        out.push_back(at_most("adjoint_constants", e, 1e-12));
    }

    // Parabolic manufactured solution: cosine mode decays like the implicit Euler factor.
    {
        auto err = [](std::size_t nc) {
            const DomainSpec d(nc, Interval{0.3, 0.7}, 0.5);
            const std::size_t mm = nc * nc / 8;
            const TimeGrid t(0.05, mm);
            std::vector<double> u0(nc);
            for (std::size_t i = 0; i < nc; ++i) u0[i] = std::cos(M_PI * d.center(i));
            const SpaceTimeField u = solve_forward(u0, DriftField::zero(d, t), d, t);
            double e = 0.0;
            const double decay = std::exp(-M_PI * M_PI * 0.05);
            for (std::size_t i = 0; i < nc; ++i) e = std::max(e, std::abs(u(mm, i) - decay * u0[i]));
            return e;
        };
        const double ratio = err(16) / err(32);
        out.push_back({"parabolic_mms_ratio", ratio >= 3.5 && ratio <= 4.5, ratio, 4.0});
    }

    // Carleman parameters, weights, Gramian, CG, dense oracle.
    const BetaFunction beta(domain);
    const CarlemanConfig cc;
    const CarlemanParams params =
        select_params(b.sup_norm(), time.horizon(), cc.delta0, cc.lambda_scale, cc.s_scale, beta.sup_norm());
    const WeightTables weights = build_weights(params, beta, domain, time);
    {
        out.push_back({"carleman_constraints", params.certified(), params.omega_of_lambda, params.delta0 - 1.0});
        const WeightChainReport chain = weight_chain_report(weights, params, time);
        out.push_back({"weight_chain", chain.alpha_negative && chain.chain_holds,
                       std::max(chain.worst_lower_violation, chain.worst_upper_violation), 1e-12});
    }
    const Gramian g(b, weights, domain, time);
    {
        double sym = 0.0;
        double quad = 0.0;
        for (int trial = 0; trial < 5; ++trial) {
            const std::vector<double> x = random_vector(rng, n);
            const std::vector<double> y = random_vector(rng, n);
            const std::vector<double> gx = g.apply(x);
            const std::vector<double> gy = g.apply(y);
            const double a = dot_omega(gx, y, h);
            const double c = dot_omega(x, gy, h);
            const double scale = norm_omega(gx, h) * norm_omega(y, h) + norm_omega(x, h) * norm_omega(gy, h);
            sym = std::max(sym, scale > 0.0 ? std::abs(a - c) / scale : 0.0);
            const SpaceTimeField phi = solve_adjoint(x, b, domain, time);
            quad = std::max(quad, rel(dot_omega(gx, x, h), weighted_adjoint_energy(phi, weights, domain, time)));
        }
        out.push_back(at_most("gramian_symmetry", sym, 1e-10));
        out.push_back(at_most("gramian_quadratic_form", quad, 1e-10));
    }
    {
        const DomainSpec d8(8, Interval{0.3, 0.7}, 0.5);
        const TimeGrid t8(1.0, 8);
        const BetaFunction beta8(d8);
        const DriftField b8 = random_drift(11, 2, 1.0, d8, t8);
        const CarlemanParams p8 =
            select_params(b8.sup_norm(), 1.0, cc.delta0, cc.lambda_scale, cc.s_scale, beta8.sup_norm());
        const WeightTables w8 = build_weights(p8, beta8, d8, t8);
        const std::vector<double> u0 = shape_values("cosine", d8, 1e-2);
        HumConfig hc;
        hc.epsilon = 1e-4;
        hc.cg_tol = 1e-14;
        const OracleComparison cmp = oracle_compare(u0, b8, w8, d8, t8, hc);
        out.push_back(at_most("dense_oracle", cmp.relative_deviation, 1e-8));
    }
    {
        const std::vector<double> u0 = shape_values("cosine", domain, 1e-2);
        HumConfig hc;
        hc.epsilon = 1e-4;
        const HumSolution sol = solve_penalized(u0, b, weights, domain, time, hc);
        double bound = 0.0;
        // u(T) + eps phi_T equals the CG residual, bounded by tol |u_free(T)|.
        bound = 10.0 * hc.cg_tol * sol.free_terminal_norm;
        out.push_back(at_most("hum_consistency", sol.consistency, bound));
        const ControlStructure cs = control_structure(sol.f, weights, domain, time);
        out.push_back(at_most("control_support", double(cs.nonzero_outside_omega + cs.nonzero_on_zero_weight), 0.0));
    }

    // Recursion lemma.
    {
        const RecursionSpec s1{1.0, 1.0, 1.0};
        const RecursionSpec s2{2.0, 1.0, 1.0};
        const RecursionSpec s3{1.0, 2.0, 1.0};
        const double e = std::abs(recursion_threshold(s1) - 1.0) + std::abs(recursion_threshold(s2) - 0.5) +
                         std::abs(recursion_threshold(s3) - 0.5);
        out.push_back(at_most("recursion_thresholds", e, 1e-15));
        const RecursionRun r1 = recursion_simulate(RecursionSpec{2.0, 1.0, 1.0}, 0.4, 2);
        const RecursionRun r2 = recursion_simulate(RecursionSpec{1.0, 2.0, 1.0}, 0.9, 2000);
        const double d = rel(r1.sequence[1], 0.32) + rel(r1.sequence[2], 0.2048) + rel(r2.sequence[1], 0.81) +
                         rel(r2.sequence[2], 1.3122);
        const bool ok = d <= 1e-14 && r2.verdict == RecursionVerdict::Diverges;
        out.push_back({"recursion_hand_rows", ok, d, 1e-14});
    }

    // Observability constant mode.
    {
        const std::vector<double> ones(n, 1.0);
        const double numeric = observability_ratio(ones, b, weights, domain, time);
        const double closed = constant_mode_ratio(weights, domain, time);
        out.push_back(at_most("observability_constant_mode", rel(numeric, closed), 1e-10));
    }
    return out;
}

/// Prints the table and returns 0 iff every check passed, 1 otherwise.
inline int cmd_selftest(std::ostream& os, const SelftestOptions& opt = {}) {
    const std::vector<CheckResult> checks = run_selftest(opt);
    std::size_t failed = 0;
    os << std::left << std::setw(30) << "check" << std::setw(8) << "status" << std::setw(26) << "measured"
       << "tolerance\n";
    for (const auto& c : checks) {
        if (!c.pass) ++failed;
        os << std::left << std::setw(30) << c.name << std::setw(8) << (c.pass ? "PASS" : "FAIL") << std::setw(26)
           << fmt(c.measured) << fmt(c.tolerance) << '\n';
    }
    os << checks.size() - failed << "/" << checks.size() << " checks passed\n";
    return failed == 0 ? exit_code::ok : exit_code::selftest_failed;
}

}  // namespace chemosteer
