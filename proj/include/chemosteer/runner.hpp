#pragma once

// Experiment commands behind the CLI. Each returns a RunRecord (JSON) and an exit code;
// artifacts are written into config.output.dir.

#include <chemosteer/config.hpp>
#include <chemosteer/dense_oracle.hpp>
#include <chemosteer/diagnostics.hpp>
#include <chemosteer/fixed_point.hpp>
#include <chemosteer/io.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <future>
#include <random>
#include <string>
#include <vector>

namespace chemosteer {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int selftest_failed = 1;
inline constexpr int invalid_input = 2;
inline constexpr int not_converged = 3;
}  // namespace exit_code

struct CommandResult {
    int exit_code = exit_code::ok;
    Json record;
    std::string message;
};

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

/// Finite doubles stay numbers; inf/nan become strings so nothing is lost as null.
inline Json num(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

inline Json num_array(std::span<const double> xs) {
    Json a = Json::array();
    for (double x : xs) a.push_back(num(x));
    return a;
}

inline Json to_json(const CarlemanParams& p) {
    return {{"lambda", num(p.lambda)},
            {"s", num(p.s)},
            {"delta0", num(p.delta0)},
            {"beta_sup", num(p.beta_sup)},
            {"gamma_of_lambda", num(p.gamma_of_lambda)},
            {"omega_of_lambda", num(p.omega_of_lambda)},
            {"alpha0_mid", num(p.alpha0_mid)},
            {"lambda_raised", p.lambda_raised},
            {"s_raised", p.s_raised},
            {"underflow_warning", p.underflow_warning},
            {"omega_constraint", p.omega_constraint()},
            {"s_constraint", p.s_constraint()},
            {"certified", p.certified()}};
}

inline Json to_json(const WeightChainReport& r) {
    return {{"alpha_negative", r.alpha_negative},
            {"chain_holds", r.chain_holds},
            {"worst_lower_violation", num(r.worst_lower_violation)},
            {"worst_upper_violation", num(r.worst_upper_violation)},
            {"max_alpha", num(r.max_alpha)}};
}

inline Json to_json(const HumSolution& s) {
    return {{"terminal_norm", num(s.terminal_norm)},
            {"free_terminal_norm", num(s.free_terminal_norm)},
            {"weighted_energy", num(s.weighted_energy)},
            {"control_sup", num(s.control_sup)},
            {"consistency", num(s.consistency)},
            {"cg_iters", s.cg_iters},
            {"cg_residual", num(s.cg_residual)},
            {"cg_converged", s.cg_converged},
            {"cg_residual_history", num_array(s.cg_residual_history)},
            {"cg_objective_history", num_array(s.cg_objective_history)},
            {"epsilon", num(s.epsilon)},
            {"kappa", num(s.kappa)},
            {"phi_T", num_array(s.phi_T)}};
}

inline Json to_json(const ControlBoundReport& r) {
    return {{"u0_norm", num(r.u0_norm)},
            {"kappa", num(r.kappa)},
            {"c_hat_sup", num(r.c_hat_sup)},
            {"c_hat_energy", num(r.c_hat_energy)},
            {"energy_total", num(r.energy_total)},
            {"degenerate", r.degenerate}};
}

inline Json to_json(const LinfEstimateReport& r) {
    return {{"k0", num(r.k0)},       {"rho0", num(r.rho0)},           {"u_sup", num(r.u_sup)},
            {"ratio", num(r.ratio)}, {"c_hat", num(r.c_hat)},         {"degenerate", r.degenerate},
            {"inconsistent", r.inconsistent}};
}

inline Json to_json(const PositivityReport& r) {
    return {{"max_cell_peclet", num(r.max_cell_peclet)}, {"m_matrix", r.m_matrix}};
}

inline Json to_json(const RemarkReport& r) {
    return {{"tail_times", num_array(r.tail_times)},
            {"tail_norms", num_array(r.tail_norms)},
            {"final_norm", num(r.final_norm)},
            {"max_norm", num(r.max_norm)},
            {"final_ratio", num(r.final_ratio)},
            {"elliptic_gain", num(r.elliptic_gain)},
            {"final_state_norm", num(r.final_state_norm)},
            {"final_bound_holds", r.final_bound_holds}};
}

// ---------------------------------------------------------------------------
// Inputs
// ---------------------------------------------------------------------------

/// cosine: a(1 + cos(pi x))/2, bump: a exp(-100 (x - x0)^2), both at cell centres.
inline std::vector<double> shape_values(const std::string& shape, const DomainSpec& domain, double amplitude) {
    std::vector<double> u(domain.n_cells());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double x = domain.center(i);
        if (shape == "cosine") {
            u[i] = amplitude * 0.5 * (1.0 + std::cos(M_PI * x));
        } else if (shape == "bump") {
            u[i] = amplitude * std::exp(-100.0 * (x - domain.x0()) * (x - domain.x0()));
        } else {
            throw InvalidInput("unknown initial data shape " + shape);
        }
    }
    return u;
}

/// File data is multiplied by the amplitude, so amplitude 0 still means zero data.
inline std::vector<double> make_initial_data(const RunConfig& cfg, const DomainSpec& domain) {
    const auto& id = cfg.initial_data;
    if (id.shape == "file") {
        std::vector<double> u = read_cell_values(id.file_path, domain.n_cells());
        for (double& x : u) {
            if (!std::isfinite(x)) throw InvalidInput("initial data file contains a non-finite value");
            x *= id.amplitude;
        }
        return u;
    }
    return shape_values(id.shape, domain, id.amplitude);
}

inline InitialShape make_shape(const RunConfig& cfg) {
    if (cfg.initial_data.shape == "file") {
        const std::string path = cfg.initial_data.file_path;
        return [path](const DomainSpec& d, double a) {
            std::vector<double> u = read_cell_values(path, d.n_cells());
            for (double& x : u) x *= a;
            return u;
        };
    }
    const std::string shape = cfg.initial_data.shape;
    return [shape](const DomainSpec& d, double a) { return shape_values(shape, d, a); };
}

struct DriftSetup {
    DriftField drift;
    std::optional<SpaceTimeField> v;  ///< set when the drift comes from a non-zero guess
};

/// Drift for the linear commands from the configured guess xi (zero or u0 held constant).
inline DriftSetup drift_for_guess(std::span<const double> u0, const RunConfig& cfg, const DomainSpec& domain,
                                  const TimeGrid& time) {
    DriftSetup out{DriftField::zero(domain, time), std::nullopt};
    if (cfg.fixed_point.initial_guess == InitialGuess::Zero) return out;
    const SpaceTimeField xi = initial_state_guess(u0, cfg.fixed_point.initial_guess, time);
    out.v = solve_elliptic_levels(xi, cfg.physics, domain);
    out.drift = drift_from_levels(*out.v, cfg.physics.chi, domain);
    return out;
}

/// Exact-zero structure of a control: support outside omega and on flushed weights.
struct ControlStructure {
    std::size_t nonzero_outside_omega = 0;
    std::size_t nonzero_on_zero_weight = 0;
    bool first_level_zero = true;  ///< level 1, the first control level
    bool last_level_zero = true;   ///< level M
    bool level0_zero = true;
};

inline ControlStructure control_structure(const SpaceTimeField& f, const WeightTables& weights,
                                          const DomainSpec& domain, const TimeGrid& time) {
    ControlStructure r;
    const std::size_t m = time.n_steps();
    for (std::size_t k = 0; k <= m; ++k) {
        for (std::size_t i = 0; i < domain.n_cells(); ++i) {
            const double v = f(k, i);
            if (v == 0.0) continue;
            if (!domain.in_omega(i)) ++r.nonzero_outside_omega;
            if (k == 0 || weights.w(k, i) == 0.0) ++r.nonzero_on_zero_weight;
            if (k == 0) r.level0_zero = false;
            if (k == 1) r.first_level_zero = false;
            if (k == m) r.last_level_zero = false;
        }
    }
    return r;
}

inline Json to_json(const ControlStructure& c) {
    return {{"nonzero_outside_omega", c.nonzero_outside_omega},
            {"nonzero_on_zero_weight", c.nonzero_on_zero_weight},
            {"first_level_zero", c.first_level_zero},
            {"last_level_zero", c.last_level_zero},
            {"level0_zero", c.level0_zero}};
}

// ---------------------------------------------------------------------------
// Linear core
// ---------------------------------------------------------------------------

struct LinearRun {
    DomainSpec domain;
    TimeGrid time;
    std::vector<double> u0;
    DriftSetup drift;
    CarlemanParams params;
    WeightTables weights;
    HumSolution solution;
};

inline LinearRun linear_core(const RunConfig& cfg) {
    cfg.validate();
    const DomainSpec domain = cfg.make_domain();
    const TimeGrid time = cfg.make_time();
    const BetaFunction beta(domain);
    std::vector<double> u0 = make_initial_data(cfg, domain);
    DriftSetup drift = drift_for_guess(u0, cfg, domain, time);
    const CarlemanParams params = select_params(drift.drift.sup_norm(), time.horizon(), cfg.carleman.delta0,
                                                cfg.carleman.lambda_scale, cfg.carleman.s_scale, beta.sup_norm());
    WeightTables weights = build_weights(params, beta, domain, time);
    HumSolution sol = solve_penalized(u0, drift.drift, weights, domain, time, cfg.hum);
    return LinearRun{domain, time, std::move(u0), std::move(drift), params, std::move(weights), std::move(sol)};
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline bool wants(const RunConfig& cfg, const std::string& format) {
    return std::find(cfg.output.formats.begin(), cfg.output.formats.end(), format) != cfg.output.formats.end();
}

inline Json record_header(const std::string& command, const RunConfig& cfg) {
    return {{"command", command}, {"config", to_json(cfg)}, {"config_hash", config_hash(cfg)}};
}

inline void finish(CommandResult& res, const RunConfig& cfg, Clock::time_point t0) {
    res.record["exit_code"] = res.exit_code;
    res.record["timings"]["total_seconds"] = seconds_since(t0);
    write_json(std::filesystem::path(cfg.output.dir) / "report.json", res.record);
}

}  // namespace detail

inline CommandResult cmd_linear(const RunConfig& cfg) {
    const auto t0 = detail::Clock::now();
    CommandResult res;
    res.record = detail::record_header("linear", cfg);
    const LinearRun run = linear_core(cfg);
    const double solve_time = detail::seconds_since(t0);
    const HumSolution& sol = run.solution;
    Json& rep = res.record["reports"];
    rep["carleman"] = to_json(run.params);
    rep["weight_chain"] = to_json(weight_chain_report(run.weights, run.params, run.time));
    rep["weights_flushed"] = run.weights.flushed;
    rep["solver"] = to_json(sol);
    rep["control_bound"] = to_json(control_bound_report(sol, run.u0, run.domain));
    rep["control_structure"] = to_json(control_structure(sol.f, run.weights, run.domain, run.time));
    rep["linf_estimate"] = to_json(linf_estimate_report(sol.u, run.u0, &sol.f, run.drift.drift, run.domain, run.time));
    rep["positivity"] = to_json(positivity_report(run.drift.drift, run.domain));
    rep["drift_sup"] = num(run.drift.drift.sup_norm());
    rep["u0_norm"] = num(norm_omega(run.u0, run.domain.h()));
    res.record["timings"]["solve_seconds"] = solve_time;

    const std::filesystem::path dir(cfg.output.dir);
    if (detail::wants(cfg, "csv")) {
        write_field_csv(dir / "u.csv", sol.u, run.domain, run.time);
        write_field_csv(dir / "f.csv", sol.f, run.domain, run.time);
        if (run.drift.v) write_field_csv(dir / "v.csv", *run.drift.v, run.domain, run.time);
        write_weights_csv(dir / "weights.csv", run.weights, run.domain, run.time);
    }
    if (!sol.cg_converged) {
        res.exit_code = exit_code::not_converged;
        res.message = "conjugate gradient did not reach the requested tolerance";
    }
    detail::finish(res, cfg, t0);
    return res;
}

/// Linear solve for every epsilon in sweep.epsilons, run concurrently, collated in input order.
inline CommandResult cmd_sweep_eps(const RunConfig& cfg) {
    const auto t0 = detail::Clock::now();
    cfg.validate();
    if (cfg.sweep.epsilons.empty()) throw InvalidInput("sweep.epsilons is empty");
    CommandResult res;
    res.record = detail::record_header("sweep-eps", cfg);
    std::vector<std::future<LinearRun>> jobs;
    for (double e : cfg.sweep.epsilons) {
        RunConfig c = cfg;
        c.hum.epsilon = e;
        jobs.push_back(std::async(std::launch::async, [c] { return linear_core(c); }));
    }
    Json rows = Json::array();
    std::vector<std::vector<std::string>> csv;
    std::vector<double> norms;
    bool all_converged = true;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        const LinearRun run = jobs[j].get();
        const HumSolution& s = run.solution;
        norms.push_back(s.terminal_norm);
        all_converged = all_converged && s.cg_converged;
        rows.push_back({{"epsilon", num(s.epsilon)},
                        {"terminal_norm", num(s.terminal_norm)},
                        {"control_sup", num(s.control_sup)},
                        {"weighted_energy", num(s.weighted_energy)},
                        {"cg_iters", s.cg_iters},
                        {"cg_converged", s.cg_converged}});
        csv.push_back({fmt(s.epsilon), fmt(s.terminal_norm), fmt(s.control_sup), std::to_string(s.cg_iters),
                       s.cg_converged ? "1" : "0"});
    }
    // Ordered by decreasing epsilon, the terminal norm must drop strictly.
    std::vector<std::size_t> order(norms.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return cfg.sweep.epsilons[a] > cfg.sweep.epsilons[b]; });
    bool strictly = true;
    for (std::size_t i = 1; i < order.size(); ++i) strictly = strictly && norms[order[i]] < norms[order[i - 1]];
    res.record["reports"]["rows"] = rows;
    res.record["reports"]["strictly_decreasing"] = strictly;
    if (detail::wants(cfg, "csv")) {
        write_table_csv(std::filesystem::path(cfg.output.dir) / "sweep_eps.csv",
                        {"epsilon", "terminal_norm", "control_sup", "cg_iters", "cg_converged"}, csv);
    }
    if (!all_converged) {
        res.exit_code = exit_code::not_converged;
        res.message = "conjugate gradient did not converge for every epsilon";
    }
    detail::finish(res, cfg, t0);
    return res;
}

inline Json nonlinear_reports(const NonlinearResult& r, std::span<const double> u0, const RunConfig& cfg,
                              const DomainSpec& domain, const TimeGrid& time) {
    Json rep;
    rep["converged"] = r.converged;
    rep["iterations"] = r.iterations;
    rep["in_K"] = r.in_K;
    rep["all_iterates_in_K"] = r.all_iterates_in_K;
    Json hist = Json::array();
    for (const auto& h : r.history) {
        hist.push_back({{"increment", num(h.increment)},
                        {"u_sup", num(h.u_sup)},
                        {"terminal_norm", num(h.terminal_norm)},
                        {"drift_sup", num(h.drift_sup)},
                        {"lambda", num(h.lambda)},
                        {"s", num(h.s)},
                        {"cg_iters", h.cg_iters},
                        {"cg_converged", h.cg_converged}});
    }
    rep["history"] = hist;
    const double u0_norm = norm_omega(u0, domain.h());
    rep["u0_norm"] = num(u0_norm);
    rep["verification"] = {{"terminal_norm", num(r.verification.terminal_norm)},
                           {"terminal_ratio", num(u0_norm > 0.0 ? r.verification.terminal_norm / u0_norm : 0.0)},
                           {"max_inner_sweeps", r.verification.max_inner_sweeps},
                           {"max_inner_change", num(r.verification.max_inner_change)}};
    rep["elliptic_residual"] = num(r.elliptic_residual);
    rep["remark"] = to_json(remark_check(r, cfg.physics, domain, time));
    rep["solver"] = r.last_linear ? to_json(*r.last_linear) : Json(nullptr);
    if (r.params) rep["carleman"] = to_json(*r.params);
    rep["drift_sup"] = num(r.drift.sup_norm());
    return rep;
}

inline CommandResult cmd_nonlinear(const RunConfig& cfg) {
    const auto t0 = detail::Clock::now();
    cfg.validate();
    CommandResult res;
    res.record = detail::record_header("nonlinear", cfg);
    const DomainSpec domain = cfg.make_domain();
    const TimeGrid time = cfg.make_time();
    const BetaFunction beta(domain);
    const std::vector<double> u0 = make_initial_data(cfg, domain);
    const NonlinearResult r = run_nonlinear(u0, cfg.physics, domain, time, beta, cfg.carleman, cfg.hum, cfg.fixed_point);
    res.record["timings"]["solve_seconds"] = detail::seconds_since(t0);
    res.record["reports"] = nonlinear_reports(r, u0, cfg, domain, time);

    const std::filesystem::path dir(cfg.output.dir);
    if (detail::wants(cfg, "csv")) {
        write_field_csv(dir / "u.csv", r.u, domain, time);
        write_field_csv(dir / "f.csv", r.f, domain, time);
        write_field_csv(dir / "v.csv", r.v, domain, time);
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < r.history.size(); ++i) {
            const auto& h = r.history[i];
            rows.push_back({std::to_string(i + 1), fmt(h.increment), fmt(h.u_sup), fmt(h.terminal_norm),
                            fmt(h.drift_sup), fmt(h.lambda), fmt(h.s), std::to_string(h.cg_iters),
                            h.cg_converged ? "1" : "0"});
        }
        write_table_csv(dir / "history.csv",
                        {"iteration", "increment", "u_sup", "terminal_norm", "drift_sup", "lambda", "s", "cg_iters",
                         "cg_converged"},
                        rows);
    }
    if (!r.converged) {
        res.exit_code = exit_code::not_converged;
        res.message = "fixed-point iteration stopped at the iteration cap without converging";
    }
    detail::finish(res, cfg, t0);
    return res;
}

inline Json to_json(const ObservabilityReport& r) {
    return {{"samples", r.samples},
            {"ratios", num_array(r.ratios)},
            {"max_ratio", num(r.max_ratio)},
            {"median_ratio", num(r.median_ratio)},
            {"q90_ratio", num(r.q90_ratio)},
            {"kappa", num(r.kappa)},
            {"c_hat", num(r.c_hat)},
            {"refined_ratio", num(r.refined_ratio)}};
}

inline CommandResult cmd_observability(const RunConfig& cfg) {
    const auto t0 = detail::Clock::now();
    cfg.validate();
    if (cfg.observability.n_samples < 1) throw InvalidInput("observability needs at least one sample");
    CommandResult res;
    res.record = detail::record_header("observability", cfg);
    const DomainSpec domain = cfg.make_domain();
    const BetaFunction beta(domain);
    const std::vector<double> u0 = make_initial_data(cfg, domain);
    const ObservabilityOptions opt{cfg.observability.n_samples, cfg.seed, cfg.observability.refine_iters, 1e-10};

    auto probe_at = [&](double horizon) {
        const TimeGrid time(horizon, cfg.time.n_steps);
        const DriftSetup drift = drift_for_guess(u0, cfg, domain, time);
        const CarlemanParams p = select_params(drift.drift.sup_norm(), horizon, cfg.carleman.delta0,
                                               cfg.carleman.lambda_scale, cfg.carleman.s_scale, beta.sup_norm());
        const WeightTables w = build_weights(p, beta, domain, time);
        ObservabilityReport rep = observability_probe(drift.drift, w, domain, time, opt);
        // The adjoint of the conservative scheme keeps constants, so phi_T = 1 has a closed form.
        const std::vector<double> ones(domain.n_cells(), 1.0);
        const double numeric = observability_ratio(ones, drift.drift, w, domain, time);
        const double closed = constant_mode_ratio(w, domain, time);
        Json cm = {{"numeric", num(numeric)},
                   {"closed_form", num(closed)},
                   {"relative_difference", num(std::abs(numeric - closed) / std::abs(closed))}};
        return std::make_pair(std::move(rep), std::move(cm));
    };

    const auto [rep, constant_mode] = probe_at(cfg.time.T);
    res.record["reports"]["probe"] = to_json(rep);
    res.record["reports"]["constant_mode"] = constant_mode;

    std::vector<std::future<std::pair<ObservabilityReport, Json>>> jobs;
    for (double T : cfg.observability.T_list) jobs.push_back(std::async(std::launch::async, probe_at, T));
    Json t_rows = Json::array();
    std::vector<std::vector<std::string>> t_csv;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        const auto [r, cm] = jobs[j].get();
        const double T = cfg.observability.T_list[j];
        t_rows.push_back({{"T", num(T)},
                          {"kappa", num(r.kappa)},
                          {"max_ratio", num(r.max_ratio)},
                          {"c_hat", num(r.c_hat)},
                          {"constant_mode", cm}});
        t_csv.push_back({fmt(T), fmt(r.kappa), fmt(r.max_ratio), fmt(r.c_hat)});
    }
    res.record["reports"]["T_sweep"] = t_rows;

    const std::filesystem::path dir(cfg.output.dir);
    if (detail::wants(cfg, "csv")) {
        std::vector<std::vector<std::string>> rows;
        for (std::size_t j = 0; j < rep.ratios.size(); ++j) rows.push_back({std::to_string(j), fmt(rep.ratios[j])});
        write_table_csv(dir / "observability.csv", {"sample", "ratio"}, rows);
        if (!t_csv.empty()) write_table_csv(dir / "observability_T.csv", {"T", "kappa", "max_ratio", "c_hat"}, t_csv);
    }
    detail::finish(res, cfg, t0);
    return res;
}

inline SweepSettings sweep_settings(const RunConfig& cfg) {
    SweepSettings s;
    s.n_cells = cfg.domain.n_cells;
    s.n_steps = cfg.time.n_steps;
    s.omega = Interval{cfg.domain.omega_a, cfg.domain.omega_b};
    s.x0 = cfg.domain.x0;
    s.physics = cfg.physics;
    s.carleman = cfg.carleman;
    s.hum = cfg.hum;
    s.hum.epsilon = cfg.sweep.hum_epsilon;
    s.fixed_point = cfg.fixed_point;
    s.terminal_threshold = cfg.sweep.terminal_threshold;
    return s;
}

inline Json to_json(const SweepTable& t) {
    Json rows = Json::array();
    for (const auto& r : t.rows) {
        Json cells = Json::array();
        for (const auto& c : r.cells) {
            cells.push_back({{"amplitude", num(c.amplitude)},
                             {"evaluated", c.evaluated},
                             {"converged", c.converged},
                             {"in_K", c.in_K},
                             {"terminal_ratio", num(c.terminal_ratio)},
                             {"success", c.success}});
        }
        rows.push_back({{"T", num(r.horizon)},
                        {"kappa0", num(r.kappa0)},
                        {"a_star", r.a_star ? num(*r.a_star) : Json(nullptr)},
                        {"cells", cells}});
    }
    return {{"rows", rows},
            {"c1_hat", num(t.c1_hat)},
            {"fit_rms", num(t.fit_rms)},
            {"affine_slope", num(t.affine_slope)},
            {"affine_intercept", num(t.affine_intercept)},
            {"fitted_rows", t.fitted_rows}};
}

inline CommandResult cmd_sweep_T(const RunConfig& cfg) {
    const auto t0 = detail::Clock::now();
    cfg.validate();
    if (cfg.sweep.T_list.empty()) throw InvalidInput("sweep.T_list is empty");
    if (cfg.sweep.amplitudes.empty()) throw InvalidInput("sweep.amplitudes is empty");
    CommandResult res;
    res.record = detail::record_header("sweep-T", cfg);
    const SweepTable table = threshold_sweep(cfg.sweep.T_list, cfg.sweep.amplitudes, make_shape(cfg), sweep_settings(cfg));
    res.record["reports"] = to_json(table);
    if (detail::wants(cfg, "csv")) {
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : table.rows) {
            for (const auto& c : r.cells) {
                rows.push_back({fmt(r.horizon), fmt(c.amplitude), c.evaluated ? "1" : "0", c.converged ? "1" : "0",
                                c.in_K ? "1" : "0", fmt(c.terminal_ratio), c.success ? "1" : "0"});
            }
        }
        write_table_csv(std::filesystem::path(cfg.output.dir) / "sweep_T.csv",
                        {"T", "amplitude", "evaluated", "converged", "in_K", "terminal_ratio", "success"}, rows);
    }
    detail::finish(res, cfg, t0);
    return res;
}

// ---------------------------------------------------------------------------
// Dense oracle
// ---------------------------------------------------------------------------

inline constexpr std::size_t oracle_max_size = 16;

/// Interior face values uniform in [-amplitude, amplitude], independent per level.
inline DriftField random_drift(std::uint64_t seed, std::uint64_t stream, double amplitude, const DomainSpec& domain,
                               const TimeGrid& time) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), 0x0b5e55edU};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    DriftField b(time.n_levels(), domain.n_cells());
    for (std::size_t k = 0; k < time.n_levels(); ++k) {
        for (std::size_t j = 1; j + 1 < domain.n_faces(); ++j) b.set_interior(k, j, amplitude * u(rng));
    }
    return b;
}

struct OracleComparison {
    std::vector<double> phi_cg;
    std::vector<double> phi_dense;
    double relative_deviation = 0.0;
    bool cg_converged = false;
};

inline OracleComparison oracle_compare(std::span<const double> u0, const DriftField& b, const WeightTables& w,
                                       const DomainSpec& domain, const TimeGrid& time, const HumConfig& hum) {
    OracleComparison out;
    const HumSolution sol = solve_penalized(u0, b, w, domain, time, hum);
    out.phi_cg = sol.phi_T;
    out.cg_converged = sol.cg_converged;
    out.phi_dense = dense_penalized_terminal(u0, b, w, domain, time, hum.epsilon);
    std::vector<double> diff(out.phi_cg.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = out.phi_cg[i] - out.phi_dense[i];
    const double d = norm_omega(diff, domain.h());
    const double ref = norm_omega(out.phi_dense, domain.h());
    out.relative_deviation = ref > 0.0 ? d / ref : d;
    return out;
}

inline CommandResult cmd_oracle_check(const RunConfig& cfg) {
    const auto t0 = detail::Clock::now();
    cfg.validate();
    if (cfg.domain.n_cells > oracle_max_size || cfg.time.n_steps > oracle_max_size) {
        throw InvalidInput("oracle-check needs n_cells <= 16 and n_steps <= 16");
    }
    CommandResult res;
    res.record = detail::record_header("oracle-check", cfg);
    const DomainSpec domain = cfg.make_domain();
    const TimeGrid time = cfg.make_time();
    const BetaFunction beta(domain);
    const std::vector<double> u0 = make_initial_data(cfg, domain);
    const DriftField b = random_drift(cfg.seed, 0, cfg.oracle.drift_amplitude, domain, time);
    const CarlemanParams p = select_params(b.sup_norm(), time.horizon(), cfg.carleman.delta0, cfg.carleman.lambda_scale,
                                           cfg.carleman.s_scale, beta.sup_norm());
    const WeightTables w = build_weights(p, beta, domain, time);
    const OracleComparison cmp = oracle_compare(u0, b, w, domain, time, cfg.hum);
    constexpr double tolerance = 1e-8;
    res.record["reports"] = {{"relative_deviation", num(cmp.relative_deviation)},
                             {"tolerance", tolerance},
                             {"pass", cmp.relative_deviation <= tolerance},
                             {"cg_converged", cmp.cg_converged},
                             {"drift_sup", num(b.sup_norm())},
                             {"phi_cg", num_array(cmp.phi_cg)},
                             {"phi_dense", num_array(cmp.phi_dense)}};
    if (!(cmp.relative_deviation <= tolerance) || !cmp.cg_converged) {
        res.exit_code = exit_code::not_converged;
        res.message = "CG and dense paths disagree beyond tolerance";
    }
    detail::finish(res, cfg, t0);
    return res;
}

}  // namespace chemosteer
