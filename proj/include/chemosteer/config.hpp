#pragma once

// Run configuration: JSON load/validate, dot-path overrides, canonical hashing.

#include <chemosteer/carleman.hpp>
#include <chemosteer/elliptic.hpp>
#include <chemosteer/fixed_point.hpp>
#include <chemosteer/grid.hpp>
#include <chemosteer/hum.hpp>

#include <json.hpp>
#include <openssl/evp.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace chemosteer {

using Json = nlohmann::json;

struct DomainConfig {
    std::size_t n_cells = 100;
    double omega_a = 0.3;
    double omega_b = 0.7;
    double x0 = 0.5;
};

struct TimeConfig {
    double T = 1.0;
    std::size_t n_steps = 200;
};

struct InitialDataConfig {
    std::string shape = "cosine";  // cosine | bump | file
    double amplitude = 1e-3;
    std::string file_path;
};

struct OutputConfig {
    std::string dir = "chemosteer_out";
    std::vector<std::string> formats{"csv", "json"};
};

struct SweepConfig {
    std::vector<double> epsilons{1e-2, 1e-4, 1e-6};
    std::vector<double> T_list{0.25, 1.0, 4.0};
    std::vector<double> amplitudes{1e-4, 1e-3, 1e-2, 1e-1, 0.3, 1.0, 3.0, 10.0};
    double terminal_threshold = 1e-2;
    double hum_epsilon = 1e-8;  // short horizons need a tighter penalty than hum.epsilon to pass the threshold
};

struct ObservabilityConfig {
    std::size_t n_samples = 64;
    std::size_t refine_iters = 0;
    std::vector<double> T_list;
};

struct OracleConfig {
    double drift_amplitude = 1.0;
};

struct RunConfig {
    DomainConfig domain;
    TimeConfig time;
    PhysicsParams physics;
    CarlemanConfig carleman;
    HumConfig hum;
    FixedPointConfig fixed_point;
    InitialDataConfig initial_data;
    OutputConfig output;
    SweepConfig sweep;
    ObservabilityConfig observability;
    OracleConfig oracle;
    std::uint64_t seed = 0;

    [[nodiscard]] DomainSpec make_domain() const {
        return DomainSpec(domain.n_cells, Interval{domain.omega_a, domain.omega_b}, domain.x0);
    }
    [[nodiscard]] TimeGrid make_time() const { return TimeGrid(time.T, time.n_steps); }

    /// Re-validates every structural invariant the modules rely on.
    void validate() const {
        const DomainSpec d = make_domain();
        (void)d;
        const TimeGrid t = make_time();
        if (t.n_steps() < 4) throw InvalidInput("time.n_steps must be at least 4");
        physics.validate();
        carleman.validate();
        hum.validate();
        fixed_point.validate();
        if (initial_data.shape != "cosine" && initial_data.shape != "bump" && initial_data.shape != "file") {
            throw InvalidInput("initial_data.shape must be cosine, bump or file");
        }
        if (!std::isfinite(initial_data.amplitude)) throw InvalidInput("initial_data.amplitude must be finite");
        if (initial_data.shape == "file" && initial_data.file_path.empty()) {
            throw InvalidInput("initial_data.file_path is required for shape 'file'");
        }
        for (double e : sweep.epsilons) {
            if (!(e > 0.0)) throw InvalidInput("sweep.epsilons must be positive");
        }
        for (double T : sweep.T_list) {
            if (!(T > 0.0)) throw InvalidInput("sweep.T_list must be positive");
        }
        for (double T : observability.T_list) {
            if (!(T > 0.0)) throw InvalidInput("observability.T_list must be positive");
        }
        if (!(sweep.terminal_threshold > 0.0)) throw InvalidInput("sweep.terminal_threshold must be positive");
        if (!(sweep.hum_epsilon > 0.0)) throw InvalidInput("sweep.hum_epsilon must be positive");
    }
};

inline std::string to_string(InitialGuess g) { return g == InitialGuess::Zero ? "zero" : "u0-constant"; }

inline Json to_json(const RunConfig& c) {
    Json j;
    j["domain"] = {{"n_cells", c.domain.n_cells},
                   {"omega_a", c.domain.omega_a},
                   {"omega_b", c.domain.omega_b},
                   {"x0", c.domain.x0}};
    j["time"] = {{"T", c.time.T}, {"n_steps", c.time.n_steps}};
    j["physics"] = {{"chi", c.physics.chi}, {"gamma", c.physics.gamma}, {"delta", c.physics.delta}};
    j["carleman"] = {{"delta0", c.carleman.delta0},
                     {"lambda_scale", c.carleman.lambda_scale},
                     {"s_scale", c.carleman.s_scale},
                     {"freeze_after_first", c.carleman.freeze_after_first}};
    j["hum"] = {{"epsilon", c.hum.epsilon}, {"cg_tol", c.hum.cg_tol}, {"cg_max_iters", c.hum.cg_max_iters}};
    j["fixed_point"] = {{"tol", c.fixed_point.tol},
                        {"max_iters", c.fixed_point.max_iters},
                        {"initial_guess", to_string(c.fixed_point.initial_guess)}};
    j["initial_data"] = {{"shape", c.initial_data.shape},
                         {"amplitude", c.initial_data.amplitude},
                         {"file_path", c.initial_data.file_path}};
    j["output"] = {{"dir", c.output.dir}, {"formats", c.output.formats}};
    j["sweep"] = {{"epsilons", c.sweep.epsilons},
                  {"T_list", c.sweep.T_list},
                  {"amplitudes", c.sweep.amplitudes},
                  {"terminal_threshold", c.sweep.terminal_threshold},
                  {"hum_epsilon", c.sweep.hum_epsilon}};
    j["observability"] = {{"n_samples", c.observability.n_samples},
                          {"refine_iters", c.observability.refine_iters},
                          {"T_list", c.observability.T_list}};
    j["oracle"] = {{"drift_amplitude", c.oracle.drift_amplitude}};
    j["seed"] = c.seed;
    return j;
}

namespace detail {

template <class T>
void read_field(const Json& obj, const char* key, T& out, const std::string& path) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const Json::exception&) {
        throw InvalidInput("config: bad value for " + path + "." + key);
    }
}

inline void reject_unknown(const Json& obj, std::initializer_list<const char*> known, const std::string& path) {
    if (!obj.is_object()) throw InvalidInput("config: " + (path.empty() ? std::string("root") : path) + " must be an object");
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || item.key() == k;
        if (!ok) throw InvalidInput("config: unknown key " + (path.empty() ? "" : path + ".") + item.key());
    }
}

inline void read_size(const Json& obj, const char* key, std::size_t& out, const std::string& path) {
    if (!obj.contains(key)) return;
    const Json& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw InvalidInput("config: " + path + "." + key + " must be a non-negative integer");
    }
    out = v.get<std::size_t>();
}

}  // namespace detail

/// Missing keys keep their defaults; unknown keys are rejected.
inline RunConfig config_from_json(const Json& j) {
    using detail::read_field;
    using detail::read_size;
    using detail::reject_unknown;
    RunConfig c;
    reject_unknown(j, {"domain", "time", "physics", "carleman", "hum", "fixed_point", "initial_data", "output", "sweep",
                       "observability", "oracle", "seed"},
                   "");
    if (j.contains("domain")) {
        const Json& d = j["domain"];
        reject_unknown(d, {"n_cells", "omega_a", "omega_b", "x0"}, "domain");
        read_size(d, "n_cells", c.domain.n_cells, "domain");
        read_field(d, "omega_a", c.domain.omega_a, "domain");
        read_field(d, "omega_b", c.domain.omega_b, "domain");
        read_field(d, "x0", c.domain.x0, "domain");
    }
    if (j.contains("time")) {
        const Json& t = j["time"];
        reject_unknown(t, {"T", "n_steps"}, "time");
        read_field(t, "T", c.time.T, "time");
        read_size(t, "n_steps", c.time.n_steps, "time");
    }
    if (j.contains("physics")) {
        const Json& p = j["physics"];
        reject_unknown(p, {"chi", "gamma", "delta"}, "physics");
        read_field(p, "chi", c.physics.chi, "physics");
        read_field(p, "gamma", c.physics.gamma, "physics");
        read_field(p, "delta", c.physics.delta, "physics");
    }
    if (j.contains("carleman")) {
        const Json& p = j["carleman"];
        reject_unknown(p, {"delta0", "lambda_scale", "s_scale", "freeze_after_first"}, "carleman");
        read_field(p, "delta0", c.carleman.delta0, "carleman");
        read_field(p, "lambda_scale", c.carleman.lambda_scale, "carleman");
        read_field(p, "s_scale", c.carleman.s_scale, "carleman");
        read_field(p, "freeze_after_first", c.carleman.freeze_after_first, "carleman");
    }
    if (j.contains("hum")) {
        const Json& p = j["hum"];
        reject_unknown(p, {"epsilon", "cg_tol", "cg_max_iters"}, "hum");
        read_field(p, "epsilon", c.hum.epsilon, "hum");
        read_field(p, "cg_tol", c.hum.cg_tol, "hum");
        read_size(p, "cg_max_iters", c.hum.cg_max_iters, "hum");
    }
    if (j.contains("fixed_point")) {
        const Json& p = j["fixed_point"];
        reject_unknown(p, {"tol", "max_iters", "initial_guess"}, "fixed_point");
        read_field(p, "tol", c.fixed_point.tol, "fixed_point");
        read_size(p, "max_iters", c.fixed_point.max_iters, "fixed_point");
        std::string guess = to_string(c.fixed_point.initial_guess);
        read_field(p, "initial_guess", guess, "fixed_point");
        if (guess == "zero") {
            c.fixed_point.initial_guess = InitialGuess::Zero;
        } else if (guess == "u0-constant") {
            c.fixed_point.initial_guess = InitialGuess::U0Constant;
        } else {
            throw InvalidInput("config: fixed_point.initial_guess must be zero or u0-constant");
        }
    }
    if (j.contains("initial_data")) {
        const Json& p = j["initial_data"];
        reject_unknown(p, {"shape", "amplitude", "file_path"}, "initial_data");
        read_field(p, "shape", c.initial_data.shape, "initial_data");
        read_field(p, "amplitude", c.initial_data.amplitude, "initial_data");
        read_field(p, "file_path", c.initial_data.file_path, "initial_data");
    }
    if (j.contains("output")) {
        const Json& p = j["output"];
        reject_unknown(p, {"dir", "formats"}, "output");
        read_field(p, "dir", c.output.dir, "output");
        read_field(p, "formats", c.output.formats, "output");
    }
    if (j.contains("sweep")) {
        const Json& p = j["sweep"];
        reject_unknown(p, {"epsilons", "T_list", "amplitudes", "terminal_threshold", "hum_epsilon"}, "sweep");
        read_field(p, "epsilons", c.sweep.epsilons, "sweep");
        read_field(p, "T_list", c.sweep.T_list, "sweep");
        read_field(p, "amplitudes", c.sweep.amplitudes, "sweep");
        read_field(p, "terminal_threshold", c.sweep.terminal_threshold, "sweep");
        read_field(p, "hum_epsilon", c.sweep.hum_epsilon, "sweep");
    }
    if (j.contains("observability")) {
        const Json& p = j["observability"];
        reject_unknown(p, {"n_samples", "refine_iters", "T_list"}, "observability");
        read_size(p, "n_samples", c.observability.n_samples, "observability");
        read_size(p, "refine_iters", c.observability.refine_iters, "observability");
        read_field(p, "T_list", c.observability.T_list, "observability");
    }
    if (j.contains("oracle")) {
        const Json& p = j["oracle"];
        reject_unknown(p, {"drift_amplitude"}, "oracle");
        read_field(p, "drift_amplitude", c.oracle.drift_amplitude, "oracle");
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer() || j["seed"].get<long long>() < 0) {
            throw InvalidInput("config: seed must be a non-negative integer");
        }
        c.seed = j["seed"].get<std::uint64_t>();
    }
    c.validate();
    return c;
}

inline Json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw InvalidInput("config: cannot parse " + origin + ": " + e.what());
    }
}

inline Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), path);
}

/// Applies "a.b.c=value"; value is read as JSON when it parses, otherwise as a string.
inline void apply_override(Json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw InvalidInput("override must look like key.path=value");
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    Json value;
    try {
        value = Json::parse(raw);
    } catch (const Json::parse_error&) {
        value = raw;
    }
    Json* node = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw InvalidInput("override has an empty path segment: " + path);
        if (dot == std::string::npos) {
            (*node)[key] = value;
            break;
        }
        if (!node->contains(key)) (*node)[key] = Json::object();
        node = &(*node)[key];
        if (!node->is_object()) throw InvalidInput("override path crosses a non-object: " + path);
        start = dot + 1;
    }
}

/// Compact dump with keys in lexicographic order (nlohmann's default object map).
inline std::string canonical_serialization(const RunConfig& c) { return to_json(c).dump(); }

/// SHA-1 of "blob <len>\0<content>", the way git names objects.
inline std::string git_blob_hash(const std::string& content) {
    const std::string header = "blob " + std::to_string(content.size());
    std::string payload = header;
    payload.push_back('\0');
    payload += content;
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(payload.data(), payload.size(), digest, &len, EVP_sha1(), nullptr) != 1) {
        throw SolverError("sha1 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

inline std::string config_hash(const RunConfig& c) { return git_blob_hash(canonical_serialization(c)); }

}  // namespace chemosteer
