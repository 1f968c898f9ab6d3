#include <chemosteer/chemosteer.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace cs = chemosteer;

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("-c,--config", args.config_path, "JSON run configuration");
    sub->add_option("--set", args.overrides, "override a field, e.g. --set hum.epsilon=1e-6")->take_all();
    sub->add_option("-o,--out", args.out_dir, "output directory (overrides output.dir)");
}

// Precedence: config file, then CHEMOSTEER_OUT, then --set, then --out.
cs::RunConfig resolve(const CommonArgs& args, const std::vector<std::string>& extra) {
    cs::Json j = args.config_path.empty() ? cs::Json::object() : cs::load_json_file(args.config_path);
    if (const char* env = std::getenv("CHEMOSTEER_OUT"); env != nullptr && *env != '\0') {
        j["output"]["dir"] = env;
    }
    for (const auto& o : args.overrides) cs::apply_override(j, o);
    for (const auto& o : extra) cs::apply_override(j, o);
    if (!args.out_dir.empty()) j["output"]["dir"] = args.out_dir;
    return cs::config_from_json(j);
}

int report(const cs::CommandResult& r, const cs::RunConfig& cfg) {
    std::cout << r.record.value("command", "") << ": exit " << r.exit_code << ", report "
              << cfg.output.dir << "/report.json\n";
    if (!r.message.empty()) std::cerr << r.message << '\n';
    return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Null-control solver for the 1-D parabolic-elliptic Keller-Segel system"};
    app.require_subcommand(1);

    using Command = std::function<cs::CommandResult(const cs::RunConfig&)>;
    const std::map<std::string, std::pair<std::string, Command>> commands = {
        {"linear", {"penalised null control for the linear drift equation", cs::cmd_linear}},
        {"nonlinear", {"fixed-point iteration for the coupled system", cs::cmd_nonlinear}},
        {"observability", {"sample the observability ratio", cs::cmd_observability}},
        {"sweep-eps", {"terminal norm against the penalty parameter", cs::cmd_sweep_eps}},
        {"sweep-T", {"smallness-threshold scan over horizons", cs::cmd_sweep_T}},
        {"oracle-check", {"compare CG with a dense direct solve (small grids)", cs::cmd_oracle_check}},
    };

    std::map<std::string, CommonArgs> args;
    std::size_t samples = 0;
    bool samples_given = false;
    for (const auto& [name, entry] : commands) {
        CLI::App* sub = app.add_subcommand(name, entry.first);
        add_common(sub, args[name]);
        if (name == "observability") {
            sub->add_option_function<std::size_t>(
                "-n,--samples", [&](std::size_t v) { samples = v; samples_given = true; },
                "number of random terminal data");
        }
    }
    bool corrupt_adjoint = false;
    CLI::App* selftest = app.add_subcommand("selftest", "run the built-in invariant suite");
    selftest->add_flag("--corrupt-adjoint", corrupt_adjoint, "fault injection for testing the suite itself")
        ->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cs::exit_code::invalid_input;
    }

    if (selftest->parsed()) {
        return cs::cmd_selftest(std::cout, cs::SelftestOptions{corrupt_adjoint});
    }
    for (const auto& [name, entry] : commands) {
        if (!app.got_subcommand(name)) continue;
        try {
            std::vector<std::string> extra;
            if (samples_given) extra.push_back("observability.n_samples=" + std::to_string(samples));
            const cs::RunConfig cfg = resolve(args[name], extra);
            return report(entry.second(cfg), cfg);
        } catch (const cs::InvalidInput& e) {
            std::cerr << "invalid input: " << e.what() << '\n';
            return cs::exit_code::invalid_input;
        } catch (const cs::SolverError& e) {
            std::cerr << "solver failure: " << e.what() << '\n';
            return cs::exit_code::not_converged;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return cs::exit_code::invalid_input;
        }
    }
    return cs::exit_code::invalid_input;
}
