// optolev: batch front end for the levitated-particle feedback models.
//
//   optolev <command> --config run.json [--seed N] [--out-dir DIR] [--threads N] [--set key=value]...
//
// Exit codes: 0 success, 2 configuration error, 3 numeric/divergence error,
// 4 fit/convergence error.
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "optolev/cli/commands.hpp"
#include "optolev/cli/config.hpp"
#include "optolev/errors.hpp"

int main(int argc, char** argv) {
    using namespace optolev;
    CLI::App app{"Simulation, estimation and perturbation-theory tool for feedback-cooled levitated particles"};
    std::string command, config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<unsigned> threads;
    std::vector<std::string> overrides;
    bool print_default = false;

    std::string names;
    for (auto n : cli::command_names()) names += (names.empty() ? "" : ", ") + std::string(n);
    app.add_option("command", command, "one of: " + names);
    app.add_option("-c,--config", config_path, "JSON run configuration");
    app.add_option("--seed", seed, "override numerics.seed");
    app.add_option("--out-dir", out_dir, "override output_dir");
    app.add_option("--threads", threads, "override numerics.threads");
    app.add_option("--set", overrides, "override any key, e.g. --set numerics.dt=1e-7")->take_all();
    app.add_flag("--print-default-config", print_default, "print a minimal configuration and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::exit_config;
    }
    if (print_default) {
        std::cout << cli::default_config().dump(2) << '\n';
        return 0;
    }

    try {
        if (command.empty()) throw ConfigError("no command given; expected one of: " + names);
        if (config_path.empty()) throw ConfigError("missing --config");
        nlohmann::json doc = cli::load_config_file(config_path);
        for (const auto& o : overrides) cli::apply_override(doc, o);
        if (seed) cli::apply_override(doc, "numerics.seed=" + std::to_string(*seed));
        if (threads) cli::apply_override(doc, "numerics.threads=" + std::to_string(*threads));
        if (out_dir) doc["output_dir"] = *out_dir;
        const cli::RunConfig cfg = cli::parse_config(doc);
        const cli::CommandResult res = cli::run_command(command, cfg);
        if (res.exit_code != 0) std::cerr << "optolev: " << command << " finished with errors\n";
        return res.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "optolev: " << e.what() << '\n';
        return cli::exit_code_for(e);
    }
}
