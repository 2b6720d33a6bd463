// Runs the optolev executable in a scratch directory for end-to-end tests.
#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace tool {

namespace fs = std::filesystem;

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Fresh empty directory under the system temp path.
inline fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "optolev_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

struct Outcome {
    int exit_code = -1;
    std::string stderr_text;
};

/// Writes @p config to <dir>/run.json and runs `optolev <command> --config run.json <extra>`.
inline Outcome run(const fs::path& dir, const std::string& command, const nlohmann::json& config,
                   const std::string& extra = "") {
    const fs::path cfg = dir / "run.json";
    std::ofstream(cfg) << config.dump(2) << '\n';
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = std::string("'") + OPTOLEV_CLI_BINARY + "' " + command + " --config '" +
                            cfg.string() + "' " + extra + " 2> '" + err.string() + "' > /dev/null";
    const int status = std::system(cmd.c_str());
    Outcome o;
    o.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    o.stderr_text = slurp(err);
    return o;
}

/// Contents of every regular file in @p dir except the ones the harness writes.
inline std::map<std::string, std::string> outputs(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (e.is_regular_file() && name != "run.json" && name != "stderr.txt") files[name] = slurp(e.path());
    }
    return files;
}

/// Minimal configuration writing into @p out: the 80 kHz desk oscillator with Gamma_m = 1.3e4 1/s.
inline nlohmann::json desk_config(const fs::path& out) {
    return {{"experiment", "test"},
            {"output_dir", out.string()},
            {"params", {{"mech_freq_hz", 80e3}, {"gamma_m", 1.3e4}, {"effective_temperature", 293.0}}},
            {"numerics", {{"seed", 5}}}};
}

} // namespace tool
