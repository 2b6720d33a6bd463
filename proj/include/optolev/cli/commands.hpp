// Sub-commands of the optolev tool. Each writes its files into the configured
// output directory and returns a JSON summary.
#pragma once

#include <exception>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "optolev/cli/config.hpp"
#include "optolev/experiments.hpp"
#include "optolev/statespace.hpp"

namespace optolev::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_config = 2,
    exit_numeric = 3,
    exit_convergence = 4,
};

/// Maps library exceptions onto exit codes.
int exit_code_for(const std::exception& e);

struct CommandResult {
    nlohmann::json summary;
    int exit_code = exit_ok;
};

CommandResult cmd_simulate(const RunConfig& cfg);
CommandResult cmd_kalman(const RunConfig& cfg);
CommandResult cmd_lqr(const RunConfig& cfg);
CommandResult cmd_covariance(const RunConfig& cfg);
CommandResult cmd_psd(const RunConfig& cfg);
CommandResult cmd_shift_sweep(const RunConfig& cfg);
CommandResult cmd_delay_sweep(const RunConfig& cfg);
CommandResult cmd_acf(const RunConfig& cfg);

std::vector<std::string_view> command_names();
/// Throws ConfigError for an unknown command name.
CommandResult run_command(std::string_view name, const RunConfig& cfg);

/// The Langevin model described by the configuration (gain_rel and delay_rel resolved).
Langevin1D langevin_model(const RunConfig& cfg);
/// Integrator step: numerics.langevin_dt, or the period over steps_per_period.
double langevin_step(const RunConfig& cfg, const Langevin1D& l);
SpectrumRunOptions spectrum_options(const RunConfig& cfg, const Langevin1D& l);

} // namespace optolev::cli
