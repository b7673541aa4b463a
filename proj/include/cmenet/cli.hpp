#pragma once

#include <cmenet/error.hpp>

#include <iosfwd>

namespace cmenet {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 1,
    exit_input = 2,
    exit_params = 3,
    exit_nonconvergence = 4,
    exit_runtime = 5,
};

int exit_code_for(ErrorCode code) noexcept;

/// Runs the `cmenet` command line with subcommands fit, cv, simulate and bench.
/// Reports go to --output when given, otherwise to `out`; diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace cmenet
