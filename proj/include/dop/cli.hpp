#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dop {

/// Exit-code contract: 0 success, 1 input error, 2 solver failure,
/// 3 verification failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitSolverFailure = 2;
inline constexpr int kExitVerifyFailure = 3;

struct CliInvocation {
    std::string config_path;
    std::string out_dir;             // overrides the config's output_dir
    std::optional<std::uint64_t> seed;
    bool inline_solve = false;
};

int cmd_solve(const CliInvocation& inv);
int cmd_penalty_sweep(const CliInvocation& inv);
int cmd_verify(const CliInvocation& inv);
int cmd_report(const std::string& run_dir);

/// Full argv-level entry used by the binary and the CLI tests.
int run_cli(const std::vector<std::string>& args);

/// TOOL_THREADS cap (>=1); the implementation is single-threaded, so the cap
/// is honoured trivially but still validated and reported.
int thread_cap();

} // namespace dop
