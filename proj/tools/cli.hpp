#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lockstep::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2 };

/// Entry point of the `lockstep` tool; argv[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Column order of the `run` stats CSV.
inline constexpr const char* kStatsHeader =
    "model,cycles,workers,backend,partition,seed,wall_ms,sim_khz,work_ms_max,transfer_ms_max,"
    "barrier_ms_max,messages,held_transfers,trace_hash";

inline constexpr const char* kBenchHeader = "backend,workers,phases_per_sec,oversubscribed";

} // namespace lockstep::cli
