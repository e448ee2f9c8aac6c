#pragma once

#include "lockstep/executor.hpp"
#include "lockstep/models/registry.hpp"
#include "lockstep/partition.hpp"
#include "lockstep/sync.hpp"

#include <cstdint>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lockstep {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Instrumentation : std::uint8_t {
    none,   // no timing, no trace hash
    timing, // per-phase timing and the canonical trace hash
    phases, // timing plus a per-phase event log
};

std::string_view to_string(Instrumentation level) noexcept;
Instrumentation parse_instrumentation(std::string_view name);

/// Everything needed to reproduce a run. Persisted as flat key=value lines;
/// model parameters live under the `model.` prefix.
struct RunConfig {
    std::string model = "three-unit";
    models::ParamMap model_params;
    std::uint64_t cycles = 1000;
    std::vector<std::size_t> workers{1};
    Backend backend = Backend::common_atomic;
    PartitionPolicy partition = PartitionPolicy::round_robin;
    std::uint64_t partition_seed = 0;
    std::uint64_t seed = 0;
    bool pin = false;
    /// Spins before yielding; unset picks by host contexts.
    std::optional<std::uint32_t> spin;
    std::string stats_path;
    std::string trace_path;
    std::string json_path;
    Instrumentation instrumentation = Instrumentation::timing;
    bool check_serial = false;

    bool operator==(const RunConfig&) const = default;
};

/// "4", "1,2,4" or "1..8". Throws ConfigError; zero is rejected.
std::vector<std::size_t> parse_worker_list(std::string_view text);
std::string format_worker_list(const std::vector<std::size_t>& workers);

std::string serialize(const RunConfig& config);
/// Blank lines and lines starting with '#' are ignored. Later keys override
/// earlier ones. Unknown keys throw ConfigError naming the line.
RunConfig parse_config(std::istream& in, RunConfig base = {});
RunConfig parse_config_string(const std::string& text, RunConfig base = {});
/// Applies one key=value assignment.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

RunConfig load_config(const std::string& path);
void save_config(const RunConfig& config, const std::string& path);

/// Executor options implied by the config (trace sinks not included).
RunOptions run_options(const RunConfig& config);

} // namespace lockstep
