#pragma once

#include "lockstep/metrics.hpp"
#include "lockstep/model.hpp"
#include "lockstep/partition.hpp"
#include "lockstep/sync.hpp"
#include "lockstep/trace.hpp"

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lockstep {

enum class Boundary : std::uint8_t { after_work, after_transfer };

/// Called by the controlling context at every phase boundary while all units
/// are quiescent.
using BoundaryHook = std::function<void(const Model&, Cycle, Boundary)>;

struct RunOptions {
    Backend backend = Backend::common_atomic;
    /// Unset: auto_spin_policy(workers + 1).
    std::optional<SpinPolicy> spin;
    /// Canonical trace hash (and optional sinks). Off for pure benchmarks.
    bool trace = true;
    std::vector<TraceSink*> trace_sinks;
    bool timing = true;
#ifdef NDEBUG
    bool check_agreement = false;
#else
    bool check_agreement = true;
#endif
    /// Records (worker, phase, cycle, begin, end) with a global sequence.
    bool phase_log = false;
    bool pin_threads = false;
    /// Each worker busy-waits a random 0..jitter_max after each phase.
    std::chrono::nanoseconds jitter_max{0};
    std::uint64_t jitter_seed = 0;
    /// Sleep for the jitter instead of busy-waiting (timer slack lowered where supported).
    bool jitter_sleeps = false;
    BoundaryHook on_boundary;
};

struct PhaseEvent {
    std::uint32_t worker = 0;
    PhaseKind phase = PhaseKind::work;
    Cycle cycle = 0;
    std::uint64_t begin = 0;
    std::uint64_t end = 0;
};

struct RunError {
    std::string message;
    std::optional<std::size_t> worker;
    std::optional<UnitId> unit;
    Cycle cycle = 0;
};

struct RunReport {
    bool serial = false;
    Backend backend = Backend::common_atomic;
    std::size_t workers = 0;
    Cycle start_cycle = 0;
    Cycle cycles = 0; // completed in this run
    RunMetrics metrics;
    SyncCounts sync;
    MessageTotals messages;
    std::optional<std::uint64_t> trace_hash;
    std::uint64_t trace_events = 0;
    std::vector<PhaseEvent> phase_log;
    std::optional<RunError> error;

    bool ok() const noexcept { return !error.has_value(); }
    /// Simulated kilo-cycles per wall second.
    double sim_khz() const noexcept;
};

/// Parallel engine: one scheduler (the calling thread) and one worker thread
/// per cluster, driven through a LadderBarrier. Not reentrant.
class ParallelExecutor {
public:
    ParallelExecutor(Model& model, Partition partition, RunOptions options = {});
    ~ParallelExecutor();
    ParallelExecutor(const ParallelExecutor&) = delete;
    ParallelExecutor& operator=(const ParallelExecutor&) = delete;

    RunReport run(Cycle cycles);
    /// Runs whole cycles until `budget` of wall time has elapsed.
    RunReport run_for(std::chrono::nanoseconds budget);

    const Partition& partition() const noexcept { return partition_; }
    std::size_t workers() const noexcept { return partition_.workers(); }

private:
    struct WorkerSlot;

    RunReport execute(Cycle cycles, std::optional<std::chrono::nanoseconds> budget);
    void worker_task(std::size_t w, Cycle start);
    void tick(Cycle t, Cycle start, TraceRecorder& recorder);
    void check_agreement(Cycle completed, bool transfer);
    std::optional<RunError> collect_failure() const;

    Model& model_;
    Partition partition_;
    RunOptions options_;
    std::unique_ptr<LadderBarrier> barrier_;
    std::vector<WorkerSlot> slots_;
    std::atomic<std::uint64_t> sequence_{0};
};

/// Reference engine: every unit's work step in unit-id order, then every
/// unit's transfers in unit-id order, one cycle after another.
RunReport serial_run(Model& model, Cycle cycles, const RunOptions& options = {});

} // namespace lockstep
