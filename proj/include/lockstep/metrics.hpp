#pragma once

#include "lockstep/sync.hpp"
#include "lockstep/types.hpp"

#include <chrono>
#include <cstdint>
#include <vector>

namespace lockstep {

using Clock = std::chrono::steady_clock;

enum class PhaseKind : std::uint8_t { work, transfer, barrier };

/// Wall time one worker spent in each phase kind. Written by its owner only.
class PhaseTiming {
public:
    void record(PhaseKind kind, std::chrono::nanoseconds elapsed) noexcept;

    std::chrono::nanoseconds work() const noexcept { return work_; }
    std::chrono::nanoseconds transfer() const noexcept { return transfer_; }
    std::chrono::nanoseconds barrier() const noexcept { return barrier_; }
    std::uint64_t work_samples() const noexcept { return work_samples_; }
    std::uint64_t transfer_samples() const noexcept { return transfer_samples_; }
    std::uint64_t barrier_samples() const noexcept { return barrier_samples_; }

    /// Wall time of the worker thread from start to exit.
    std::chrono::nanoseconds total{0};

    PhaseTiming& operator+=(const PhaseTiming& o) noexcept;

private:
    std::chrono::nanoseconds work_{0};
    std::chrono::nanoseconds transfer_{0};
    std::chrono::nanoseconds barrier_{0};
    std::uint64_t work_samples_ = 0;
    std::uint64_t transfer_samples_ = 0;
    std::uint64_t barrier_samples_ = 0;
};

/// Barrier throughput: each simulated cycle completes two phases.
struct BarrierRate {
    std::uint64_t phases = 0;
    std::chrono::nanoseconds elapsed{0};

    double phases_per_sec() const noexcept {
        return elapsed.count() > 0 ? static_cast<double>(phases) * 1e9 / static_cast<double>(elapsed.count()) : 0.0;
    }
};

/// Per-worker slot, padded so that workers never share a cache line.
struct alignas(64) WorkerMetrics {
    PhaseTiming timing;
    std::uint64_t work_phases = 0;
    std::uint64_t transfer_phases = 0;
};

/// Post-run merge of the per-worker slots.
struct RunMetrics {
    std::vector<WorkerMetrics> workers;
    std::chrono::nanoseconds wall{0};
    Cycle cycles = 0;

    std::chrono::nanoseconds max_work() const noexcept;
    std::chrono::nanoseconds max_transfer() const noexcept;
    std::chrono::nanoseconds max_barrier() const noexcept;
    PhaseTiming summed() const noexcept;
    BarrierRate barrier_rate() const noexcept { return {2 * cycles, wall}; }
};

} // namespace lockstep
