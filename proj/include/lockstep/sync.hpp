#pragma once

#include <array>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string_view>
#include <thread>
#include <vector>

namespace lockstep {

/// Sync-point realizations, in increasing order of expected barrier speed.
enum class Backend : std::uint8_t {
    mutex,         // OS-arbitrated sleep-wait lock; wait() = lock(); unlock()
    spinlock,      // spin-acquired lock; wait() = lock(); unlock()
    atomic,        // per-worker flag: release stores, acquire spin-reads
    common_atomic, // one shared generation counter / countdown for all workers
};

inline constexpr std::array<Backend, 4> kAllBackends{Backend::mutex, Backend::spinlock, Backend::atomic,
                                                     Backend::common_atomic};

std::string_view to_string(Backend backend) noexcept;
/// Accepts "mutex", "spinlock", "atomic", "common-atomic". Throws std::invalid_argument.
Backend parse_backend(std::string_view name);

/// Busy waiters spin `spins_before_yield` times before starting to yield the
/// processor on every further iteration. Zero means pure spinning.
struct SpinPolicy {
    std::uint32_t spins_before_yield = 0;

    friend bool operator==(const SpinPolicy&, const SpinPolicy&) = default;
};

/// Pure spin when `threads` fit the host's hardware contexts, otherwise a
/// short spin followed by yields.
SpinPolicy auto_spin_policy(std::size_t threads);

inline void cpu_relax() noexcept {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_ia32_pause();
#elif defined(__aarch64__)
    asm volatile("yield" ::: "memory");
#endif
}

template <class Pred>
void spin_until(Pred&& done, SpinPolicy policy) {
    for (std::uint32_t n = 0; !done(); ++n) {
        if (policy.spins_before_yield != 0 && n >= policy.spins_before_yield) {
            std::this_thread::yield();
        } else {
            cpu_relax();
        }
    }
}

/// Who may lock/unlock a sync-point: the scheduler or one specific worker.
using Role = std::int32_t;
inline constexpr Role kScheduler = -1;

/// Protocol violation on a sync-point (wrong writer, double lock/unlock).
class SyncMisuse : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Single-writer lock/unlock/wait primitive. Only the writer role may lock or
/// unlock; wait() returns once the point is unlocked, and the waiter then
/// observes every write the writer made before that unlock.
class alignas(64) SyncPoint {
public:
    explicit SyncPoint(Role writer) noexcept : writer_(writer) {}
    virtual ~SyncPoint() = default;
    SyncPoint(const SyncPoint&) = delete;
    SyncPoint& operator=(const SyncPoint&) = delete;

    void lock(Role by);
    void unlock(Role by);
    virtual void wait() = 0;

    /// Initialization outside the single-writer discipline; only valid while
    /// no other thread uses the point.
    void reset(bool locked);

    Role writer() const noexcept { return writer_; }
    bool locked() const noexcept { return writer_view_; }

protected:
    virtual void do_lock() = 0;
    virtual void do_unlock() = 0;
    virtual void do_reset(bool locked) = 0;

private:
    Role writer_;
    bool writer_view_ = false; // touched by the writer only
};

class BlockingLockPoint final : public SyncPoint {
public:
    using SyncPoint::SyncPoint;
    void wait() override;

private:
    void acquire();
    void release();
    void do_lock() override { acquire(); }
    void do_unlock() override { release(); }
    void do_reset(bool locked) override;

    std::mutex mutex_;
    std::condition_variable cv_;
    bool held_ = false;
};

class SpinLockPoint final : public SyncPoint {
public:
    SpinLockPoint(Role writer, SpinPolicy policy) noexcept : SyncPoint(writer), policy_(policy) {}
    void wait() override;

private:
    void acquire();
    void release() { flag_.store(false, std::memory_order_release); }
    void do_lock() override { acquire(); }
    void do_unlock() override { release(); }
    void do_reset(bool locked) override { flag_.store(locked, std::memory_order_relaxed); }

    SpinPolicy policy_;
    std::atomic<bool> flag_{false};
};

class FlagPoint final : public SyncPoint {
public:
    FlagPoint(Role writer, SpinPolicy policy) noexcept : SyncPoint(writer), policy_(policy) {}
    void wait() override;

private:
    void do_lock() override { value_.store(1, std::memory_order_release); }
    void do_unlock() override { value_.store(0, std::memory_order_release); }
    void do_reset(bool locked) override { value_.store(locked ? 1 : 0, std::memory_order_relaxed); }

    SpinPolicy policy_;
    std::atomic<char> value_{0};
};

/// Per-point backends only; common_atomic has no single-point form.
std::unique_ptr<SyncPoint> make_sync_point(Backend backend, Role writer, SpinPolicy policy = {});

/// Operation counts. Primitive counts are per shared variable touched; the
/// *_alls are scheduler group calls.
struct SyncCounts {
    std::uint64_t locks = 0;
    std::uint64_t unlocks = 0;
    std::uint64_t waits = 0;
    std::uint64_t lock_alls = 0;
    std::uint64_t unlock_alls = 0;
    std::uint64_t wait_alls = 0;
    std::uint64_t generation_bumps = 0;
    std::uint64_t countdown_reloads = 0;

    std::uint64_t primitive_ops() const noexcept { return locks + unlocks + waits; }
    SyncCounts& operator+=(const SyncCounts& o) noexcept;
    SyncCounts& operator-=(const SyncCounts& o) noexcept;
    friend bool operator==(const SyncCounts&, const SyncCounts&) = default;
};

/// The four named sync-points of the phase handshake.
enum class SyncName : std::uint8_t {
    work,     // scheduler-written, released before each work phase
    transfer, // scheduler-written, released before each transfer phase
    phase0,   // worker-written, released when a worker finished its work phase
    phase1,   // worker-written, released when a worker finished its transfer phase
};

namespace detail {
class SignalGroup;
}

/// Ladder barrier between one scheduler and `workers` workers. Scheduler-side
/// calls must come from a single thread; worker-side calls for index w from
/// worker w only.
class LadderBarrier {
public:
    LadderBarrier(Backend backend, std::size_t workers, SpinPolicy policy = {});
    ~LadderBarrier();
    LadderBarrier(const LadderBarrier&) = delete;
    LadderBarrier& operator=(const LadderBarrier&) = delete;

    Backend backend() const noexcept { return backend_; }
    std::size_t workers() const noexcept { return workers_; }

    /// Run preamble, before any worker starts: lockAll(WORK) and the worker
    /// points PHASE0/PHASE1 initialized to locked.
    void prepare();

    void lock_all(SyncName name);
    void unlock_all(SyncName name);
    void wait_all(SyncName name);

    void lock(SyncName name, std::size_t worker);
    void unlock(SyncName name, std::size_t worker);
    void wait(SyncName name, std::size_t worker);

    SyncCounts scheduler_counts() const noexcept { return scheduler_counts_.counts; }
    SyncCounts worker_counts(std::size_t worker) const { return worker_counts_.at(worker).counts; }
    /// Scheduler plus all workers. Only meaningful while workers are parked or joined.
    SyncCounts total_counts() const;

private:
    struct alignas(64) PaddedCounts {
        SyncCounts counts;
    };

    detail::SignalGroup& group(SyncName name) const { return *groups_[static_cast<std::size_t>(name)]; }

    Backend backend_;
    std::size_t workers_;
    std::array<std::unique_ptr<detail::SignalGroup>, 4> groups_;
    PaddedCounts scheduler_counts_;
    std::vector<PaddedCounts> worker_counts_;
};

} // namespace lockstep
