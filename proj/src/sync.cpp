#include "lockstep/sync.hpp"

#include <string>

namespace lockstep {

std::string_view to_string(Backend backend) noexcept {
    switch (backend) {
    case Backend::mutex: return "mutex";
    case Backend::spinlock: return "spinlock";
    case Backend::atomic: return "atomic";
    case Backend::common_atomic: return "common-atomic";
    }
    return "?";
}

Backend parse_backend(std::string_view name) {
    for (Backend b : kAllBackends) {
        if (to_string(b) == name) {
            return b;
        }
    }
    throw std::invalid_argument("unknown sync backend '" + std::string(name) +
                                "' (expected mutex, spinlock, atomic or common-atomic)");
}

SpinPolicy auto_spin_policy(std::size_t threads) {
    const unsigned contexts = std::thread::hardware_concurrency();
    if (contexts != 0 && threads <= contexts) {
        return SpinPolicy{0};
    }
    return SpinPolicy{64};
}

void SyncPoint::lock(Role by) {
    if (by != writer_) {
        throw SyncMisuse("lock by role " + std::to_string(by) + " on a point written by " + std::to_string(writer_));
    }
    if (writer_view_) {
        throw SyncMisuse("lock of an already locked sync-point");
    }
    do_lock();
    writer_view_ = true;
}

void SyncPoint::unlock(Role by) {
    if (by != writer_) {
        throw SyncMisuse("unlock by role " + std::to_string(by) + " on a point written by " +
                         std::to_string(writer_));
    }
    if (!writer_view_) {
        throw SyncMisuse("unlock of an already unlocked sync-point");
    }
    writer_view_ = false;
    do_unlock();
}

void SyncPoint::reset(bool locked) {
    writer_view_ = locked;
    do_reset(locked);
}

void BlockingLockPoint::acquire() {
    std::unique_lock lk(mutex_);
    cv_.wait(lk, [this] { return !held_; });
    held_ = true;
}

void BlockingLockPoint::release() {
    {
        std::lock_guard lk(mutex_);
        held_ = false;
    }
    cv_.notify_all();
}

void BlockingLockPoint::wait() {
    acquire();
    release();
}

void BlockingLockPoint::do_reset(bool locked) {
    std::lock_guard lk(mutex_);
    held_ = locked;
}

void SpinLockPoint::acquire() {
    while (flag_.exchange(true, std::memory_order_acquire)) {
        spin_until([this] { return !flag_.load(std::memory_order_relaxed); }, policy_);
    }
}

void SpinLockPoint::wait() {
    acquire();
    release();
}

void FlagPoint::wait() {
    spin_until([this] { return value_.load(std::memory_order_acquire) != 1; }, policy_);
}

std::unique_ptr<SyncPoint> make_sync_point(Backend backend, Role writer, SpinPolicy policy) {
    switch (backend) {
    case Backend::mutex: return std::make_unique<BlockingLockPoint>(writer);
    case Backend::spinlock: return std::make_unique<SpinLockPoint>(writer, policy);
    case Backend::atomic: return std::make_unique<FlagPoint>(writer, policy);
    case Backend::common_atomic: break;
    }
    throw std::invalid_argument("common-atomic has no single sync-point form");
}

SyncCounts& SyncCounts::operator+=(const SyncCounts& o) noexcept {
    locks += o.locks;
    unlocks += o.unlocks;
    waits += o.waits;
    lock_alls += o.lock_alls;
    unlock_alls += o.unlock_alls;
    wait_alls += o.wait_alls;
    generation_bumps += o.generation_bumps;
    countdown_reloads += o.countdown_reloads;
    return *this;
}

SyncCounts& SyncCounts::operator-=(const SyncCounts& o) noexcept {
    locks -= o.locks;
    unlocks -= o.unlocks;
    waits -= o.waits;
    lock_alls -= o.lock_alls;
    unlock_alls -= o.unlock_alls;
    wait_alls -= o.wait_alls;
    generation_bumps -= o.generation_bumps;
    countdown_reloads -= o.countdown_reloads;
    return *this;
}

namespace detail {

/// A named sync-point as seen by the whole barrier: either W individual
/// points or one shared variable.
class SignalGroup {
public:
    virtual ~SignalGroup() = default;
    virtual void lock_all(SyncCounts& c) = 0;
    virtual void unlock_all(SyncCounts& c) = 0;
    virtual void wait_all(SyncCounts& c) = 0;
    virtual void lock(std::size_t w, SyncCounts& c) = 0;
    virtual void unlock(std::size_t w, SyncCounts& c) = 0;
    virtual void wait(std::size_t w, SyncCounts& c) = 0;
    virtual void reset(bool locked) = 0;
};

namespace {

[[noreturn]] void misuse(const char* what) { throw SyncMisuse(what); }

class PointGroup final : public SignalGroup {
public:
    PointGroup(Backend backend, bool scheduler_written, std::size_t workers, SpinPolicy policy)
        : scheduler_written_(scheduler_written) {
        points_.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            points_.push_back(make_sync_point(backend, scheduler_written ? kScheduler : static_cast<Role>(w), policy));
        }
    }

    void lock_all(SyncCounts& c) override {
        if (!scheduler_written_) misuse("lockAll on a worker-written sync-point");
        for (auto& p : points_) {
            p->lock(kScheduler);
        }
        c.locks += points_.size();
        ++c.lock_alls;
    }

    void unlock_all(SyncCounts& c) override {
        if (!scheduler_written_) misuse("unlockAll on a worker-written sync-point");
        for (auto& p : points_) {
            p->unlock(kScheduler);
        }
        c.unlocks += points_.size();
        ++c.unlock_alls;
    }

    void wait_all(SyncCounts& c) override {
        if (scheduler_written_) misuse("waitAll on a scheduler-written sync-point");
        for (auto& p : points_) {
            p->wait();
        }
        c.waits += points_.size();
        ++c.wait_alls;
    }

    void lock(std::size_t w, SyncCounts& c) override {
        points_.at(w)->lock(static_cast<Role>(w));
        ++c.locks;
    }

    void unlock(std::size_t w, SyncCounts& c) override {
        points_.at(w)->unlock(static_cast<Role>(w));
        ++c.unlocks;
    }

    void wait(std::size_t w, SyncCounts& c) override {
        if (!scheduler_written_) misuse("worker wait on a worker-written sync-point");
        points_.at(w)->wait();
        ++c.waits;
    }

    void reset(bool locked) override {
        for (auto& p : points_) {
            p->reset(locked);
        }
    }

private:
    bool scheduler_written_;
    std::vector<std::unique_ptr<SyncPoint>> points_;
};

/// Worker -> scheduler direction of common-atomic: one countdown that the
/// scheduler reloads to W before each release and then waits to reach zero.
class CountdownGroup final : public SignalGroup {
public:
    CountdownGroup(std::size_t workers, SpinPolicy policy)
        : workers_(static_cast<std::int64_t>(workers)), policy_(policy), locked_(workers) {}

    void reload(SyncCounts& c) {
        remaining_.store(workers_, std::memory_order_relaxed);
        ++c.countdown_reloads;
    }

    void lock_all(SyncCounts&) override { misuse("lockAll on a worker-written sync-point"); }
    void unlock_all(SyncCounts&) override { misuse("unlockAll on a worker-written sync-point"); }

    void wait_all(SyncCounts& c) override {
        spin_until([this] { return remaining_.load(std::memory_order_acquire) == 0; }, policy_);
        ++c.waits;
        ++c.wait_alls;
    }

    void lock(std::size_t w, SyncCounts& c) override {
        if (locked_.at(w).value) misuse("lock of an already locked sync-point");
        locked_[w].value = true;
        ++c.locks;
    }

    void unlock(std::size_t w, SyncCounts& c) override {
        if (!locked_.at(w).value) misuse("unlock of an already unlocked sync-point");
        locked_[w].value = false;
        remaining_.fetch_sub(1, std::memory_order_acq_rel);
        ++c.unlocks;
    }

    void wait(std::size_t, SyncCounts&) override { misuse("worker wait on a worker-written sync-point"); }

    void reset(bool locked) override {
        remaining_.store(locked ? workers_ : 0, std::memory_order_relaxed);
        for (auto& l : locked_) {
            l.value = locked;
        }
    }

private:
    struct alignas(64) Flag {
        bool value = false;
    };

    std::int64_t workers_;
    SpinPolicy policy_;
    alignas(64) std::atomic<std::int64_t> remaining_{0};
    std::vector<Flag> locked_;
};

/// Scheduler -> worker direction of common-atomic: one generation counter,
/// bumped once per release. A release first re-arms the paired countdown.
class GenerationGroup final : public SignalGroup {
public:
    GenerationGroup(std::size_t workers, SpinPolicy policy, CountdownGroup* rearm)
        : policy_(policy), rearm_(rearm), seen_(workers) {}

    void lock_all(SyncCounts& c) override {
        if (locked_) misuse("lock of an already locked sync-point");
        locked_ = true;
        ++c.locks;
        ++c.lock_alls;
    }

    void unlock_all(SyncCounts& c) override {
        if (!locked_) misuse("unlock of an already unlocked sync-point");
        locked_ = false;
        if (rearm_ != nullptr) {
            rearm_->reload(c);
        }
        generation_.fetch_add(1, std::memory_order_release);
        ++c.unlocks;
        ++c.unlock_alls;
        ++c.generation_bumps;
    }

    void wait_all(SyncCounts&) override { misuse("waitAll on a scheduler-written sync-point"); }
    void lock(std::size_t, SyncCounts&) override { misuse("worker lock on a scheduler-written sync-point"); }
    void unlock(std::size_t, SyncCounts&) override { misuse("worker unlock on a scheduler-written sync-point"); }

    void wait(std::size_t w, SyncCounts& c) override {
        std::uint64_t& seen = seen_.at(w).value;
        std::uint64_t now = 0;
        spin_until([&] { return (now = generation_.load(std::memory_order_acquire)) != seen; }, policy_);
        seen = now;
        ++c.waits;
    }

    void reset(bool locked) override {
        locked_ = locked;
        const std::uint64_t g = generation_.load(std::memory_order_relaxed);
        for (auto& s : seen_) {
            s.value = g;
        }
    }

private:
    struct alignas(64) Seen {
        std::uint64_t value = 0;
    };

    SpinPolicy policy_;
    CountdownGroup* rearm_;
    bool locked_ = false;
    alignas(64) std::atomic<std::uint64_t> generation_{0};
    std::vector<Seen> seen_;
};

} // namespace
} // namespace detail

LadderBarrier::LadderBarrier(Backend backend, std::size_t workers, SpinPolicy policy)
    : backend_(backend), workers_(workers), worker_counts_(workers) {
    auto idx = [](SyncName n) { return static_cast<std::size_t>(n); };
    if (backend == Backend::common_atomic) {
        auto phase0 = std::make_unique<detail::CountdownGroup>(workers, policy);
        auto phase1 = std::make_unique<detail::CountdownGroup>(workers, policy);
        groups_[idx(SyncName::work)] = std::make_unique<detail::GenerationGroup>(workers, policy, phase0.get());
        groups_[idx(SyncName::transfer)] = std::make_unique<detail::GenerationGroup>(workers, policy, phase1.get());
        groups_[idx(SyncName::phase0)] = std::move(phase0);
        groups_[idx(SyncName::phase1)] = std::move(phase1);
    } else {
        groups_[idx(SyncName::work)] = std::make_unique<detail::PointGroup>(backend, true, workers, policy);
        groups_[idx(SyncName::transfer)] = std::make_unique<detail::PointGroup>(backend, true, workers, policy);
        groups_[idx(SyncName::phase0)] = std::make_unique<detail::PointGroup>(backend, false, workers, policy);
        groups_[idx(SyncName::phase1)] = std::make_unique<detail::PointGroup>(backend, false, workers, policy);
    }
}

LadderBarrier::~LadderBarrier() = default;

void LadderBarrier::prepare() {
    lock_all(SyncName::work);
    group(SyncName::phase0).reset(true);
    group(SyncName::phase1).reset(true);
}

void LadderBarrier::lock_all(SyncName name) { group(name).lock_all(scheduler_counts_.counts); }
void LadderBarrier::unlock_all(SyncName name) { group(name).unlock_all(scheduler_counts_.counts); }
void LadderBarrier::wait_all(SyncName name) { group(name).wait_all(scheduler_counts_.counts); }

void LadderBarrier::lock(SyncName name, std::size_t worker) {
    group(name).lock(worker, worker_counts_[worker].counts);
}
void LadderBarrier::unlock(SyncName name, std::size_t worker) {
    group(name).unlock(worker, worker_counts_[worker].counts);
}
void LadderBarrier::wait(SyncName name, std::size_t worker) {
    group(name).wait(worker, worker_counts_[worker].counts);
}

SyncCounts LadderBarrier::total_counts() const {
    SyncCounts total = scheduler_counts_.counts;
    for (const auto& w : worker_counts_) {
        total += w.counts;
    }
    return total;
}

} // namespace lockstep
