#include "lockstep/executor.hpp"

#include "lockstep/random.hpp"

#include <pthread.h>
#include <sys/prctl.h>
#include <sched.h>

#include <exception>
#include <thread>

namespace lockstep {

double RunReport::sim_khz() const noexcept {
    const auto ns = metrics.wall.count();
    return ns > 0 ? static_cast<double>(cycles) * 1e6 / static_cast<double>(ns) : 0.0;
}

struct alignas(64) ParallelExecutor::WorkerSlot {
    WorkerMetrics metrics;
    bool stop = false;
    bool failed = false;
    RunError failure;
    SplitMix64 jitter;
    std::vector<PhaseEvent> log;
};

namespace {

void busy_delay(std::chrono::nanoseconds d) {
    if (d.count() <= 0) {
        return;
    }
    const auto until = Clock::now() + d;
    while (Clock::now() < until) {
        cpu_relax();
    }
}

void pin_current_thread(std::size_t index) {
    const unsigned contexts = std::thread::hardware_concurrency();
    if (contexts == 0) {
        return;
    }
    cpu_set_t set;
    CPU_ZERO(&set);
    CPU_SET(static_cast<int>(index % contexts), &set);
    pthread_setaffinity_np(pthread_self(), sizeof(set), &set);
}

void fine_timer_slack() {
#ifdef PR_SET_TIMERSLACK
    prctl(PR_SET_TIMERSLACK, 1UL, 0UL, 0UL, 0UL);
#endif
}

RunError describe(const std::exception_ptr& ep, std::optional<std::size_t> worker, std::optional<UnitId> unit,
                  Cycle cycle) {
    RunError e{"unknown error", worker, unit, cycle};
    try {
        std::rethrow_exception(ep);
    } catch (const UnitError& ue) {
        e.message = ue.what();
        e.unit = ue.unit();
    } catch (const std::exception& ex) {
        e.message = ex.what();
    } catch (...) {
    }
    return e;
}

} // namespace

ParallelExecutor::ParallelExecutor(Model& model, Partition partition, RunOptions options)
    : model_(model), partition_(std::move(partition)), options_(std::move(options)) {
    model_.validate();
    validate_partition(model_, partition_);
}

ParallelExecutor::~ParallelExecutor() = default;

RunReport ParallelExecutor::run(Cycle cycles) { return execute(cycles, std::nullopt); }

RunReport ParallelExecutor::run_for(std::chrono::nanoseconds budget) { return execute(0, budget); }

void ParallelExecutor::worker_task(std::size_t w, Cycle start) {
    WorkerSlot& slot = slots_[w];
    LadderBarrier& barrier = *barrier_;
    const std::vector<UnitId>& cluster = partition_.clusters[w];
    const bool timing = options_.timing;
    const bool logging = options_.phase_log;
    const auto jitter_max = options_.jitter_max;
    PhaseTiming& timer = slot.metrics.timing;

    if (options_.pin_threads) {
        pin_current_thread(w + 1);
    }
    if (options_.jitter_sleeps) {
        fine_timer_slack();
    }
    const auto thread_start = Clock::now();
    auto stamp = [&] { return timing ? Clock::now() : Clock::time_point{}; };
    auto jitter = [&] {
        if (jitter_max.count() > 0) {
            const std::chrono::nanoseconds d(
                static_cast<std::int64_t>(slot.jitter.below(static_cast<std::uint64_t>(jitter_max.count()) + 1)));
            if (options_.jitter_sleeps) {
                if (d.count() > 0) {
                    std::this_thread::sleep_for(d);
                }
            } else {
                busy_delay(d);
            }
        }
    };

    auto run_phase = [&](PhaseKind kind, Cycle t) {
        PhaseEvent ev{static_cast<std::uint32_t>(w), kind, t, 0, 0};
        if (logging) {
            ev.begin = sequence_.fetch_add(1, std::memory_order_relaxed);
        }
        if (!slot.failed) {
            UnitId current = 0;
            try {
                for (UnitId u : cluster) {
                    current = u;
                    if (kind == PhaseKind::work) {
                        model_.work_unit(u, t);
                    } else {
                        model_.transfer_unit(u, t);
                    }
                }
            } catch (...) {
                slot.failed = true;
                slot.failure = describe(std::current_exception(), w, current, t);
            }
        }
        jitter();
        if (logging) {
            ev.end = sequence_.fetch_add(1, std::memory_order_relaxed);
            slot.log.push_back(ev);
        }
    };

    barrier.wait(SyncName::work, w);
    barrier.unlock(SyncName::phase1, w);
    Cycle t = start;
    while (!slot.stop) {
        auto t0 = stamp();
        run_phase(PhaseKind::work, t);
        ++slot.metrics.work_phases;
        auto t1 = stamp();
        barrier.lock(SyncName::phase1, w);
        barrier.unlock(SyncName::phase0, w);
        barrier.wait(SyncName::transfer, w);
        auto t2 = stamp();

        run_phase(PhaseKind::transfer, t);
        ++slot.metrics.transfer_phases;
        ++t;
        auto t3 = stamp();
        barrier.lock(SyncName::phase0, w);
        barrier.unlock(SyncName::phase1, w);
        barrier.wait(SyncName::work, w);
        if (timing) {
            auto t4 = Clock::now();
            timer.record(PhaseKind::work, t1 - t0);
            timer.record(PhaseKind::barrier, t2 - t1);
            timer.record(PhaseKind::transfer, t3 - t2);
            timer.record(PhaseKind::barrier, t4 - t3);
        }
    }
    barrier.unlock(SyncName::phase0, w);
    timer.total = Clock::now() - thread_start;
}

void ParallelExecutor::check_agreement(Cycle completed, bool transfer) {
    for (std::size_t w = 0; w < slots_.size(); ++w) {
        const auto& m = slots_[w].metrics;
        const std::uint64_t n = transfer ? m.transfer_phases : m.work_phases;
        if (n != completed) {
            throw std::logic_error("worker " + std::to_string(w) + " completed " + std::to_string(n) + " " +
                                   (transfer ? "transfer" : "work") + " phases, scheduler expected " +
                                   std::to_string(completed));
        }
    }
}

void ParallelExecutor::tick(Cycle t, Cycle start, TraceRecorder& recorder) {
    LadderBarrier& barrier = *barrier_;
    // Checks and hooks must not leave the handshake half done, so their
    // failures are rethrown only once the cycle is complete.
    std::exception_ptr deferred;
    auto guarded = [&deferred](auto&& fn) {
        if (deferred) {
            return;
        }
        try {
            fn();
        } catch (...) {
            deferred = std::current_exception();
        }
    };

    barrier.lock_all(SyncName::transfer);
    barrier.unlock_all(SyncName::work);
    // Idle time of the scheduler: drain the previous cycle's trace events,
    // which live in the other half of each unit's double buffer.
    if (model_.tracing() && t > start) {
        guarded([&] { model_.drain_trace(t - 1, recorder); });
    }
    barrier.wait_all(SyncName::phase0);
    if (options_.check_agreement) {
        guarded([&] { check_agreement(t - start + 1, false); });
    }
    if (options_.on_boundary) {
        guarded([&] { options_.on_boundary(model_, t, Boundary::after_work); });
    }

    barrier.lock_all(SyncName::work);
    barrier.unlock_all(SyncName::transfer);
    barrier.wait_all(SyncName::phase1);
    if (options_.check_agreement) {
        guarded([&] { check_agreement(t - start + 1, true); });
    }
    if (options_.on_boundary) {
        guarded([&] { options_.on_boundary(model_, t, Boundary::after_transfer); });
    }
    if (deferred) {
        std::rethrow_exception(deferred);
    }
}

std::optional<RunError> ParallelExecutor::collect_failure() const {
    for (const auto& slot : slots_) {
        if (slot.failed) {
            return slot.failure;
        }
    }
    return std::nullopt;
}

RunReport ParallelExecutor::execute(Cycle cycles, std::optional<std::chrono::nanoseconds> budget) {
    const std::size_t workers = partition_.workers();
    const Cycle start = model_.clock();
    const SpinPolicy spin = options_.spin.value_or(auto_spin_policy(workers + 1));

    barrier_ = std::make_unique<LadderBarrier>(options_.backend, workers, spin);
    slots_ = std::vector<WorkerSlot>(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        slots_[w].jitter = SplitMix64(stream_seed(options_.jitter_seed, w));
    }
    sequence_.store(0, std::memory_order_relaxed);
    model_.set_tracing(options_.trace);
    TraceRecorder recorder(options_.trace_sinks);

    RunReport report;
    report.backend = options_.backend;
    report.workers = workers;
    report.start_cycle = start;

    barrier_->prepare();
    const auto wall_start = Clock::now();
    Cycle t = start;
    {
        std::vector<std::jthread> threads;
        threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            threads.emplace_back([this, w, start] { worker_task(w, start); });
        }

        try {
            if (budget) {
                const auto deadline = wall_start + *budget;
                for (;;) {
                    tick(t, start, recorder);
                    ++t;
                    if (collect_failure() || ((t - start) % 256 == 0 && Clock::now() >= deadline)) {
                        break;
                    }
                }
            } else {
                while (t < start + cycles) {
                    tick(t, start, recorder);
                    ++t;
                    if (collect_failure()) {
                        break;
                    }
                }
            }
        } catch (...) {
            // Only tick() throws, and only after completing its cycle.
            report.error = describe(std::current_exception(), std::nullopt, std::nullopt, t);
            ++t;
        }

        // Every worker is parked on WORK here (ticks always complete), so the
        // stop flags are published by the release below.
        for (auto& slot : slots_) {
            slot.stop = true;
        }
        barrier_->unlock_all(SyncName::work);
        barrier_->wait_all(SyncName::phase0);
    } // join
    report.metrics.wall = Clock::now() - wall_start;

    if (model_.tracing() && t > start) {
        model_.drain_trace(t - 1, recorder);
    }
    recorder.finish();
    model_.set_clock(t);

    report.cycles = t - start;
    report.metrics.cycles = report.cycles;
    report.metrics.workers.reserve(workers);
    for (auto& slot : slots_) {
        report.metrics.workers.push_back(slot.metrics);
        report.phase_log.insert(report.phase_log.end(), slot.log.begin(), slot.log.end());
    }
    report.sync = barrier_->total_counts();
    report.messages = model_.totals();
    if (options_.trace) {
        report.trace_hash = recorder.hash();
        report.trace_events = recorder.events();
    }
    if (!report.error) {
        report.error = collect_failure();
    }
    return report;
}

RunReport serial_run(Model& model, Cycle cycles, const RunOptions& options) {
    model.validate();
    const Cycle start = model.clock();
    model.set_tracing(options.trace);
    TraceRecorder recorder(options.trace_sinks);

    RunReport report;
    report.serial = true;
    report.workers = 1;
    report.start_cycle = start;
    report.metrics.workers.resize(1);
    WorkerMetrics& wm = report.metrics.workers[0];

    const auto wall_start = Clock::now();
    Cycle t = start;
    const auto n = static_cast<UnitId>(model.unit_count());
    try {
        for (; t < start + cycles; ++t) {
            auto t0 = Clock::now();
            UnitId u = 0;
            try {
                for (u = 0; u < n; ++u) {
                    model.work_unit(u, t);
                }
                auto t1 = Clock::now();
                ++wm.work_phases;
                if (options.on_boundary) {
                    options.on_boundary(model, t, Boundary::after_work);
                }
                auto t2 = Clock::now();
                for (u = 0; u < n; ++u) {
                    model.transfer_unit(u, t);
                }
                ++wm.transfer_phases;
                if (options.timing) {
                    wm.timing.record(PhaseKind::work, t1 - t0);
                    wm.timing.record(PhaseKind::transfer, Clock::now() - t2);
                }
            } catch (...) {
                report.error = describe(std::current_exception(), 0, u, t);
            }
            if (report.error) {
                break;
            }
            if (options.on_boundary) {
                options.on_boundary(model, t, Boundary::after_transfer);
            }
            if (model.tracing()) {
                model.drain_trace(t, recorder);
            }
        }
    } catch (...) {
        report.error = describe(std::current_exception(), std::nullopt, std::nullopt, t);
    }
    report.metrics.wall = Clock::now() - wall_start;
    wm.timing.total = report.metrics.wall;
    if (report.error && model.tracing()) {
        // Events of the failing cycle are partial; drop them.
        TraceRecorder discard;
        model.drain_trace(t, discard);
    }
    recorder.finish();
    model.set_clock(t);
    report.cycles = t - start;
    report.metrics.cycles = report.cycles;
    report.messages = model.totals();
    if (options.trace) {
        report.trace_hash = recorder.hash();
        report.trace_events = recorder.events();
    }
    return report;
}

} // namespace lockstep
