#include "lockstep/metrics.hpp"

#include <algorithm>

namespace lockstep {

void PhaseTiming::record(PhaseKind kind, std::chrono::nanoseconds elapsed) noexcept {
    switch (kind) {
    case PhaseKind::work:
        work_ += elapsed;
        ++work_samples_;
        break;
    case PhaseKind::transfer:
        transfer_ += elapsed;
        ++transfer_samples_;
        break;
    case PhaseKind::barrier:
        barrier_ += elapsed;
        ++barrier_samples_;
        break;
    }
}

PhaseTiming& PhaseTiming::operator+=(const PhaseTiming& o) noexcept {
    work_ += o.work_;
    transfer_ += o.transfer_;
    barrier_ += o.barrier_;
    work_samples_ += o.work_samples_;
    transfer_samples_ += o.transfer_samples_;
    barrier_samples_ += o.barrier_samples_;
    total += o.total;
    return *this;
}

namespace {

template <class Get>
std::chrono::nanoseconds max_of(const std::vector<WorkerMetrics>& workers, Get get) {
    std::chrono::nanoseconds best{0};
    for (const auto& w : workers) {
        best = std::max(best, get(w.timing));
    }
    return best;
}

} // namespace

std::chrono::nanoseconds RunMetrics::max_work() const noexcept {
    return max_of(workers, [](const PhaseTiming& t) { return t.work(); });
}
std::chrono::nanoseconds RunMetrics::max_transfer() const noexcept {
    return max_of(workers, [](const PhaseTiming& t) { return t.transfer(); });
}
std::chrono::nanoseconds RunMetrics::max_barrier() const noexcept {
    return max_of(workers, [](const PhaseTiming& t) { return t.barrier(); });
}

PhaseTiming RunMetrics::summed() const noexcept {
    PhaseTiming sum;
    for (const auto& w : workers) {
        sum += w.timing;
    }
    return sum;
}

} // namespace lockstep
