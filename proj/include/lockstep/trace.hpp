#pragma once

#include "lockstep/types.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace lockstep {

/// Event kinds in canonical order. Within one (cycle, unit) the work-phase
/// kinds sort before the transfer-phase kinds.
enum class TraceKind : std::uint8_t {
    consume = 0, // unit polled a message from one of its input ports
    produce = 1, // unit submitted a message to one of its output ports
    held = 2,    // transfer from the unit's output port failed (receiver full)
    inject = 3,  // an external source attached to the unit delivered a message
    eject = 4,   // an external sink accepted a message from the unit's output
};

std::string_view to_string(TraceKind kind) noexcept;

struct TraceEvent {
    Cycle cycle = 0;
    UnitId unit = 0;
    TraceKind kind = TraceKind::consume;
    MessageId message = 0;
    // Diagnostics, not part of the canonical line.
    std::uint32_t port = kUnwired;
    Cycle send_cycle = 0;
};

/// Appends the canonical line "cycle,unit,kind,msg_id\n" to out.
void append_canonical_line(std::string& out, const TraceEvent& event);

/// 64-bit FNV-1a.
class Fnv1a64 {
public:
    static constexpr std::uint64_t kOffsetBasis = 0xcbf29ce484222325ULL;
    static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

    void update(std::string_view bytes) noexcept {
        for (unsigned char c : bytes) {
            hash_ ^= c;
            hash_ *= kPrime;
        }
    }
    std::uint64_t value() const noexcept { return hash_; }

private:
    std::uint64_t hash_ = kOffsetBasis;
};

/// Receives events in canonical order.
class TraceSink {
public:
    virtual ~TraceSink() = default;
    virtual void on_event(const TraceEvent& event) = 0;
    virtual void finish() {}
};

class TraceCollector final : public TraceSink {
public:
    void on_event(const TraceEvent& event) override { events_.push_back(event); }
    const std::vector<TraceEvent>& events() const noexcept { return events_; }

private:
    std::vector<TraceEvent> events_;
};

/// Writes canonical lines to a file; gzip-compressed when the path ends in ".gz".
class TraceFileWriter final : public TraceSink {
public:
    explicit TraceFileWriter(const std::string& path);
    ~TraceFileWriter() override;
    TraceFileWriter(const TraceFileWriter&) = delete;
    TraceFileWriter& operator=(const TraceFileWriter&) = delete;

    void on_event(const TraceEvent& event) override;
    void finish() override;

private:
    void flush();

    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::string buffer_;
};

/// Hash of the canonical trace plus fan-out to optional extra sinks.
class TraceRecorder {
public:
    explicit TraceRecorder(std::vector<TraceSink*> sinks = {}) : sinks_(std::move(sinks)) {}

    void record(const TraceEvent& event);
    void finish();

    std::uint64_t hash() const noexcept { return hasher_.value(); }
    std::uint64_t events() const noexcept { return count_; }

private:
    Fnv1a64 hasher_;
    std::vector<TraceSink*> sinks_;
    std::string line_;
    std::uint64_t count_ = 0;
};

/// Hash of an already canonical event sequence.
std::uint64_t trace_hash(const std::vector<TraceEvent>& events);

} // namespace lockstep
