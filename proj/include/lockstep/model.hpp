#pragma once

#include "lockstep/message.hpp"
#include "lockstep/random.hpp"
#include "lockstep/trace.hpp"
#include "lockstep/types.hpp"

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lockstep {

/// Invalid model construction (wiring, parameters).
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A unit broke the work-phase discipline at run time.
class UnitError : public std::runtime_error {
public:
    UnitError(UnitId unit, Cycle cycle, const std::string& what);
    UnitId unit() const noexcept { return unit_; }
    Cycle cycle() const noexcept { return cycle_; }

private:
    UnitId unit_;
    Cycle cycle_;
};

struct PortSpec {
    std::uint32_t capacity = 1; // buffered messages, in-flight entries included
    std::uint32_t delay = 1;    // visibility delay in cycles
};

enum class PortDirection : std::uint8_t { input, output };

/// Direction-tagged port reference for the runtime-checked connect overload.
struct PortRef {
    PortDirection direction;
    std::uint32_t index;
    PortRef(InPortId p) : direction(PortDirection::input), index(p.value) {}   // NOLINT
    PortRef(OutPortId p) : direction(PortDirection::output), index(p.value) {} // NOLINT
};

class UnitContext;

/// A simulated hardware element. work() runs once per cycle and may touch
/// only the unit's own state and ports, through the context.
class Unit {
public:
    virtual ~Unit() = default;
    virtual void work(UnitContext& ctx) = 0;
};

/// External stimulus for an input port: called in the transfer phase of every
/// cycle in which the source slot is empty. Must be a pure function of the cycle.
using StimulusFn = std::function<std::optional<Payload>(Cycle)>;

struct UnitStats {
    std::uint64_t created = 0;  // fresh messages (send)
    std::uint64_t submits = 0;  // send + forwarded submits
    std::uint64_t polls = 0;
    std::uint64_t moved = 0;    // successful transfers out of this unit's output ports
    std::uint64_t held = 0;     // failed transfers (implicit back-pressure)
    std::uint64_t injects = 0;  // external stimulus delivered into this unit's inputs
    std::uint64_t ejects = 0;   // messages accepted by external sinks on this unit's outputs

    UnitStats& operator+=(const UnitStats& o) noexcept;
};

struct alignas(64) OutputPort {
    UnitId owner = 0;
    std::uint32_t peer = kUnwired; // input port index
    bool external_sink = false;
    MessageHandle pending;
    std::uint64_t submits = 0;
    std::uint64_t held = 0;
};

struct alignas(64) InputPort {
    struct Entry {
        MessageHandle message;
        Cycle visible = 0;
    };

    UnitId owner = 0;
    PortSpec spec;
    std::uint32_t writer = kUnwired; // output port index, or kExternalWriter
    std::vector<Entry> ring;
    std::uint32_t head = 0;
    std::uint32_t size = 0;
    std::uint64_t appends = 0;

    static constexpr std::uint32_t kExternalWriter = kUnwired - 1;

    bool full() const noexcept { return size >= spec.capacity; }
    const Entry& front() const noexcept { return ring[head]; }
    void push(MessageHandle message, Cycle visible);
    MessageHandle pop();
};

struct ExternalSource {
    std::uint32_t target = kUnwired;
    StimulusFn stimulus;
    MessageHandle pending;
};

/// Totals over all units plus the current port occupancy.
struct MessageTotals {
    UnitStats units;
    std::uint64_t pending_outputs = 0;
    std::uint64_t queued_inputs = 0;

    /// submits + injects == polls + ejects + pending + queued.
    bool conserved() const noexcept {
        return units.submits + units.injects == units.polls + units.ejects + pending_outputs + queued_inputs;
    }
};

/// Units, ports and their point-to-point wiring, plus the per-cycle work and
/// transfer steps that both executors drive.
class Model {
public:
    explicit Model(std::uint64_t seed = 0) : seed_(seed) {}
    Model(Model&&) noexcept = default;
    Model& operator=(Model&&) noexcept = default;

    UnitId add_unit(std::string name, std::unique_ptr<Unit> unit);

    template <class T, class... Args>
    T& emplace_unit(std::string name, Args&&... args) {
        auto owned = std::make_unique<T>(std::forward<Args>(args)...);
        T& ref = *owned;
        add_unit(std::move(name), std::move(owned));
        return ref;
    }

    InPortId add_input(UnitId unit, PortSpec spec = {});
    OutPortId add_output(UnitId unit);

    void connect(OutPortId out, InPortId in);
    void connect(PortRef from, PortRef to);
    void attach_source(InPortId in, StimulusFn stimulus);
    void attach_sink(OutPortId out);

    /// Checks that every port is wired. Throws ModelError naming the dangling ports.
    void validate();
    bool validated() const noexcept { return validated_; }

    std::size_t unit_count() const noexcept { return units_.size(); }
    std::size_t input_count() const noexcept { return inputs_.size(); }
    std::size_t output_count() const noexcept { return outputs_.size(); }
    Unit& unit(UnitId id) { return *units_.at(id).unit; }
    const std::string& unit_name(UnitId id) const { return units_.at(id).name; }
    const std::vector<InPortId>& inputs_of(UnitId id) const { return units_.at(id).inputs; }
    const std::vector<OutPortId>& outputs_of(UnitId id) const { return units_.at(id).outputs; }
    const InputPort& input(InPortId id) const { return inputs_.at(id.value); }
    const OutputPort& output(OutPortId id) const { return outputs_.at(id.value); }
    const UnitStats& stats(UnitId id) const { return units_.at(id).stats; }
    std::uint64_t seed() const noexcept { return seed_; }

    MessageTotals totals() const;

    // Execution steps. Each call touches only state owned by `unit` in the
    // corresponding phase (its own ports in work, its outgoing links in
    // transfer), which is what lets executors run distinct units concurrently.
    void work_unit(UnitId unit, Cycle cycle);
    void transfer_unit(UnitId unit, Cycle cycle);

    /// First cycle the next run will execute.
    Cycle clock() const noexcept { return clock_; }
    void set_clock(Cycle cycle) noexcept { clock_ = cycle; }

    void set_tracing(bool enabled) noexcept { tracing_ = enabled; }
    bool tracing() const noexcept { return tracing_; }
    /// Emits the buffered events of `cycle` in canonical order and clears them.
    void drain_trace(Cycle cycle, TraceRecorder& recorder);

private:
    friend class UnitContext;

    struct alignas(64) UnitRecord {
        std::unique_ptr<Unit> unit;
        std::string name;
        std::vector<InPortId> inputs;
        std::vector<OutPortId> outputs;
        std::vector<std::uint32_t> sources;
        SplitMix64 rng;
        std::uint32_t next_sequence = 0;
        std::uint32_t next_external_sequence = 0;
        UnitStats stats;
        std::array<std::vector<TraceEvent>, 2> trace;
    };

    void require_unvalidated() const;
    void transfer_output(UnitRecord& rec, OutPortId id, Cycle cycle);
    void transfer_source(UnitRecord& rec, UnitId unit, ExternalSource& src, Cycle cycle);
    void trace_event(UnitRecord& rec, TraceEvent event) {
        if (tracing_) {
            rec.trace[event.cycle & 1].push_back(event);
        }
    }

    std::uint64_t seed_;
    std::vector<UnitRecord> units_;
    std::vector<InputPort> inputs_;
    std::vector<OutputPort> outputs_;
    std::vector<ExternalSource> sources_;
    Cycle clock_ = 0;
    bool validated_ = false;
    bool tracing_ = false;
};

/// The only view a unit has of the simulation during its work step.
class UnitContext {
public:
    UnitContext(Model& model, UnitId unit, Cycle cycle) noexcept;

    Cycle cycle() const noexcept { return cycle_; }
    UnitId unit() const noexcept { return unit_; }
    SplitMix64& rng() noexcept { return rec_.rng; }

    /// Removes and returns the oldest visible message, or null.
    MessageHandle poll(InPortId in);
    /// Oldest visible message without removing it, or null.
    const Message* peek(InPortId in) const;
    /// Number of messages visible at this cycle.
    std::size_t visible(InPortId in) const;

    bool vacant(OutPortId out) const;
    /// Creates a fresh message carrying `payload` and submits it.
    MessageId send(OutPortId out, const Payload& payload);
    /// Submits an existing message (forwarding); keeps its id.
    void submit(OutPortId out, MessageHandle message);

private:
    InputPort& own_input(InPortId in) const;
    OutputPort& own_output(OutPortId out) const;

    Model& model_;
    Model::UnitRecord& rec_;
    UnitId unit_;
    Cycle cycle_;
};

} // namespace lockstep
