#include "lockstep/model.hpp"

#include <algorithm>
#include <sstream>

namespace lockstep {

namespace {

std::string port_name(PortDirection dir, std::uint32_t index) {
    return (dir == PortDirection::input ? "in" : "out") + std::to_string(index);
}

} // namespace

UnitError::UnitError(UnitId unit, Cycle cycle, const std::string& what)
    : std::runtime_error("unit " + std::to_string(unit) + " at cycle " + std::to_string(cycle) + ": " + what),
      unit_(unit), cycle_(cycle) {}

UnitStats& UnitStats::operator+=(const UnitStats& o) noexcept {
    created += o.created;
    submits += o.submits;
    polls += o.polls;
    moved += o.moved;
    held += o.held;
    injects += o.injects;
    ejects += o.ejects;
    return *this;
}

void InputPort::push(MessageHandle message, Cycle visible) {
    std::uint32_t tail = (head + size) % spec.capacity;
    ring[tail] = Entry{std::move(message), visible};
    ++size;
    ++appends;
}

MessageHandle InputPort::pop() {
    MessageHandle m = std::move(ring[head].message);
    head = (head + 1) % spec.capacity;
    --size;
    return m;
}

void Model::require_unvalidated() const {
    if (validated_) {
        throw ModelError("model is already validated; units and ports are fixed");
    }
}

UnitId Model::add_unit(std::string name, std::unique_ptr<Unit> unit) {
    require_unvalidated();
    if (!unit) {
        throw ModelError("add_unit: null unit '" + name + "'");
    }
    auto id = static_cast<UnitId>(units_.size());
    UnitRecord rec;
    rec.unit = std::move(unit);
    rec.name = std::move(name);
    rec.rng = SplitMix64(stream_seed(seed_, id));
    units_.push_back(std::move(rec));
    return id;
}

InPortId Model::add_input(UnitId unit, PortSpec spec) {
    require_unvalidated();
    if (unit >= units_.size()) {
        throw ModelError("add_input: unknown unit " + std::to_string(unit));
    }
    if (spec.capacity < 1 || spec.delay < 1) {
        throw ModelError("add_input: capacity and delay must be >= 1");
    }
    InputPort port;
    port.owner = unit;
    port.spec = spec;
    port.ring.resize(spec.capacity);
    InPortId id{static_cast<std::uint32_t>(inputs_.size())};
    inputs_.push_back(std::move(port));
    units_[unit].inputs.push_back(id);
    return id;
}

OutPortId Model::add_output(UnitId unit) {
    require_unvalidated();
    if (unit >= units_.size()) {
        throw ModelError("add_output: unknown unit " + std::to_string(unit));
    }
    OutputPort port;
    port.owner = unit;
    OutPortId id{static_cast<std::uint32_t>(outputs_.size())};
    outputs_.push_back(std::move(port));
    units_[unit].outputs.push_back(id);
    return id;
}

void Model::connect(OutPortId out, InPortId in) { connect(PortRef(out), PortRef(in)); }

void Model::connect(PortRef from, PortRef to) {
    require_unvalidated();
    const std::string a = port_name(from.direction, from.index);
    const std::string b = port_name(to.direction, to.index);
    if (from.direction == to.direction) {
        throw ModelError("connect(" + a + ", " + b + "): both ports have the same direction");
    }
    if (from.direction == PortDirection::input) {
        std::swap(from, to);
    }
    if (from.index >= outputs_.size() || to.index >= inputs_.size()) {
        throw ModelError("connect(" + a + ", " + b + "): unknown port");
    }
    OutputPort& out = outputs_[from.index];
    InputPort& in = inputs_[to.index];
    if (out.peer != kUnwired || out.external_sink || in.writer != kUnwired) {
        throw ModelError("connect(" + a + ", " + b + "): port already wired");
    }
    out.peer = to.index;
    in.writer = from.index;
}

void Model::attach_source(InPortId in, StimulusFn stimulus) {
    require_unvalidated();
    if (in.value >= inputs_.size()) {
        throw ModelError("attach_source: unknown port " + port_name(PortDirection::input, in.value));
    }
    InputPort& port = inputs_[in.value];
    if (port.writer != kUnwired) {
        throw ModelError("attach_source(" + port_name(PortDirection::input, in.value) + "): port already wired");
    }
    if (!stimulus) {
        throw ModelError("attach_source: empty stimulus");
    }
    port.writer = InputPort::kExternalWriter;
    sources_.push_back(ExternalSource{in.value, std::move(stimulus), nullptr});
    units_[port.owner].sources.push_back(static_cast<std::uint32_t>(sources_.size() - 1));
}

void Model::attach_sink(OutPortId out) {
    require_unvalidated();
    if (out.value >= outputs_.size()) {
        throw ModelError("attach_sink: unknown port " + port_name(PortDirection::output, out.value));
    }
    OutputPort& port = outputs_[out.value];
    if (port.peer != kUnwired || port.external_sink) {
        throw ModelError("attach_sink(" + port_name(PortDirection::output, out.value) + "): port already wired");
    }
    port.external_sink = true;
}

void Model::validate() {
    if (validated_) {
        return;
    }
    std::ostringstream dangling;
    int count = 0;
    for (std::uint32_t i = 0; i < outputs_.size(); ++i) {
        if (outputs_[i].peer == kUnwired && !outputs_[i].external_sink) {
            dangling << (count++ ? ", " : "") << port_name(PortDirection::output, i) << " (unit "
                     << outputs_[i].owner << ")";
        }
    }
    for (std::uint32_t i = 0; i < inputs_.size(); ++i) {
        if (inputs_[i].writer == kUnwired) {
            dangling << (count++ ? ", " : "") << port_name(PortDirection::input, i) << " (unit "
                     << inputs_[i].owner << ")";
        }
    }
    if (count > 0) {
        throw ModelError("unwired ports: " + dangling.str());
    }
    validated_ = true;
}

MessageTotals Model::totals() const {
    MessageTotals t;
    for (const auto& rec : units_) {
        t.units += rec.stats;
    }
    for (const auto& out : outputs_) {
        t.pending_outputs += out.pending ? 1 : 0;
    }
    for (const auto& in : inputs_) {
        t.queued_inputs += in.size;
    }
    return t;
}

void Model::work_unit(UnitId unit, Cycle cycle) {
    UnitContext ctx(*this, unit, cycle);
    units_[unit].unit->work(ctx);
}

void Model::transfer_output(UnitRecord& rec, OutPortId id, Cycle cycle) {
    OutputPort& out = outputs_[id.value];
    if (!out.pending) {
        return;
    }
    if (out.external_sink) {
        trace_event(rec, {cycle, out.owner, TraceKind::eject, out.pending->id, id.value, out.pending->send_cycle});
        out.pending.reset();
        ++rec.stats.ejects;
        ++rec.stats.moved;
        return;
    }
    InputPort& in = inputs_[out.peer];
    if (in.writer != id.value) {
        throw UnitError(out.owner, cycle, "contention: input port written by a foreign output");
    }
    if (in.full()) {
        ++out.held;
        ++rec.stats.held;
        trace_event(rec, {cycle, out.owner, TraceKind::held, out.pending->id, id.value, out.pending->send_cycle});
        return;
    }
    in.push(std::move(out.pending), cycle + in.spec.delay);
    ++rec.stats.moved;
}

void Model::transfer_source(UnitRecord& rec, UnitId unit, ExternalSource& src, Cycle cycle) {
    if (!src.pending) {
        std::optional<Payload> payload = src.stimulus(cycle);
        if (!payload) {
            return;
        }
        if (rec.next_external_sequence >= kExternalSequenceBit) {
            throw UnitError(unit, cycle, "external message sequence exhausted");
        }
        auto msg = std::make_unique<Message>();
        msg->id = make_message_id(unit, kExternalSequenceBit | rec.next_external_sequence++);
        msg->send_cycle = cycle;
        msg->source = unit;
        msg->payload = *payload;
        src.pending = std::move(msg);
    }
    InputPort& in = inputs_[src.target];
    if (in.full()) {
        return;
    }
    trace_event(rec, {cycle, unit, TraceKind::inject, src.pending->id, src.target, src.pending->send_cycle});
    in.push(std::move(src.pending), cycle + in.spec.delay);
    ++rec.stats.injects;
}

void Model::transfer_unit(UnitId unit, Cycle cycle) {
    UnitRecord& rec = units_[unit];
    for (OutPortId out : rec.outputs) {
        transfer_output(rec, out, cycle);
    }
    for (std::uint32_t s : rec.sources) {
        transfer_source(rec, unit, sources_[s], cycle);
    }
}

void Model::drain_trace(Cycle cycle, TraceRecorder& recorder) {
    for (auto& rec : units_) {
        auto& buf = rec.trace[cycle & 1];
        std::stable_sort(buf.begin(), buf.end(),
                         [](const TraceEvent& a, const TraceEvent& b) { return a.kind < b.kind; });
        for (const auto& e : buf) {
            recorder.record(e);
        }
        buf.clear();
    }
}

UnitContext::UnitContext(Model& model, UnitId unit, Cycle cycle) noexcept
    : model_(model), rec_(model.units_[unit]), unit_(unit), cycle_(cycle) {}

InputPort& UnitContext::own_input(InPortId in) const {
    if (in.value >= model_.inputs_.size() || model_.inputs_[in.value].owner != unit_) {
        throw UnitError(unit_, cycle_, "access to foreign input port in" + std::to_string(in.value));
    }
    return model_.inputs_[in.value];
}

OutputPort& UnitContext::own_output(OutPortId out) const {
    if (out.value >= model_.outputs_.size() || model_.outputs_[out.value].owner != unit_) {
        throw UnitError(unit_, cycle_, "access to foreign output port out" + std::to_string(out.value));
    }
    return model_.outputs_[out.value];
}

MessageHandle UnitContext::poll(InPortId in) {
    InputPort& port = own_input(in);
    if (port.size == 0 || port.front().visible > cycle_) {
        return nullptr;
    }
    MessageHandle m = port.pop();
    ++rec_.stats.polls;
    model_.trace_event(rec_, {cycle_, unit_, TraceKind::consume, m->id, in.value, m->send_cycle});
    return m;
}

const Message* UnitContext::peek(InPortId in) const {
    const InputPort& port = own_input(in);
    if (port.size == 0 || port.front().visible > cycle_) {
        return nullptr;
    }
    return port.front().message.get();
}

std::size_t UnitContext::visible(InPortId in) const {
    const InputPort& port = own_input(in);
    std::size_t n = 0;
    for (std::uint32_t i = 0; i < port.size; ++i) {
        // Entries are appended in transfer order with a fixed delay, so
        // visibility is monotone along the queue.
        if (port.ring[(port.head + i) % port.spec.capacity].visible > cycle_) {
            break;
        }
        ++n;
    }
    return n;
}

bool UnitContext::vacant(OutPortId out) const { return !own_output(out).pending; }

MessageId UnitContext::send(OutPortId out, const Payload& payload) {
    OutputPort& port = own_output(out);
    if (port.pending) {
        throw UnitError(unit_, cycle_, "submit to occupied output port out" + std::to_string(out.value));
    }
    if (rec_.next_sequence >= kExternalSequenceBit) {
        throw UnitError(unit_, cycle_, "message sequence exhausted");
    }
    auto msg = std::make_unique<Message>();
    msg->id = make_message_id(unit_, rec_.next_sequence++);
    msg->payload = payload;
    ++rec_.stats.created;
    MessageId id = msg->id;
    submit(out, std::move(msg));
    return id;
}

void UnitContext::submit(OutPortId out, MessageHandle message) {
    OutputPort& port = own_output(out);
    if (!message) {
        throw UnitError(unit_, cycle_, "submit of a null message to out" + std::to_string(out.value));
    }
    if (port.pending) {
        throw UnitError(unit_, cycle_, "submit to occupied output port out" + std::to_string(out.value));
    }
    message->send_cycle = cycle_;
    message->source = unit_;
    model_.trace_event(rec_, {cycle_, unit_, TraceKind::produce, message->id, out.value, cycle_});
    port.pending = std::move(message);
    ++port.submits;
    ++rec_.stats.submits;
}

} // namespace lockstep
