#pragma once

#include "lockstep/executor.hpp"
#include "lockstep/model.hpp"

#include <functional>
#include <map>
#include <optional>
#include <vector>

namespace lockstep::test {

/// Runs one body per cycle so tests can script a unit inline.
class Scripted final : public Unit {
public:
    explicit Scripted(std::function<void(UnitContext&)> body) : body_(std::move(body)) {}
    void work(UnitContext& ctx) override { body_(ctx); }

private:
    std::function<void(UnitContext&)> body_;
};

/// Sends a fresh message every cycle its output is vacant, from `first` up to `last`.
class Producer final : public Unit {
public:
    Producer(Cycle first = 0, Cycle last = ~Cycle{0}) : first_(first), last_(last) {}
    void work(UnitContext& ctx) override {
        const bool free = ctx.vacant(out);
        vacancy.push_back(free);
        if (ctx.cycle() >= first_ && ctx.cycle() <= last_ && free) {
            ctx.send(out, Payload::of(ctx.cycle()));
            sent.push_back(ctx.cycle());
        }
    }
    OutPortId out;
    std::vector<Cycle> sent;
    std::vector<bool> vacancy; // observed at the start of each work step

private:
    Cycle first_, last_;
};

/// Forwards its input to its output when the output is vacant.
class Relay final : public Unit {
public:
    void work(UnitContext& ctx) override {
        if (ctx.vacant(out)) {
            if (MessageHandle m = ctx.poll(in)) {
                seen.push_back(m.get());
                ctx.submit(out, std::move(m));
            }
        }
    }
    InPortId in;
    OutPortId out;
    std::vector<const Message*> seen;
};

struct Received {
    Cycle cycle;
    MessageId id;
    Cycle send_cycle;
    const Message* address;
};

/// Polls everything visible each cycle up to and including `last_poll`.
class Consumer final : public Unit {
public:
    explicit Consumer(Cycle last_poll = ~Cycle{0}) : last_poll_(last_poll) {}
    void work(UnitContext& ctx) override {
        if (ctx.cycle() > last_poll_) {
            return;
        }
        while (MessageHandle m = ctx.poll(in)) {
            got.push_back({ctx.cycle(), m->id, m->send_cycle, m.get()});
        }
    }
    InPortId in;
    std::vector<Received> got;

private:
    Cycle last_poll_;
};

/// Linear chain producer -> relays... -> consumer with identical port specs.
struct Chain {
    Model model;
    Producer* producer = nullptr;
    std::vector<Relay*> relays;
    Consumer* consumer = nullptr;
};

inline Chain make_chain(std::size_t relays, PortSpec spec, Cycle last_poll = ~Cycle{0}, Cycle last_send = ~Cycle{0}) {
    Chain c;
    c.producer = &c.model.emplace_unit<Producer>("src", Cycle{0}, last_send);
    for (std::size_t i = 0; i < relays; ++i) {
        c.relays.push_back(&c.model.emplace_unit<Relay>("relay" + std::to_string(i)));
    }
    c.consumer = &c.model.emplace_unit<Consumer>("sink", last_poll);
    c.producer->out = c.model.add_output(0);
    OutPortId prev = c.producer->out;
    for (std::size_t i = 0; i < relays; ++i) {
        const auto u = static_cast<UnitId>(i + 1);
        c.relays[i]->in = c.model.add_input(u, spec);
        c.model.connect(prev, c.relays[i]->in);
        c.relays[i]->out = c.model.add_output(u);
        prev = c.relays[i]->out;
    }
    c.consumer->in = c.model.add_input(static_cast<UnitId>(relays + 1), spec);
    c.model.connect(prev, c.consumer->in);
    c.model.validate();
    return c;
}

inline std::vector<TraceEvent> collect_serial(Model& model, Cycle cycles) {
    TraceCollector collector;
    RunOptions o;
    o.trace_sinks = {&collector};
    serial_run(model, cycles, o);
    return collector.events();
}

/// First cycle at which each unit recorded a `held` transfer.
inline std::map<UnitId, Cycle> first_held(const std::vector<TraceEvent>& events) {
    std::map<UnitId, Cycle> out;
    for (const auto& e : events) {
        if (e.kind == TraceKind::held && !out.contains(e.unit)) {
            out[e.unit] = e.cycle;
        }
    }
    return out;
}

} // namespace lockstep::test
