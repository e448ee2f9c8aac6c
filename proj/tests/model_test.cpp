#include "support.hpp"

#include "lockstep/models/random_model.hpp"

#include <doctest.h>

#include <array>

using namespace lockstep;
using namespace lockstep::test;

namespace {

class Idle final : public Unit {
public:
    void work(UnitContext&) override {}
};

void step(Model& m, Cycle t) {
    for (UnitId u = 0; u < m.unit_count(); ++u) {
        m.work_unit(u, t);
    }
    for (UnitId u = 0; u < m.unit_count(); ++u) {
        m.transfer_unit(u, t);
    }
}

/// Consumes from one port starting at `first_poll` and records arrival cycles.
class LateConsumer final : public Unit {
public:
    explicit LateConsumer(Cycle first_poll) : first_poll_(first_poll) {}
    void work(UnitContext& ctx) override {
        if (ctx.cycle() < first_poll_) {
            return;
        }
        visible_at_first_poll = visible_at_first_poll.value_or(ctx.visible(in));
        while (MessageHandle m = ctx.poll(in)) {
            cycles.push_back(ctx.cycle());
        }
    }
    InPortId in;
    std::vector<Cycle> cycles;
    std::optional<std::size_t> visible_at_first_poll;

private:
    Cycle first_poll_;
};

/// Stage that spends one work cycle on each input and emits the result on a
/// port with delay k: a k-cycle operation.
class Op final : public Unit {
public:
    void work(UnitContext& ctx) override {
        if (!ctx.vacant(out)) {
            return;
        }
        if (MessageHandle m = ctx.poll(in)) {
            ctx.send(out, Payload::of(m->payload.as<Cycle>()));
        }
    }
    InPortId in;
    OutPortId out;
};

class ValueSink final : public Unit {
public:
    void work(UnitContext& ctx) override {
        while (MessageHandle m = ctx.poll(in)) {
            got.emplace_back(m->payload.as<Cycle>(), ctx.cycle());
        }
    }
    InPortId in;
    std::vector<std::pair<Cycle, Cycle>> got; // (issue cycle, result cycle)
};

/// Independent brute-force model of a capacity-1, delay-1 chain: `stages`
/// senders in a row (stage 0 produces every cycle), then a sink that polls
/// through `last_poll`. Returns the first held cycle per stage.
std::vector<std::optional<Cycle>> ripple_oracle(std::size_t stages, Cycle last_poll, Cycle cycles) {
    std::vector<bool> pending(stages, false);
    std::vector<std::optional<Cycle>> in_visible(stages + 1); // input of stage i (i >= 1) and of the sink
    std::vector<std::optional<Cycle>> held(stages);
    for (Cycle t = 0; t < cycles; ++t) {
        if (!pending[0]) {
            pending[0] = true;
        }
        for (std::size_t i = 1; i < stages; ++i) {
            if (!pending[i] && in_visible[i] && *in_visible[i] <= t) {
                in_visible[i].reset();
                pending[i] = true;
            }
        }
        if (t <= last_poll && in_visible[stages] && *in_visible[stages] <= t) {
            in_visible[stages].reset();
        }
        for (std::size_t i = 0; i < stages; ++i) {
            if (!pending[i]) {
                continue;
            }
            if (in_visible[i + 1]) {
                held[i] = held[i].value_or(t);
            } else {
                in_visible[i + 1] = t + 1;
                pending[i] = false;
            }
        }
    }
    return held;
}

} // namespace

TEST_SUITE("core-model") {
    TEST_CASE("connect: point-to-point wiring rules") {
        Model m;
        m.emplace_unit<Idle>("a");
        m.emplace_unit<Idle>("b");
        const OutPortId out0 = m.add_output(0);
        const InPortId in1 = m.add_input(1);
        const InPortId in2 = m.add_input(1);
        const OutPortId out1 = m.add_output(1);

        m.connect(out0, in1);
        SUBCASE("double wiring names both ports") {
            try {
                m.connect(out0, in2);
                FAIL("expected ModelError");
            } catch (const ModelError& e) {
                const std::string what = e.what();
                CHECK(what.find("out0") != std::string::npos);
                CHECK(what.find("in1") != std::string::npos);
            }
            CHECK_THROWS_AS(m.connect(out1, in1), ModelError);
        }
        SUBCASE("same direction") {
            CHECK_THROWS_AS(m.connect(PortRef(in1), PortRef(in2)), ModelError);
            CHECK_THROWS_AS(m.connect(PortRef(out0), PortRef(out1)), ModelError);
        }
        SUBCASE("dangling ports fail validation") {
            CHECK_THROWS_AS(m.validate(), ModelError);
            m.connect(PortRef(out1), PortRef(in2));
            CHECK_NOTHROW(m.validate());
            CHECK(m.validated());
        }
    }

    TEST_CASE("a 4-unit chain validates") {
        Model m;
        for (int i = 0; i < 4; ++i) {
            m.emplace_unit<Idle>("u" + std::to_string(i));
        }
        for (UnitId u = 0; u < 3; ++u) {
            m.connect(m.add_output(u), m.add_input(u + 1));
        }
        CHECK_NOTHROW(m.validate());
    }

    TEST_CASE("feedback loops are legal") {
        Model m;
        auto& p = m.emplace_unit<Relay>("self");
        p.in = m.add_input(0);
        p.out = m.add_output(0);
        m.connect(p.out, p.in);
        CHECK_NOTHROW(m.validate());
        CHECK(serial_run(m, 10).ok());
    }

    TEST_CASE("submit stamps send cycle and source; ids are partition independent") {
        Model m;
        OutPortId out;
        std::vector<MessageId> ids;
        m.add_unit("idle", std::make_unique<Idle>());
        m.add_unit("s", std::make_unique<Scripted>([&](UnitContext& ctx) {
            if (ctx.vacant(out)) {
                ids.push_back(ctx.send(out, Payload::of(1)));
            }
        }));
        auto& sink = m.emplace_unit<Consumer>("sink");
        out = m.add_output(1);
        sink.in = m.add_input(2);
        m.connect(out, sink.in);
        m.validate();
        for (Cycle t = 0; t < 7; ++t) {
            step(m, t);
        }
        for (UnitId u = 0; u < 3; ++u) {
            m.work_unit(u, 7);
        }
        REQUIRE(m.output(out).pending);
        CHECK(m.output(out).pending->send_cycle == 7);
        CHECK(m.output(out).pending->source == 1);
        REQUIRE(ids.size() == 8);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            CHECK(ids[i] == ((std::uint64_t{1} << 32) | i));
        }
        CHECK(sink.got.front().send_cycle == 0);
        CHECK(sink.got.front().cycle == 1);
    }

    TEST_CASE("submit to an occupied port is a run-time error naming unit and cycle") {
        Model m;
        OutPortId out;
        m.add_unit("careless", std::make_unique<Scripted>([&](UnitContext& ctx) { ctx.send(out, Payload::of(1)); }));
        auto& sink = m.emplace_unit<Consumer>("sink", 0); // stops polling after cycle 0
        out = m.add_output(0);
        sink.in = m.add_input(1);
        m.connect(out, sink.in);
        m.validate();
        step(m, 0);
        step(m, 1); // the sink never polls again, so this message stays pending
        try {
            step(m, 2);
            FAIL("expected UnitError");
        } catch (const UnitError& e) {
            CHECK(e.unit() == 0);
            CHECK(e.cycle() == 2);
        }

        Model m2;
        OutPortId o2;
        m2.add_unit("careless", std::make_unique<Scripted>([&](UnitContext& ctx) { ctx.send(o2, Payload::of(1)); }));
        auto& s2 = m2.emplace_unit<Consumer>("sink", 0);
        o2 = m2.add_output(0);
        s2.in = m2.add_input(1);
        m2.connect(o2, s2.in);
        m2.validate();
        const RunReport r = serial_run(m2, 10);
        REQUIRE_FALSE(r.ok());
        CHECK(r.error->unit == 0u);
        CHECK(r.error->cycle == 2);
        CHECK(r.error->message.find("occupied") != std::string::npos);
    }

    TEST_CASE("vacancy: fresh, after a failed transfer, after a successful transfer") {
        Chain blocked = make_chain(0, {1, 1}, 0); // sink polls only at cycle 0
        for (Cycle t = 0; t < 4; ++t) {
            step(blocked.model, t);
        }
        CHECK(blocked.producer->vacancy.front());
        CHECK(blocked.producer->sent == std::vector<Cycle>{0, 1});
        // message 1 is held at cycle 1, so the port is still occupied at cycle 2
        CHECK(blocked.producer->vacancy[1]);
        CHECK_FALSE(blocked.producer->vacancy[2]);

        Chain flowing = make_chain(0, {1, 1});
        for (Cycle t = 0; t < 4; ++t) {
            step(flowing.model, t);
        }
        CHECK(flowing.producer->sent == std::vector<Cycle>{0, 1, 2, 3});
        CHECK(flowing.producer->vacancy == std::vector<bool>{true, true, true, true});
    }

    TEST_CASE("poll honours the visibility delay") {
        for (std::uint32_t d : {1u, 2u, 3u}) {
            CAPTURE(d);
            Model m;
            auto& p = m.emplace_unit<Producer>("p", 5, 5);
            auto& c = m.emplace_unit<Consumer>("c");
            p.out = m.add_output(0);
            c.in = m.add_input(1, {1, d});
            m.connect(p.out, c.in);
            m.validate();
            serial_run(m, 20);
            REQUIRE(c.got.size() == 1);
            CHECK(c.got[0].cycle == 5 + d);
        }
    }

    TEST_CASE("capacity-1 port at full rate: one message per cycle, no holds") {
        Chain c = make_chain(0, {1, 1});
        const auto events = collect_serial(c.model, 100);
        REQUIRE(c.consumer->got.size() == 99);
        for (std::size_t i = 0; i < c.consumer->got.size(); ++i) {
            CHECK(c.consumer->got[i].cycle == i + 1);
        }
        CHECK(first_held(events).empty());
    }

    TEST_CASE("in-flight entries occupy capacity") {
        Chain c = make_chain(0, {1, 3});
        serial_run(c.model, 20);
        std::vector<Cycle> arrivals;
        for (const auto& r : c.consumer->got) {
            arrivals.push_back(r.cycle);
        }
        CHECK(arrivals == std::vector<Cycle>{3, 6, 9, 12, 15, 18});

        Chain wide = make_chain(0, {3, 3});
        serial_run(wide.model, 20);
        CHECK(wide.consumer->got.size() == 17);
    }

    TEST_CASE("an input port can be polled repeatedly within one cycle") {
        Model m;
        auto& p = m.emplace_unit<Producer>("p");
        auto& c = m.emplace_unit<LateConsumer>("c", 6);
        p.out = m.add_output(0);
        c.in = m.add_input(1, {4, 1});
        m.connect(p.out, c.in);
        m.validate();
        serial_run(m, 7);
        CHECK(c.visible_at_first_poll == 4u);
        CHECK(c.cycles == std::vector<Cycle>{6, 6, 6, 6});
    }

    TEST_CASE("multi-cycle operations match the hand schedule for k = 1, 2, 3") {
        for (std::uint32_t k : {1u, 2u, 3u}) {
            CAPTURE(k);
            Model m;
            auto& p = m.emplace_unit<Producer>("p", 0, 9);
            auto& op = m.emplace_unit<Op>("op");
            auto& sink = m.emplace_unit<ValueSink>("sink");
            p.out = m.add_output(0);
            op.in = m.add_input(1);
            m.connect(p.out, op.in);
            op.out = m.add_output(1);
            sink.in = m.add_input(2, {k, k});
            m.connect(op.out, sink.in);
            m.validate();
            serial_run(m, 30);
            // issued at t, operand visible at t+1, result visible k cycles after the op's work step
            REQUIRE(sink.got.size() == 10);
            for (const auto& [issued, done] : sink.got) {
                CHECK(done == issued + 1 + k);
            }
        }
    }

    TEST_CASE("back-pressure ripples one stage per cycle") {
        const Cycle T = 10;
        Chain c = make_chain(3, {1, 1}, T);
        const auto held = first_held(collect_serial(c.model, 40));
        const auto oracle = ripple_oracle(4, T, 40);
        // stage s (0 = producer) sits at distance 4 - s from the sink
        for (UnitId s = 0; s < 4; ++s) {
            CAPTURE(s);
            const Cycle distance = 4 - s;
            REQUIRE(held.contains(s));
            CHECK(held.at(s) == T + distance);
            REQUIRE(oracle[s].has_value());
            CHECK(held.at(s) == *oracle[s]);
        }
    }

    TEST_CASE("transfer moves the handle, never the payload") {
        Chain c = make_chain(2, {1, 1});
        serial_run(c.model, 30);
        REQUIRE(!c.consumer->got.empty());
        for (std::size_t i = 0; i < c.consumer->got.size(); ++i) {
            CHECK(c.consumer->got[i].address == c.relays[0]->seen[i]);
            CHECK(c.consumer->got[i].address == c.relays[1]->seen[i]);
        }
    }

    TEST_CASE("foreign port access is rejected") {
        Model m;
        auto& c = m.emplace_unit<Consumer>("owner");
        InPortId stolen;
        m.add_unit("thief", std::make_unique<Scripted>([&](UnitContext& ctx) { ctx.poll(stolen); }));
        auto& p = m.emplace_unit<Producer>("p");
        c.in = m.add_input(0);
        stolen = c.in;
        p.out = m.add_output(2);
        m.connect(p.out, c.in);
        m.validate();
        const RunReport r = serial_run(m, 3);
        REQUIRE_FALSE(r.ok());
        CHECK(r.error->unit == 1u);
        CHECK(r.error->message.find("foreign") != std::string::npos);
    }

    TEST_CASE("external sources and sinks") {
        Model m;
        auto& r = m.emplace_unit<Relay>("r");
        r.in = m.add_input(0);
        r.out = m.add_output(0);
        m.attach_source(r.in, [](Cycle c) -> std::optional<Payload> {
            return c % 2 == 0 ? std::optional<Payload>(Payload::of(c)) : std::nullopt;
        });
        m.attach_sink(r.out);
        m.validate();
        const auto events = collect_serial(m, 10);
        const MessageTotals t = m.totals();
        CHECK(t.units.injects == 5);
        CHECK(t.units.ejects == 5);
        CHECK(t.conserved());
        for (const auto& e : events) {
            if (e.kind == TraceKind::inject) {
                CHECK((e.message & kExternalSequenceBit) != 0);
            }
        }
    }

    TEST_CASE("conservation at every phase boundary; contention freedom") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            auto rm = models::build_random_model({}, seed);
            RunOptions o;
            std::size_t checks = 0;
            o.on_boundary = [&](const Model& m, Cycle, Boundary) {
                REQUIRE(m.totals().conserved());
                ++checks;
            };
            REQUIRE(serial_run(rm.model, 100, o).ok());
            CHECK(checks == 200);
            for (std::size_t i = 0; i < rm.model.output_count(); ++i) {
                const OutputPort& out = rm.model.output(OutPortId{static_cast<std::uint32_t>(i)});
                if (out.external_sink) {
                    continue;
                }
                const InputPort& in = rm.model.input(InPortId{out.peer});
                CHECK(in.writer == i);
                CHECK(out.submits == in.appends + (out.pending ? 1 : 0));
            }
        }
    }

    TEST_CASE("causality: first poll at or after send cycle + delay") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            auto rm = models::build_random_model({}, seed);
            for (const auto& e : collect_serial(rm.model, 200)) {
                if (e.kind == TraceKind::consume) {
                    const auto d = rm.model.input(InPortId{e.port}).spec.delay;
                    REQUIRE(e.cycle >= e.send_cycle + d);
                    REQUIRE(e.cycle >= e.send_cycle + 1);
                }
            }
        }
    }
}
