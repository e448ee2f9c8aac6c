#include "support.hpp"

#include "lockstep/models/datacenter.hpp"
#include "lockstep/models/noop.hpp"
#include "lockstep/models/pipeline.hpp"
#include "lockstep/models/random_model.hpp"
#include "lockstep/models/registry.hpp"
#include "lockstep/models/three_unit.hpp"

#include <doctest.h>

#include <set>

using namespace lockstep;
using namespace lockstep::models;
using namespace lockstep::test;

namespace {

void check_causality(const Model& m, const std::vector<TraceEvent>& events) {
    std::size_t consumed = 0;
    for (const auto& e : events) {
        if (e.kind == TraceKind::consume) {
            REQUIRE(e.cycle >= e.send_cycle + m.input(InPortId{e.port}).spec.delay);
            ++consumed;
        }
    }
    CHECK(consumed > 0);
}

/// Commits per cycle over [from, to).
double commit_rate(const PipelineModel& pm, Cycle from, Cycle to) {
    std::size_t n = 0;
    for (const auto& c : pm.writeback->commits()) {
        n += c.cycle >= from && c.cycle < to;
    }
    return static_cast<double>(n) / static_cast<double>(to - from);
}

} // namespace

TEST_SUITE("models") {
    TEST_CASE("three-unit wiring") {
        auto m = build_three_unit();
        CHECK(m.model.unit_count() == 3);
        CHECK(m.model.inputs_of(m.a) == std::vector<InPortId>{m.in0});
        CHECK(m.model.outputs_of(m.a) == std::vector<OutPortId>{m.out0, m.out1});
        CHECK(m.model.output(m.out0).peer == m.in1.value);
        CHECK(m.model.output(m.out1).peer == m.in2.value);
        CHECK(m.model.output(m.out2).external_sink);
        CHECK(m.model.output(m.out3).external_sink);
        CHECK(m.model.input(m.in0).writer == InputPort::kExternalWriter);
    }

    TEST_CASE("causality holds on every example model") {
        auto tu = build_three_unit();
        check_causality(tu.model, collect_serial(tu.model, 100));

        PipelineParams pp;
        pp.exec_latency = 3;
        pp.blocking_permille = 50;
        auto pm = build_pipeline(pp, 1);
        check_causality(pm.model, collect_serial(pm.model, 500));

        DatacenterParams dp;
        dp.nodes = 32;
        dp.leaves = 4;
        dp.spines = 2;
        dp.latency = 2;
        dp.packets = 500;
        auto dc = build_datacenter(dp, 1);
        check_causality(dc.model, collect_serial(dc.model, 400));
    }

    TEST_CASE("pipeline: independent stream sustains E instructions per cycle") {
        PipelineParams p;
        p.exec_units = 2;
        p.dependencies = DependencyMode::none;
        p.record_logs = true;
        auto pm = build_pipeline(p, 3);
        serial_run(pm.model, 400);
        CHECK(commit_rate(pm, 100, 400) == doctest::Approx(2.0));
    }

    TEST_CASE("pipeline: serialized dependencies give one instruction per latency") {
        for (std::uint32_t k : {1u, 2u, 3u}) {
            CAPTURE(k);
            PipelineParams p;
            p.exec_units = 2;
            p.exec_latency = k;
            p.dependencies = DependencyMode::serial;
            p.record_logs = true;
            auto pm = build_pipeline(p, 3);
            serial_run(pm.model, 600);
            CHECK(commit_rate(pm, 120, 600) == doctest::Approx(1.0 / k));
            // issue cycles are exactly k apart once the window is primed
            const auto& issues = pm.dispatch->issues();
            REQUIRE(issues.size() > 50);
            for (std::size_t i = 20; i + 1 < issues.size(); ++i) {
                CHECK(issues[i + 1].cycle - issues[i].cycle == k);
            }
        }
    }

    TEST_CASE("pipeline: explicit back-pressure blocks issue during a stall window") {
        PipelineParams p;
        p.exec_units = 2;
        p.dependencies = DependencyMode::none;
        p.blocking_permille = 80;
        p.stall_cycles = 5;
        p.record_logs = true;
        auto pm = build_pipeline(p, 17);
        serial_run(pm.model, 2000);
        std::size_t windows = 0;
        for (std::size_t e = 0; e < pm.execs.size(); ++e) {
            for (const StallWindow& w : pm.execs[e]->stalls()) {
                if (w.last >= 1990) {
                    continue;
                }
                ++windows;
                CHECK(w.last - w.first + 1 == 5);
                // the stall message is read at the window's first cycle, the resume right after it
                bool saw_stall = false, saw_resume = false;
                for (const auto& bp : pm.dispatch->back_pressure_log()) {
                    if (bp.exec != e) continue;
                    saw_stall |= bp.stalled && bp.cycle == w.first;
                    saw_resume |= !bp.stalled && bp.cycle == w.last + 1;
                }
                CHECK(saw_stall);
                CHECK(saw_resume);
                for (const IssueRecord& is : pm.dispatch->issues()) {
                    if (is.exec == e) {
                        CHECK_FALSE((is.cycle >= w.first && is.cycle <= w.last));
                    }
                }
            }
        }
        CHECK(windows > 20);
    }

    TEST_CASE("pipeline: dispatch never issues into a unit whose last status was a stall") {
        PipelineParams p;
        p.exec_units = 3;
        p.blocking_permille = 120;
        p.stall_cycles = 3;
        p.record_logs = true;
        auto pm = build_pipeline(p, 5);
        serial_run(pm.model, 3000);
        std::vector<bool> stalled(3, false);
        auto bp = pm.dispatch->back_pressure_log().begin();
        const auto bp_end = pm.dispatch->back_pressure_log().end();
        for (const IssueRecord& is : pm.dispatch->issues()) {
            while (bp != bp_end && bp->cycle <= is.cycle) {
                stalled[bp->exec] = bp->stalled;
                ++bp;
            }
            REQUIRE_FALSE(stalled[is.exec]);
        }
    }

    TEST_CASE("pipeline: construction errors") {
        PipelineParams p;
        p.exec_units = 0;
        CHECK_THROWS_AS(build_pipeline(p, 0), ModelError);
        p.exec_units = 4;
        p.window = 2;
        CHECK_THROWS_AS(build_pipeline(p, 0), ModelError);
    }

    TEST_CASE("pipeline: committed count is a function of parameters and seed") {
        PipelineParams p;
        p.blocking_permille = 30;
        auto a = build_pipeline(p, 9);
        auto b = build_pipeline(p, 9);
        auto c = build_pipeline(p, 10);
        serial_run(a.model, 800);
        serial_run(b.model, 800);
        serial_run(c.model, 800);
        CHECK(a.committed() == b.committed());
        CHECK(a.committed() != c.committed());
    }

    TEST_CASE("datacenter: 2 nodes, 1 switch, 1 packet") {
        for (std::uint32_t L : {1u, 2u, 4u}) {
            CAPTURE(L);
            DatacenterParams p;
            p.nodes = 2;
            p.leaves = 1;
            p.spines = 0;
            p.latency = L;
            p.packets = 1;
            p.track_packets = true;
            auto dc = build_datacenter(p, 0);
            serial_run(dc.model, 50);
            REQUIRE(dc.delivered() == 1);
            const Delivery& d = dc.nodes[1]->deliveries().front();
            CHECK(d.hops == 2);
            CHECK(d.latency == 2 * (L + 1));
        }
    }

    TEST_CASE("datacenter: zero packets") {
        DatacenterParams p;
        p.nodes = 16;
        p.leaves = 4;
        p.spines = 2;
        p.packets = 0;
        auto dc = build_datacenter(p, 0);
        const RunReport r = serial_run(dc.model, 100);
        CHECK(r.cycles == 100);
        CHECK(dc.delivered() == 0);
        CHECK(r.trace_events == 0);
    }

    TEST_CASE("datacenter: conservation, single delivery, latency bound, buffer bound") {
        DatacenterParams p;
        p.nodes = 64;
        p.leaves = 8;
        p.spines = 4;
        p.buffer_depth = 2;
        p.latency = 2;
        p.packets = 3000;
        p.track_packets = true;
        auto dc = build_datacenter(p, 11);
        RunOptions o;
        std::uint32_t max_occupancy = 0;
        o.on_boundary = [&](const Model& m, Cycle, Boundary) {
            const MessageTotals t = m.totals();
            REQUIRE(t.conserved());
            REQUIRE(dc.injected() == dc.delivered() + t.pending_outputs + t.queued_inputs);
            for (std::size_t i = 0; i < m.input_count(); ++i) {
                max_occupancy = std::max(max_occupancy, m.input(InPortId{static_cast<std::uint32_t>(i)}).size);
            }
        };
        serial_run(dc.model, 1500, o);
        CHECK(max_occupancy <= 2);
        CHECK(dc.delivered() == 3000);
        std::set<MessageId> ids;
        for (const Node* n : dc.nodes) {
            for (const Delivery& d : n->deliveries()) {
                CHECK(ids.insert(d.packet).second);
                CHECK(d.latency >= d.hops * (p.latency + 1));
            }
        }
    }

    TEST_CASE("datacenter: route lengths") {
        DatacenterParams p;
        p.nodes = 16;
        p.leaves = 4;
        p.spines = 2;
        p.packets = 400;
        p.track_packets = true;
        auto dc = build_datacenter(p, 2);
        serial_run(dc.model, 600);
        for (std::uint32_t dst = 0; dst < 16; ++dst) {
            for (const Delivery& d : dc.nodes[dst]->deliveries()) {
                const std::uint32_t src = static_cast<std::uint32_t>(d.packet >> 32);
                CHECK(d.hops == dc.hops(src, dst));
            }
        }
    }

    TEST_CASE("datacenter: topology errors name the constraint") {
        DatacenterParams p;
        p.nodes = 10;
        p.leaves = 4;
        CHECK_THROWS_WITH_AS(build_datacenter(p, 0), doctest::Contains("divisible"), ModelError);
        p.nodes = 16;
        p.spines = 0;
        CHECK_THROWS_WITH_AS(build_datacenter(p, 0), doctest::Contains("spine"), ModelError);
        p.spines = 2;
        p.radix = 5;
        CHECK_THROWS_WITH_AS(build_datacenter(p, 0), doctest::Contains("radix"), ModelError);
        p.radix = 128;
        p.nodes = 1;
        p.leaves = 1;
        CHECK_THROWS_AS(build_datacenter(p, 0), ModelError);
    }

    TEST_CASE("noop") {
        CHECK_THROWS_AS(build_noop(0), ModelError);
        Model m = build_noop(1);
        ParallelExecutor ex(m, partition_units(m, 1, PartitionPolicy::round_robin));
        const RunReport r = ex.run(100);
        CHECK(r.ok());
        CHECK(r.metrics.barrier_rate().phases_per_sec() > 0);
    }

    TEST_CASE("random models are reproducible and bounded") {
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            auto a = build_random_model({.max_units = 10}, seed);
            auto b = build_random_model({.max_units = 10}, seed);
            CHECK(a.model.unit_count() <= 10);
            CHECK(a.model.unit_count() == b.model.unit_count());
            CHECK(serial_run(a.model, 50).trace_hash == serial_run(b.model, 50).trace_hash);
        }
    }

    TEST_CASE("registry") {
        std::set<std::string> names;
        for (const auto& info : list_models()) {
            names.insert(info.name);
        }
        CHECK(names == std::set<std::string>{"three-unit", "pipeline", "datacenter", "noop", "random"});
        auto inst = build_model("datacenter", {{"nodes", "16"}, {"leaves", "4"}, {"spines", "2"}, {"packets", "10"}}, 1);
        CHECK(inst->model().unit_count() == 22);
        serial_run(inst->model(), 100);
        CHECK(inst->summary().at(1) == std::pair<std::string, std::string>{"delivered", "10"});
        CHECK_THROWS_AS(build_model("datacenter", {{"bogus", "1"}}, 0), ModelError);
        CHECK_THROWS_AS(build_model("datacenter", {{"nodes", "-3"}}, 0), ModelError);
        CHECK_THROWS_AS(build_model("pipeline", {{"dependencies", "sometimes"}}, 0), ModelError);
        CHECK_THROWS_AS(build_model("nope", {}, 0), ModelError);
        CHECK(build_model("pipeline", {{"dependencies", "serial"}, {"exec_units", "3"}}, 0)->model().unit_count() == 6);
    }
}
