#include "lockstep/models/pipeline.hpp"

#include <string>

namespace lockstep::models {

Instruction FrontEnd::generate(UnitContext& ctx) {
    SplitMix64& rng = ctx.rng();
    Instruction in;
    in.seq = next_seq_++;
    in.dst = static_cast<std::uint8_t>(rng.below(params_.registers));
    switch (params_.dependencies) {
    case DependencyMode::none: break;
    case DependencyMode::serial: in.src0 = last_dst_; break;
    case DependencyMode::random:
        if (rng.chance(params_.dependency_permille)) {
            in.src0 = static_cast<std::uint8_t>(rng.below(params_.registers));
        }
        if (rng.chance(params_.dependency_permille)) {
            in.src1 = static_cast<std::uint8_t>(rng.below(params_.registers));
        }
        break;
    }
    in.blocking = rng.chance(params_.blocking_permille) ? 1 : 0;
    last_dst_ = in.dst;
    return in;
}

void FrontEnd::work(UnitContext& ctx) {
    for (OutPortId lane : lanes) {
        if (!ctx.vacant(lane)) {
            return;
        }
    }
    for (OutPortId lane : lanes) {
        if (params_.instructions != 0 && next_seq_ >= params_.instructions) {
            return;
        }
        ctx.send(lane, Payload::of(generate(ctx)));
    }
}

Dispatch::Dispatch(const PipelineParams& params)
    : params_(params), register_ready_(params.registers, 0), stalled_(params.exec_units, false),
      available_(params.exec_units, false) {}

bool Dispatch::ready(const Instruction& instr, Cycle cycle) const noexcept {
    for (std::uint8_t src : {instr.src0, instr.src1}) {
        if (src != kNoRegister && register_ready_[src] > cycle) {
            return false;
        }
    }
    return true;
}

void Dispatch::work(UnitContext& ctx) {
    const Cycle now = ctx.cycle();
    const std::size_t width = params_.exec_units;

    // Read new instructions (only when the whole fetch group fits) and the
    // back-pressure messages computed by the exec units one cycle earlier.
    std::vector<MessageHandle> arrived;
    if (window_.size() + width <= params_.window) {
        for (InPortId lane : lanes) {
            if (MessageHandle m = ctx.poll(lane)) {
                arrived.push_back(std::move(m));
            }
        }
    }
    for (std::size_t i = 0; i < back_pressure.size(); ++i) {
        while (MessageHandle m = ctx.poll(back_pressure[i])) {
            stalled_[i] = m->payload.as<BackPressure>().stalled != 0;
            if (params_.record_logs) {
                bp_log_.push_back({now, i, stalled_[i]});
            }
        }
    }

    // Store them behind the pending instructions.
    for (auto& m : arrived) {
        window_.push_back(std::move(m));
    }

    // Check which exec units can take an instruction this cycle.
    for (std::size_t i = 0; i < width; ++i) {
        available_[i] = ctx.vacant(issue[i]) && !stalled_[i];
    }

    // Select in program order and submit.
    while (!window_.empty()) {
        const auto instr = window_.front()->payload.as<Instruction>();
        if (!ready(instr, now)) {
            break;
        }
        std::size_t target = width;
        for (std::size_t i = 0; i < width; ++i) {
            if (available_[i]) {
                target = i;
                break;
            }
        }
        if (target == width) {
            break;
        }
        available_[target] = false;
        if (instr.dst != kNoRegister) {
            register_ready_[instr.dst] = now + params_.exec_latency;
        }
        if (params_.record_logs) {
            issues_.push_back({now, target, instr.seq});
        }
        ++issued_;
        ctx.submit(issue[target], std::move(window_.front()));
        window_.pop_front();
    }
}

void ExecUnit::work(UnitContext& ctx) {
    const Cycle now = ctx.cycle();
    if (stalling_) {
        if (now < stall_end_) {
            return;
        }
        // Last stalled cycle: announce the resume so dispatch may issue at now + 1.
        stalling_ = false;
        ctx.send(back_pressure, Payload::of(BackPressure{0}));
        return;
    }
    if (!ctx.vacant(result)) {
        return;
    }
    MessageHandle m = ctx.poll(input);
    if (!m) {
        return;
    }
    const auto instr = m->payload.as<Instruction>();
    ++executed_;
    ctx.submit(result, std::move(m));
    if (instr.blocking != 0 && params_.stall_cycles > 0) {
        stalling_ = true;
        stall_end_ = now + params_.stall_cycles;
        ctx.send(back_pressure, Payload::of(BackPressure{1}));
        if (params_.record_logs) {
            stalls_.push_back({now + 1, stall_end_});
        }
    }
}

void Writeback::work(UnitContext& ctx) {
    for (InPortId in : results) {
        while (MessageHandle m = ctx.poll(in)) {
            ++committed_;
            if (params_.record_logs) {
                commits_.push_back({ctx.cycle(), m->payload.as<Instruction>().seq});
            }
        }
    }
}

PipelineModel build_pipeline(const PipelineParams& params, std::uint64_t seed) {
    if (params.exec_units == 0) {
        throw ModelError("pipeline: exec_units must be >= 1");
    }
    if (params.exec_units > 64) {
        throw ModelError("pipeline: exec_units must be <= 64");
    }
    if (params.window < params.exec_units) {
        throw ModelError("pipeline: window must hold at least exec_units instructions");
    }
    if (params.exec_latency < 1) {
        throw ModelError("pipeline: exec_latency must be >= 1");
    }
    if (params.registers < 1 || params.registers >= kNoRegister) {
        throw ModelError("pipeline: registers must be in [1, 254]");
    }
    if (params.dependency_permille > 1000 || params.blocking_permille > 1000) {
        throw ModelError("pipeline: permille values must be <= 1000");
    }

    PipelineModel pm{Model(seed), params};
    Model& model = pm.model;
    const std::size_t width = params.exec_units;

    pm.front_end = &model.emplace_unit<FrontEnd>("front-end", params);
    pm.dispatch = &model.emplace_unit<Dispatch>("dispatch", params);
    for (std::size_t i = 0; i < width; ++i) {
        pm.execs.push_back(&model.emplace_unit<ExecUnit>("exec" + std::to_string(i), params));
    }
    pm.writeback = &model.emplace_unit<Writeback>("writeback", params);

    const UnitId fe = 0, disp = 1, wb = static_cast<UnitId>(width + 2);
    for (std::size_t i = 0; i < width; ++i) {
        const auto ex = static_cast<UnitId>(2 + i);
        ExecUnit& exec = *pm.execs[i];

        OutPortId lane = model.add_output(fe);
        InPortId lane_in = model.add_input(disp, {1, 1});
        model.connect(lane, lane_in);
        pm.front_end->lanes.push_back(lane);
        pm.dispatch->lanes.push_back(lane_in);

        OutPortId issue = model.add_output(disp);
        exec.input = model.add_input(ex, {1, 1});
        model.connect(issue, exec.input);
        pm.dispatch->issue.push_back(issue);

        // A k-cycle operation: one cycle of work, then k cycles in flight.
        // In-flight entries count against capacity, so k slots keep it pipelined.
        exec.result = model.add_output(ex);
        InPortId result_in = model.add_input(wb, {params.exec_latency, params.exec_latency});
        model.connect(exec.result, result_in);
        pm.writeback->results.push_back(result_in);

        exec.back_pressure = model.add_output(ex);
        InPortId bp_in = model.add_input(disp, {1, 1});
        model.connect(exec.back_pressure, bp_in);
        pm.dispatch->back_pressure.push_back(bp_in);
    }
    model.validate();
    return pm;
}

} // namespace lockstep::models
