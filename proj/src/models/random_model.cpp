#include "lockstep/models/random_model.hpp"

#include <string>

namespace lockstep::models {

namespace {

struct Token {
    std::uint64_t value;
};

} // namespace

void RandomUnit::work(UnitContext& ctx) {
    SplitMix64& rng = ctx.rng();
    state_ = SplitMix64::mix(state_ ^ ctx.cycle());
    std::vector<MessageHandle> forward;
    for (InPortId in : inputs) {
        const std::size_t take = rng.below(ctx.visible(in) + 1);
        for (std::size_t i = 0; i < take; ++i) {
            MessageHandle m = ctx.poll(in);
            state_ = SplitMix64::mix(state_ + m->payload.as<Token>().value);
            if (rng.chance(500)) {
                forward.push_back(std::move(m));
            }
        }
    }
    // Emission depends on consumed payloads, so a wrong payload changes the trace.
    std::uint64_t draw = state_;
    for (OutPortId out : outputs) {
        if (!ctx.vacant(out)) {
            continue;
        }
        draw = SplitMix64::mix(draw);
        if (!forward.empty() && rng.chance(500)) {
            ctx.submit(out, std::move(forward.back()));
            forward.pop_back();
        } else if (draw % 1000 < emit_permille_) {
            ctx.send(out, Payload::of(Token{state_}));
        }
    }
}

void FaultyUnit::work(UnitContext& ctx) {
    state_ ^= victim_->state();
    RandomUnit::work(ctx);
}

RandomModel build_random_model(const RandomModelParams& params, std::uint64_t seed) {
    if (params.max_units < 1) {
        throw ModelError("random: max_units must be >= 1");
    }
    if (params.max_capacity < 1 || params.max_delay < 1) {
        throw ModelError("random: max_capacity and max_delay must be >= 1");
    }
    SplitMix64 shape(stream_seed(seed, 0x5eed));
    const auto n = static_cast<std::uint32_t>(1 + shape.below(params.max_units));

    RandomModel rm{Model(seed)};
    Model& model = rm.model;
    const bool fault = params.inject_fault && n >= 2;
    const std::uint32_t faulty_index = fault ? static_cast<std::uint32_t>(1 + shape.below(n - 1)) : n;
    for (std::uint32_t i = 0; i < n; ++i) {
        const auto emit = static_cast<std::uint32_t>(shape.below(params.emit_permille_max + 1));
        const std::string name = "r" + std::to_string(i);
        if (i == faulty_index) {
            // The victim is a lower id so the serial order always sees its update.
            const RandomUnit* victim = rm.units[shape.below(i)];
            rm.units.push_back(&model.emplace_unit<FaultyUnit>(name, emit, victim));
        } else {
            rm.units.push_back(&model.emplace_unit<RandomUnit>(name, emit));
        }
    }
    rm.faulty = fault;

    for (std::uint32_t i = 0; i < n; ++i) {
        const auto outs = shape.below(params.max_outputs + 1);
        for (std::uint64_t k = 0; k < outs; ++k) {
            const OutPortId out = model.add_output(i);
            rm.units[i]->outputs.push_back(out);
            if (shape.chance(params.external_permille)) {
                model.attach_sink(out);
                continue;
            }
            const auto target = static_cast<UnitId>(shape.below(n));
            const PortSpec spec{static_cast<std::uint32_t>(1 + shape.below(params.max_capacity)),
                                static_cast<std::uint32_t>(1 + shape.below(params.max_delay))};
            const InPortId in = model.add_input(target, spec);
            rm.units[target]->inputs.push_back(in);
            model.connect(out, in);
        }
        if (shape.chance(params.external_permille)) {
            const PortSpec spec{static_cast<std::uint32_t>(1 + shape.below(params.max_capacity)),
                                static_cast<std::uint32_t>(1 + shape.below(params.max_delay))};
            const InPortId in = model.add_input(i, spec);
            rm.units[i]->inputs.push_back(in);
            const std::uint64_t salt = shape.next();
            const auto period = 1 + shape.below(4);
            model.attach_source(in, [salt, period](Cycle c) -> std::optional<Payload> {
                if (c % period != 0) {
                    return std::nullopt;
                }
                return Payload::of(Token{SplitMix64::mix(salt ^ c)});
            });
        }
    }
    model.validate();
    return rm;
}

} // namespace lockstep::models
