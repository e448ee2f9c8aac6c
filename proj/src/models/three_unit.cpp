#include "lockstep/models/three_unit.hpp"

namespace lockstep::models {

namespace {

class Forwarder final : public Unit {
public:
    Forwarder(InPortId in, OutPortId left, OutPortId right) : in_(in), left_(left), right_(right) {}

    void work(UnitContext& ctx) override {
        if (!ctx.vacant(left_) || !ctx.vacant(right_)) {
            return;
        }
        if (MessageHandle m = ctx.poll(in_)) {
            const auto value = m->payload.as<std::uint64_t>();
            ctx.send(left_, Payload::of(value));
            ctx.send(right_, Payload::of(value));
        }
    }

private:
    InPortId in_;
    OutPortId left_, right_;
};

class Transformer final : public Unit {
public:
    Transformer(InPortId in, OutPortId out, std::uint64_t mul, std::uint64_t add)
        : in_(in), out_(out), mul_(mul), add_(add) {}

    void work(UnitContext& ctx) override {
        if (!ctx.vacant(out_)) {
            return;
        }
        if (MessageHandle m = ctx.poll(in_)) {
            ctx.send(out_, Payload::of(m->payload.as<std::uint64_t>() * mul_ + add_));
        }
    }

private:
    InPortId in_;
    OutPortId out_;
    std::uint64_t mul_, add_;
};

} // namespace

ThreeUnitModel build_three_unit(std::uint64_t seed) {
    ThreeUnitModel m{Model(seed)};
    Model& model = m.model;
    // Port ids follow creation order, matching the names in ThreeUnitModel.
    const InPortId in0{0}, in1{1}, in2{2};
    const OutPortId out0{0}, out1{1}, out2{2}, out3{3};

    m.a = model.add_unit("A", std::make_unique<Forwarder>(in0, out0, out1));
    m.b = model.add_unit("B", std::make_unique<Transformer>(in1, out2, 1, 1));
    m.c = model.add_unit("C", std::make_unique<Transformer>(in2, out3, 2, 0));

    m.in0 = model.add_input(m.a);
    m.in1 = model.add_input(m.b);
    m.in2 = model.add_input(m.c);
    m.out0 = model.add_output(m.a);
    m.out1 = model.add_output(m.a);
    m.out2 = model.add_output(m.b);
    m.out3 = model.add_output(m.c);

    model.connect(m.out0, m.in1);
    model.connect(m.out1, m.in2);
    model.attach_source(m.in0, [](Cycle c) { return std::optional<Payload>(Payload::of(std::uint64_t{c})); });
    model.attach_sink(m.out2);
    model.attach_sink(m.out3);
    model.validate();
    return m;
}

} // namespace lockstep::models
