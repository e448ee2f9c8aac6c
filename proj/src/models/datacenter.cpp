#include "lockstep/models/datacenter.hpp"

#include <string>

namespace lockstep::models {

namespace {

std::uint64_t inflate(std::uint32_t iterations, std::uint64_t acc) {
    for (std::uint32_t i = 0; i < iterations; ++i) {
        acc = SplitMix64::mix(acc + i);
    }
    return acc;
}

} // namespace

void Node::work(UnitContext& ctx) {
    inflation_sink_ = inflate(params_.work_inflation, inflation_sink_);
    const Cycle now = ctx.cycle();
    while (MessageHandle m = ctx.poll(down)) {
        const auto p = m->payload.as<Packet>();
        const Cycle latency = now - p.injected;
        if (latency_counts_.size() <= latency) {
            latency_counts_.resize(latency + 1, 0);
        }
        ++latency_counts_[latency];
        ++delivered_;
        if (params_.track_packets) {
            deliveries_.push_back({m->id, latency, p.hops + 1});
        }
    }
    if (injected_ < quota_ && ctx.vacant(up)) {
        Packet p;
        p.source = index_;
        auto dst = static_cast<std::uint32_t>(ctx.rng().below(params_.nodes - 1));
        p.destination = dst >= index_ ? dst + 1 : dst;
        p.injected = now;
        ctx.send(up, Payload::of(p));
        ++injected_;
    }
}

OutPortId Switch::route(std::uint32_t destination) const {
    const std::uint32_t per_leaf = params_.nodes / params_.leaves;
    const std::uint32_t leaf = destination / per_leaf;
    if (level_ == Level::spine) {
        return down[leaf];
    }
    if (leaf == index_) {
        return down[destination % per_leaf];
    }
    return up[destination % params_.spines];
}

void Switch::work(UnitContext& ctx) {
    inflation_sink_ = inflate(params_.work_inflation, inflation_sink_);
    const std::size_t n = inputs.size();
    if (n == 0) {
        return;
    }
    const std::size_t first = static_cast<std::size_t>(ctx.cycle() % n);
    for (std::size_t k = 0; k < n; ++k) {
        const InPortId in = inputs[(first + k) % n];
        const Message* head = ctx.peek(in);
        if (head == nullptr) {
            continue;
        }
        const OutPortId out = route(head->payload.as<Packet>().destination);
        if (!ctx.vacant(out)) {
            continue;
        }
        MessageHandle m = ctx.poll(in);
        auto p = m->payload.as<Packet>();
        ++p.hops;
        m->payload = Payload::of(p);
        ctx.submit(out, std::move(m));
        ++forwarded_;
    }
}

std::uint64_t DatacenterModel::injected() const noexcept {
    std::uint64_t n = 0;
    for (const Node* node : nodes) {
        n += node->injected();
    }
    return n;
}

std::uint64_t DatacenterModel::delivered() const noexcept {
    std::uint64_t n = 0;
    for (const Node* node : nodes) {
        n += node->delivered();
    }
    return n;
}

std::map<Cycle, std::uint64_t> DatacenterModel::latency_histogram() const {
    std::map<Cycle, std::uint64_t> hist;
    for (const Node* node : nodes) {
        const auto& counts = node->latency_counts();
        for (std::size_t l = 0; l < counts.size(); ++l) {
            if (counts[l] != 0) {
                hist[l] += counts[l];
            }
        }
    }
    return hist;
}

std::uint32_t DatacenterModel::hops(std::uint32_t source, std::uint32_t destination) const noexcept {
    const std::uint32_t per_leaf = params.nodes / params.leaves;
    return source / per_leaf == destination / per_leaf ? 2 : 4;
}

DatacenterModel build_datacenter(const DatacenterParams& params, std::uint64_t seed) {
    auto fail = [](const std::string& what) { throw ModelError("datacenter: " + what); };
    if (params.nodes < 1) fail("nodes must be >= 1");
    if (params.leaves < 1) fail("leaves must be >= 1");
    if (params.nodes % params.leaves != 0) {
        fail("nodes (" + std::to_string(params.nodes) + ") must be divisible by leaves (" +
             std::to_string(params.leaves) + ")");
    }
    if (params.leaves > 1 && params.spines < 1) fail("more than one leaf requires at least one spine");
    const std::uint32_t per_leaf = params.nodes / params.leaves;
    if (per_leaf + params.spines > params.radix) {
        fail("leaf needs " + std::to_string(per_leaf + params.spines) + " ports but radix is " +
             std::to_string(params.radix));
    }
    if (params.spines > 0 && params.leaves > params.radix) {
        fail("spine needs " + std::to_string(params.leaves) + " ports but radix is " + std::to_string(params.radix));
    }
    if (params.buffer_depth < 1) fail("buffer_depth must be >= 1");
    if (params.packets > 0 && params.nodes < 2) fail("traffic needs at least two nodes");

    DatacenterModel dc{Model(seed), params};
    Model& model = dc.model;
    const PortSpec link{params.buffer_depth, params.latency + 1};

    for (std::uint32_t i = 0; i < params.nodes; ++i) {
        const std::uint64_t quota = params.packets / params.nodes + (i < params.packets % params.nodes ? 1 : 0);
        dc.nodes.push_back(&model.emplace_unit<Node>("node" + std::to_string(i), i, quota, params));
    }
    for (std::uint32_t l = 0; l < params.leaves; ++l) {
        dc.leaves.push_back(
            &model.emplace_unit<Switch>("leaf" + std::to_string(l), Switch::Level::leaf, l, params));
    }
    for (std::uint32_t s = 0; s < params.spines; ++s) {
        dc.spines.push_back(
            &model.emplace_unit<Switch>("spine" + std::to_string(s), Switch::Level::spine, s, params));
    }
    const UnitId first_leaf = params.nodes;
    const UnitId first_spine = params.nodes + params.leaves;

    for (std::uint32_t i = 0; i < params.nodes; ++i) {
        Node& node = *dc.nodes[i];
        const std::uint32_t l = i / per_leaf;
        Switch& leaf = *dc.leaves[l];
        node.up = model.add_output(i);
        InPortId leaf_in = model.add_input(first_leaf + l, link);
        model.connect(node.up, leaf_in);
        leaf.inputs.push_back(leaf_in);

        OutPortId leaf_out = model.add_output(first_leaf + l);
        node.down = model.add_input(i, link);
        model.connect(leaf_out, node.down);
        leaf.down.push_back(leaf_out);
    }
    for (std::uint32_t l = 0; l < params.leaves; ++l) {
        for (std::uint32_t s = 0; s < params.spines; ++s) {
            Switch& leaf = *dc.leaves[l];
            Switch& spine = *dc.spines[s];
            OutPortId up = model.add_output(first_leaf + l);
            InPortId spine_in = model.add_input(first_spine + s, link);
            model.connect(up, spine_in);
            leaf.up.push_back(up);
            spine.inputs.push_back(spine_in);

            OutPortId down = model.add_output(first_spine + s);
            InPortId leaf_in = model.add_input(first_leaf + l, link);
            model.connect(down, leaf_in);
            // spine.down is indexed by leaf; filled in leaf order because s is the inner loop
            spine.down.push_back(down);
            leaf.inputs.push_back(leaf_in);
        }
    }
    model.validate();
    return dc;
}

} // namespace lockstep::models
