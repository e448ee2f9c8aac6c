#pragma once

#include "lockstep/model.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace lockstep::models {

/// Two-level folded Clos: `nodes` hosts spread evenly over `leaves` leaf
/// switches, every leaf connected to every spine. Each link is an input
/// buffer of `buffer_depth` packets with delay latency + 1 (one transfer cycle
/// plus the switch pipeline). Routing is deterministic: down when the
/// destination hangs off this leaf, otherwise up to spine (dst mod spines).
struct DatacenterParams {
    std::uint32_t nodes = 1024;
    std::uint32_t leaves = 32;
    std::uint32_t spines = 16;
    std::uint32_t radix = 128;       // ports per switch
    std::uint32_t buffer_depth = 4;
    std::uint32_t latency = 1;       // switch pipeline cycles
    std::uint64_t packets = 100000;
    std::uint32_t work_inflation = 0; // busy iterations per unit work step
    bool track_packets = false;      // keep delivered packet ids and hop counts
};

struct Packet {
    std::uint32_t source = 0;
    std::uint32_t destination = 0;
    Cycle injected = 0;
    std::uint32_t hops = 0; // links traversed so far
};

struct Delivery {
    MessageId packet;
    Cycle latency;
    std::uint32_t hops;
};

class Node final : public Unit {
public:
    Node(std::uint32_t index, std::uint64_t quota, const DatacenterParams& params)
        : index_(index), quota_(quota), params_(params) {}
    void work(UnitContext& ctx) override;

    InPortId down;
    OutPortId up;

    std::uint64_t injected() const noexcept { return injected_; }
    std::uint64_t delivered() const noexcept { return delivered_; }
    const std::vector<std::uint64_t>& latency_counts() const noexcept { return latency_counts_; }
    const std::vector<Delivery>& deliveries() const noexcept { return deliveries_; }

private:
    std::uint32_t index_;
    std::uint64_t quota_;
    DatacenterParams params_;
    std::uint64_t injected_ = 0;
    std::uint64_t delivered_ = 0;
    std::vector<std::uint64_t> latency_counts_;
    std::vector<Delivery> deliveries_;
    std::uint64_t inflation_sink_ = 0;
};

/// Input-buffered switch: each cycle every input may forward its head packet
/// to a vacant output; inputs are served in rotating priority order.
class Switch final : public Unit {
public:
    enum class Level : std::uint8_t { leaf, spine };

    Switch(Level level, std::uint32_t index, const DatacenterParams& params)
        : level_(level), index_(index), params_(params) {}
    void work(UnitContext& ctx) override;

    std::vector<InPortId> inputs;
    std::vector<OutPortId> down; // leaf: to its nodes; spine: to every leaf
    std::vector<OutPortId> up;   // leaf: to every spine; spine: empty

    std::uint64_t forwarded() const noexcept { return forwarded_; }

private:
    OutPortId route(std::uint32_t destination) const;

    Level level_;
    std::uint32_t index_;
    DatacenterParams params_;
    std::uint64_t forwarded_ = 0;
    std::uint64_t inflation_sink_ = 0;
};

struct DatacenterModel {
    Model model;
    DatacenterParams params;
    std::vector<Node*> nodes{};
    std::vector<Switch*> leaves{};
    std::vector<Switch*> spines{};

    std::uint64_t injected() const noexcept;
    std::uint64_t delivered() const noexcept;
    /// latency (cycles from injection to consumption) -> packets
    std::map<Cycle, std::uint64_t> latency_histogram() const;
    /// Links on the route from source to destination.
    std::uint32_t hops(std::uint32_t source, std::uint32_t destination) const noexcept;
};

/// Units in id order: nodes, leaves, spines. Node i injects
/// packets/nodes packets (the first packets mod nodes get one more), each to a
/// uniformly drawn other node. Throws ModelError on inconsistent topology.
DatacenterModel build_datacenter(const DatacenterParams& params, std::uint64_t seed);

} // namespace lockstep::models
