#pragma once

#include "lockstep/model.hpp"

#include <cstdint>
#include <vector>

namespace lockstep::models {

struct RandomModelParams {
    std::uint32_t max_units = 64;
    std::uint32_t max_outputs = 3;          // per unit
    std::uint32_t max_capacity = 3;
    std::uint32_t max_delay = 3;
    std::uint32_t emit_permille_max = 800;  // per-unit emission probability is drawn below this
    std::uint32_t external_permille = 150;  // chance a unit gets a stimulus source / an output goes to a sink
    bool inject_fault = false;              // one unit reads another unit's state directly
};

/// Polls a random number of visible messages from each input, folds them into
/// its state, forwards some of them and emits fresh messages with a per-unit
/// probability. Every decision draws from the unit's own stream.
class RandomUnit : public Unit {
public:
    explicit RandomUnit(std::uint32_t emit_permille) : emit_permille_(emit_permille) {}
    void work(UnitContext& ctx) override;

    std::vector<InPortId> inputs;
    std::vector<OutPortId> outputs;

    std::uint64_t state() const noexcept { return state_; }

protected:
    std::uint64_t state_ = 0;

private:
    std::uint32_t emit_permille_;
};

/// Mutant for sensitivity checks: mixes a neighbour's live state into its own,
/// bypassing ports, so the outcome depends on intra-cycle execution order.
class FaultyUnit final : public RandomUnit {
public:
    FaultyUnit(std::uint32_t emit_permille, const RandomUnit* victim)
        : RandomUnit(emit_permille), victim_(victim) {}
    void work(UnitContext& ctx) override;

private:
    const RandomUnit* victim_;
};

struct RandomModel {
    Model model;
    std::vector<RandomUnit*> units{};
    bool faulty = false;
};

/// Structure (unit count in [1, max_units], wiring, port capacity and delay,
/// external endpoints) and behaviour are pure functions of `seed`.
RandomModel build_random_model(const RandomModelParams& params, std::uint64_t seed);

} // namespace lockstep::models
