#pragma once

#include "lockstep/model.hpp"

#include <cstddef>

namespace lockstep::models {

class NoopUnit final : public Unit {
public:
    void work(UnitContext&) override {}
};

/// `units` portless units; a run of this model is pure synchronization.
/// Throws ModelError when units is 0.
Model build_noop(std::size_t units);

} // namespace lockstep::models
