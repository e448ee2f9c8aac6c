#pragma once

#include "lockstep/model.hpp"

#include <cstdint>

namespace lockstep::models {

/// Three units: A receives an external stimulus on in0 and forwards every
/// value to B (out0 -> in1) and C (out1 -> in2); B and C emit results on the
/// external outputs out2 and out3.
struct ThreeUnitModel {
    Model model;
    UnitId a = 0, b = 1, c = 2;
    InPortId in0{0}, in1{1}, in2{2};
    OutPortId out0{0}, out1{1}, out2{2}, out3{3};
};

ThreeUnitModel build_three_unit(std::uint64_t seed = 0);

} // namespace lockstep::models
