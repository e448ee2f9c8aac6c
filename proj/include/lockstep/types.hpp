#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>

namespace lockstep {

using Cycle = std::uint64_t;
using UnitId = std::uint32_t;
using MessageId = std::uint64_t;

// Strongly typed port handles. The two directions are distinct types so that
// wiring an output to an output does not compile at the call site; the runtime
// check in Model::connect covers ids that were smuggled through integers.
struct InPortId {
    std::uint32_t value = std::numeric_limits<std::uint32_t>::max();
    friend constexpr auto operator<=>(InPortId, InPortId) = default;
};

struct OutPortId {
    std::uint32_t value = std::numeric_limits<std::uint32_t>::max();
    friend constexpr auto operator<=>(OutPortId, OutPortId) = default;
};

inline constexpr std::uint32_t kUnwired = std::numeric_limits<std::uint32_t>::max();

} // namespace lockstep

template <>
struct std::hash<lockstep::InPortId> {
    std::size_t operator()(lockstep::InPortId p) const noexcept { return p.value; }
};

template <>
struct std::hash<lockstep::OutPortId> {
    std::size_t operator()(lockstep::OutPortId p) const noexcept { return p.value; }
};
