#pragma once

#include "lockstep/model.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lockstep {

enum class PartitionPolicy : std::uint8_t { round_robin, random, explicit_lists };

std::string_view to_string(PartitionPolicy policy) noexcept;
/// "round-robin" | "random" | "explicit"; throws std::invalid_argument.
PartitionPolicy parse_partition_policy(std::string_view name);

/// Unit -> cluster mapping, one cluster per worker. Units inside a cluster run
/// serially in the listed order.
struct Partition {
    std::vector<std::vector<UnitId>> clusters;
    PartitionPolicy policy = PartitionPolicy::round_robin;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;

    std::size_t workers() const noexcept { return clusters.size(); }
};

/// round-robin: unit i goes to cluster i mod W.
/// random: Fisher-Yates shuffle of the unit ids with SplitMix64(seed), then W
/// contiguous chunks whose sizes differ by at most one (larger chunks first).
/// W is clamped to the unit count with a warning; W above the host's
/// hardware contexts minus one is kept but warned about.
Partition partition_units(const Model& model, std::size_t workers, PartitionPolicy policy, std::uint64_t seed = 0);

/// Takes the clusters as given after checking that they cover every unit once.
Partition explicit_partition(const Model& model, std::vector<std::vector<UnitId>> clusters);

/// Throws std::invalid_argument unless every unit appears in exactly one cluster.
void validate_partition(const Model& model, const Partition& partition);

} // namespace lockstep
