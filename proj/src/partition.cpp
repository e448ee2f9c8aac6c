#include "lockstep/partition.hpp"

#include "lockstep/random.hpp"

#include <numeric>
#include <stdexcept>
#include <thread>

namespace lockstep {

std::string_view to_string(PartitionPolicy policy) noexcept {
    switch (policy) {
    case PartitionPolicy::round_robin: return "round-robin";
    case PartitionPolicy::random: return "random";
    case PartitionPolicy::explicit_lists: return "explicit";
    }
    return "?";
}

PartitionPolicy parse_partition_policy(std::string_view name) {
    for (auto p : {PartitionPolicy::round_robin, PartitionPolicy::random, PartitionPolicy::explicit_lists}) {
        if (to_string(p) == name) {
            return p;
        }
    }
    throw std::invalid_argument("unknown partition policy '" + std::string(name) +
                                "' (expected round-robin, random or explicit)");
}

Partition partition_units(const Model& model, std::size_t workers, PartitionPolicy policy, std::uint64_t seed) {
    if (workers == 0) {
        throw std::invalid_argument("workers must be >= 1");
    }
    if (policy == PartitionPolicy::explicit_lists) {
        throw std::invalid_argument("explicit partitions are built with explicit_partition()");
    }
    Partition p;
    p.policy = policy;
    p.seed = seed;
    const std::size_t units = model.unit_count();
    if (workers > units) {
        p.warnings.push_back("requested " + std::to_string(workers) + " workers for " + std::to_string(units) +
                             " units; clamped to " + std::to_string(units));
        workers = units;
    }
    const unsigned contexts = std::thread::hardware_concurrency();
    if (contexts != 0 && workers + 1 > contexts) {
        p.warnings.push_back(std::to_string(workers) + " workers plus the scheduler oversubscribe " +
                             std::to_string(contexts) + " hardware contexts");
    }
    p.clusters.resize(workers);
    if (workers == 0) {
        return p;
    }

    if (policy == PartitionPolicy::round_robin) {
        for (std::size_t i = 0; i < units; ++i) {
            p.clusters[i % workers].push_back(static_cast<UnitId>(i));
        }
        return p;
    }

    std::vector<UnitId> order(units);
    std::iota(order.begin(), order.end(), UnitId{0});
    SplitMix64 rng(seed);
    shuffle(std::span<UnitId>(order), rng);
    const std::size_t base = units / workers;
    const std::size_t extra = units % workers;
    std::size_t next = 0;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t n = base + (w < extra ? 1 : 0);
        p.clusters[w].assign(order.begin() + static_cast<std::ptrdiff_t>(next),
                             order.begin() + static_cast<std::ptrdiff_t>(next + n));
        next += n;
    }
    return p;
}

void validate_partition(const Model& model, const Partition& partition) {
    std::vector<int> seen(model.unit_count(), 0);
    for (const auto& cluster : partition.clusters) {
        for (UnitId u : cluster) {
            if (u >= seen.size()) {
                throw std::invalid_argument("partition names unknown unit " + std::to_string(u));
            }
            if (seen[u]++ != 0) {
                throw std::invalid_argument("unit " + std::to_string(u) + " appears in more than one cluster slot");
            }
        }
    }
    for (std::size_t u = 0; u < seen.size(); ++u) {
        if (seen[u] == 0) {
            throw std::invalid_argument("unit " + std::to_string(u) + " is not assigned to any cluster");
        }
    }
    if (partition.clusters.empty() && model.unit_count() > 0) {
        throw std::invalid_argument("partition has no clusters");
    }
}

Partition explicit_partition(const Model& model, std::vector<std::vector<UnitId>> clusters) {
    Partition p;
    p.policy = PartitionPolicy::explicit_lists;
    p.clusters = std::move(clusters);
    validate_partition(model, p);
    return p;
}

} // namespace lockstep
