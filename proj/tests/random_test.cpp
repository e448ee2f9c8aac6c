#include "lockstep/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <vector>

using namespace lockstep;

namespace {

// Straight transcription of the reference splitmix64 generator.
std::uint64_t reference_next(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

TEST_SUITE("random") {
    TEST_CASE("first outputs for seed 0 match the published generator") {
        SplitMix64 rng(0);
        CHECK(rng.next() == 0xe220a8397b1dcdafULL);
        CHECK(rng.next() == 0x6e789e6aa1b965f4ULL);
        CHECK(rng.next() == 0x06c45d188009454fULL);
    }

    TEST_CASE("matches the reference over many seeds") {
        for (std::uint64_t seed : {1ULL, 42ULL, 0xdeadbeefULL, ~0ULL}) {
            SplitMix64 rng(seed);
            std::uint64_t x = seed;
            for (int i = 0; i < 1000; ++i) {
                REQUIRE(rng.next() == reference_next(x));
            }
        }
    }

    TEST_CASE("below stays in range and covers it") {
        SplitMix64 rng(7);
        std::set<std::uint64_t> seen;
        for (int i = 0; i < 2000; ++i) {
            const auto v = rng.below(10);
            REQUIRE(v < 10);
            seen.insert(v);
        }
        CHECK(seen.size() == 10);
        CHECK(rng.below(0) == 0);
    }

    TEST_CASE("chance extremes") {
        SplitMix64 rng(3);
        for (int i = 0; i < 100; ++i) {
            CHECK_FALSE(rng.chance(0));
            CHECK(rng.chance(1000));
        }
    }

    TEST_CASE("stream seeds differ per index and are reproducible") {
        std::set<std::uint64_t> seeds;
        for (std::uint64_t i = 0; i < 1000; ++i) {
            seeds.insert(stream_seed(99, i));
        }
        CHECK(seeds.size() == 1000);
        CHECK(stream_seed(5, 17) == stream_seed(5, 17));
        CHECK(stream_seed(5, 17) != stream_seed(6, 17));
        const std::uint64_t expected = SplitMix64::mix(5 ^ SplitMix64::mix(17 + 0x9e3779b97f4a7c15ULL));
        CHECK(stream_seed(5, 17) == expected);
    }

    TEST_CASE("shuffle is a seeded permutation following the back-to-front recipe") {
        std::vector<int> v(20);
        std::iota(v.begin(), v.end(), 0);
        SplitMix64 rng(11);
        shuffle(std::span<int>(v), rng);
        auto sorted = v;
        std::sort(sorted.begin(), sorted.end());
        for (int i = 0; i < 20; ++i) {
            CHECK(sorted[i] == i);
        }

        std::vector<int> expected(20);
        std::iota(expected.begin(), expected.end(), 0);
        std::uint64_t x = 11;
        for (std::size_t i = expected.size() - 1; i >= 1; --i) {
            const auto j = reference_next(x) % (i + 1);
            std::swap(expected[i], expected[j]);
        }
        CHECK(v == expected);
    }
}
