#pragma once

#include "lockstep/types.hpp"

#include <array>
#include <cstddef>
#include <cstring>
#include <memory>
#include <type_traits>

namespace lockstep {

/// Fixed-size opaque payload. Models store any trivially copyable struct up to
/// kCapacity bytes in it; the kernel never inspects or copies it on transfer.
class Payload {
public:
    static constexpr std::size_t kCapacity = 40;

    Payload() = default;

    template <class T>
    static Payload of(const T& value) {
        static_assert(std::is_trivially_copyable_v<T>, "payload types must be trivially copyable");
        static_assert(sizeof(T) <= kCapacity, "payload type too large");
        Payload p;
        std::memcpy(p.bytes_.data(), &value, sizeof(T));
        return p;
    }

    template <class T>
    T as() const {
        static_assert(std::is_trivially_copyable_v<T>, "payload types must be trivially copyable");
        static_assert(sizeof(T) <= kCapacity, "payload type too large");
        T value;
        std::memcpy(&value, bytes_.data(), sizeof(T));
        return value;
    }

    const std::array<std::byte, kCapacity>& bytes() const noexcept { return bytes_; }

private:
    std::array<std::byte, kCapacity> bytes_{};
};

struct Message {
    MessageId id = 0;
    Cycle send_cycle = 0;
    UnitId source = 0;
    Payload payload;
};

/// Messages move between ports by handle only.
using MessageHandle = std::unique_ptr<Message>;

/// Ids are unit-major so that they do not depend on how units are spread over
/// workers: (unit << 32) | per-unit sequence. Messages created by an external
/// source attached to a unit set bit 31 of the sequence.
constexpr MessageId make_message_id(UnitId unit, std::uint32_t sequence) noexcept {
    return (static_cast<MessageId>(unit) << 32) | sequence;
}

inline constexpr std::uint32_t kExternalSequenceBit = 1u << 31;

} // namespace lockstep
