#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tiermem {

using Bytes = std::uint64_t;
using PageId = std::uint32_t;

inline constexpr Bytes KiB = Bytes{1} << 10;
inline constexpr Bytes MiB = Bytes{1} << 20;
inline constexpr Bytes GiB = Bytes{1} << 30;

/// Process identifier. Assigned by the engine in arrival order, starting at 1.
struct Pid {
    std::uint32_t value = 0;

    friend constexpr auto operator<=>(Pid, Pid) = default;
};

enum class Tier : std::uint8_t { Fast = 0, Slow = 1 };

constexpr Tier other(Tier t) { return t == Tier::Fast ? Tier::Slow : Tier::Fast; }
std::string_view to_string(Tier t);

/// Parses "512", "4KiB", "2 MiB", "1.5GiB", "10MB" (decimal SI also accepted).
/// Throws std::invalid_argument on malformed input.
Bytes parse_bytes(std::string_view text);

/// Renders with the largest binary unit that divides the value exactly.
std::string format_bytes(Bytes b);

constexpr Bytes round_up(Bytes value, Bytes granule) {
    return granule == 0 ? value : (value + granule - 1) / granule * granule;
}

}  // namespace tiermem

template <>
struct std::hash<tiermem::Pid> {
    std::size_t operator()(tiermem::Pid p) const noexcept { return std::hash<std::uint32_t>{}(p.value); }
};
