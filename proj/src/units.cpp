#include "tiermem/units.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <utility>

#include <fmt/format.h>

namespace tiermem {

std::string_view to_string(Tier t) { return t == Tier::Fast ? "fast" : "slow"; }

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) {
            return false;
        }
    }
    return true;
}

}  // namespace

Bytes parse_bytes(std::string_view text) {
    static constexpr std::array<std::pair<std::string_view, double>, 13> kUnits{{
        {"", 1.0},
        {"b", 1.0},
        {"kib", 1024.0},
        {"mib", 1024.0 * 1024},
        {"gib", 1024.0 * 1024 * 1024},
        {"tib", 1024.0 * 1024 * 1024 * 1024},
        {"k", 1024.0},
        {"m", 1024.0 * 1024},
        {"g", 1024.0 * 1024 * 1024},
        {"kb", 1e3},
        {"mb", 1e6},
        {"gb", 1e9},
        {"tb", 1e12},
    }};

    const std::string_view s = trim(text);
    std::size_t split = 0;
    while (split < s.size() && (std::isdigit(static_cast<unsigned char>(s[split])) || s[split] == '.')) ++split;
    if (split == 0) throw std::invalid_argument(fmt::format("malformed byte size '{}'", text));

    double number = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + split, number);
    if (ec != std::errc{} || ptr != s.data() + split) {
        throw std::invalid_argument(fmt::format("malformed byte size '{}'", text));
    }
    const std::string_view unit = trim(s.substr(split));
    for (const auto& [name, scale] : kUnits) {
        if (iequals(unit, name)) {
            const double value = number * scale;
            if (value < 0 || value > 1.8e19 || std::floor(value) != value) {
                throw std::invalid_argument(fmt::format("byte size '{}' is not a whole number of bytes", text));
            }
            return static_cast<Bytes>(value);
        }
    }
    throw std::invalid_argument(fmt::format("unknown byte unit '{}' in '{}'", unit, text));
}

std::string format_bytes(Bytes b) {
    if (b == 0) return "0B";
    static constexpr std::array<std::pair<Bytes, std::string_view>, 4> kUnits{{
        {Bytes{1} << 40, "TiB"}, {GiB, "GiB"}, {MiB, "MiB"}, {KiB, "KiB"}}};
    for (const auto& [scale, name] : kUnits) {
        if (b % scale == 0) return fmt::format("{}{}", b / scale, name);
    }
    return fmt::format("{}B", b);
}

}  // namespace tiermem
