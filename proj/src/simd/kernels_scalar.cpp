#include <algorithm>
#include <array>
#include <bit>

#include "tiermem/simd.hpp"

namespace tiermem::simd {

namespace {

void apply_cooling(std::span<std::uint32_t> raw, std::span<std::uint32_t> seen, std::uint32_t seq) {
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const std::uint32_t pending = seq - seen[i];
        raw[i] = pending >= 32 ? 0u : raw[i] >> pending;
        seen[i] = seq;
    }
}

void classify_bins(std::span<const std::uint32_t> counts, unsigned num_bins, std::span<std::uint8_t> bins) {
    const unsigned top = num_bins - 1;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const std::uint32_t c = counts[i];
        const unsigned b = c == 0 ? 0u : static_cast<unsigned>(std::bit_width(c));
        bins[i] = static_cast<std::uint8_t>(std::min(b, top));
    }
}

void bin_histogram(std::span<const std::uint8_t> bins, std::span<std::uint64_t> tallies) {
    std::fill(tallies.begin(), tallies.end(), 0);
    for (const std::uint8_t b : bins) {
        if (b < tallies.size()) ++tallies[b];
    }
}

double masked_sum(std::span<const double> weights, std::span<const std::uint8_t> mask) {
    std::array<double, 4> acc{0.0, 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc[i & 3] += mask[i] != 0 ? weights[i] : 0.0;
    }
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{"scalar", apply_cooling, classify_bins, bin_histogram, masked_sum};
    return table;
}

}  // namespace tiermem::simd
