#pragma once

// Data-parallel kernels used by the hotness tracker and the throughput model.
//
// Every kernel has a portable scalar reference and, on x86-64, an AVX2
// variant. The variant is picked once at startup from CPUID; setting
// TIERMEM_SIMD=scalar forces the reference path. Variants must produce
// bit-identical output to the reference (tests/test_simd.cpp enforces this),
// which is why masked_sum accumulates in four interleaved lanes in both paths.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace tiermem::simd {

struct KernelTable {
    std::string_view name;

    /// raw[i] >>= (seq - seen[i]) with shifts of 32 or more yielding 0; seen[i] = seq.
    void (*apply_cooling)(std::span<std::uint32_t> raw, std::span<std::uint32_t> seen, std::uint32_t seq);

    /// bins[i] = 0 if counts[i] == 0, else min(floor(log2(counts[i])) + 1, num_bins - 1).
    void (*classify_bins)(std::span<const std::uint32_t> counts, unsigned num_bins, std::span<std::uint8_t> bins);

    /// tallies[b] = number of i with bins[i] == b, for b < tallies.size().
    void (*bin_histogram)(std::span<const std::uint8_t> bins, std::span<std::uint64_t> tallies);

    /// Sum of weights[i] over i with mask[i] != 0.
    double (*masked_sum)(std::span<const double> weights, std::span<const std::uint8_t> mask);
};

const KernelTable& scalar_kernels();

/// nullptr when the build or the CPU lacks AVX2.
const KernelTable* avx2_kernels();

/// The table chosen at startup.
const KernelTable& active();

inline constexpr unsigned kMaxBins = 32;

}  // namespace tiermem::simd
