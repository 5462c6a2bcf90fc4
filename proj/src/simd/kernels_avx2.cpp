// Compiled with -mavx2. Nothing in this file may run before dispatch.cpp has
// confirmed AVX2 support on the executing CPU.

#include <immintrin.h>

#include <algorithm>
#include <array>
#include <bit>

#include "kernels_internal.hpp"

namespace tiermem::simd {

namespace {

void apply_cooling(std::span<std::uint32_t> raw, std::span<std::uint32_t> seen, std::uint32_t seq) {
    const std::size_t n = raw.size();
    const __m256i vseq = _mm256_set1_epi32(static_cast<int>(seq));
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        auto* rp = reinterpret_cast<__m256i*>(raw.data() + i);
        auto* sp = reinterpret_cast<__m256i*>(seen.data() + i);
        const __m256i pending = _mm256_sub_epi32(vseq, _mm256_loadu_si256(sp));
        // srlv yields zero for counts above 31, matching the scalar rule.
        _mm256_storeu_si256(rp, _mm256_srlv_epi32(_mm256_loadu_si256(rp), pending));
        _mm256_storeu_si256(sp, vseq);
    }
    for (; i < n; ++i) {
        const std::uint32_t pending = seq - seen[i];
        raw[i] = pending >= 32 ? 0u : raw[i] >> pending;
        seen[i] = seq;
    }
}

void classify_bins(std::span<const std::uint32_t> counts, unsigned num_bins, std::span<std::uint8_t> bins) {
    const unsigned top = num_bins - 1;
    const std::size_t n = counts.size();
    // bin = #{k in [0, top) : c >= 2^k}, which is bit_width(c) capped at top.
    __m256i thresholds[kMaxBins];
    for (unsigned k = 0; k < top; ++k) thresholds[k] = _mm256_set1_epi32(static_cast<int>(1u << k));
    const __m256i pick = _mm256_setr_epi8(0, 4, 8, 12, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1,
                                          0, 4, 8, 12, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1);
    const __m256i gather_lo = _mm256_setr_epi32(0, 4, 1, 1, 1, 1, 1, 1);

    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256i c = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(counts.data() + i));
        __m256i acc = _mm256_setzero_si256();
        for (unsigned k = 0; k < top; ++k) {
            const __m256i ge = _mm256_cmpeq_epi32(_mm256_max_epu32(c, thresholds[k]), c);
            acc = _mm256_sub_epi32(acc, ge);
        }
        const __m256i packed = _mm256_permutevar8x32_epi32(_mm256_shuffle_epi8(acc, pick), gather_lo);
        _mm_storel_epi64(reinterpret_cast<__m128i*>(bins.data() + i), _mm256_castsi256_si128(packed));
    }
    for (; i < n; ++i) {
        const std::uint32_t c = counts[i];
        const unsigned b = c == 0 ? 0u : static_cast<unsigned>(std::bit_width(c));
        bins[i] = static_cast<std::uint8_t>(std::min(b, top));
    }
}

void bin_histogram(std::span<const std::uint8_t> bins, std::span<std::uint64_t> tallies) {
    std::fill(tallies.begin(), tallies.end(), 0);
    const std::size_t n = bins.size();
    const std::size_t nbins = tallies.size();
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(bins.data() + i));
        for (std::size_t b = 0; b < nbins; ++b) {
            const __m256i eq = _mm256_cmpeq_epi8(v, _mm256_set1_epi8(static_cast<char>(b)));
            tallies[b] += static_cast<std::uint64_t>(std::popcount(static_cast<std::uint32_t>(_mm256_movemask_epi8(eq))));
        }
    }
    for (; i < n; ++i) {
        if (bins[i] < nbins) ++tallies[bins[i]];
    }
}

double masked_sum(std::span<const double> weights, std::span<const std::uint8_t> mask) {
    const std::size_t n = weights.size();
    __m256d acc = _mm256_setzero_pd();
    const __m256i zero = _mm256_setzero_si256();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        std::int32_t m4 = 0;
        std::memcpy(&m4, mask.data() + i, sizeof m4);
        const __m256i m = _mm256_cvtepu8_epi64(_mm_cvtsi32_si128(m4));
        const __m256i keep = _mm256_xor_si256(_mm256_cmpeq_epi64(m, zero), _mm256_set1_epi64x(-1));
        const __m256d w = _mm256_and_pd(_mm256_loadu_pd(weights.data() + i), _mm256_castsi256_pd(keep));
        acc = _mm256_add_pd(acc, w);
    }
    alignas(32) std::array<double, 4> lanes{};
    _mm256_store_pd(lanes.data(), acc);
    for (; i < n; ++i) lanes[i & 3] += mask[i] != 0 ? weights[i] : 0.0;
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{"avx2", apply_cooling, classify_bins, bin_histogram, masked_sum};
    return table;
}

}  // namespace tiermem::simd
