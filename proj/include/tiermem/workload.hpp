#pragma once

#include <cstdint>
#include <random>
#include <variant>
#include <vector>

#include "tiermem/units.hpp"

namespace tiermem {

struct UniformPattern {};

/// Three disjoint page bands: hot, then warm, then the cold remainder.
struct HotWarmPattern {
    Bytes hot_bytes = 0;
    Bytes warm_bytes = 0;
    double hot_frac = 0.6;
    double warm_frac = 0.3;
};

struct HotSetPattern {
    Bytes hot_bytes = 0;
    double hot_frac = 0.9;
};

/// Page popularity proportional to 1 / (page + 1)^theta.
struct ZipfPattern {
    double theta = 0.99;
};

using PatternVariant = std::variant<UniformPattern, HotWarmPattern, HotSetPattern, ZipfPattern>;

struct AccessPattern {
    PatternVariant variant = UniformPattern{};
    Bytes working_set = 0;
    std::uint32_t threads = 1;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument when the bands do not nest inside the
    /// working set or the fractions leave [0, 1].
    void validate() const;
};

/// A contiguous page range and the probability mass spread uniformly over it.
struct Band {
    PageId first = 0;
    PageId end = 0;
    double mass = 0.0;
};

/// Bands of a set-based pattern in page units. Empty bands are dropped and
/// the remaining masses renormalised to sum to 1. Zipf yields no bands.
std::vector<Band> bands_of(const AccessPattern& pattern, Bytes page_size);

std::uint32_t page_count(const AccessPattern& pattern, Bytes page_size);

/// Exact access probability of every page.
std::vector<double> page_probabilities(const AccessPattern& pattern, Bytes page_size);

/// Draws count page ids. The same rng state always yields the same stream.
std::vector<PageId> next_accesses(const AccessPattern& pattern, Bytes page_size, std::mt19937_64& rng,
                                  std::size_t count);

/// Stateful per-process generator: owns the RNG stream and caches the
/// pattern's sampling tables.
class AccessGenerator {
public:
    AccessGenerator(AccessPattern pattern, Bytes page_size, std::uint64_t stream_seed);

    void set_pattern(AccessPattern pattern);
    /// Changes the hot band (HotSet or HotWarm); throws for other variants.
    void resize_hot_set(Bytes hot_bytes);

    template <typename Fn>
    void generate(std::size_t count, Fn&& on_page) {
        for (std::size_t i = 0; i < count; ++i) on_page(draw(rng_));
    }
    std::vector<PageId> next(std::size_t count);
    PageId next_page() { return draw(rng_); }
    /// Draws one page from an external stream, leaving the owned one untouched.
    PageId draw(std::mt19937_64& rng) const;

    [[nodiscard]] const AccessPattern& pattern() const { return pattern_; }
    [[nodiscard]] std::uint32_t pages() const { return pages_; }
    [[nodiscard]] const std::vector<double>& probabilities() const { return probabilities_; }

private:
    void rebuild();

    AccessPattern pattern_;
    Bytes page_size_;
    std::uint32_t pages_ = 0;
    std::mt19937_64 rng_;
    std::vector<Band> bands_;
    std::vector<double> band_cdf_;
    std::vector<double> zipf_cdf_;
    std::vector<double> probabilities_;
};

}  // namespace tiermem
