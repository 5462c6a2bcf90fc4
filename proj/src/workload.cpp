#include "tiermem/workload.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tiermem {

namespace {

bool unit_fraction(double f) { return f >= 0.0 && f <= 1.0; }

PageId pages_of(Bytes bytes, Bytes page_size) { return static_cast<PageId>(round_up(bytes, page_size) / page_size); }

std::vector<double> zipf_cdf(std::uint32_t pages, double theta) {
    std::vector<double> cdf(pages);
    double sum = 0.0;
    for (std::uint32_t i = 0; i < pages; ++i) {
        sum += 1.0 / std::pow(static_cast<double>(i) + 1.0, theta);
        cdf[i] = sum;
    }
    for (double& c : cdf) c /= sum;
    return cdf;
}

}  // namespace

void AccessPattern::validate() const {
    if (working_set == 0) throw std::invalid_argument("working set must be positive");
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, HotWarmPattern>) {
                if (v.hot_bytes > v.warm_bytes || v.warm_bytes > working_set) {
                    throw std::invalid_argument("hot/warm pattern needs hot <= warm <= working set");
                }
                if (!unit_fraction(v.hot_frac) || !unit_fraction(v.warm_frac) || v.hot_frac + v.warm_frac > 1.0) {
                    throw std::invalid_argument("hot/warm fractions must lie in [0, 1] and sum to at most 1");
                }
            } else if constexpr (std::is_same_v<T, HotSetPattern>) {
                if (v.hot_bytes > working_set) throw std::invalid_argument("hot set larger than the working set");
                if (!unit_fraction(v.hot_frac)) throw std::invalid_argument("hot fraction must lie in [0, 1]");
            } else if constexpr (std::is_same_v<T, ZipfPattern>) {
                if (!(v.theta >= 0.0)) throw std::invalid_argument("zipf theta must be non-negative");
            }
        },
        variant);
}

std::uint32_t page_count(const AccessPattern& pattern, Bytes page_size) {
    return pages_of(pattern.working_set, page_size);
}

std::vector<Band> bands_of(const AccessPattern& pattern, Bytes page_size) {
    const PageId n = page_count(pattern, page_size);
    std::vector<Band> raw = std::visit(
        [&](const auto& v) -> std::vector<Band> {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, UniformPattern>) {
                return {{0, n, 1.0}};
            } else if constexpr (std::is_same_v<T, HotWarmPattern>) {
                const PageId h = std::min(pages_of(v.hot_bytes, page_size), n);
                const PageId w = std::clamp(pages_of(v.warm_bytes, page_size), h, n);
                return {{0, h, v.hot_frac}, {h, w, v.warm_frac}, {w, n, 1.0 - v.hot_frac - v.warm_frac}};
            } else if constexpr (std::is_same_v<T, HotSetPattern>) {
                const PageId h = std::min(pages_of(v.hot_bytes, page_size), n);
                return {{0, h, v.hot_frac}, {h, n, 1.0 - v.hot_frac}};
            } else {
                return {};
            }
        },
        pattern.variant);

    std::vector<Band> out;
    double total = 0.0;
    for (const Band& b : raw) {
        if (b.end > b.first && b.mass > 0.0) {
            out.push_back(b);
            total += b.mass;
        }
    }
    if (out.empty() && n > 0 && !std::holds_alternative<ZipfPattern>(pattern.variant)) return {{0, n, 1.0}};
    for (Band& b : out) b.mass /= total;
    return out;
}

std::vector<double> page_probabilities(const AccessPattern& pattern, Bytes page_size) {
    const std::uint32_t n = page_count(pattern, page_size);
    std::vector<double> p(n, 0.0);
    if (const auto* z = std::get_if<ZipfPattern>(&pattern.variant)) {
        const std::vector<double> cdf = zipf_cdf(n, z->theta);
        for (std::uint32_t i = 0; i < n; ++i) p[i] = cdf[i] - (i == 0 ? 0.0 : cdf[i - 1]);
        return p;
    }
    for (const Band& b : bands_of(pattern, page_size)) {
        const double each = b.mass / static_cast<double>(b.end - b.first);
        std::fill(p.begin() + b.first, p.begin() + b.end, each);
    }
    return p;
}

std::vector<PageId> next_accesses(const AccessPattern& pattern, Bytes page_size, std::mt19937_64& rng,
                                  std::size_t count) {
    const AccessGenerator gen(pattern, page_size, 0);
    std::vector<PageId> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(gen.draw(rng));
    return out;
}

AccessGenerator::AccessGenerator(AccessPattern pattern, Bytes page_size, std::uint64_t stream_seed)
    : pattern_(std::move(pattern)), page_size_(page_size), rng_(stream_seed) {
    if (page_size_ == 0) throw std::invalid_argument("page size must be positive");
    pattern_.validate();
    rebuild();
}

void AccessGenerator::rebuild() {
    pages_ = page_count(pattern_, page_size_);
    bands_ = bands_of(pattern_, page_size_);
    band_cdf_.clear();
    double acc = 0.0;
    for (const Band& b : bands_) {
        acc += b.mass;
        band_cdf_.push_back(acc);
    }
    if (!band_cdf_.empty()) band_cdf_.back() = 1.0;
    zipf_cdf_.clear();
    if (const auto* z = std::get_if<ZipfPattern>(&pattern_.variant)) zipf_cdf_ = zipf_cdf(pages_, z->theta);
    probabilities_ = page_probabilities(pattern_, page_size_);
}

void AccessGenerator::set_pattern(AccessPattern pattern) {
    pattern.validate();
    pattern_ = std::move(pattern);
    rebuild();
}

void AccessGenerator::resize_hot_set(Bytes hot_bytes) {
    AccessPattern next = pattern_;
    if (auto* hs = std::get_if<HotSetPattern>(&next.variant)) {
        hs->hot_bytes = hot_bytes;
    } else if (auto* hw = std::get_if<HotWarmPattern>(&next.variant)) {
        hw->hot_bytes = hot_bytes;
        hw->warm_bytes = std::max(hw->warm_bytes, hot_bytes);
    } else {
        throw std::invalid_argument("only hot-set and hot/warm patterns have a hot set to resize");
    }
    set_pattern(std::move(next));
}

PageId AccessGenerator::draw(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (!zipf_cdf_.empty()) {
        const double u = unit(rng);
        const auto it = std::upper_bound(zipf_cdf_.begin(), zipf_cdf_.end(), u);
        return static_cast<PageId>(std::min<std::ptrdiff_t>(it - zipf_cdf_.begin(), pages_ - 1));
    }
    std::size_t band = 0;
    if (bands_.size() > 1) {
        const double u = unit(rng);
        while (band + 1 < bands_.size() && u >= band_cdf_[band]) ++band;
    }
    const Band& b = bands_[band];
    std::uniform_int_distribution<PageId> pick(b.first, b.end - 1);
    return pick(rng);
}

std::vector<PageId> AccessGenerator::next(std::size_t count) {
    std::vector<PageId> out;
    out.reserve(count);
    generate(count, [&](PageId p) { out.push_back(p); });
    return out;
}

}  // namespace tiermem
