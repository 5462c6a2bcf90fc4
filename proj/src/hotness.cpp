#include "tiermem/hotness.hpp"

#include <algorithm>
#include <bit>

#include <fmt/format.h>

#include "tiermem/simd.hpp"

namespace tiermem {

UnknownPageError::UnknownPageError(Pid owner, PageId page)
    : std::logic_error(fmt::format("page {} is not registered with the hotness bins of pid {}", page, owner.value)) {}

namespace {

std::uint32_t halve(std::uint32_t raw, std::uint32_t pending) { return pending >= 32 ? 0u : raw >> pending; }

}  // namespace

HotnessBins::HotnessBins(Pid owner, HotnessConfig config) : owner_(owner), config_(config) {
    if (config_.num_bins < 2 || config_.num_bins > simd::kMaxBins) {
        throw std::invalid_argument(fmt::format("hotness bin count must be in [2, {}], got {}", simd::kMaxBins,
                                                config_.num_bins));
    }
    if (config_.page_size == 0) throw std::invalid_argument("page size must be positive");
}

std::size_t HotnessBins::slot(PageId page) const {
    if (page >= present_.size() || present_[page] == 0) throw UnknownPageError(owner_, page);
    return page;
}

void HotnessBins::register_page(PageId page, Tier tier) {
    if (page >= present_.size()) {
        const std::size_t n = static_cast<std::size_t>(page) + 1;
        raw_.resize(n, 0);
        seen_.resize(n, 0);
        stamp_.resize(n, 0);
        tier_.resize(n, 0);
        bin_.resize(n, 0);
        present_.resize(n, 0);
    }
    if (present_[page] != 0) throw std::logic_error(fmt::format("page {} registered twice", page));
    present_[page] = 1;
    raw_[page] = 0;
    seen_[page] = cool_seq_;
    stamp_[page] = cool_seq_;
    tier_[page] = static_cast<std::uint8_t>(tier);
    bin_[page] = 0;
    ++page_count_;
}

void HotnessBins::unregister_page(PageId page) {
    const std::size_t i = slot(page);
    present_[i] = 0;
    raw_[i] = 0;
    bin_[i] = 0;
    --page_count_;
}

bool HotnessBins::contains(PageId page) const { return page < present_.size() && present_[page] != 0; }

void HotnessBins::set_tier(PageId page, Tier tier) { tier_[slot(page)] = static_cast<std::uint8_t>(tier); }

Tier HotnessBins::tier(PageId page) const { return static_cast<Tier>(tier_[slot(page)]); }

unsigned HotnessBins::classify(std::uint32_t count) const {
    if (count == 0) return 0;
    return std::min(static_cast<unsigned>(std::bit_width(count)), config_.num_bins - 1);
}

void HotnessBins::catch_up(std::size_t i) {
    raw_[i] = halve(raw_[i], cool_seq_ - seen_[i]);
    seen_[i] = cool_seq_;
}

void HotnessBins::restore_bin(std::size_t i) { bin_[i] = static_cast<std::uint8_t>(classify(raw_[i])); }

SampleResult HotnessBins::record_sample(PageId page) {
    const std::size_t i = slot(page);
    catch_up(i);
    if (raw_[i] != UINT32_MAX) ++raw_[i];
    stamp_[i] = cool_seq_;

    SampleResult result;
    if (raw_[i] >= cooling_threshold()) {
        if (cool() == CoolResult::Cooled) {
            // The page that crossed the threshold keeps its count and sits alone
            // in the hottest bin until a later cooling catches it.
            seen_[i] = cool_seq_;
            stamp_[i] = cool_seq_;
            result.triggered_cooling = true;
        } else {
            result.pinned = true;
        }
    }
    restore_bin(i);
    result.bin = bin_[i];
    return result;
}

CoolResult HotnessBins::cool() {
    if (cooled_this_epoch_) return CoolResult::Suppressed;
    ++cool_seq_;
    cooled_this_epoch_ = true;
    return CoolResult::Cooled;
}

void HotnessBins::refresh_all() {
    const auto& k = simd::active();
    k.apply_cooling(raw_, seen_, cool_seq_);
    k.classify_bins(raw_, config_.num_bins, bin_);
}

std::vector<PageId> HotnessBins::victims(Tier tier, Bytes budget, bool hottest_first) {
    const std::size_t limit = static_cast<std::size_t>(budget / config_.page_size);
    if (limit == 0) return {};
    refresh_all();

    const auto want = static_cast<std::uint8_t>(tier);
    std::vector<PageId> candidates;
    for (std::size_t i = 0; i < present_.size(); ++i) {
        if (present_[i] == 0 || tier_[i] != want) continue;
        if (hottest_first && bin_[i] == 0) continue;
        candidates.push_back(static_cast<PageId>(i));
    }
    const auto before = [&](PageId a, PageId b) {
        if (bin_[a] != bin_[b]) return hottest_first ? bin_[a] > bin_[b] : bin_[a] < bin_[b];
        if (stamp_[a] != stamp_[b]) return stamp_[a] < stamp_[b];
        return a < b;
    };
    if (candidates.size() > limit) {
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(limit),
                          candidates.end(), before);
        candidates.resize(limit);
    } else {
        std::sort(candidates.begin(), candidates.end(), before);
    }
    return candidates;
}

std::vector<PageId> HotnessBins::demotion_victims(Bytes budget) { return victims(Tier::Fast, budget, false); }

std::vector<PageId> HotnessBins::promotion_victims(Bytes budget) { return victims(Tier::Slow, budget, true); }

std::uint32_t HotnessBins::effective_count(PageId page) const {
    const std::size_t i = slot(page);
    return halve(raw_[i], cool_seq_ - seen_[i]);
}

unsigned HotnessBins::bin_of(PageId page) const { return classify(effective_count(page)); }

PageRecord HotnessBins::record(PageId page) const {
    const std::size_t i = slot(page);
    return PageRecord{page, owner_, static_cast<Tier>(tier_[i]), raw_[i], seen_[i]};
}

std::vector<PageId> HotnessBins::pages() const {
    std::vector<PageId> out;
    out.reserve(page_count_);
    for (std::size_t i = 0; i < present_.size(); ++i) {
        if (present_[i] != 0) out.push_back(static_cast<PageId>(i));
    }
    return out;
}

std::vector<std::uint64_t> HotnessBins::tallies() const {
    std::vector<std::uint32_t> raw = raw_;
    std::vector<std::uint32_t> seen = seen_;
    std::vector<std::uint8_t> bins(raw.size());
    const auto& k = simd::active();
    k.apply_cooling(raw, seen, cool_seq_);
    k.classify_bins(raw, config_.num_bins, bins);
    // Absent slots have raw 0 and land in bin 0; take them back out.
    std::vector<std::uint64_t> out(config_.num_bins);
    k.bin_histogram(bins, out);
    out[0] -= present_.size() - page_count_;
    return out;
}

std::vector<std::uint64_t> HotnessBins::tallies(Tier tier) const {
    std::vector<std::uint64_t> out(config_.num_bins, 0);
    const auto want = static_cast<std::uint8_t>(tier);
    for (std::size_t i = 0; i < present_.size(); ++i) {
        if (present_[i] != 0 && tier_[i] == want) ++out[classify(halve(raw_[i], cool_seq_ - seen_[i]))];
    }
    return out;
}

std::string HotnessBins::dump() const {
    const auto fast = tallies(Tier::Fast);
    const auto slow = tallies(Tier::Slow);
    std::string out = fmt::format("pid {} pages {} cool_seq {}\n", owner_.value, page_count_, cool_seq_);
    for (unsigned b = 0; b < config_.num_bins; ++b) {
        out += fmt::format("bin {} total {} fast {} slow {}\n", b, fast[b] + slow[b], fast[b], slow[b]);
    }
    return out;
}

}  // namespace tiermem
