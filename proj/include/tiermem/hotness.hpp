#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tiermem/units.hpp"

namespace tiermem {

struct HotnessConfig {
    unsigned num_bins = 6;
    Bytes page_size = 2 * MiB;
};

/// Snapshot of one tracked page. raw_count is the stored counter; pending
/// coolings since cool_seen have not been applied to it yet.
struct PageRecord {
    PageId page_id = 0;
    Pid owner{};
    Tier tier = Tier::Slow;
    std::uint32_t raw_count = 0;
    std::uint32_t cool_seen = 0;
};

/// A sample or query named a page the bins have never seen. Always a
/// bookkeeping bug in the caller.
class UnknownPageError : public std::logic_error {
public:
    UnknownPageError(Pid owner, PageId page);
};

struct SampleResult {
    unsigned bin = 0;
    bool triggered_cooling = false;
    /// The page is over the cooling threshold but a cooling already ran this epoch.
    bool pinned = false;
};

enum class CoolResult { Cooled, Suppressed };

/// Per-process exponential hotness bins.
///
/// Bin b >= 1 holds pages whose effective count lies in [2^(b-1), 2^b); the
/// last bin is open-ended and bin 0 holds pages with no recent samples. A page
/// reaching 2^(B-1) samples halves every other page's count (a cooling), at
/// most once per epoch. Coolings are applied lazily: each page remembers the
/// cooling sequence number it last saw and catches up when it is sampled or
/// considered as a migration victim.
///
/// Victim order inside a bin is least-recently-sampled first (the cooling
/// sequence number at the page's last sample, then page id).
class HotnessBins {
public:
    explicit HotnessBins(Pid owner, HotnessConfig config = {});

    void register_page(PageId page, Tier tier);
    void unregister_page(PageId page);
    [[nodiscard]] bool contains(PageId page) const;

    void set_tier(PageId page, Tier tier);
    [[nodiscard]] Tier tier(PageId page) const;

    SampleResult record_sample(PageId page);
    CoolResult cool();
    /// Re-arms cooling for the next epoch.
    void begin_epoch() { cooled_this_epoch_ = false; }

    /// Fast-resident pages, coldest bin first, covering at most budget bytes.
    std::vector<PageId> demotion_victims(Bytes budget);
    /// Slow-resident pages outside bin 0, hottest bin first, covering at most budget bytes.
    std::vector<PageId> promotion_victims(Bytes budget);

    /// Applies every pending cooling to every page.
    void refresh_all();

    [[nodiscard]] std::uint32_t effective_count(PageId page) const;
    [[nodiscard]] unsigned bin_of(PageId page) const;
    [[nodiscard]] unsigned classify(std::uint32_t count) const;
    [[nodiscard]] PageRecord record(PageId page) const;

    /// Per-bin page counts after applying pending coolings.
    [[nodiscard]] std::vector<std::uint64_t> tallies() const;
    [[nodiscard]] std::vector<std::uint64_t> tallies(Tier tier) const;
    /// Text form of tallies() for golden tests.
    [[nodiscard]] std::string dump() const;

    [[nodiscard]] Pid owner() const { return owner_; }
    [[nodiscard]] unsigned num_bins() const { return config_.num_bins; }
    [[nodiscard]] Bytes page_size() const { return config_.page_size; }
    [[nodiscard]] std::uint32_t cooling_threshold() const { return 1u << (config_.num_bins - 1); }
    [[nodiscard]] std::uint32_t cool_seq() const { return cool_seq_; }
    [[nodiscard]] bool cooled_this_epoch() const { return cooled_this_epoch_; }
    [[nodiscard]] std::size_t page_count() const { return page_count_; }
    [[nodiscard]] std::vector<PageId> pages() const;

private:
    std::size_t slot(PageId page) const;
    void catch_up(std::size_t i);
    void restore_bin(std::size_t i);
    std::vector<PageId> victims(Tier tier, Bytes budget, bool hottest_first);

    Pid owner_;
    HotnessConfig config_;
    std::uint32_t cool_seq_ = 0;
    bool cooled_this_epoch_ = false;
    std::size_t page_count_ = 0;

    // Indexed by page id.
    std::vector<std::uint32_t> raw_;
    std::vector<std::uint32_t> seen_;
    std::vector<std::uint32_t> stamp_;
    std::vector<std::uint8_t> tier_;
    std::vector<std::uint8_t> bin_;
    std::vector<std::uint8_t> present_;
};

}  // namespace tiermem
