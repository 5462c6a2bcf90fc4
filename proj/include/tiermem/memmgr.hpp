#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tiermem/policy.hpp"
#include "tiermem/units.hpp"

namespace tiermem {

namespace page_state {
inline constexpr std::uint8_t kFast = 0;
inline constexpr std::uint8_t kSlow = 1;
inline constexpr std::uint8_t kUntouched = 2;
inline constexpr std::uint8_t kUnmanaged = 3;
}  // namespace page_state

struct TierConfig {
    Bytes fast_capacity = 128 * GiB;
    Bytes slow_capacity = 768 * GiB;
    Bytes page_size = 2 * MiB;
    /// Regions smaller than this bypass tiering: always fast, tallied apart
    /// from the managed tiers.
    Bytes region_threshold = 1 * GiB;

    void validate() const;
};

class RegionRejected : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RegionHandle {
    Pid pid{};
    PageId first_page = 0;
    std::uint32_t pages = 0;
    bool managed = true;
};

enum class FaultResult { Fast, Slow, Killed };

/// Fault-time placement: fast when the process has quota headroom and the fast
/// tier has room, otherwise slow if it has room. With slow full, a free fast
/// page is used over quota; the process dies only when both tiers are full.
constexpr FaultResult decide_placement(bool quota_headroom, bool fast_free, bool slow_free) {
    if (quota_headroom && fast_free) return FaultResult::Fast;
    if (slow_free) return FaultResult::Slow;
    if (fast_free) return FaultResult::Fast;
    return FaultResult::Killed;
}

struct MigrationRecord {
    Pid pid{};
    PageId page = 0;
    Tier from = Tier::Slow;
    Tier to = Tier::Fast;
};

/// Moves applied in one epoch.
struct MigrationLedger {
    std::uint64_t epoch = 0;
    Bytes cap = 0;
    Bytes bytes_moved = 0;
    std::vector<MigrationRecord> moves;
    /// Plan entries whose page was freed or already elsewhere.
    std::uint64_t stale = 0;
    /// Plan entries the destination tier had no room for.
    std::uint64_t stalled = 0;
    /// Plan entries cut off by the cap.
    std::uint64_t deferred = 0;

    [[nodiscard]] Bytes moved_for(Pid pid, Bytes page_size) const;
};

struct FreedBytes {
    Bytes fast = 0;
    Bytes slow = 0;
    Bytes unmanaged = 0;
};

/// Ground truth for which tier every page lives in.
class MemoryManager {
public:
    explicit MemoryManager(TierConfig config);

    void add_process(Pid pid);
    [[nodiscard]] bool has_process(Pid pid) const { return procs_.contains(pid); }

    /// Reserves page ids for a region. Managed regions larger than the free
    /// memory of both tiers are rejected. With populate, every page is placed
    /// at once under the fault rules. quota == nullopt disables the quota gate.
    RegionHandle register_region(Pid pid, Bytes size, bool populate, std::optional<Bytes> quota);

    FaultResult handle_fault(Pid pid, PageId page, std::optional<Bytes> quota);

    /// nullopt while the page has never been touched.
    [[nodiscard]] std::optional<Tier> tier_of(Pid pid, PageId page) const;
    [[nodiscard]] bool is_managed(Pid pid, PageId page) const;
    [[nodiscard]] std::uint32_t page_count(Pid pid) const;

    /// Applies plan.ordered() until the next move would exceed cap.
    std::size_t execute_migrations(const MigrationPlan& plan, MigrationLedger& ledger);

    FreedBytes process_exit(Pid pid);

    [[nodiscard]] const TierConfig& config() const { return config_; }
    [[nodiscard]] Bytes fast_used() const { return fast_used_; }
    [[nodiscard]] Bytes slow_used() const { return slow_used_; }
    [[nodiscard]] Bytes fast_free() const { return config_.fast_capacity - fast_used_; }
    [[nodiscard]] Bytes slow_free() const { return config_.slow_capacity - slow_used_; }
    [[nodiscard]] Bytes unmanaged_used() const { return unmanaged_used_; }
    [[nodiscard]] Bytes fast_resident(Pid pid) const;
    [[nodiscard]] Bytes slow_resident(Pid pid) const;
    /// Per-page tier of a process: 0 fast, 1 slow, 2 untouched, 3 unmanaged.
    [[nodiscard]] const std::vector<std::uint8_t>& residency(Pid pid) const;

    /// Recounts both tiers from the page tables and compares with the running tallies.
    [[nodiscard]] bool accounting_consistent() const;

private:
    struct ProcessMemory {
        std::vector<std::uint8_t> residency;
        std::vector<RegionHandle> regions;
        Bytes fast = 0;
        Bytes slow = 0;
        Bytes unmanaged = 0;
    };

    ProcessMemory& proc(Pid pid);
    const ProcessMemory& proc(Pid pid) const;
    void place(ProcessMemory& pm, PageId page, Tier tier);

    TierConfig config_;
    std::map<Pid, ProcessMemory> procs_;
    Bytes fast_used_ = 0;
    Bytes slow_used_ = 0;
    Bytes unmanaged_used_ = 0;
};


}  // namespace tiermem
