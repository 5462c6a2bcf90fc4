#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tiermem/hotness.hpp"
#include "tiermem/telemetry.hpp"
#include "tiermem/units.hpp"

namespace tiermem {

/// Quota changes decided for one epoch.
///
/// Needy processes (a_miss > t_miss) are owed shares of `budget` in
/// proportion to a_miss / t_miss. Those shares are served from the free pool
/// first, then from surplus processes (a_miss < t_miss, quota > 0), which give
/// in proportion to t_miss / a_miss. An idle surplus process (a_miss == 0)
/// has an infinite ratio and alone covers the whole remainder, one idle
/// process per epoch. Takes are clamped to the giver's quota; when the clamped
/// takes cannot cover what is owed, needy processes are served in arrival
/// order and the ones left short are flagged. With nobody needy, leftover free
/// memory is split equally.
///
/// Byte shares are apportioned by largest remainder (ties go to the earlier
/// arrival) so that unclamped takes sum exactly to what is owed.
struct ReallocationPlan {
    Bytes budget = 0;
    double f_need = 0.0;
    /// +infinity when an idle process is present.
    double f_surplus = 0.0;
    std::map<Pid, std::int64_t> deltas;
    std::set<Pid> flagged;
    Bytes free_granted = 0;
    Bytes taken = 0;
    Bytes equal_share = 0;
    std::optional<Pid> idle_victim;

    [[nodiscard]] std::int64_t delta(Pid p) const {
        const auto it = deltas.find(p);
        return it == deltas.end() ? 0 : it->second;
    }
    /// Net bytes leaving the free pool.
    [[nodiscard]] Bytes drawn_from_free() const { return free_granted + equal_share; }
};

ReallocationPlan plan_reallocation(std::span<const ProcessQoSState> states, Bytes budget, Bytes free_fast);

/// Adds plan deltas to the matching quotas. Returns the free pool afterwards.
Bytes apply_reallocation(std::span<ProcessQoSState> states, const ReallocationPlan& plan, Bytes free_fast);

struct PlannedMove {
    Pid pid{};
    PageId page = 0;
    Tier from = Tier::Slow;
    Tier to = Tier::Fast;

    friend bool operator==(const PlannedMove&, const PlannedMove&) = default;
};

struct MigrationPlan {
    std::vector<PlannedMove> demotions;
    std::vector<PlannedMove> promotions;
    Bytes budget = 0;

    [[nodiscard]] std::size_t size() const { return demotions.size() + promotions.size(); }
    /// Demotions first so that promotions find room.
    [[nodiscard]] std::vector<PlannedMove> ordered() const;
    void append(const MigrationPlan& other);
};

/// Heat-gradient moves for one process: demote coldest-first down to
/// quota_after, promote hottest-first (never bin 0) into any headroom, then
/// swap hottest-slow for coldest-fast while the slow page sits in a strictly
/// hotter bin. Everything is capped by budget, with each swap costing two pages.
/// swaps == false stops after the quota moves.
MigrationPlan plan_migrations(const ProcessQoSState& state, HotnessBins& bins, Bytes quota_after,
                              Bytes fast_resident, Bytes budget, bool swaps = true);

/// What a policy sees of one live process.
struct ProcessView {
    ProcessQoSState* state = nullptr;
    HotnessBins* bins = nullptr;
    Bytes fast_resident = 0;
};

struct TierView {
    Bytes fast_capacity = 0;
    Bytes fast_used = 0;
    Bytes page_size = 0;
};

class Policy {
public:
    virtual ~Policy() = default;

    [[nodiscard]] virtual std::string_view name() const = 0;
    /// Whether fault-time fast placement must respect the process quota.
    [[nodiscard]] virtual bool gates_faults() const { return true; }
    /// Sets the starting quota of a newly arrived process.
    virtual void on_start(ProcessQoSState& state, std::string_view process_name, Bytes free_fast);
    [[nodiscard]] virtual ReallocationPlan reallocate(std::span<const ProcessQoSState> states, Bytes budget,
                                                      Bytes free_fast) const = 0;
    /// processes is in arrival order; the budget is pooled across them, quota
    /// moves for every process before any swaps.
    virtual MigrationPlan plan(std::span<const ProcessView> processes, const TierView& tiers, Bytes budget) const;
};

std::unique_ptr<Policy> make_maxmem_policy();

/// Fixed per-process partitions keyed by process name. Throws
/// std::invalid_argument when the partitions exceed fast_capacity.
std::unique_ptr<Policy> baseline_static(std::map<std::string, Bytes> partitions, Bytes fast_capacity);

/// One global heat ordering across processes, no quotas.
std::unique_ptr<Policy> baseline_noqos();

}  // namespace tiermem
