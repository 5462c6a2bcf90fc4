#include "tiermem/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace tiermem {

namespace {

/// Integer shares of `total` proportional to the exact `shares`, which sum to
/// `total` up to rounding. Prefix sums are rounded, so every prefix stays
/// within half a byte of its exact value and the shares add up to `total`.
std::vector<Bytes> apportion(const std::vector<double>& shares, Bytes total) {
    std::vector<Bytes> out(shares.size());
    double acc = 0.0;
    Bytes assigned = 0;
    for (std::size_t i = 0; i < shares.size(); ++i) {
        acc += shares[i];
        const Bytes upto = i + 1 == shares.size()
                               ? total
                               : std::clamp<Bytes>(static_cast<Bytes>(std::llround(acc)), assigned, total);
        out[i] = upto - assigned;
        assigned = upto;
    }
    return out;
}

std::vector<const ProcessQoSState*> by_arrival(std::span<const ProcessQoSState> states) {
    std::vector<const ProcessQoSState*> out;
    out.reserve(states.size());
    for (const auto& s : states) out.push_back(&s);
    std::stable_sort(out.begin(), out.end(),
                     [](const auto* a, const auto* b) { return a->arrival_seq < b->arrival_seq; });
    return out;
}

}  // namespace

ReallocationPlan plan_reallocation(std::span<const ProcessQoSState> states, Bytes budget, Bytes free_fast) {
    ReallocationPlan plan;
    plan.budget = budget;
    if (states.empty()) return plan;

    const auto ordered = by_arrival(states);
    for (const auto* s : ordered) plan.deltas[s->pid] = 0;

    std::vector<const ProcessQoSState*> needy;
    std::vector<const ProcessQoSState*> surplus;
    for (const auto* s : ordered) {
        if (s->a_miss > s->t_miss) {
            needy.push_back(s);
        } else if (s->a_miss < s->t_miss && s->quota > 0) {
            surplus.push_back(s);
        }
    }

    bool any_idle = false;
    for (const auto* s : needy) plan.f_need += s->a_miss / s->t_miss;
    for (const auto* s : surplus) {
        if (s->a_miss == 0.0) {
            any_idle = true;
        } else {
            plan.f_surplus += s->t_miss / s->a_miss;
        }
    }
    if (any_idle) plan.f_surplus = std::numeric_limits<double>::infinity();

    if (needy.empty()) {
        // Equal shares, each capped at what the process can use; the cap's
        // leftovers are shared again among the rest.
        std::vector<const ProcessQoSState*> open;
        for (const auto* s : ordered) {
            if (s->quota < s->quota_limit) open.push_back(s);
        }
        Bytes left = free_fast;
        while (!open.empty()) {
            const Bytes share = left / open.size();
            if (share == 0) break;
            std::vector<const ProcessQoSState*> still;
            for (const auto* s : open) {
                const Bytes held = s->quota + static_cast<Bytes>(plan.deltas[s->pid]);
                const Bytes give = std::min(share, s->quota_limit - held);
                plan.deltas[s->pid] += static_cast<std::int64_t>(give);
                plan.equal_share += give;
                left -= give;
                if (held + give < s->quota_limit) still.push_back(s);
            }
            if (still.size() == open.size()) break;
            open = std::move(still);
        }
        return plan;
    }

    // What each needy process is owed this epoch.
    std::vector<double> need_shares;
    for (const auto* s : needy) {
        need_shares.push_back(static_cast<double>(budget) * (s->a_miss / s->t_miss) / plan.f_need);
    }
    std::vector<Bytes> owed = apportion(need_shares, budget);
    for (std::size_t i = 0; i < needy.size(); ++i) {
        owed[i] = std::min(owed[i], needy[i]->quota_limit - std::min(needy[i]->quota, needy[i]->quota_limit));
    }

    // The free pool serves first, in arrival order, without touching anyone else.
    Bytes free_left = free_fast;
    std::vector<Bytes> residual(needy.size());
    Bytes residual_total = 0;
    for (std::size_t i = 0; i < needy.size(); ++i) {
        const Bytes grant = std::min(free_left, owed[i]);
        free_left -= grant;
        plan.free_granted += grant;
        plan.deltas[needy[i]->pid] += static_cast<std::int64_t>(grant);
        residual[i] = owed[i] - grant;
        residual_total += residual[i];
    }

    Bytes funding = 0;
    if (residual_total > 0 && !surplus.empty()) {
        if (any_idle) {
            const auto* victim = *std::find_if(surplus.begin(), surplus.end(),
                                               [](const auto* s) { return s->a_miss == 0.0; });
            const Bytes take = std::min(residual_total, victim->quota);
            plan.idle_victim = victim->pid;
            plan.deltas[victim->pid] -= static_cast<std::int64_t>(take);
            funding = take;
        } else {
            std::vector<double> exact;
            for (const auto* s : surplus) {
                exact.push_back(static_cast<double>(residual_total) * (s->t_miss / s->a_miss) / plan.f_surplus);
            }
            std::vector<double> open_shares;
            std::vector<std::size_t> open_index;
            double open_sum = 0.0;
            for (std::size_t i = 0; i < surplus.size(); ++i) {
                if (exact[i] >= static_cast<double>(surplus[i]->quota)) {
                    plan.deltas[surplus[i]->pid] -= static_cast<std::int64_t>(surplus[i]->quota);
                    funding += surplus[i]->quota;
                } else {
                    open_shares.push_back(exact[i]);
                    open_index.push_back(i);
                    open_sum += exact[i];
                }
            }
            const Bytes open_total =
                std::min(static_cast<Bytes>(std::llround(open_sum)), residual_total - std::min(residual_total, funding));
            const std::vector<Bytes> takes = apportion(open_shares, open_total);
            for (std::size_t k = 0; k < takes.size(); ++k) {
                const auto* s = surplus[open_index[k]];
                const Bytes take = std::min(takes[k], s->quota);
                plan.deltas[s->pid] -= static_cast<std::int64_t>(take);
                funding += take;
            }
        }
    }
    plan.taken = funding;

    // First come, first served when the takes fall short.
    for (std::size_t i = 0; i < needy.size(); ++i) {
        const Bytes grant = std::min(residual[i], funding);
        funding -= grant;
        plan.deltas[needy[i]->pid] += static_cast<std::int64_t>(grant);
        if (grant < residual[i]) plan.flagged.insert(needy[i]->pid);
    }
    return plan;
}

Bytes apply_reallocation(std::span<ProcessQoSState> states, const ReallocationPlan& plan, Bytes free_fast) {
    std::int64_t net = 0;
    for (auto& s : states) {
        const std::int64_t d = plan.delta(s.pid);
        if (d < 0 && static_cast<Bytes>(-d) > s.quota) {
            throw std::logic_error(fmt::format("plan takes more than pid {} holds", s.pid.value));
        }
        s.quota = static_cast<Bytes>(static_cast<std::int64_t>(s.quota) + d);
        net += d;
    }
    if (net > static_cast<std::int64_t>(free_fast)) throw std::logic_error("plan draws more than the free pool");
    return static_cast<Bytes>(static_cast<std::int64_t>(free_fast) - net);
}

std::vector<PlannedMove> MigrationPlan::ordered() const {
    std::vector<PlannedMove> out = demotions;
    out.insert(out.end(), promotions.begin(), promotions.end());
    return out;
}

void MigrationPlan::append(const MigrationPlan& other) {
    demotions.insert(demotions.end(), other.demotions.begin(), other.demotions.end());
    promotions.insert(promotions.end(), other.promotions.begin(), other.promotions.end());
    budget += other.budget;
}

MigrationPlan plan_migrations(const ProcessQoSState& state, HotnessBins& bins, Bytes quota_after,
                              Bytes fast_resident, Bytes budget, bool swaps) {
    MigrationPlan plan;
    plan.budget = budget;
    const Bytes page = bins.page_size();
    std::size_t pages_left = budget / page;
    if (pages_left == 0) return plan;

    const std::size_t quota_pages = quota_after / page;
    const std::size_t resident_pages = fast_resident / page;
    const Bytes everything = std::numeric_limits<Bytes>::max() / 2;

    const std::vector<PageId> cold = bins.demotion_victims(everything);
    const std::vector<PageId> hot = bins.promotion_victims(everything);
    const auto demote = [&](PageId p) { plan.demotions.push_back({state.pid, p, Tier::Fast, Tier::Slow}); };
    const auto promote = [&](PageId p) { plan.promotions.push_back({state.pid, p, Tier::Slow, Tier::Fast}); };

    std::size_t next_cold = 0;
    const std::size_t excess = resident_pages > quota_pages ? resident_pages - quota_pages : 0;
    const std::size_t evict = std::min({excess, pages_left, cold.size()});
    for (; next_cold < evict; ++next_cold) demote(cold[next_cold]);
    pages_left -= evict;
    if (evict < excess) return plan;

    std::size_t next_hot = 0;
    const std::size_t resident_now = resident_pages - evict;
    const std::size_t headroom = quota_pages > resident_now ? quota_pages - resident_now : 0;
    const std::size_t fill = std::min({headroom, pages_left, hot.size()});
    for (; next_hot < fill; ++next_hot) promote(hot[next_hot]);
    pages_left -= fill;

    if (!swaps) return plan;

    // Quota full: trade the hottest slow page for the coldest fast one while
    // that strictly improves the gradient.
    while (pages_left >= 2 && next_hot < hot.size() && next_cold < cold.size()) {
        if (bins.bin_of(hot[next_hot]) <= bins.bin_of(cold[next_cold])) break;
        demote(cold[next_cold++]);
        promote(hot[next_hot++]);
        pages_left -= 2;
    }
    return plan;
}

void Policy::on_start(ProcessQoSState& state, std::string_view, Bytes) { state.quota = 0; }

MigrationPlan Policy::plan(std::span<const ProcessView> processes, const TierView&, Bytes budget) const {
    // Quota moves for everyone come first; swaps only get what is left. A
    // plan with a larger budget extends the quota-only plan, so the second
    // pass just re-plans each process with its leftover added.
    std::vector<MigrationPlan> per(processes.size());
    Bytes left = budget;
    for (std::size_t i = 0; i < processes.size(); ++i) {
        const auto& v = processes[i];
        per[i] = plan_migrations(*v.state, *v.bins, v.state->quota, v.fast_resident, left, false);
        left -= std::min<Bytes>(left, per[i].size() * v.bins->page_size());
    }
    MigrationPlan all;
    for (std::size_t i = 0; i < processes.size(); ++i) {
        const auto& v = processes[i];
        const Bytes page = v.bins->page_size();
        if (left >= 2 * page) {
            const Bytes used = per[i].size() * page;
            per[i] = plan_migrations(*v.state, *v.bins, v.state->quota, v.fast_resident, used + left, true);
            left = used + left - std::min<Bytes>(used + left, per[i].size() * page);
        }
        all.append(per[i]);
    }
    all.budget = budget;
    return all;
}

namespace {

class MaxMemPolicy final : public Policy {
public:
    std::string_view name() const override { return "maxmem"; }

    ReallocationPlan reallocate(std::span<const ProcessQoSState> states, Bytes budget,
                                Bytes free_fast) const override {
        return plan_reallocation(states, budget, free_fast);
    }
};

class StaticPolicy final : public Policy {
public:
    explicit StaticPolicy(std::map<std::string, Bytes> partitions) : partitions_(std::move(partitions)) {}

    std::string_view name() const override { return "static"; }

    void on_start(ProcessQoSState& state, std::string_view process_name, Bytes free_fast) override {
        const auto it = partitions_.find(std::string(process_name));
        state.quota = it == partitions_.end() ? 0 : std::min(it->second, free_fast);
    }

    ReallocationPlan reallocate(std::span<const ProcessQoSState> states, Bytes budget, Bytes) const override {
        ReallocationPlan plan;
        plan.budget = budget;
        for (const auto& s : states) plan.deltas[s.pid] = 0;
        return plan;
    }

private:
    std::map<std::string, Bytes> partitions_;
};

class NoQosPolicy final : public Policy {
public:
    std::string_view name() const override { return "noqos"; }
    bool gates_faults() const override { return false; }

    ReallocationPlan reallocate(std::span<const ProcessQoSState> states, Bytes budget, Bytes) const override {
        ReallocationPlan plan;
        plan.budget = budget;
        for (const auto& s : states) plan.deltas[s.pid] = 0;
        return plan;
    }

    MigrationPlan plan(std::span<const ProcessView> processes, const TierView& tiers, Bytes budget) const override {
        struct Candidate {
            unsigned bin;
            std::size_t proc;
            std::size_t rank;
            PageId page;
        };
        const Bytes everything = std::numeric_limits<Bytes>::max() / 2;
        std::vector<Candidate> hot;
        std::vector<Candidate> cold;
        for (std::size_t p = 0; p < processes.size(); ++p) {
            HotnessBins& bins = *processes[p].bins;
            const auto promo = bins.promotion_victims(everything);
            for (std::size_t r = 0; r < promo.size(); ++r) hot.push_back({bins.bin_of(promo[r]), p, r, promo[r]});
            const auto demo = bins.demotion_victims(everything);
            for (std::size_t r = 0; r < demo.size(); ++r) cold.push_back({bins.bin_of(demo[r]), p, r, demo[r]});
        }
        std::stable_sort(hot.begin(), hot.end(), [](const Candidate& a, const Candidate& b) {
            if (a.bin != b.bin) return a.bin > b.bin;
            return a.rank != b.rank ? a.rank < b.rank : a.proc < b.proc;
        });
        std::stable_sort(cold.begin(), cold.end(), [](const Candidate& a, const Candidate& b) {
            if (a.bin != b.bin) return a.bin < b.bin;
            return a.rank != b.rank ? a.rank < b.rank : a.proc < b.proc;
        });

        MigrationPlan plan;
        plan.budget = budget;
        const Bytes page = tiers.page_size;
        std::size_t pages_left = page == 0 ? 0 : budget / page;
        const std::size_t free_pages =
            page == 0 || tiers.fast_used >= tiers.fast_capacity ? 0 : (tiers.fast_capacity - tiers.fast_used) / page;
        const auto pid_of = [&](const Candidate& c) { return processes[c.proc].state->pid; };

        std::size_t h = 0;
        const std::size_t fill = std::min({free_pages, pages_left, hot.size()});
        for (; h < fill; ++h) plan.promotions.push_back({pid_of(hot[h]), hot[h].page, Tier::Slow, Tier::Fast});
        pages_left -= fill;
        std::size_t c = 0;
        while (pages_left >= 2 && h < hot.size() && c < cold.size() && hot[h].bin > cold[c].bin) {
            plan.demotions.push_back({pid_of(cold[c]), cold[c].page, Tier::Fast, Tier::Slow});
            plan.promotions.push_back({pid_of(hot[h]), hot[h].page, Tier::Slow, Tier::Fast});
            ++h;
            ++c;
            pages_left -= 2;
        }
        return plan;
    }
};

}  // namespace

std::unique_ptr<Policy> make_maxmem_policy() { return std::make_unique<MaxMemPolicy>(); }

std::unique_ptr<Policy> baseline_static(std::map<std::string, Bytes> partitions, Bytes fast_capacity) {
    Bytes total = 0;
    for (const auto& [name, bytes] : partitions) total += bytes;
    if (total > fast_capacity) {
        throw std::invalid_argument(fmt::format("static partitions total {} but the fast tier holds {}",
                                                format_bytes(total), format_bytes(fast_capacity)));
    }
    return std::make_unique<StaticPolicy>(std::move(partitions));
}

std::unique_ptr<Policy> baseline_noqos() { return std::make_unique<NoQosPolicy>(); }

}  // namespace tiermem
