#include "tiermem/memmgr.hpp"

#include <fmt/format.h>

namespace tiermem {

void TierConfig::validate() const {
    if (page_size == 0) throw std::invalid_argument("page size must be positive");
    if (fast_capacity % page_size != 0 || slow_capacity % page_size != 0) {
        throw std::invalid_argument(fmt::format("tier capacities must be multiples of the page size {}",
                                                format_bytes(page_size)));
    }
}

Bytes MigrationLedger::moved_for(Pid pid, Bytes page_size) const {
    Bytes total = 0;
    for (const auto& m : moves) {
        if (m.pid == pid) total += page_size;
    }
    return total;
}

MemoryManager::MemoryManager(TierConfig config) : config_(config) { config_.validate(); }

void MemoryManager::add_process(Pid pid) {
    if (!procs_.try_emplace(pid).second) throw std::logic_error(fmt::format("pid {} added twice", pid.value));
}

MemoryManager::ProcessMemory& MemoryManager::proc(Pid pid) {
    const auto it = procs_.find(pid);
    if (it == procs_.end()) throw std::out_of_range(fmt::format("unknown pid {}", pid.value));
    return it->second;
}

const MemoryManager::ProcessMemory& MemoryManager::proc(Pid pid) const {
    const auto it = procs_.find(pid);
    if (it == procs_.end()) throw std::out_of_range(fmt::format("unknown pid {}", pid.value));
    return it->second;
}

RegionHandle MemoryManager::register_region(Pid pid, Bytes size, bool populate, std::optional<Bytes> quota) {
    if (size == 0) throw std::invalid_argument("region size must be positive");
    ProcessMemory& pm = proc(pid);
    const Bytes rounded = round_up(size, config_.page_size);
    const bool managed = rounded >= config_.region_threshold;
    if (managed && rounded > fast_free() + slow_free()) {
        throw RegionRejected(fmt::format("pid {}: region of {} exceeds free memory ({} fast + {} slow)", pid.value,
                                         format_bytes(rounded), format_bytes(fast_free()),
                                         format_bytes(slow_free())));
    }

    RegionHandle h{pid, static_cast<PageId>(pm.residency.size()),
                   static_cast<std::uint32_t>(rounded / config_.page_size), managed};
    if (!managed) {
        pm.residency.resize(pm.residency.size() + h.pages, page_state::kUnmanaged);
        pm.unmanaged += rounded;
        unmanaged_used_ += rounded;
        pm.regions.push_back(h);
        return h;
    }
    pm.residency.resize(pm.residency.size() + h.pages, page_state::kUntouched);
    pm.regions.push_back(h);
    if (populate) {
        for (std::uint32_t i = 0; i < h.pages; ++i) {
            if (handle_fault(pid, h.first_page + i, quota) == FaultResult::Killed) {
                throw std::logic_error(fmt::format("pid {}: populate failed despite the free-memory check", pid.value));
            }
        }
    }
    return h;
}

void MemoryManager::place(ProcessMemory& pm, PageId page, Tier tier) {
    if (tier == Tier::Fast) {
        pm.residency[page] = page_state::kFast;
        pm.fast += config_.page_size;
        fast_used_ += config_.page_size;
    } else {
        pm.residency[page] = page_state::kSlow;
        pm.slow += config_.page_size;
        slow_used_ += config_.page_size;
    }
}

FaultResult MemoryManager::handle_fault(Pid pid, PageId page, std::optional<Bytes> quota) {
    ProcessMemory& pm = proc(pid);
    if (page >= pm.residency.size()) {
        throw std::out_of_range(fmt::format("pid {}: page {} outside every registered region", pid.value, page));
    }
    if (pm.residency[page] != page_state::kUntouched) {
        throw std::logic_error(fmt::format("pid {}: page {} is already resident", pid.value, page));
    }
    const bool headroom = !quota || pm.fast + config_.page_size <= *quota;
    const FaultResult r = decide_placement(headroom, fast_free() >= config_.page_size,
                                           slow_free() >= config_.page_size);
    if (r == FaultResult::Fast) place(pm, page, Tier::Fast);
    if (r == FaultResult::Slow) place(pm, page, Tier::Slow);
    return r;
}

std::optional<Tier> MemoryManager::tier_of(Pid pid, PageId page) const {
    const ProcessMemory& pm = proc(pid);
    if (page >= pm.residency.size()) return std::nullopt;
    switch (pm.residency[page]) {
        case page_state::kFast:
        case page_state::kUnmanaged:
            return Tier::Fast;
        case page_state::kSlow:
            return Tier::Slow;
        default:
            return std::nullopt;
    }
}

bool MemoryManager::is_managed(Pid pid, PageId page) const {
    const ProcessMemory& pm = proc(pid);
    return page < pm.residency.size() && pm.residency[page] != page_state::kUnmanaged;
}

std::uint32_t MemoryManager::page_count(Pid pid) const {
    return static_cast<std::uint32_t>(proc(pid).residency.size());
}

std::size_t MemoryManager::execute_migrations(const MigrationPlan& plan, MigrationLedger& ledger) {
    std::size_t applied = 0;
    const std::vector<PlannedMove> moves = plan.ordered();
    for (std::size_t i = 0; i < moves.size(); ++i) {
        const PlannedMove& m = moves[i];
        if (ledger.bytes_moved + config_.page_size > ledger.cap) {
            ledger.deferred += moves.size() - i;
            break;
        }
        const auto it = procs_.find(m.pid);
        const std::uint8_t want = m.from == Tier::Fast ? page_state::kFast : page_state::kSlow;
        if (it == procs_.end() || m.page >= it->second.residency.size() || it->second.residency[m.page] != want) {
            ++ledger.stale;
            continue;
        }
        const Bytes room = m.to == Tier::Fast ? fast_free() : slow_free();
        if (room < config_.page_size) {
            ++ledger.stalled;
            continue;
        }
        ProcessMemory& pm = it->second;
        if (m.from == Tier::Fast) {
            pm.fast -= config_.page_size;
            fast_used_ -= config_.page_size;
        } else {
            pm.slow -= config_.page_size;
            slow_used_ -= config_.page_size;
        }
        place(pm, m.page, m.to);
        ledger.bytes_moved += config_.page_size;
        ledger.moves.push_back({m.pid, m.page, m.from, m.to});
        ++applied;
    }
    return applied;
}

FreedBytes MemoryManager::process_exit(Pid pid) {
    const auto it = procs_.find(pid);
    if (it == procs_.end()) throw std::out_of_range(fmt::format("unknown pid {}", pid.value));
    const FreedBytes freed{it->second.fast, it->second.slow, it->second.unmanaged};
    fast_used_ -= freed.fast;
    slow_used_ -= freed.slow;
    unmanaged_used_ -= freed.unmanaged;
    procs_.erase(it);
    return freed;
}

Bytes MemoryManager::fast_resident(Pid pid) const { return proc(pid).fast; }

Bytes MemoryManager::slow_resident(Pid pid) const { return proc(pid).slow; }

const std::vector<std::uint8_t>& MemoryManager::residency(Pid pid) const { return proc(pid).residency; }

bool MemoryManager::accounting_consistent() const {
    Bytes fast = 0;
    Bytes slow = 0;
    for (const auto& [pid, pm] : procs_) {
        Bytes pf = 0;
        Bytes ps = 0;
        for (const std::uint8_t r : pm.residency) {
            if (r == page_state::kFast) pf += config_.page_size;
            if (r == page_state::kSlow) ps += config_.page_size;
        }
        if (pf != pm.fast || ps != pm.slow) return false;
        fast += pf;
        slow += ps;
    }
    return fast == fast_used_ && slow == slow_used_ && fast_used_ <= config_.fast_capacity &&
           slow_used_ <= config_.slow_capacity;
}

}  // namespace tiermem
