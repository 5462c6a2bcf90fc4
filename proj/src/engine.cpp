#include "tiermem/engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "tiermem/simd.hpp"

namespace tiermem {

std::string_view to_string(Lifecycle what) {
    switch (what) {
        case Lifecycle::Started:
            return "started";
        case Lifecycle::Changed:
            return "changed";
        case Lifecycle::Exited:
            return "exited";
        case Lifecycle::Killed:
            return "killed";
        case Lifecycle::Rejected:
            return "rejected";
    }
    return "?";
}

std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::Running:
            return "running";
        case Outcome::Exited:
            return "exited";
        case Outcome::Killed:
            return "killed";
        case Outcome::Rejected:
            return "rejected";
    }
    return "?";
}

const MetricsRow* EpochReport::row(std::string_view name) const {
    for (const auto& r : rows) {
        if (r.name == name) return &r;
    }
    return nullptr;
}

struct Simulation::Proc {
    std::string name;
    ProcessQoSState state;
    HotnessBins bins;
    AccessGenerator gen;
    StrideSampler sampler;
    std::uint32_t threads = 1;
    bool managed = true;
    std::uint64_t ops = 0;
    std::vector<std::uint8_t> mask;

    Proc(std::string n, ProcessQoSState s, const HotnessConfig& hc, AccessPattern pattern, Bytes page,
         std::uint64_t stream, std::uint32_t period)
        : name(std::move(n)),
          state(s),
          bins(s.pid, hc),
          gen(std::move(pattern), page, stream),
          sampler(period),
          threads(gen.pattern().threads) {}
};

namespace {

std::unique_ptr<Policy> make_policy(const ScenarioScript& s) {
    switch (s.policy.kind) {
        case PolicyKind::Static:
            return baseline_static(s.policy.partitions, s.tiers.fast_capacity);
        case PolicyKind::NoQos:
            return baseline_noqos();
        case PolicyKind::MaxMem:
            break;
    }
    return make_maxmem_policy();
}

std::uint64_t stream_seed(std::uint64_t run_seed, std::uint64_t process_seed, std::uint32_t pid) {
    std::seed_seq seq{static_cast<std::uint32_t>(run_seed), static_cast<std::uint32_t>(run_seed >> 32),
                      static_cast<std::uint32_t>(process_seed), static_cast<std::uint32_t>(process_seed >> 32), pid};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (std::uint64_t{out[0]} << 32) | out[1];
}

}  // namespace

Simulation::Simulation(ScenarioScript script, std::optional<std::uint64_t> seed_override)
    : script_(std::move(script)),
      seed_(seed_override.value_or(script_.seed)),
      memory_(script_.tiers),
      policy_(make_policy(script_)),
      total_epochs_(script_.total_epochs()),
      cap_(script_.policy.migration_cap) {
    script_.hotness.page_size = script_.tiers.page_size;
    script_.sampler.validate();
}

Simulation::~Simulation() = default;

Bytes Simulation::free_pool() const {
    Bytes sum = 0;
    for (const auto& p : procs_) sum += p->state.quota;
    return script_.tiers.fast_capacity - std::min(sum, script_.tiers.fast_capacity);
}

Simulation::Proc* Simulation::find(std::string_view name) const {
    for (const auto& p : procs_) {
        if (p->name == name) return p.get();
    }
    return nullptr;
}

std::optional<Pid> Simulation::pid_of(std::string_view name) const {
    const Proc* p = find(name);
    return p ? std::optional<Pid>(p->state.pid) : std::nullopt;
}

const ProcessQoSState* Simulation::state(std::string_view name) const {
    const Proc* p = find(name);
    return p ? &p->state : nullptr;
}

const HotnessBins* Simulation::bins(std::string_view name) const {
    const Proc* p = find(name);
    return p ? &p->bins : nullptr;
}

std::vector<std::string> Simulation::live_processes() const {
    std::vector<std::string> out;
    for (const auto& p : procs_) out.push_back(p->name);
    return out;
}

void Simulation::start_process(const ProcessSpec& spec, EpochReport& rep) {
    ProcessQoSState st;
    st.pid = Pid{next_pid_++};
    st.t_miss = spec.t_miss;
    st.arrival_seq = st.pid.value;
    memory_.add_process(st.pid);
    policy_->on_start(st, spec.name, free_pool());

    auto proc = std::make_unique<Proc>(spec.name, st, script_.hotness, spec.pattern, script_.tiers.page_size,
                                       stream_seed(seed_, spec.pattern.seed, st.pid.value), script_.sampler.period);
    try {
        const std::optional<Bytes> gate = policy_->gates_faults() ? std::optional<Bytes>(st.quota) : std::nullopt;
        const RegionHandle h = memory_.register_region(st.pid, spec.pattern.working_set, spec.populate, gate);
        proc->managed = h.managed;
        proc->state.quota_limit = h.managed ? Bytes{h.pages} * script_.tiers.page_size : 0;
    } catch (const RegionRejected& e) {
        memory_.process_exit(st.pid);
        rep.lifecycle.push_back({epoch_, st.pid, spec.name, Lifecycle::Rejected, e.what()});
        return;
    }
    if (proc->managed) {
        const auto& res = memory_.residency(st.pid);
        for (PageId i = 0; i < res.size(); ++i) {
            if (res[i] == page_state::kFast) proc->bins.register_page(i, Tier::Fast);
            if (res[i] == page_state::kSlow) proc->bins.register_page(i, Tier::Slow);
        }
    }
    rep.lifecycle.push_back({epoch_, st.pid, spec.name, Lifecycle::Started, {}});
    procs_.push_back(std::move(proc));
}

void Simulation::remove_process(std::size_t index, Lifecycle why, std::string detail, EpochReport& rep) {
    const Proc& p = *procs_[index];
    memory_.process_exit(p.state.pid);
    rep.lifecycle.push_back({epoch_, p.state.pid, p.name, why, std::move(detail)});
    procs_.erase(procs_.begin() + static_cast<std::ptrdiff_t>(index));
}

void Simulation::apply_event(const ScenarioEvent& ev, EpochReport& rep) {
    const auto target = [&](const std::string& name) -> Proc& {
        Proc* p = find(name);
        if (!p) throw ScenarioError(script_.name, ev.line, fmt::format("event {}: process '{}' is not running", ev.index, name));
        return *p;
    };
    const auto changed = [&](const Proc& p, std::string detail) {
        rep.lifecycle.push_back({epoch_, p.state.pid, p.name, Lifecycle::Changed, std::move(detail)});
    };
    std::visit(
        [&](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, StartProcess>) {
                start_process(a.spec, rep);
            } else if constexpr (std::is_same_v<T, StopProcess>) {
                const Proc& p = target(a.name);
                for (std::size_t i = 0; i < procs_.size(); ++i) {
                    if (procs_[i].get() == &p) {
                        remove_process(i, Lifecycle::Exited, {}, rep);
                        break;
                    }
                }
            } else if constexpr (std::is_same_v<T, SetTmiss>) {
                Proc& p = target(a.name);
                p.state.t_miss = a.t_miss;
                changed(p, fmt::format("t_miss {}", a.t_miss));
            } else if constexpr (std::is_same_v<T, ResizeHotSet>) {
                Proc& p = target(a.name);
                p.gen.resize_hot_set(a.hot_bytes);
                changed(p, fmt::format("hot set {}", format_bytes(a.hot_bytes)));
            } else if constexpr (std::is_same_v<T, SetMigrationCap>) {
                cap_ = a.cap;
            } else if constexpr (std::is_same_v<T, SetThreads>) {
                Proc& p = target(a.name);
                p.threads = a.threads;
                changed(p, fmt::format("threads {}", a.threads));
            }
        },
        ev.action);
}

std::uint64_t Simulation::run_accesses(Proc& p, bool& killed) {
    const PerfModel& perf = script_.perf;
    if (p.threads == 0) return 0;

    // Share of accesses landing in the slow tier under the current placement.
    const auto& res = memory_.residency(p.state.pid);
    p.mask.resize(res.size());
    for (std::size_t i = 0; i < res.size(); ++i) p.mask[i] = res[i] == page_state::kSlow ? 1 : 0;
    const double slow_share = std::clamp(simd::active().masked_sum(p.gen.probabilities(), p.mask), 0.0, 1.0);
    const double slow_ns = perf.slow_latency_ns * (prev_moved_ > 0 ? perf.contention_penalty : 1.0);
    const double latency = (1.0 - slow_share) * perf.fast_latency_ns + slow_share * slow_ns;
    const double ops = p.threads * script_.sampler.epoch_seconds * 1e9 / latency;
    const auto accesses = static_cast<std::uint64_t>(std::llround(ops / perf.access_scale));

    const std::optional<Bytes> gate = policy_->gates_faults() ? std::optional<Bytes>(p.state.quota) : std::nullopt;
    const Pid pid = p.state.pid;
    std::uint64_t done = 0;
    for (; done < accesses; ++done) {
        const PageId page = p.gen.next_page();
        std::optional<Tier> tier = memory_.tier_of(pid, page);
        if (!tier) {
            const FaultResult r = memory_.handle_fault(pid, page, gate);
            if (r == FaultResult::Killed) {
                killed = true;
                break;
            }
            tier = r == FaultResult::Fast ? Tier::Fast : Tier::Slow;
            p.bins.register_page(page, *tier);
        }
        if (!p.sampler.observe()) continue;
        if (*tier == Tier::Fast) {
            ++p.state.a_fast;
        } else {
            ++p.state.a_slow;
        }
        if (p.managed) p.bins.record_sample(page);
    }
    if (accesses == 0) return 0;
    return static_cast<std::uint64_t>(std::llround(ops * static_cast<double>(done) / static_cast<double>(accesses)));
}

EpochReport Simulation::step() {
    if (finished()) throw std::logic_error("simulation already finished");
    EpochReport rep;
    rep.epoch = epoch_;
    rep.fast_capacity = script_.tiers.fast_capacity;

    while (next_event_ < script_.events.size() && script_.epoch_of(script_.events[next_event_].at_seconds) <= epoch_) {
        apply_event(script_.events[next_event_++], rep);
    }
    for (auto& p : procs_) p->bins.begin_epoch();

    for (std::size_t i = 0; i < procs_.size();) {
        bool killed = false;
        procs_[i]->ops = run_accesses(*procs_[i], killed);
        if (killed) {
            remove_process(i, Lifecycle::Killed, "no free memory in either tier", rep);
        } else {
            ++i;
        }
    }

    for (auto& p : procs_) rep.telemetry.push_back(close_epoch(p->state, script_.sampler, epoch_));

    rep.ledger.epoch = epoch_;
    rep.ledger.cap = cap_;
    if (stall_left_ > 0) {
        --stall_left_;
        rep.planning_skipped = true;
    } else if (!procs_.empty()) {
        std::vector<ProcessQoSState> states;
        states.reserve(procs_.size());
        for (const auto& p : procs_) states.push_back(p->state);
        const auto budget = static_cast<Bytes>(std::floor(static_cast<double>(cap_) * script_.policy.realloc_share));
        const Bytes page = script_.tiers.page_size;
        rep.realloc = policy_->reallocate(states, budget / page * page, free_pool());
        apply_reallocation(states, rep.realloc, free_pool());
        for (std::size_t i = 0; i < procs_.size(); ++i) procs_[i]->state.quota = states[i].quota;

        std::vector<ProcessView> views;
        views.reserve(procs_.size());
        for (auto& p : procs_) views.push_back({&p->state, &p->bins, memory_.fast_resident(p->state.pid)});
        const MigrationPlan plan =
            policy_->plan(views, TierView{script_.tiers.fast_capacity, memory_.fast_used(), page}, cap_);
        memory_.execute_migrations(plan, rep.ledger);
        for (const auto& m : rep.ledger.moves) {
            for (auto& q : procs_) {
                if (q->state.pid == m.pid) q->bins.set_tier(m.page, m.to);
            }
        }
        if (script_.perf.migration_bandwidth > 0.0) {
            const double seconds = static_cast<double>(rep.ledger.bytes_moved) / script_.perf.migration_bandwidth;
            const double epochs = std::ceil(seconds / script_.sampler.epoch_seconds - 1e-9);
            if (epochs > 1.0) stall_left_ = static_cast<std::uint64_t>(epochs) - 1;
        }
    }
    prev_moved_ = rep.ledger.bytes_moved;

    for (const auto& p : procs_) {
        const Pid pid = p->state.pid;
        rep.quota_sum += p->state.quota;
        const TelemetryRow* tr = nullptr;
        for (const auto& t : rep.telemetry) {
            if (t.pid == pid) tr = &t;
        }
        rep.rows.push_back({epoch_, pid, p->name, p->state.t_miss, p->ops, tr ? tr->inst_fmmr : 0.0,
                            p->state.a_miss, p->state.quota, memory_.fast_resident(pid),
                            rep.ledger.moved_for(pid, script_.tiers.page_size), rep.realloc.flagged.contains(pid)});
    }
    rep.fast_used = memory_.fast_used();
    rep.free_pool = free_pool();
    rep.accounting_ok = memory_.accounting_consistent();
    ++epoch_;
    return rep;
}

std::optional<std::uint64_t> ProcessSummary::convergence_epochs() const {
    if (!converged_epoch) return std::nullopt;
    return *converged_epoch - last_disturbance;
}

bool RunSummary::any_killed() const {
    return std::any_of(processes.begin(), processes.end(),
                       [](const ProcessSummary& p) { return p.outcome == Outcome::Killed; });
}

const ProcessSummary* RunSummary::process(std::string_view name) const {
    const ProcessSummary* found = nullptr;
    for (const auto& p : processes) {
        if (p.name == name) found = &p;
    }
    return found;
}

SummaryCollector::SummaryCollector(const ScenarioScript& script, std::uint64_t seed)
    : tolerance_(script.convergence_tolerance), window_(script.convergence_window) {
    summary_.scenario = script.name;
    summary_.policy = std::string(to_string(script.policy.kind));
    summary_.seed = seed;
}

void SummaryCollector::on_epoch(const EpochReport& rep) {
    const auto find = [&](Pid pid) -> std::optional<std::size_t> {
        for (std::size_t i = summary_.processes.size(); i-- > 0;) {
            if (summary_.processes[i].pid == pid) return i;
        }
        return std::nullopt;
    };
    const auto fail = [&](std::string what) {
        summary_.invariants_ok = false;
        if (summary_.invariant_failures.size() < 20) {
            summary_.invariant_failures.push_back(fmt::format("epoch {}: {}", rep.epoch, what));
        }
    };

    for (const auto& ev : rep.lifecycle) {
        if (ev.what == Lifecycle::Started || ev.what == Lifecycle::Rejected) {
            ProcessSummary ps;
            ps.pid = ev.pid;
            ps.name = ev.name;
            ps.start_epoch = ev.epoch;
            ps.last_disturbance = ev.epoch;
            if (ev.what == Lifecycle::Rejected) {
                ps.outcome = Outcome::Rejected;
                ps.end_epoch = ev.epoch;
            }
            summary_.processes.push_back(ps);
            history_.emplace_back();
            continue;
        }
        const auto i = find(ev.pid);
        if (!i) continue;
        ProcessSummary& ps = summary_.processes[*i];
        if (ev.what == Lifecycle::Changed) {
            ps.last_disturbance = ev.epoch;
        } else {
            ps.outcome = ev.what == Lifecycle::Killed ? Outcome::Killed : Outcome::Exited;
            ps.end_epoch = ev.epoch;
        }
    }

    for (const auto& row : rep.rows) {
        const auto i = find(row.pid);
        if (!i) continue;
        ProcessSummary& ps = summary_.processes[*i];
        ps.t_miss = row.t_miss;
        ps.flagged_epochs += row.flagged ? 1 : 0;
        ps.migrated_bytes += row.migrated_bytes;
        ps.total_ops += row.ops_completed;
        ps.final_ewma = row.ewma_fmmr;
        History& h = history_[*i];
        h.epochs.push_back(row.epoch);
        h.ewma.push_back(row.ewma_fmmr);
        h.target.push_back(row.t_miss);
    }

    summary_.epochs = rep.epoch + 1;
    summary_.total_migrated += rep.ledger.bytes_moved;
    summary_.max_epoch_migrated = std::max(summary_.max_epoch_migrated, rep.ledger.bytes_moved);
    summary_.skipped_planning_epochs += rep.planning_skipped ? 1 : 0;
    if (rep.ledger.bytes_moved > rep.ledger.cap) fail("migrated bytes exceed the cap");
    if (rep.quota_sum > rep.fast_capacity) fail("quotas exceed the fast tier");
    if (rep.quota_sum + rep.free_pool != rep.fast_capacity) fail("quotas plus free pool differ from capacity");
    if (rep.fast_used > rep.fast_capacity) fail("fast tier over capacity");
    if (!rep.accounting_ok) fail("page accounting mismatch");
}

RunSummary SummaryCollector::finish() const {
    RunSummary out = summary_;
    for (std::size_t i = 0; i < out.processes.size(); ++i) {
        ProcessSummary& ps = out.processes[i];
        const History& h = history_[i];
        // Walk back over the trailing run of in-target epochs.
        std::size_t k = h.epochs.size();
        while (k > 0 && h.epochs[k - 1] >= ps.last_disturbance && h.ewma[k - 1] <= h.target[k - 1] + tolerance_) --k;
        if (h.epochs.size() - k >= std::max<std::uint32_t>(window_, 1)) ps.converged_epoch = h.epochs[k];
        const std::size_t tail = std::min<std::size_t>(window_, h.ewma.size());
        double sum = 0.0;
        for (std::size_t k = h.ewma.size() - tail; k < h.ewma.size(); ++k) sum += h.ewma[k];
        ps.tail_ewma = tail == 0 ? 0.0 : sum / static_cast<double>(tail);
    }
    return out;
}

RunSummary run_scenario(const ScenarioScript& script, std::span<EpochSink* const> sinks,
                        std::optional<std::uint64_t> seed_override) {
    Simulation sim(script, seed_override);
    SummaryCollector summary(script, seed_override.value_or(script.seed));
    while (!sim.finished()) {
        const EpochReport rep = sim.step();
        summary.on_epoch(rep);
        for (EpochSink* s : sinks) s->on_epoch(rep);
    }
    return summary.finish();
}

}  // namespace tiermem
