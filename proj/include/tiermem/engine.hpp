#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tiermem/hotness.hpp"
#include "tiermem/memmgr.hpp"
#include "tiermem/policy.hpp"
#include "tiermem/scenario.hpp"
#include "tiermem/telemetry.hpp"
#include "tiermem/workload.hpp"

namespace tiermem {

struct MetricsRow {
    std::uint64_t epoch = 0;
    Pid pid{};
    std::string name;
    double t_miss = 1.0;
    std::uint64_t ops_completed = 0;
    double inst_fmmr = 0.0;
    double ewma_fmmr = 0.0;
    Bytes quota = 0;
    Bytes fast_resident = 0;
    Bytes migrated_bytes = 0;
    bool flagged = false;
};

enum class Lifecycle { Started, Changed, Exited, Killed, Rejected };

std::string_view to_string(Lifecycle what);

struct LifecycleEvent {
    std::uint64_t epoch = 0;
    Pid pid{};
    std::string name;
    Lifecycle what = Lifecycle::Started;
    std::string detail;
};

/// Everything that happened in one epoch.
struct EpochReport {
    std::uint64_t epoch = 0;
    std::vector<MetricsRow> rows;
    std::vector<TelemetryRow> telemetry;
    std::vector<LifecycleEvent> lifecycle;
    ReallocationPlan realloc;
    MigrationLedger ledger;
    Bytes fast_capacity = 0;
    Bytes fast_used = 0;
    Bytes quota_sum = 0;
    Bytes free_pool = 0;
    /// Planning was skipped while earlier migrations were still draining.
    bool planning_skipped = false;
    bool accounting_ok = true;

    [[nodiscard]] const MetricsRow* row(std::string_view name) const;
};

class EpochSink {
public:
    virtual ~EpochSink() = default;
    virtual void on_epoch(const EpochReport& report) = 0;
};

/// Drives one scenario epoch by epoch.
class Simulation {
public:
    explicit Simulation(ScenarioScript script, std::optional<std::uint64_t> seed_override = std::nullopt);
    ~Simulation();
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    EpochReport step();
    [[nodiscard]] bool finished() const { return epoch_ >= total_epochs_; }
    [[nodiscard]] std::uint64_t epoch() const { return epoch_; }
    [[nodiscard]] std::uint64_t total_epochs() const { return total_epochs_; }

    [[nodiscard]] const ScenarioScript& script() const { return script_; }
    [[nodiscard]] const MemoryManager& memory() const { return memory_; }
    [[nodiscard]] const Policy& policy() const { return *policy_; }
    [[nodiscard]] Bytes migration_cap() const { return cap_; }
    /// fast capacity minus the sum of live quotas.
    [[nodiscard]] Bytes free_pool() const;

    [[nodiscard]] std::optional<Pid> pid_of(std::string_view name) const;
    [[nodiscard]] const ProcessQoSState* state(std::string_view name) const;
    [[nodiscard]] const HotnessBins* bins(std::string_view name) const;
    [[nodiscard]] std::vector<std::string> live_processes() const;

private:
    struct Proc;

    Proc* find(std::string_view name) const;
    void apply_event(const ScenarioEvent& ev, EpochReport& rep);
    void start_process(const ProcessSpec& spec, EpochReport& rep);
    void remove_process(std::size_t index, Lifecycle why, std::string detail, EpochReport& rep);
    std::uint64_t run_accesses(Proc& p, bool& killed);

    ScenarioScript script_;
    std::uint64_t seed_;
    MemoryManager memory_;
    std::unique_ptr<Policy> policy_;
    std::vector<std::unique_ptr<Proc>> procs_;
    std::size_t next_event_ = 0;
    std::uint32_t next_pid_ = 1;
    std::uint64_t epoch_ = 0;
    std::uint64_t total_epochs_ = 0;
    Bytes cap_ = 0;
    Bytes prev_moved_ = 0;
    std::uint64_t stall_left_ = 0;
};

enum class Outcome { Running, Exited, Killed, Rejected };

std::string_view to_string(Outcome o);

struct ProcessSummary {
    Pid pid{};
    std::string name;
    double t_miss = 1.0;
    std::uint64_t start_epoch = 0;
    std::optional<std::uint64_t> end_epoch;
    Outcome outcome = Outcome::Running;
    /// Latest start, target change, resize or thread change.
    std::uint64_t last_disturbance = 0;
    /// First epoch at or after last_disturbance after which ewma stays within
    /// t_miss + tolerance for the rest of the process's life, provided that
    /// stretch lasts at least convergence_window epochs.
    std::optional<std::uint64_t> converged_epoch;
    std::uint64_t flagged_epochs = 0;
    Bytes migrated_bytes = 0;
    std::uint64_t total_ops = 0;
    double final_ewma = 0.0;
    /// Mean ewma over the last convergence_window epochs alive.
    double tail_ewma = 0.0;

    [[nodiscard]] std::optional<std::uint64_t> convergence_epochs() const;
};

struct RunSummary {
    std::string scenario;
    std::string policy;
    std::uint64_t seed = 0;
    std::uint64_t epochs = 0;
    Bytes total_migrated = 0;
    Bytes max_epoch_migrated = 0;
    std::uint64_t skipped_planning_epochs = 0;
    bool invariants_ok = true;
    std::vector<std::string> invariant_failures;
    std::vector<ProcessSummary> processes;

    [[nodiscard]] bool any_killed() const;
    [[nodiscard]] const ProcessSummary* process(std::string_view name) const;
};

/// Folds epoch reports into a RunSummary.
class SummaryCollector final : public EpochSink {
public:
    explicit SummaryCollector(const ScenarioScript& script, std::uint64_t seed);
    void on_epoch(const EpochReport& report) override;
    [[nodiscard]] RunSummary finish() const;

private:
    struct History {
        std::vector<std::uint64_t> epochs;
        std::vector<double> ewma;
        std::vector<double> target;
    };

    double tolerance_;
    std::uint32_t window_;
    RunSummary summary_;
    std::vector<History> history_;
};

/// Runs a scenario to completion, feeding every epoch to the sinks.
RunSummary run_scenario(const ScenarioScript& script, std::span<EpochSink* const> sinks = {},
                        std::optional<std::uint64_t> seed_override = std::nullopt);

}  // namespace tiermem
