#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "tiermem/units.hpp"

namespace tiermem {

struct SamplerConfig {
    /// One sample per `period` accesses, counted per process.
    std::uint32_t period = 100;
    /// Weight of the newest epoch in the miss-ratio average.
    double lambda = 0.5;
    /// Policy epoch length in simulated seconds.
    double epoch_seconds = 1.0;
    /// Averaged miss ratios below this are snapped to exactly 0, which marks
    /// the process idle for reallocation.
    double idle_epsilon = 1e-3;

    void validate() const;
};

/// Per-process QoS bookkeeping.
struct ProcessQoSState {
    Pid pid{};
    /// Target fast-memory miss ratio in (0, 1].
    double t_miss = 1.0;
    /// Sampled accesses served by each tier during the current epoch.
    std::uint64_t a_fast = 0;
    std::uint64_t a_slow = 0;
    /// Averaged miss ratio, valid once has_history is set.
    double a_miss = 0.0;
    bool has_history = false;
    Bytes quota = 0;
    /// Most fast memory the process can use: its managed pages. Grants stop here.
    Bytes quota_limit = std::numeric_limits<Bytes>::max();
    std::uint64_t arrival_seq = 0;
};

struct Access {
    PageId page = 0;
    Tier tier = Tier::Slow;
};

/// Emits every period-th access of one process. The stride counter carries
/// across calls, so consecutive epochs see one continuous stream.
class StrideSampler {
public:
    explicit StrideSampler(std::uint32_t period);

    /// Returns true when this access is sampled.
    bool observe() {
        if (++counter_ < period_) return false;
        counter_ = 0;
        return true;
    }

    /// Samples a whole stream and bumps state.a_fast / state.a_slow.
    std::vector<Access> ingest(ProcessQoSState& state, std::span<const Access> stream);

    [[nodiscard]] std::uint32_t carried() const { return counter_; }
    [[nodiscard]] std::uint32_t period() const { return period_; }

private:
    std::uint32_t period_;
    std::uint32_t counter_ = 0;
};

/// a_slow / (a_slow + a_fast), or 0 when the process made no sampled accesses.
double epoch_fmmr(std::uint64_t a_fast, std::uint64_t a_slow);

double update_ewma(double prev, double inst, double lambda);

/// One line of per-epoch telemetry.
struct TelemetryRow {
    std::uint64_t epoch = 0;
    Pid pid{};
    std::uint64_t a_fast = 0;
    std::uint64_t a_slow = 0;
    double inst_fmmr = 0.0;
    double ewma_fmmr = 0.0;
    Bytes quota = 0;
};

/// Closes the epoch for one process: folds the instantaneous ratio into the
/// average (the first epoch seeds it directly) and resets the counters.
TelemetryRow close_epoch(ProcessQoSState& state, const SamplerConfig& config, std::uint64_t epoch);

}  // namespace tiermem
