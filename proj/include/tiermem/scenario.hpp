#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tiermem/hotness.hpp"
#include "tiermem/memmgr.hpp"
#include "tiermem/telemetry.hpp"
#include "tiermem/units.hpp"
#include "tiermem/workload.hpp"

namespace tiermem {

/// Malformed or inconsistent scenario. line is 1-based, 0 when unknown.
class ScenarioError : public std::runtime_error {
public:
    ScenarioError(const std::string& origin, int line, const std::string& what);
    [[nodiscard]] int line() const { return line_; }

private:
    int line_;
};

struct ProcessSpec {
    std::string name;
    double t_miss = 1.0;
    AccessPattern pattern;
    bool populate = false;
};

struct StartProcess {
    ProcessSpec spec;
};
struct StopProcess {
    std::string name;
};
struct SetTmiss {
    std::string name;
    double t_miss = 1.0;
};
struct ResizeHotSet {
    std::string name;
    Bytes hot_bytes = 0;
};
struct SetMigrationCap {
    /// Bytes per epoch.
    Bytes cap = 0;
};
/// threads == 0 leaves the process resident but idle.
struct SetThreads {
    std::string name;
    std::uint32_t threads = 0;
};

using EventAction = std::variant<StartProcess, StopProcess, SetTmiss, ResizeHotSet, SetMigrationCap, SetThreads>;

struct ScenarioEvent {
    double at_seconds = 0.0;
    EventAction action;
    std::size_t index = 0;
    int line = 0;
};

enum class PolicyKind { MaxMem, Static, NoQos };

std::string_view to_string(PolicyKind kind);

struct PolicyConfig {
    PolicyKind kind = PolicyKind::MaxMem;
    /// Bytes moved per epoch at most.
    Bytes migration_cap = 4 * GiB;
    /// Fraction of the cap that bounds quota transfers per epoch.
    double realloc_share = 0.5;
    std::map<std::string, Bytes> partitions;
};

struct PerfModel {
    double fast_latency_ns = 100.0;
    double slow_latency_ns = 400.0;
    /// Slow-tier latency multiplier in epochs following migration traffic.
    double contention_penalty = 1.1;
    /// Bytes per second the migration engine sustains; 0 means unlimited.
    double migration_bandwidth = 0.0;
    /// Modelled operations per simulated access.
    double access_scale = 1.0;
};

struct ScenarioScript {
    std::string name;
    std::uint64_t seed = 1;
    double duration_seconds = 60.0;
    TierConfig tiers;
    HotnessConfig hotness;
    SamplerConfig sampler;
    PerfModel perf;
    PolicyConfig policy;
    std::vector<ScenarioEvent> events;
    /// Convergence means ewma <= t_miss + tolerance for window epochs.
    double convergence_tolerance = 0.02;
    std::uint32_t convergence_window = 10;

    [[nodiscard]] std::uint64_t total_epochs() const;
    /// Epoch at which an event fires: floor(at / epoch length).
    [[nodiscard]] std::uint64_t epoch_of(double at_seconds) const;
};

/// Parses and validates a scenario. origin names the source in errors.
ScenarioScript parse_scenario(std::string_view text, const std::string& origin = "<scenario>");
ScenarioScript load_scenario(const std::filesystem::path& path);

}  // namespace tiermem
