#include "tiermem/telemetry.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace tiermem {

void SamplerConfig::validate() const {
    if (period < 1) throw std::invalid_argument("sampling period must be at least 1");
    if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument(fmt::format("lambda {} outside (0, 1]", lambda));
    if (!(epoch_seconds > 0.0)) throw std::invalid_argument("epoch duration must be positive");
    if (!(idle_epsilon >= 0.0 && idle_epsilon < 1.0)) throw std::invalid_argument("idle epsilon outside [0, 1)");
}

StrideSampler::StrideSampler(std::uint32_t period) : period_(period) {
    if (period_ == 0) throw std::invalid_argument("sampling period must be at least 1");
}

std::vector<Access> StrideSampler::ingest(ProcessQoSState& state, std::span<const Access> stream) {
    std::vector<Access> samples;
    samples.reserve(stream.size() / period_ + 1);
    for (const Access& a : stream) {
        if (!observe()) continue;
        samples.push_back(a);
        if (a.tier == Tier::Fast) {
            ++state.a_fast;
        } else {
            ++state.a_slow;
        }
    }
    return samples;
}

double epoch_fmmr(std::uint64_t a_fast, std::uint64_t a_slow) {
    const std::uint64_t total = a_fast + a_slow;
    if (total == 0) return 0.0;
    return static_cast<double>(a_slow) / static_cast<double>(total);
}

double update_ewma(double prev, double inst, double lambda) {
    return std::clamp(lambda * inst + (1.0 - lambda) * prev, 0.0, 1.0);
}

TelemetryRow close_epoch(ProcessQoSState& state, const SamplerConfig& config, std::uint64_t epoch) {
    const double inst = epoch_fmmr(state.a_fast, state.a_slow);
    double next = state.has_history ? update_ewma(state.a_miss, inst, config.lambda) : inst;
    if (next < config.idle_epsilon) next = 0.0;
    state.a_miss = next;
    state.has_history = true;

    TelemetryRow row{epoch, state.pid, state.a_fast, state.a_slow, inst, state.a_miss, state.quota};
    state.a_fast = 0;
    state.a_slow = 0;
    return row;
}

}  // namespace tiermem
