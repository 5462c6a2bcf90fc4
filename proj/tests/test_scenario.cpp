#include <doctest.h>

#include <filesystem>
#include <system_error>

#include "tiermem/scenario.hpp"

using namespace tiermem;

namespace {

const char* const kFull = R"(name: full
seed: 9
duration: 30
epoch: 0.5
tiers:
  fast: 64MiB
  slow: 256MiB
  page: 1MiB
  region_threshold: 2MiB
hotness:
  bins: 8
sampler:
  period: 50
  lambda: 0.25
perf:
  fast_latency_ns: 80
  slow_latency_ns: 320
  migration_bandwidth: 1GiB
policy:
  kind: maxmem
  migration_cap: 16MiB
  realloc_share: 0.25
convergence:
  tolerance: 0.01
  window: 5
events:
  - at: 0
    start: {name: a, t_miss: 0.1, working_set: 32MiB, threads: 4, seed: 3,
            pattern: {kind: hotwarm, hot: 4MiB, warm: 8MiB}}
  - at: 0.3
    set_tmiss: {name: a, t_miss: 0.2}
  - at: 1
    resize_hot_set: {name: a, hot: 6MiB}
  - at: 2
    set_migration_cap: {cap: 2MiB}
  - at: 3
    set_threads: {name: a, threads: 0}
  - at: 4
    stop: {name: a}
)";

int error_line(const std::string& text) {
    try {
        parse_scenario(text, "t.yaml");
    } catch (const ScenarioError& e) {
        return e.line();
    }
    return -1;
}

std::string error_text(const std::string& text) {
    try {
        parse_scenario(text, "t.yaml");
    } catch (const ScenarioError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("a full scenario parses") {
    const ScenarioScript s = parse_scenario(kFull);
    CHECK(s.name == "full");
    CHECK(s.seed == 9);
    CHECK(s.total_epochs() == 60);
    CHECK(s.tiers.fast_capacity == 64 * MiB);
    CHECK(s.tiers.page_size == MiB);
    CHECK(s.hotness.page_size == MiB);
    CHECK(s.hotness.num_bins == 8);
    CHECK(s.sampler.period == 50);
    CHECK(s.sampler.lambda == 0.25);
    CHECK(s.perf.fast_latency_ns == 80.0);
    CHECK(s.perf.migration_bandwidth == static_cast<double>(GiB));
    CHECK(s.policy.migration_cap == 16 * MiB);
    CHECK(s.policy.realloc_share == 0.25);
    CHECK(s.convergence_window == 5);
    REQUIRE(s.events.size() == 6);

    const auto& start = std::get<StartProcess>(s.events[0].action).spec;
    CHECK(start.pattern.threads == 4);
    CHECK(start.pattern.seed == 3);
    const auto& hw = std::get<HotWarmPattern>(start.pattern.variant);
    CHECK(hw.hot_bytes == 4 * MiB);
    CHECK(hw.hot_frac == 0.6);
    CHECK(std::get<SetTmiss>(s.events[1].action).t_miss == 0.2);
    CHECK(s.epoch_of(s.events[1].at_seconds) == 0);
    CHECK(s.epoch_of(s.events[2].at_seconds) == 2);
    CHECK(std::get<ResizeHotSet>(s.events[2].action).hot_bytes == 6 * MiB);
    CHECK(std::get<SetMigrationCap>(s.events[3].action).cap == 2 * MiB);
    CHECK(std::get<SetThreads>(s.events[4].action).threads == 0);
    CHECK(std::holds_alternative<StopProcess>(s.events[5].action));
}

TEST_CASE("defaults apply to an empty scenario") {
    const ScenarioScript s = parse_scenario("name: empty\n");
    CHECK(s.events.empty());
    CHECK(s.perf.slow_latency_ns == 400.0);
    CHECK(s.policy.realloc_share == 0.5);
    CHECK(s.sampler.period == 100);
    CHECK(s.tiers.page_size == 2 * MiB);
}

TEST_CASE("unknown keys are reported with their line") {
    CHECK(error_line("name: x\nbogus: 1\n") == 2);
    CHECK(error_line("name: x\ntiers:\n  fast: 1GiB\n  fats: 1GiB\n") == 4);
    CHECK(error_text("name: x\nbogus: 1\n").find("bogus") != std::string::npos);
}

TEST_CASE("out-of-order events name the offending index") {
    const std::string text = R"(events:
  - at: 5
    start: {name: a, t_miss: 0.5, working_set: 4MiB}
  - at: 2
    stop: {name: a}
)";
    CHECK(error_line(text) == 4);
    CHECK(error_text(text).find("event 1") != std::string::npos);
}

TEST_CASE("events on processes that are not running are rejected") {
    CHECK(error_text("events:\n  - at: 1\n    stop: {name: ghost}\n").find("ghost") != std::string::npos);
    const std::string twice = R"(events:
  - at: 0
    start: {name: a, t_miss: 0.5, working_set: 4MiB}
  - at: 1
    stop: {name: a}
  - at: 2
    set_tmiss: {name: a, t_miss: 0.3}
)";
    CHECK(error_line(twice) == 6);
    const std::string restart = R"(events:
  - at: 0
    start: {name: a, t_miss: 0.5, working_set: 4MiB}
  - at: 1
    start: {name: a, t_miss: 0.5, working_set: 4MiB}
)";
    CHECK(error_text(restart).find("already running") != std::string::npos);
}

TEST_CASE("bad values are scenario errors") {
    const auto start = [](const std::string& body) { return "events:\n  - at: 0\n    start: {" + body + "}\n"; };
    CHECK(error_line(start("name: a, t_miss: 0, working_set: 4MiB")) == 3);
    CHECK(error_line(start("name: a, t_miss: 1.5, working_set: 4MiB")) == 3);
    CHECK(error_line(start("name: a, t_miss: 0.5, working_set: 4 parsecs")) > 0);
    CHECK(error_line(start("name: a, t_miss: 0.5, working_set: 4MiB, threads: 0")) > 0);
    CHECK(error_line(start("name: a, t_miss: 0.5, working_set: 4MiB, pattern: {kind: hotset, hot: 8MiB}")) > 0);
    CHECK(error_line(start("name: a, t_miss: 0.5, working_set: 4MiB, pattern: {kind: spiral}")) > 0);
    CHECK(error_line("events:\n  - at: 0\n    teleport: {}\n") > 0);
    CHECK(error_line("events:\n  - at: -1\n    set_migration_cap: {cap: 1MiB}\n") > 0);
    CHECK(error_line("policy: {kind: chaos}\n") == 1);
    CHECK(error_line("perf: {fast_latency_ns: 500, slow_latency_ns: 100}\n") == 1);
    CHECK(error_line("duration: 0\n") == 1);
    CHECK_THROWS_AS(parse_scenario("tiers: {fast: 3MiB, page: 2MiB}\n"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario("sampler: {period: 0}\n"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario("- a list\n"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario("name: [unclosed\n"), ScenarioError);
    const std::string resize = R"(events:
  - at: 0
    start: {name: a, t_miss: 0.5, working_set: 4MiB, pattern: {kind: hotset, hot: 1MiB}}
  - at: 1
    resize_hot_set: {name: a, hot: 8MiB}
)";
    CHECK(error_line(resize) == 4);
}

TEST_CASE("static policies need a partition for every process") {
    const std::string base = R"(policy:
  kind: static
  partitions: {a: 8MiB}
events:
  - at: 0
    start: {name: a, t_miss: 0.5, working_set: 4MiB}
)";
    const ScenarioScript s = parse_scenario(base);
    CHECK(s.policy.kind == PolicyKind::Static);
    CHECK(s.policy.partitions.at("a") == 8 * MiB);
    CHECK(error_line(base + "  - at: 1\n    start: {name: b, t_miss: 0.5, working_set: 4MiB}\n") == 7);
}

TEST_CASE("missing files raise a system error") {
    CHECK_THROWS_AS(load_scenario(std::filesystem::path("/nonexistent/scenario.yaml")), std::system_error);
}

TEST_CASE("shipped scenarios load") {
    for (const auto& entry : std::filesystem::directory_iterator(TIERMEM_SCENARIO_DIR)) {
        if (entry.path().extension() != ".yaml") continue;
        CAPTURE(entry.path().string());
        CHECK_NOTHROW(load_scenario(entry.path()));
    }
}
