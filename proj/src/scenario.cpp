#include "tiermem/scenario.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <system_error>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace tiermem {

ScenarioError::ScenarioError(const std::string& origin, int line, const std::string& what)
    : std::runtime_error(line > 0 ? fmt::format("{}:{}: {}", origin, line, what) : fmt::format("{}: {}", origin, what)),
      line_(line) {}

std::string_view to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::MaxMem:
            return "maxmem";
        case PolicyKind::Static:
            return "static";
        case PolicyKind::NoQos:
            return "noqos";
    }
    return "?";
}

std::uint64_t ScenarioScript::epoch_of(double at_seconds) const {
    // The nudge keeps 0.3 / 0.1 from landing on epoch 2.
    return static_cast<std::uint64_t>(std::floor(at_seconds / sampler.epoch_seconds + 1e-9));
}

std::uint64_t ScenarioScript::total_epochs() const {
    return static_cast<std::uint64_t>(std::ceil(duration_seconds / sampler.epoch_seconds - 1e-9));
}

namespace {

class Reader {
public:
    explicit Reader(std::string origin) : origin_(std::move(origin)) {}

    [[noreturn]] void fail(const YAML::Node& at, const std::string& what) const {
        throw ScenarioError(origin_, at.Mark().is_null() ? 0 : at.Mark().line + 1, what);
    }

    void expect_map(const YAML::Node& n, std::string_view what) const {
        if (!n.IsMap()) fail(n, fmt::format("{} must be a mapping", what));
    }

    void only_keys(const YAML::Node& n, std::string_view what, std::initializer_list<std::string_view> keys) const {
        expect_map(n, what);
        for (const auto& kv : n) {
            const auto key = kv.first.as<std::string>();
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
                fail(kv.first, fmt::format("unknown key '{}' in {}", key, what));
            }
        }
    }

    YAML::Node required(const YAML::Node& n, const char* key, std::string_view what) const {
        const YAML::Node v = n[key];
        if (!v) fail(n, fmt::format("{} is missing '{}'", what, key));
        return v;
    }

    template <typename T>
    T scalar(const YAML::Node& n, std::string_view key) const {
        if (!n.IsScalar()) fail(n, fmt::format("'{}' must be a scalar", key));
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            fail(n, fmt::format("'{}' has an invalid value '{}'", key, n.Scalar()));
        }
    }

    template <typename T>
    T get(const YAML::Node& parent, const char* key, T fallback) const {
        const YAML::Node v = parent[key];
        return v ? scalar<T>(v, key) : fallback;
    }

    Bytes bytes(const YAML::Node& n, std::string_view key) const {
        if (!n.IsScalar()) fail(n, fmt::format("'{}' must be a byte size", key));
        try {
            return parse_bytes(n.Scalar());
        } catch (const std::invalid_argument& e) {
            fail(n, fmt::format("'{}': {}", key, e.what()));
        }
    }

    Bytes get_bytes(const YAML::Node& parent, const char* key, Bytes fallback) const {
        const YAML::Node v = parent[key];
        return v ? bytes(v, key) : fallback;
    }

    AccessPattern pattern(const YAML::Node& n, Bytes working_set) const {
        only_keys(n, "pattern", {"kind", "hot", "warm", "hot_frac", "warm_frac", "theta"});
        const auto kind = scalar<std::string>(required(n, "kind", "pattern"), "kind");
        AccessPattern p;
        p.working_set = working_set;
        if (kind == "uniform") {
            p.variant = UniformPattern{};
        } else if (kind == "hotset") {
            HotSetPattern hs;
            hs.hot_bytes = bytes(required(n, "hot", "hotset pattern"), "hot");
            hs.hot_frac = get<double>(n, "hot_frac", hs.hot_frac);
            p.variant = hs;
        } else if (kind == "hotwarm") {
            HotWarmPattern hw;
            hw.hot_bytes = bytes(required(n, "hot", "hotwarm pattern"), "hot");
            hw.warm_bytes = bytes(required(n, "warm", "hotwarm pattern"), "warm");
            hw.hot_frac = get<double>(n, "hot_frac", hw.hot_frac);
            hw.warm_frac = get<double>(n, "warm_frac", hw.warm_frac);
            p.variant = hw;
        } else if (kind == "zipf") {
            ZipfPattern z;
            z.theta = get<double>(n, "theta", z.theta);
            p.variant = z;
        } else {
            fail(n["kind"], fmt::format("unknown pattern kind '{}'", kind));
        }
        return p;
    }

    double t_miss(const YAML::Node& n) const {
        const double t = scalar<double>(n, "t_miss");
        if (!(t > 0.0 && t <= 1.0)) fail(n, fmt::format("t_miss {} is outside (0, 1]", t));
        return t;
    }

    std::string name(const YAML::Node& body, std::string_view what) const {
        return scalar<std::string>(required(body, "name", what), "name");
    }

    EventAction action(const std::string& kind, const YAML::Node& body) const {
        if (kind == "start") {
            only_keys(body, "start", {"name", "t_miss", "threads", "working_set", "populate", "pattern", "seed"});
            ProcessSpec spec;
            spec.name = name(body, "start");
            spec.t_miss = t_miss(required(body, "t_miss", "start"));
            const Bytes ws = bytes(required(body, "working_set", "start"), "working_set");
            spec.pattern = body["pattern"] ? pattern(body["pattern"], ws) : AccessPattern{UniformPattern{}, ws};
            spec.pattern.threads = get<std::uint32_t>(body, "threads", 1);
            spec.pattern.seed = get<std::uint64_t>(body, "seed", 0);
            spec.populate = get<bool>(body, "populate", false);
            try {
                spec.pattern.validate();
            } catch (const std::invalid_argument& e) {
                fail(body, fmt::format("process '{}': {}", spec.name, e.what()));
            }
            return StartProcess{std::move(spec)};
        }
        if (kind == "stop") {
            only_keys(body, "stop", {"name"});
            return StopProcess{name(body, "stop")};
        }
        if (kind == "set_tmiss") {
            only_keys(body, "set_tmiss", {"name", "t_miss"});
            return SetTmiss{name(body, "set_tmiss"), t_miss(required(body, "t_miss", "set_tmiss"))};
        }
        if (kind == "resize_hot_set") {
            only_keys(body, "resize_hot_set", {"name", "hot"});
            return ResizeHotSet{name(body, "resize_hot_set"), bytes(required(body, "hot", "resize_hot_set"), "hot")};
        }
        if (kind == "set_migration_cap") {
            only_keys(body, "set_migration_cap", {"cap"});
            return SetMigrationCap{bytes(required(body, "cap", "set_migration_cap"), "cap")};
        }
        if (kind == "set_threads") {
            only_keys(body, "set_threads", {"name", "threads"});
            return SetThreads{name(body, "set_threads"),
                              scalar<std::uint32_t>(required(body, "threads", "set_threads"), "threads")};
        }
        fail(body, fmt::format("unknown event '{}'", kind));
    }

    ScenarioEvent event(const YAML::Node& n, std::size_t index) const {
        if (!n.IsMap()) fail(n, fmt::format("event {} must be a mapping", index));
        ScenarioEvent ev;
        ev.index = index;
        ev.line = n.Mark().line + 1;
        ev.at_seconds = scalar<double>(required(n, "at", fmt::format("event {}", index)), "at");
        if (!(ev.at_seconds >= 0.0)) fail(n["at"], fmt::format("event {}: 'at' must be non-negative", index));
        int actions = 0;
        for (const auto& kv : n) {
            const auto key = kv.first.as<std::string>();
            if (key == "at") continue;
            if (++actions > 1) fail(kv.first, fmt::format("event {} names more than one action", index));
            try {
                ev.action = action(key, kv.second.IsNull() ? YAML::Node(YAML::NodeType::Map) : kv.second);
            } catch (const ScenarioError& e) {
                throw ScenarioError(origin_, e.line() > 0 ? e.line() : ev.line,
                                    fmt::format("event {}: {}", index, strip(e.what())));
            }
        }
        if (actions == 0) fail(n, fmt::format("event {} has no action", index));
        return ev;
    }

    std::string strip(const std::string& msg) const {
        // Drop our own "origin:line: " prefix before re-wrapping.
        const std::string prefix = origin_ + ":";
        if (msg.rfind(prefix, 0) != 0) return msg;
        const auto colon = msg.find(": ", prefix.size());
        return colon == std::string::npos ? msg : msg.substr(colon + 2);
    }

    const std::string& origin() const { return origin_; }

private:
    std::string origin_;
};

const std::string& name_of(const EventAction& a) {
    static const std::string none;
    return std::visit(
        [](const auto& v) -> const std::string& {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, StartProcess>) {
                return v.spec.name;
            } else if constexpr (std::is_same_v<T, SetMigrationCap>) {
                return none;
            } else {
                return v.name;
            }
        },
        a);
}

}  // namespace

ScenarioScript parse_scenario(std::string_view text, const std::string& origin) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        throw ScenarioError(origin, e.mark.line + 1, e.msg);
    }
    const Reader r(origin);
    if (!root.IsMap()) throw ScenarioError(origin, 0, "scenario must be a mapping");
    r.only_keys(root, "scenario",
                {"name", "seed", "duration", "epoch", "tiers", "hotness", "sampler", "perf", "policy", "convergence",
                 "events"});

    ScenarioScript s;
    s.name = r.get<std::string>(root, "name", "scenario");
    s.seed = r.get<std::uint64_t>(root, "seed", s.seed);
    s.duration_seconds = r.get<double>(root, "duration", s.duration_seconds);
    s.sampler.epoch_seconds = r.get<double>(root, "epoch", s.sampler.epoch_seconds);
    if (!(s.duration_seconds > 0.0)) r.fail(root["duration"], "duration must be positive");

    if (const auto t = root["tiers"]) {
        r.only_keys(t, "tiers", {"fast", "slow", "page", "region_threshold"});
        s.tiers.fast_capacity = r.get_bytes(t, "fast", s.tiers.fast_capacity);
        s.tiers.slow_capacity = r.get_bytes(t, "slow", s.tiers.slow_capacity);
        s.tiers.page_size = r.get_bytes(t, "page", s.tiers.page_size);
        s.tiers.region_threshold = r.get_bytes(t, "region_threshold", s.tiers.region_threshold);
    }
    s.hotness.page_size = s.tiers.page_size;
    if (const auto h = root["hotness"]) {
        r.only_keys(h, "hotness", {"bins"});
        s.hotness.num_bins = r.get<unsigned>(h, "bins", s.hotness.num_bins);
    }
    if (const auto sm = root["sampler"]) {
        r.only_keys(sm, "sampler", {"period", "lambda", "idle_epsilon"});
        s.sampler.period = r.get<std::uint32_t>(sm, "period", s.sampler.period);
        s.sampler.lambda = r.get<double>(sm, "lambda", s.sampler.lambda);
        s.sampler.idle_epsilon = r.get<double>(sm, "idle_epsilon", s.sampler.idle_epsilon);
    }
    if (const auto p = root["perf"]) {
        r.only_keys(p, "perf",
                    {"fast_latency_ns", "slow_latency_ns", "contention_penalty", "migration_bandwidth",
                     "access_scale"});
        s.perf.fast_latency_ns = r.get<double>(p, "fast_latency_ns", s.perf.fast_latency_ns);
        s.perf.slow_latency_ns = r.get<double>(p, "slow_latency_ns", s.perf.slow_latency_ns);
        s.perf.contention_penalty = r.get<double>(p, "contention_penalty", s.perf.contention_penalty);
        s.perf.migration_bandwidth = static_cast<double>(r.get_bytes(p, "migration_bandwidth", 0));
        s.perf.access_scale = r.get<double>(p, "access_scale", s.perf.access_scale);
        if (!(s.perf.fast_latency_ns > 0.0 && s.perf.slow_latency_ns >= s.perf.fast_latency_ns && s.perf.contention_penalty >= 1.0 &&
              s.perf.access_scale > 0.0)) {
            r.fail(p, "perf needs 0 < fast latency <= slow latency, a positive access_scale and a penalty of at least 1");
        }
    }
    if (const auto p = root["policy"]) {
        r.only_keys(p, "policy", {"kind", "migration_cap", "realloc_share", "partitions"});
        const auto kind = r.get<std::string>(p, "kind", "maxmem");
        if (kind == "maxmem") {
            s.policy.kind = PolicyKind::MaxMem;
        } else if (kind == "static") {
            s.policy.kind = PolicyKind::Static;
        } else if (kind == "noqos") {
            s.policy.kind = PolicyKind::NoQos;
        } else {
            r.fail(p["kind"], fmt::format("unknown policy kind '{}'", kind));
        }
        s.policy.migration_cap = r.get_bytes(p, "migration_cap", s.policy.migration_cap);
        s.policy.realloc_share = r.get<double>(p, "realloc_share", s.policy.realloc_share);
        if (!(s.policy.realloc_share >= 0.0 && s.policy.realloc_share <= 1.0)) {
            r.fail(p["realloc_share"], "realloc_share must lie in [0, 1]");
        }
        if (const auto parts = p["partitions"]) {
            r.expect_map(parts, "partitions");
            for (const auto& kv : parts) {
                const auto key = kv.first.as<std::string>();
                s.policy.partitions[key] = r.bytes(kv.second, key);
            }
        }
    }
    if (const auto c = root["convergence"]) {
        r.only_keys(c, "convergence", {"tolerance", "window"});
        s.convergence_tolerance = r.get<double>(c, "tolerance", s.convergence_tolerance);
        s.convergence_window = r.get<std::uint32_t>(c, "window", s.convergence_window);
    }

    try {
        s.tiers.validate();
        s.sampler.validate();
        HotnessBins probe(Pid{0}, s.hotness);
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(origin, 0, e.what());
    }

    if (const auto evs = root["events"]) {
        if (!evs.IsSequence()) r.fail(evs, "events must be a list");
        for (std::size_t i = 0; i < evs.size(); ++i) {
            s.events.push_back(r.event(evs[i], i));
            if (i > 0 && s.events[i].at_seconds < s.events[i - 1].at_seconds) {
                throw ScenarioError(origin, s.events[i].line,
                                    fmt::format("event {}: time {}s is earlier than the previous event ({}s)", i,
                                                s.events[i].at_seconds, s.events[i - 1].at_seconds));
            }
        }
    }

    // Every referenced process must be live when the event fires.
    std::map<std::string, Bytes> live;
    for (const ScenarioEvent& ev : s.events) {
        const std::string& who = name_of(ev.action);
        const auto bad = [&](const std::string& what) {
            throw ScenarioError(origin, ev.line, fmt::format("event {}: {}", ev.index, what));
        };
        if (const auto* st = std::get_if<StartProcess>(&ev.action)) {
            if (!live.emplace(who, st->spec.pattern.working_set).second) {
                bad(fmt::format("process '{}' is already running", who));
            }
            if (s.policy.kind == PolicyKind::Static && !s.policy.partitions.contains(who)) {
                bad(fmt::format("process '{}' has no static partition", who));
            }
            if (st->spec.pattern.threads == 0) bad("threads must be positive at start");
            continue;
        }
        if (std::holds_alternative<SetMigrationCap>(ev.action)) continue;
        if (!live.contains(who)) bad(fmt::format("process '{}' is not running at {}s", who, ev.at_seconds));
        if (std::holds_alternative<StopProcess>(ev.action)) live.erase(who);
        if (const auto* rs = std::get_if<ResizeHotSet>(&ev.action); rs && rs->hot_bytes > live.at(who)) {
            bad(fmt::format("hot set of {} exceeds the working set of '{}'", format_bytes(rs->hot_bytes), who));
        }
    }
    return s;
}

ScenarioScript load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::system_error(errno, std::generic_category(), fmt::format("cannot open {}", path.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.string());
}

}  // namespace tiermem
