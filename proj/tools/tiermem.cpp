// tiermem: run tiered-memory scenarios and sweeps.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "tiermem/engine.hpp"
#include "tiermem/report.hpp"
#include "tiermem/scenario.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kIoError = 1;
constexpr int kScenarioError = 2;
constexpr int kKilled = 3;

namespace fs = std::filesystem;
using namespace tiermem;

int run_command(const std::string& scenario_path, const fs::path& out_dir, std::optional<std::uint64_t> seed,
                bool plot) {
    const ScenarioScript script = load_scenario(scenario_path);
    fs::create_directories(out_dir);
    CsvSink csv(out_dir);
    EpochSink* sinks[] = {&csv};
    const RunSummary summary = run_scenario(script, sinks, seed);
    csv.flush();

    std::ofstream txt(out_dir / "summary.txt");
    if (!txt) throw std::system_error(errno, std::generic_category(), "cannot write summary.txt");
    write_summary(txt, summary);
    write_summary(std::cout, summary);
    if (plot) {
        for (const auto& f : plot_metrics(out_dir / "metrics.csv", out_dir)) std::cout << "wrote " << f.string() << '\n';
    }
    if (!summary.invariants_ok) std::cerr << "warning: invariant violations recorded in summary.txt\n";
    return summary.any_killed() ? kKilled : kOk;
}

int sweep_command(const std::string& scenario_path, const std::string& param, const std::vector<std::string>& values,
                  std::optional<std::uint64_t> seed) {
    const ScenarioScript base = load_scenario(scenario_path);
    const double base_rate = static_cast<double>(base.policy.migration_cap) / base.sampler.epoch_seconds;
    std::vector<SweepPoint> points;
    bool killed = false;
    for (const auto& v : values) {
        ScenarioScript s = base;
        const Bytes page = s.tiers.page_size;
        if (param == "migration_cap") {
            // Values are rates per second.
            const double rate = static_cast<double>(parse_bytes(v));
            s.policy.migration_cap = static_cast<Bytes>(rate * s.sampler.epoch_seconds) / page * page;
        } else {
            double epoch = 0.0;
            try {
                epoch = std::stod(v);
            } catch (const std::exception&) {
                throw ScenarioError(scenario_path, 0, fmt::format("bad epoch duration '{}'", v));
            }
            if (!(epoch > 0.0)) throw ScenarioError(scenario_path, 0, "epoch duration must be positive");
            s.sampler.epoch_seconds = epoch;
            s.policy.migration_cap = static_cast<Bytes>(base_rate * epoch) / page * page;
        }
        SweepPoint pt{v, run_scenario(s, {}, seed)};
        killed = killed || pt.summary.any_killed();
        points.push_back(std::move(pt));
    }
    write_sweep_table(std::cout, param, points);
    return killed ? kKilled : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-tier memory simulator with per-process miss-ratio targets"};
    app.require_subcommand(1);

    std::string scenario;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    bool plot = false;
    auto* run = app.add_subcommand("run", "Run one scenario and write metrics.csv, telemetry.csv, summary.txt");
    run->add_option("scenario", scenario, "Scenario YAML file")->required();
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--seed", seed, "Override the scenario seed");
    run->add_flag("--plot", plot, "Also write SVG plots derived from metrics.csv");

    std::string param;
    std::vector<std::string> values;
    auto* sweep = app.add_subcommand("sweep", "Re-run a scenario across parameter values");
    sweep->add_option("scenario", scenario, "Scenario YAML file")->required();
    sweep->add_option("--param", param, "Parameter to vary")
        ->required()
        ->check(CLI::IsMember({"migration_cap", "epoch_duration"}));
    sweep->add_option("--values", values, "Values; caps are per second, durations in seconds")
        ->required()
        ->delimiter(',');
    sweep->add_option("--seed", seed, "Override the scenario seed");

    std::string metrics;
    auto* plot_cmd = app.add_subcommand("plot", "Render SVG plots from an existing metrics.csv");
    plot_cmd->add_option("metrics", metrics, "metrics.csv")->required();
    plot_cmd->add_option("--out", out_dir, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kScenarioError;
    }

    try {
        if (*run) return run_command(scenario, out_dir, seed, plot);
        if (*sweep) return sweep_command(scenario, param, values, seed);
        fs::create_directories(out_dir);
        for (const auto& f : plot_metrics(metrics, out_dir)) std::cout << "wrote " << f.string() << '\n';
        return kOk;
    } catch (const ScenarioError& e) {
        std::cerr << "scenario error: " << e.what() << '\n';
        return kScenarioError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "scenario error: " << e.what() << '\n';
        return kScenarioError;
    } catch (const std::system_error& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kIoError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIoError;
    }
}
