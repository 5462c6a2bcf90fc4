#include <doctest.h>

#include <sstream>

#include "support/tempdir.hpp"
#include "tiermem/report.hpp"

using namespace tiermem;

namespace {

const char* const kScript = R"(name: report
duration: 12
perf: {access_scale: 1000}
tiers: {fast: 8MiB, slow: 64MiB, page: 1MiB, region_threshold: 1MiB}
policy: {migration_cap: 2MiB}
events:
  - at: 0
    start: {name: a, t_miss: 0.2, working_set: 16MiB, pattern: {kind: hotset, hot: 4MiB}}
  - at: 2
    start: {name: b, t_miss: 1.0, working_set: 16MiB}
)";

}  // namespace

TEST_CASE("metrics lines have a fixed layout") {
    MetricsRow r;
    r.epoch = 3;
    r.pid = Pid{2};
    r.ops_completed = 1234;
    r.inst_fmmr = 0.25;
    r.ewma_fmmr = 1.0 / 3.0;
    r.quota = 4096;
    r.fast_resident = 2048;
    r.migrated_bytes = 1024;
    r.flagged = true;
    CHECK(metrics_line(r) == "3,2,1234,0.250000,0.333333,4096,2048,1024,1");
}

TEST_CASE("csv output round-trips through the reader") {
    testfs::TempDir dir("tiermem-report");
    const ScenarioScript s = parse_scenario(kScript);
    std::vector<MetricsRow> rows;
    {
        CsvSink csv(dir.path());
        struct Keep final : EpochSink {
            std::vector<MetricsRow>* out;
            void on_epoch(const EpochReport& r) override { out->insert(out->end(), r.rows.begin(), r.rows.end()); }
        } keep;
        keep.out = &rows;
        EpochSink* sinks[] = {&csv, &keep};
        run_scenario(s, sinks);
        csv.flush();
    }
    const std::string text = testfs::slurp(dir / "metrics.csv");
    CHECK(text.rfind(std::string(kMetricsHeader) + "\n", 0) == 0);
    CHECK(testfs::slurp(dir / "telemetry.csv").rfind(std::string(kTelemetryHeader) + "\n", 0) == 0);

    const auto back = read_metrics_csv(dir / "metrics.csv");
    REQUIRE(back.size() == rows.size());
    CHECK(rows.size() == 2 + 2 * 10);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].epoch == rows[i].epoch);
        CHECK(back[i].pid == rows[i].pid.value);
        CHECK(back[i].ops == rows[i].ops_completed);
        CHECK(back[i].quota == rows[i].quota);
        CHECK(back[i].ewma == doctest::Approx(rows[i].ewma_fmmr).epsilon(1e-6));
        CHECK(back[i].flagged == rows[i].flagged);
    }

    const auto files = plot_metrics(dir / "metrics.csv", dir.path());
    CHECK(files.size() == 2);
    for (const auto& f : files) {
        const std::string svg = testfs::slurp(f);
        CHECK(svg.find("<svg") != std::string::npos);
        CHECK(svg.find("</svg>") != std::string::npos);
    }
}

TEST_CASE("malformed metrics files are rejected") {
    testfs::TempDir dir("tiermem-report");
    CHECK_THROWS_AS(read_metrics_csv(dir.write("bad.csv", std::string(kMetricsHeader) + "\n1,2,x,0,0,0,0,0,0\n")),
                    std::runtime_error);
    CHECK_THROWS_AS(read_metrics_csv(dir.write("hdr.csv", "nope\n")), std::runtime_error);
    CHECK_THROWS(read_metrics_csv(dir / "missing.csv"));
    CHECK_THROWS_AS(CsvSink(dir / "no" / "such" / "dir"), std::system_error);
}

TEST_CASE("summary and sweep tables name every process") {
    const RunSummary sum = run_scenario(parse_scenario(kScript));
    std::ostringstream out;
    write_summary(out, sum);
    const std::string text = out.str();
    CHECK(text.find("scenario report") != std::string::npos);
    CHECK(text.find("invariants ok") != std::string::npos);
    CHECK(text.find("\na ") != std::string::npos);
    CHECK(text.find("\nb ") != std::string::npos);

    std::ostringstream table;
    write_sweep_table(table, "migration_cap", {{"1MiB", sum}, {"2MiB", sum}});
    CHECK(table.str().find("1MiB") != std::string::npos);
    CHECK(table.str().find("2MiB") != std::string::npos);
}
