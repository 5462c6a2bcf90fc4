#include <doctest.h>

#include <cstdlib>
#include <string>
#include <sys/wait.h>

#include "support/tempdir.hpp"

namespace {

const char* const kGood = R"(name: cli
duration: 8
perf: {access_scale: 1000}
tiers: {fast: 8MiB, slow: 64MiB, page: 1MiB, region_threshold: 1MiB}
events:
  - at: 0
    start: {name: a, t_miss: 0.2, working_set: 16MiB, pattern: {kind: hotset, hot: 4MiB}}
)";

const char* const kKill = R"(name: kill
duration: 3
tiers: {fast: 4MiB, slow: 4MiB, page: 1MiB, region_threshold: 1MiB}
events:
  - at: 0
    start: {name: a, t_miss: 1.0, working_set: 6MiB, populate: true}
  - at: 0
    start: {name: b, t_miss: 1.0, working_set: 2MiB}
  - at: 0
    start: {name: c, t_miss: 1.0, working_set: 2MiB}
)";

int run(const std::string& args, const testfs::TempDir& dir) {
    const std::string cmd = std::string(TIERMEM_CLI) + " " + args + " >" + (dir / "stdout").string() + " 2>" +
                            (dir / "stderr").string();
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("run writes metrics, telemetry and a summary") {
    testfs::TempDir dir("tiermem-cli");
    const auto yaml = dir.write("good.yaml", kGood);
    CHECK(run("run " + yaml.string() + " --out " + (dir / "o1").string() + " --plot", dir) == 0);
    for (const char* f : {"metrics.csv", "telemetry.csv", "summary.txt", "fmmr.svg", "throughput.svg"}) {
        CAPTURE(f);
        CHECK(std::filesystem::exists(dir / "o1" / f));
    }
    CHECK(testfs::slurp(dir / "stdout").find("scenario cli") != std::string::npos);

    CHECK(run("run " + yaml.string() + " --out " + (dir / "o2").string(), dir) == 0);
    CHECK(testfs::slurp(dir / "o1" / "metrics.csv") == testfs::slurp(dir / "o2" / "metrics.csv"));
    CHECK(testfs::slurp(dir / "o1" / "telemetry.csv") == testfs::slurp(dir / "o2" / "telemetry.csv"));

    CHECK(run("run " + yaml.string() + " --seed 5 --out " + (dir / "o3").string(), dir) == 0);
    CHECK(testfs::slurp(dir / "o1" / "metrics.csv") != testfs::slurp(dir / "o3" / "metrics.csv"));
}

TEST_CASE("exit codes") {
    testfs::TempDir dir("tiermem-cli");
    CHECK(run("run " + (dir / "missing.yaml").string() + " --out " + (dir / "o").string(), dir) == 1);
    CHECK(testfs::slurp(dir / "stderr").find("missing.yaml") != std::string::npos);

    const auto bad = dir.write("bad.yaml", "name: x\nbogus: 1\n");
    CHECK(run("run " + bad.string() + " --out " + (dir / "o").string(), dir) == 2);
    CHECK(testfs::slurp(dir / "stderr").find("bad.yaml:2") != std::string::npos);

    const auto kill = dir.write("kill.yaml", kKill);
    CHECK(run("run " + kill.string() + " --out " + (dir / "k").string(), dir) == 3);
    CHECK(testfs::slurp(dir / "k" / "summary.txt").find("killed") != std::string::npos);

    CHECK(run("frobnicate", dir) != 0);
}

TEST_CASE("plot and sweep subcommands") {
    testfs::TempDir dir("tiermem-cli");
    const auto yaml = dir.write("good.yaml", kGood);
    REQUIRE(run("run " + yaml.string() + " --out " + (dir / "o").string(), dir) == 0);
    CHECK(run("plot " + (dir / "o" / "metrics.csv").string() + " --out " + (dir / "p").string(), dir) == 0);
    CHECK(std::filesystem::exists(dir / "p" / "fmmr.svg"));

    CHECK(run("sweep " + yaml.string() + " --param migration_cap --values 1MiB 4MiB", dir) == 0);
    const std::string table = testfs::slurp(dir / "stdout");
    CHECK(table.find("1MiB") != std::string::npos);
    CHECK(table.find("4MiB") != std::string::npos);
    CHECK(run("sweep " + yaml.string() + " --param epoch_duration --values 0.5,1", dir) == 0);
    CHECK(testfs::slurp(dir / "stdout").find("0.5") != std::string::npos);
    CHECK(run("sweep " + yaml.string() + " --param epoch_duration --values -1", dir) == 2);
    CHECK(run("sweep " + yaml.string() + " --param color --values 1", dir) == 2);
}
