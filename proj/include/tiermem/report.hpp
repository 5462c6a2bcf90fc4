#pragma once

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "tiermem/engine.hpp"

namespace tiermem {

inline constexpr const char* kMetricsHeader =
    "epoch,pid,ops_completed,inst_fmmr,ewma_fmmr,quota_bytes,fast_resident_bytes,migrated_bytes,flagged";
inline constexpr const char* kTelemetryHeader = "epoch,pid,a_fast,a_slow,inst,ewma,quota";

std::string metrics_line(const MetricsRow& row);
std::string telemetry_line(const TelemetryRow& row);

/// Streams metrics.csv and telemetry.csv rows as epochs complete.
class CsvSink final : public EpochSink {
public:
    /// Throws std::system_error when either file cannot be created.
    explicit CsvSink(const std::filesystem::path& dir);
    void on_epoch(const EpochReport& report) override;
    void flush();

private:
    std::ofstream metrics_;
    std::ofstream telemetry_;
};

void write_summary(std::ostream& out, const RunSummary& summary);

/// One metrics.csv record as read back from disk.
struct MetricsRecord {
    std::uint64_t epoch = 0;
    std::uint32_t pid = 0;
    std::uint64_t ops = 0;
    double inst = 0.0;
    double ewma = 0.0;
    Bytes quota = 0;
    Bytes fast_resident = 0;
    Bytes migrated = 0;
    bool flagged = false;
};

/// Throws std::runtime_error on a malformed file.
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& file);

/// Renders ewma FMMR and throughput per process as SVG line charts. Uses only
/// the CSV contents. Returns the written files.
std::vector<std::filesystem::path> plot_metrics(const std::filesystem::path& metrics_csv,
                                                const std::filesystem::path& out_dir);

struct SweepPoint {
    std::string value;
    RunSummary summary;
};

/// Table of value, worst convergence time, steady-state FMMR and migrated bytes.
void write_sweep_table(std::ostream& out, const std::string& param, const std::vector<SweepPoint>& points);

}  // namespace tiermem
