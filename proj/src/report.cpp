#include "tiermem/report.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <map>
#include <sstream>
#include <system_error>

#include <fmt/format.h>

namespace tiermem {

std::string metrics_line(const MetricsRow& r) {
    return fmt::format("{},{},{},{:.6f},{:.6f},{},{},{},{}", r.epoch, r.pid.value, r.ops_completed, r.inst_fmmr,
                       r.ewma_fmmr, r.quota, r.fast_resident, r.migrated_bytes, r.flagged ? 1 : 0);
}

std::string telemetry_line(const TelemetryRow& r) {
    return fmt::format("{},{},{},{},{:.6f},{:.6f},{}", r.epoch, r.pid.value, r.a_fast, r.a_slow, r.inst_fmmr,
                       r.ewma_fmmr, r.quota);
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw std::system_error(errno, std::generic_category(), fmt::format("cannot write {}", p.string()));
    return out;
}

}  // namespace

CsvSink::CsvSink(const std::filesystem::path& dir)
    : metrics_(open_out(dir / "metrics.csv")), telemetry_(open_out(dir / "telemetry.csv")) {
    metrics_ << kMetricsHeader << '\n';
    telemetry_ << kTelemetryHeader << '\n';
}

void CsvSink::on_epoch(const EpochReport& report) {
    for (const auto& r : report.rows) metrics_ << metrics_line(r) << '\n';
    for (const auto& t : report.telemetry) telemetry_ << telemetry_line(t) << '\n';
}

void CsvSink::flush() {
    metrics_.flush();
    telemetry_.flush();
    if (!metrics_ || !telemetry_) throw std::system_error(EIO, std::generic_category(), "CSV write failed");
}

void write_summary(std::ostream& out, const RunSummary& s) {
    out << fmt::format("scenario {}\npolicy {}\nseed {}\nepochs {}\n", s.scenario, s.policy, s.seed, s.epochs);
    out << fmt::format("migrated {} total, {} peak epoch\n", format_bytes(s.total_migrated),
                       format_bytes(s.max_epoch_migrated));
    out << fmt::format("planning skipped in {} epochs\n", s.skipped_planning_epochs);
    out << fmt::format("invariants {}\n", s.invariants_ok ? "ok" : "VIOLATED");
    for (const auto& f : s.invariant_failures) out << "  " << f << '\n';
    out << fmt::format("{:<12} {:>4} {:>8} {:>8} {:>6} {:>6} {:>10} {:>8} {:>8} {:>12}\n", "process", "pid", "outcome",
                       "t_miss", "start", "end", "converged", "flagged", "ewma", "migrated");
    for (const auto& p : s.processes) {
        out << fmt::format("{:<12} {:>4} {:>8} {:>8.3f} {:>6} {:>6} {:>10} {:>8} {:>8.4f} {:>12}\n", p.name,
                           p.pid.value, to_string(p.outcome), p.t_miss, p.start_epoch,
                           p.end_epoch ? fmt::format("{}", *p.end_epoch) : "-",
                           p.converged_epoch ? fmt::format("{}", *p.converged_epoch) : "-", p.flagged_epochs,
                           p.tail_ewma, format_bytes(p.migrated_bytes));
    }
}

namespace {

template <typename T>
T field(std::string_view s, std::size_t line) {
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::runtime_error(fmt::format("metrics.csv line {}: bad field '{}'", line, s));
    }
    return v;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

}  // namespace

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::system_error(errno, std::generic_category(), fmt::format("cannot open {}", file.string()));
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader) {
        throw std::runtime_error(fmt::format("{}: unexpected header", file.string()));
    }
    std::vector<MetricsRecord> out;
    for (std::size_t n = 2; std::getline(in, line); ++n) {
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != 9) throw std::runtime_error(fmt::format("metrics.csv line {}: expected 9 fields", n));
        out.push_back({field<std::uint64_t>(f[0], n), field<std::uint32_t>(f[1], n), field<std::uint64_t>(f[2], n),
                       field<double>(f[3], n), field<double>(f[4], n), field<Bytes>(f[5], n), field<Bytes>(f[6], n),
                       field<Bytes>(f[7], n), field<int>(f[8], n) != 0});
    }
    return out;
}

namespace {

constexpr std::array<const char*, 8> kColours{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#17becf"};

struct Series {
    std::vector<std::pair<double, double>> points;
};

std::string line_chart(const std::string& title, const std::string& y_label, const std::map<std::uint32_t, Series>& s) {
    constexpr double W = 800, H = 400, L = 70, R = 110, T = 40, B = 50;
    double xmax = 1, ymax = 0;
    for (const auto& [pid, ser] : s) {
        for (const auto& [x, y] : ser.points) {
            xmax = std::max(xmax, x);
            ymax = std::max(ymax, y);
        }
    }
    if (ymax <= 0) ymax = 1;
    ymax *= 1.05;
    const auto px = [&](double x) { return L + x / xmax * (W - L - R); };
    const auto py = [&](double y) { return H - B - y / ymax * (H - T - B); };

    std::string svg = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" font-family=\"sans-serif\" "
        "font-size=\"12\">\n<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n"
        "<text x=\"{2}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{3}</text>\n",
        W, H, W / 2, title);
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", L, H - B, W - R);
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", L, T, H - B);
    for (int i = 0; i <= 4; ++i) {
        const double yv = ymax * i / 4, xv = xmax * i / 4;
        svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3g}</text>\n", L - 6, py(yv) + 4, yv);
        svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{:.0f}</text>\n", px(xv), H - B + 18, xv);
    }
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">epoch</text>\n", (L + W - R) / 2, H - 10);
    svg += fmt::format("<text x=\"16\" y=\"{0}\" transform=\"rotate(-90 16 {0})\" text-anchor=\"middle\">{1}</text>\n",
                       (T + H - B) / 2, y_label);
    std::size_t c = 0;
    for (const auto& [pid, ser] : s) {
        const char* colour = kColours[c % kColours.size()];
        std::string pts;
        for (const auto& [x, y] : ser.points) pts += fmt::format("{:.1f},{:.1f} ", px(x), py(y));
        svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", colour, pts);
        svg += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\">pid {}</text>\n", W - R + 10, T + 16 * (c + 1), colour,
                           pid);
        ++c;
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace

std::vector<std::filesystem::path> plot_metrics(const std::filesystem::path& metrics_csv,
                                                const std::filesystem::path& out_dir) {
    const auto records = read_metrics_csv(metrics_csv);
    std::map<std::uint32_t, Series> fmmr, ops;
    for (const auto& r : records) {
        fmmr[r.pid].points.emplace_back(static_cast<double>(r.epoch), r.ewma);
        ops[r.pid].points.emplace_back(static_cast<double>(r.epoch), static_cast<double>(r.ops) / 1e6);
    }
    const std::vector<std::pair<std::filesystem::path, std::string>> files{
        {out_dir / "fmmr.svg", line_chart("Averaged fast-memory miss ratio", "ewma FMMR", fmmr)},
        {out_dir / "throughput.svg", line_chart("Throughput", "Mops per epoch", ops)},
    };
    std::vector<std::filesystem::path> written;
    for (const auto& [path, body] : files) {
        std::ofstream out = open_out(path);
        out << body;
        if (!out) throw std::system_error(EIO, std::generic_category(), fmt::format("cannot write {}", path.string()));
        written.push_back(path);
    }
    return written;
}

void write_sweep_table(std::ostream& out, const std::string& param, const std::vector<SweepPoint>& points) {
    out << fmt::format("{:<16} {:>12} {:>12} {:>14} {:>8}\n", param, "converge_ep", "steady_fmmr", "migrated",
                       "killed");
    for (const auto& pt : points) {
        std::optional<std::uint64_t> worst;
        bool all = true;
        double fmmr = 0.0;
        std::size_t n = 0;
        for (const auto& p : pt.summary.processes) {
            if (p.outcome == Outcome::Rejected) continue;
            fmmr += p.tail_ewma;
            ++n;
            if (const auto c = p.convergence_epochs()) {
                worst = std::max(worst.value_or(0), *c);
            } else {
                all = false;
            }
        }
        const std::string conv = all && worst ? fmt::format("{}", *worst) : "-";
        out << fmt::format("{:<16} {:>12} {:>12.4f} {:>14} {:>8}\n", pt.value, conv,
                           n ? fmmr / static_cast<double>(n) : 0.0, format_bytes(pt.summary.total_migrated),
                           pt.summary.any_killed() ? "yes" : "no");
    }
}

}  // namespace tiermem
