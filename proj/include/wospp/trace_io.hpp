#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "wospp/engine.hpp"
#include "wospp/metrics.hpp"
#include "wospp/scenario.hpp"

namespace wospp {

inline constexpr int kTraceSchemaVersion = 1;

// Shortest text that parses back to the same double.
std::string format_number(double v);

// First line of every emitted file: {"schema", "version", "seed", "scenario"}.
std::string metadata_line(std::string_view schema, const Scenario& scenario);

class TraceWriter {
public:
    explicit TraceWriter(std::ostream& out) : out_(out) {}
    void header(const std::string& metadata);
    // One row per agent per layer.
    void snapshot(const SwarmState& state);
    void note(std::int64_t timestep, const std::string& text);

private:
    std::ostream& out_;
};

class MetricsWriter {
public:
    explicit MetricsWriter(std::ostream& out) : out_(out) {}
    void header(const std::string& metadata);
    void samples(const std::vector<MetricSample>& samples);

private:
    std::ostream& out_;
};

// Writes to `<path>.partial` and renames on commit(); an uncommitted sink removes
// its partial files, so a failed run leaves nothing behind.
class FileSink final : public TraceSink {
public:
    FileSink(const Scenario& scenario, std::optional<std::string> trace_path,
             std::optional<std::string> metrics_path);
    ~FileSink() override;
    FileSink(const FileSink&) = delete;
    FileSink& operator=(const FileSink&) = delete;

    // Records the initial state (timestep 0 snapshot and metrics).
    void begin(const SwarmState& state);
    void on_step(const SwarmState& state, const StepEvents& events) override;
    void on_note(std::int64_t timestep, const std::string& text) override;
    void commit();

    // Metric samples seen so far, kept when `keep_samples` is set.
    void keep_samples(bool keep) { keep_ = keep; }
    [[nodiscard]] const std::vector<MetricSample>& samples() const { return kept_; }

private:
    void record(const SwarmState& state);
    void check(std::ostream& s, const std::string& path) const;

    int period_;
    std::optional<std::string> trace_path_, metrics_path_;
    std::ofstream trace_file_, metrics_file_;
    std::unique_ptr<TraceWriter> trace_;
    std::unique_ptr<MetricsWriter> metrics_;
    bool committed_ = false;
    bool keep_ = false;
    std::vector<MetricSample> kept_;
};

// Per (timestep, channel, name): mean, sample std and count over runs.
struct AggregateRow {
    std::int64_t timestep = 0;
    std::optional<int> channel;
    std::string name;
    double mean = 0.0;
    double std = 0.0;
    int count = 0;
};

std::vector<AggregateRow> aggregate_samples(const std::vector<std::vector<MetricSample>>& runs);
void write_aggregate(std::ostream& out, const std::string& metadata,
                     const std::vector<AggregateRow>& rows);

}  // namespace wospp
