#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wospp/composer.hpp"
#include "wospp/engine.hpp"
#include "wospp/scenario.hpp"
#include "wospp/trace_io.hpp"

namespace wospp {

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> steps;
    std::optional<std::string> trace_out;
    std::optional<std::string> metrics_out;
};

Scenario apply_overrides(Scenario scenario, const RunOverrides& o);

// Executes the run part of a scenario (single primitive, schedule or layer set)
// one timestep at a time. Shared by headless runs and the live gateway.
class Program {
public:
    explicit Program(Scenario scenario);

    [[nodiscard]] SwarmState init(std::vector<std::string>* notes = nullptr) const;
    // Emits the stage-0 boundary and init notes.
    void begin(SwarmState& state, TraceSink* sink, const std::vector<std::string>& init_notes = {});
    StepEvents advance(SwarmState& state, TraceSink* sink);

    [[nodiscard]] std::int64_t horizon() const { return scenario_.total_steps(); }
    [[nodiscard]] const Scenario& scenario() const { return scenario_; }
    [[nodiscard]] const std::vector<StageRecord>& stages() const;
    [[nodiscard]] bool following_schedule() const { return cursor_.has_value(); }
    // Hands control to the operator: the schedule no longer rebinds the swarm.
    void abandon_schedule();

private:
    Scenario scenario_;
    std::optional<ScheduleCursor> cursor_;
    std::vector<StageRecord> frozen_;
};

struct RunResult {
    std::int64_t steps = 0;
    std::vector<StageRecord> stages;
    std::vector<MetricSample> samples;  // only when requested
};

// Headless run; outputs go where scenario.outputs points. Nothing is left on disk
// when the run fails.
RunResult run_scenario(const Scenario& scenario, bool keep_samples = false);

struct SweepOptions {
    int seeds = 1;
    std::optional<std::string> aggregate_out;   // metrics aggregated over seeds
    std::optional<std::string> trace_pattern;   // per-seed traces, "<stem>.seed<N><ext>"
    int threads = 0;                            // 0: hardware concurrency
};

struct SweepResult {
    std::vector<std::uint64_t> seeds;
    std::vector<std::vector<MetricSample>> runs;  // in seed order
    std::vector<AggregateRow> rows;
};

SweepResult sweep_scenario(const Scenario& scenario, const SweepOptions& options);

std::string seeded_path(const std::string& path, std::uint64_t seed);

}  // namespace wospp
