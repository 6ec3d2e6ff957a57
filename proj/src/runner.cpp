#include "wospp/runner.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <thread>

#include <fmt/format.h>

#include "wospp/log.hpp"

namespace wospp {

Scenario apply_overrides(Scenario s, const RunOverrides& o) {
    if (o.seed) s.sim.rng_seed = *o.seed;
    if (o.steps) {
        if (*o.steps < 0) throw ConfigError("steps", "must be >= 0");
        if (s.schedule) {
            if (*o.steps == 0) throw ConfigError("steps", "a schedule needs at least one step");
            // Truncate, or stretch the final stage.
            std::int64_t left = *o.steps;
            std::vector<StageSpec> kept;
            for (auto st : *s.schedule) {
                if (left <= 0) break;
                st.duration = std::min(st.duration, left);
                left -= st.duration;
                kept.push_back(st);
            }
            if (left > 0) kept.back().duration += left;
            s.schedule = std::move(kept);
        } else {
            s.horizon = *o.steps;
        }
    }
    if (o.trace_out) s.outputs.trace = *o.trace_out;
    if (o.metrics_out) s.outputs.metrics = *o.metrics_out;
    validate_scenario(s);
    return s;
}

Program::Program(Scenario scenario) : scenario_(std::move(scenario)) {
    validate_scenario(scenario_);
    if (scenario_.schedule) cursor_.emplace(make_schedule(*scenario_.schedule), 0, true);
}

SwarmState Program::init(std::vector<std::string>* notes) const {
    return init_swarm(scenario_.sim, make_layer_specs(scenario_), scenario_.stimulus, notes);
}

const std::vector<StageRecord>& Program::stages() const {
    return cursor_ ? cursor_->records() : frozen_;
}

void Program::abandon_schedule() {
    if (!cursor_) return;
    frozen_ = cursor_->records();
    cursor_.reset();
}

void Program::begin(SwarmState& state, TraceSink* sink, const std::vector<std::string>& init_notes) {
    if (sink)
        for (const auto& n : init_notes) sink->on_note(state.timestep, n);
    if (scenario_.layers && motion_layer_count(state) > 1)
        log().warn("{} motion-capable layers bound; displacements are summed and capped",
                   motion_layer_count(state));
    if (cursor_) cursor_->before_step(state, sink);
}

StepEvents Program::advance(SwarmState& state, TraceSink* sink) {
    if (cursor_) cursor_->before_step(state, sink);
    StepEvents ev = step(state);
    if (sink) sink->on_step(state, ev);
    return ev;
}

RunResult run_scenario(const Scenario& scenario, bool keep_samples) {
    Program program(scenario);
    std::vector<std::string> notes;
    SwarmState state = program.init(&notes);
    FileSink sink(scenario, scenario.outputs.trace, scenario.outputs.metrics);
    sink.keep_samples(keep_samples);
    program.begin(state, &sink, notes);
    sink.begin(state);
    const std::int64_t horizon = program.horizon();
    for (std::int64_t k = 0; k < horizon; ++k) program.advance(state, &sink);
    sink.commit();

    RunResult out;
    out.steps = horizon;
    out.stages = program.stages();
    if (keep_samples) out.samples = sink.samples();
    return out;
}

std::string seeded_path(const std::string& path, std::uint64_t seed) {
    const std::filesystem::path p(path);
    const auto name = fmt::format("{}.seed{}{}", p.stem().string(), seed, p.extension().string());
    return (p.parent_path() / name).string();
}

SweepResult sweep_scenario(const Scenario& scenario, const SweepOptions& options) {
    if (options.seeds < 1) throw ConfigError("seeds", "must be >= 1");
    validate_scenario(scenario);
    SweepResult result;
    const std::uint64_t base = scenario.sim.rng_seed;
    for (int k = 0; k < options.seeds; ++k) result.seeds.push_back(base + static_cast<std::uint64_t>(k));
    result.runs.resize(result.seeds.size());

    std::vector<std::exception_ptr> errors(result.seeds.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < result.seeds.size(); i = next++) {
            try {
                Scenario s = scenario;
                s.sim.rng_seed = result.seeds[i];
                s.outputs.metrics.reset();
                s.outputs.trace.reset();
                if (options.trace_pattern) s.outputs.trace = seeded_path(*options.trace_pattern, s.sim.rng_seed);
                result.runs[i] = run_scenario(s, true).samples;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    unsigned threads = options.threads > 0 ? static_cast<unsigned>(options.threads)
                                           : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(result.seeds.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i]) continue;
        // Per-seed traces of the failed sweep are removed along with the failure.
        if (options.trace_pattern)
            for (auto seed : result.seeds) std::remove(seeded_path(*options.trace_pattern, seed).c_str());
        std::rethrow_exception(errors[i]);
    }

    result.rows = aggregate_samples(result.runs);
    if (options.aggregate_out) {
        const std::string partial = *options.aggregate_out + ".partial";
        {
            std::ofstream out(partial, std::ios::binary | std::ios::trunc);
            if (!out) throw IoError(fmt::format("cannot open metrics output '{}'", *options.aggregate_out));
            Scenario meta = scenario;
            meta.outputs.metrics = options.aggregate_out;
            write_aggregate(out, metadata_line("wospp.sweep", meta), result.rows);
            out.close();
            if (!out) {
                std::remove(partial.c_str());
                throw IoError(fmt::format("write failed for '{}'", *options.aggregate_out));
            }
        }
        if (std::rename(partial.c_str(), options.aggregate_out->c_str()) != 0)
            throw IoError(fmt::format("cannot move output into place at '{}'", *options.aggregate_out));
    }
    return result;
}

}  // namespace wospp
