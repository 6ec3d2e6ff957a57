#include "wospp/composer.hpp"

#include <fmt/format.h>

#include "wospp/log.hpp"
#include "wospp/metrics.hpp"
#include "wospp/spatial.hpp"

namespace wospp {

void validate_schedule(const Schedule& schedule) {
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const auto key = fmt::format("schedule[{}]", i);
        if (!schedule[i].binding.codeblocks) throw ConfigError(key, "stage has no primitive bound");
        if (schedule[i].duration < 1) throw ConfigError(key + ".duration", "must be >= 1");
        if (schedule[i].refractory_time && *schedule[i].refractory_time < 1)
            throw ConfigError(key + ".refractory_time", "must be >= 1");
        if (schedule[i].cycle_max && *schedule[i].cycle_max < 1)
            throw ConfigError(key + ".cycle_max", "must be >= 1");
    }
}

LayerParams stage_params(const SimConfig& config, const Stage& stage) {
    return LayerParams{stage.refractory_time.value_or(config.refractory_time),
                       stage.cycle_max.value_or(config.cycle_max), config.loss_probability};
}

ScheduleCursor::ScheduleCursor(Schedule schedule, std::int64_t start_timestep, bool first_bound)
    : schedule_(std::move(schedule)), start_(start_timestep), first_bound_(first_bound) {
    validate_schedule(schedule_);
    for (const auto& s : schedule_) total_ += s.duration;
}

const Stage* ScheduleCursor::current() const {
    if (next_ == 0) return nullptr;
    return &schedule_[next_ - 1];
}

bool ScheduleCursor::done(const SwarmState& state) const {
    return state.timestep - start_ >= total_;
}

bool ScheduleCursor::before_step(SwarmState& state, TraceSink* sink) {
    if (next_ >= schedule_.size() || done(state)) return false;
    std::int64_t boundary = start_;
    for (std::size_t i = 0; i < next_; ++i) boundary += schedule_[i].duration;
    if (state.timestep != boundary) return false;
    const bool bind = !(next_ == 0 && first_bound_);
    enter(next_, state, sink, bind);
    ++next_;
    return true;
}

void ScheduleCursor::enter(std::size_t index, SwarmState& state, TraceSink* sink, bool bind) {
    const Stage& stage = schedule_[index];
    Layer& layer = state.primary();
    std::vector<std::string> notes;
    if (bind) {
        layer.params = stage_params(state.config, stage);
        bind_layer(state, layer, stage.binding, stage.carryover, &notes);
    }
    StageRecord rec;
    rec.index = index;
    rec.primitive = stage.binding.id;
    rec.start = state.timestep;
    rec.connected = is_connected(state.positions, state.config.perception_range);
    rec.candidates = candidate_count(layer.scratch);
    rec.leaders = leader_count(layer.scratch);
    records_.push_back(rec);

    notes.insert(notes.begin(),
                 fmt::format("stage {} {} starts (duration {}, connected={})", index,
                             to_string(stage.binding.id), stage.duration, rec.connected));
    if (!rec.connected) log().warn("stage {} starts with a disconnected swarm", index);
    if (sink)
        for (const auto& n : notes) sink->on_note(state.timestep, n);
}

std::vector<StageRecord> run_sequence(SwarmState& state, const Schedule& schedule, TraceSink* sink,
                                      bool first_bound) {
    ScheduleCursor cursor(schedule, state.timestep, first_bound);
    while (!cursor.done(state)) {
        cursor.before_step(state, sink);
        const StepEvents ev = step(state);
        if (sink) sink->on_step(state, ev);
    }
    return cursor.records();
}

int motion_layer_count(const SwarmState& state) {
    int n = 0;
    for (const auto& l : state.layers) n += l.binding.moves() ? 1 : 0;
    return n;
}

void run_interleaved(SwarmState& state, std::int64_t horizon, TraceSink* sink) {
    if (motion_layer_count(state) > 1)
        log().warn("{} motion-capable layers bound; displacements are summed and capped",
                   motion_layer_count(state));
    run(state, horizon, sink);
}

}  // namespace wospp
