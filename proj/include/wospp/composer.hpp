#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wospp/engine.hpp"

namespace wospp {

struct Stage {
    PrimitiveBinding binding;
    std::int64_t duration = 1;
    CarryoverSet carryover;  // scratch fields that survive into this stage
    std::optional<int> refractory_time;
    std::optional<int> cycle_max;
};

using Schedule = std::vector<Stage>;

// Throws ConfigError for a stage without codeblocks or with duration < 1.
void validate_schedule(const Schedule& schedule);

struct StageRecord {
    std::size_t index = 0;
    PrimitiveId primitive = PrimitiveId::Synchronization;
    std::int64_t start = 0;  // timestep at which the stage was bound
    bool connected = false;  // communication graph at the boundary
    int candidates = 0;      // flags after binding
    int leaders = 0;
};

// Walks a schedule on the primary layer, one timestep at a time. Stage k is bound
// right before the first step that belongs to it.
class ScheduleCursor {
public:
    // `first_bound`: stage 0 was already bound (e.g. by init_swarm) and must not be
    // re-armed.
    ScheduleCursor(Schedule schedule, std::int64_t start_timestep, bool first_bound = false);

    // Binds the next stage if its boundary is reached. Returns true on a boundary.
    bool before_step(SwarmState& state, TraceSink* sink);
    [[nodiscard]] bool done(const SwarmState& state) const;
    [[nodiscard]] std::int64_t horizon() const { return total_; }
    [[nodiscard]] const std::vector<StageRecord>& records() const { return records_; }
    [[nodiscard]] const Stage* current() const;

private:
    void enter(std::size_t index, SwarmState& state, TraceSink* sink, bool bind);

    Schedule schedule_;
    std::int64_t start_ = 0;
    std::int64_t total_ = 0;
    std::size_t next_ = 0;
    bool first_bound_ = false;
    std::vector<StageRecord> records_;
};

// Runs every stage for its duration. Positions persist across boundaries.
std::vector<StageRecord> run_sequence(SwarmState& state, const Schedule& schedule,
                                      TraceSink* sink = nullptr, bool first_bound = false);

// Steps all bound layers together for `horizon` timesteps.
void run_interleaved(SwarmState& state, std::int64_t horizon, TraceSink* sink = nullptr);

int motion_layer_count(const SwarmState& state);

// Layer parameters a stage runs with, falling back to the simulation config.
LayerParams stage_params(const SimConfig& config, const Stage& stage);

}  // namespace wospp
