#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wospp/composer.hpp"
#include "wospp/config.hpp"
#include "wospp/engine.hpp"
#include "wospp/primitives.hpp"

namespace wospp {

inline constexpr int kScenarioSchemaVersion = 1;

// Per-primitive options. Only the fields a primitive understands may be set.
struct PrimitiveParams {
    std::optional<TimerRule> timer_rule;
    std::optional<RelayTimer> relay_timer;            // aggregate, aggregate_at_object
    std::optional<ObjectStimulus> stimulus;           // localize_object, aggregate_at_object
    std::optional<Vec2> target_direction;             // follow_leader
    std::optional<int> leader_id;                     // follow_leader
    std::optional<LeaderMotion> leader_motion;        // follow_leader
    std::optional<double> leader_speed;               // follow_leader

    friend bool operator==(const PrimitiveParams&, const PrimitiveParams&) = default;
};

struct PrimitiveSpec {
    PrimitiveId id = PrimitiveId::Synchronization;
    PrimitiveParams params;

    friend bool operator==(const PrimitiveSpec&, const PrimitiveSpec&) = default;
};

struct StageSpec {
    PrimitiveSpec primitive;
    std::int64_t duration = 1;
    CarryoverSet carryover;
    std::optional<int> refractory_time;
    std::optional<int> cycle_max;

    friend bool operator==(const StageSpec&, const StageSpec&) = default;
};

struct LayerDesc {
    int channel = 0;
    PrimitiveSpec primitive;
    std::optional<int> refractory_time;
    std::optional<int> cycle_max;

    friend bool operator==(const LayerDesc&, const LayerDesc&) = default;
};

struct Outputs {
    std::optional<std::string> trace;
    std::optional<std::string> metrics;
    int snapshot_period = 10;

    friend bool operator==(const Outputs&, const Outputs&) = default;
};

struct LiveOptions {
    double steps_per_second = 30.0;  // pacing of serve

    friend bool operator==(const LiveOptions&, const LiveOptions&) = default;
};

struct Scenario {
    SimConfig sim;
    // Exactly one of primitive, schedule, layers is set.
    std::optional<PrimitiveSpec> primitive;
    std::optional<std::vector<StageSpec>> schedule;
    std::optional<std::vector<LayerDesc>> layers;
    std::optional<std::int64_t> horizon;  // primitive and layers only
    std::optional<ObjectStimulus> stimulus;
    Outputs outputs;
    LiveOptions live;

    // Timesteps a headless run executes.
    [[nodiscard]] std::int64_t total_steps() const;
    friend bool operator==(const Scenario&, const Scenario&) = default;
};

// Throws ConfigError naming the offending key.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);
std::string serialize_scenario(const Scenario& scenario, int indent = 2);
void validate_scenario(const Scenario& scenario);

PrimitiveBinding make_binding(const PrimitiveSpec& spec);
Schedule make_schedule(const std::vector<StageSpec>& stages);
std::vector<LayerSpec> make_layer_specs(const Scenario& scenario);

}  // namespace wospp
