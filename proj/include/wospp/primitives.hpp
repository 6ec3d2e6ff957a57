#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wospp/config.hpp"
#include "wospp/rng.hpp"
#include "wospp/vec2.hpp"

namespace wospp {

enum class SignalState : std::uint8_t { Inactive, Active, Refractory };

std::string_view to_string(SignalState s);

// Per-agent, per-layer signalling state of the fixed agent loop.
//   refractory_remaining > 0  <=>  state == Refractory
//   pending_broadcast         ==>  state == Active
struct AgentCore {
    SignalState state = SignalState::Inactive;
    std::optional<int> timer;  // absent = deactivated
    int refractory_remaining = 0;
    bool pending_broadcast = false;

    friend bool operator==(const AgentCore&, const AgentCore&) = default;
};

// Per-agent memory used by the primitive codeblocks.
struct PrimitiveScratch {
    bool candidate = false;
    bool leader = false;
    Vec2 direction_sum{};
    int direction_count = 0;
    std::array<int, 4> quadrant_bins{};
    int ping_count = 0;
    std::vector<int> count_estimates;
    double n_est = 0.0;
    bool periphery = false;
    std::optional<Vec2> estimate_bearing;

    friend bool operator==(const PrimitiveScratch&, const PrimitiveScratch&) = default;
};

// Scratch field groups that may survive a stage boundary.
enum class ScratchField : std::uint8_t { Candidate, Leader, Direction, Bins, Count, Periphery };

using CarryoverSet = std::vector<ScratchField>;

std::string_view to_string(ScratchField f);
std::optional<ScratchField> scratch_field_from_string(std::string_view name);

// Resets every scratch field not listed in `keep`.
void clear_scratch(PrimitiveScratch& scratch, const CarryoverSet& keep);

struct ObjectStimulus {
    Vec2 position{};
    double detection_radius = 1.0;

    [[nodiscard]] bool detects(Vec2 p) const {
        return (p - position).norm_sq() <= detection_radius * detection_radius;
    }
    friend bool operator==(const ObjectStimulus&, const ObjectStimulus&) = default;
};

enum class PrimitiveId : std::uint8_t {
    LeaderElection,
    Synchronization,
    LocalizeObject,
    LocalizeCenter,
    EstimateCount,
    PeripheryDetect,
    Aggregate,
    AggregateAtObject,
    FollowLeader,
    GasExpansion,
};

std::string_view to_string(PrimitiveId id);
std::optional<PrimitiveId> primitive_from_string(std::string_view name);
[[nodiscard]] bool requires_stimulus(PrimitiveId id);

enum class TimerRule : std::uint8_t { RandomUpToMax, FixedMax, Deactivated };

// Live-tunable timing parameters of one signal layer.
struct LayerParams {
    int refractory_time = 10;
    int cycle_max = 100;
    double loss_probability = 0.0;

    friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

// Everything a codeblock may touch: its own agent's core, scratch and queued motion.
struct AgentContext {
    int id;
    Vec2 position;
    double heading;
    std::int64_t timestep;
    const SimConfig& config;
    const LayerParams& params;
    const ObjectStimulus* stimulus;
    AgentCore& core;
    PrimitiveScratch& scratch;
    Vec2& displacement;
    Rng& rng;
    bool timer_touched = false;  // a codeblock (re)armed or deactivated the timer

    void set_timer(int value) {
        core.timer = value;
        timer_touched = true;
    }
    void deactivate_timer() {
        core.timer.reset();
        timer_touched = true;
    }
    // Draws a fresh cycle length in (0, cycle_max].
    void randomize_timer() { set_timer(static_cast<int>(rng.uniform_int(1, params.cycle_max))); }
    // Queues a step of length d along `direction` (a unit vector).
    void move_along(Vec2 direction, double length) { displacement += direction * length; }
    [[nodiscard]] bool detects_stimulus() const { return stimulus && stimulus->detects(position); }
};

// Whole-layer view handed to a primitive when it is (re)bound at a stage start.
struct LayerSetup {
    std::span<const Vec2> positions;
    std::span<AgentCore> cores;
    std::span<PrimitiveScratch> scratch;
    Rng& rng;
    const LayerParams& params;
    const ObjectStimulus* stimulus;
    std::vector<std::string>* notes;  // may be null

    void note(std::string text) const {
        if (notes) notes->push_back(std::move(text));
    }
};

// A primitive is its pair of codeblocks plus how timers start. Implementations hold
// only immutable parameters; all per-agent memory lives in PrimitiveScratch.
class Primitive {
public:
    virtual ~Primitive() = default;

    [[nodiscard]] virtual PrimitiveId id() const = 0;
    [[nodiscard]] virtual bool moves() const { return false; }

    // Sets initial flags and arms timers. The default arms every agent for which
    // armed_at_start() holds according to the binding's timer rule.
    virtual void prepare(LayerSetup& setup, TimerRule rule) const;

    virtual void initiate(AgentContext& ctx) const = 0;
    virtual void relay(AgentContext& ctx, std::span<const Vec2> bearings) const = 0;

    // Optional per-timestep hook, run after the timer phase.
    virtual void advance(AgentContext&) const {}

    // Draws any parameter left open (e.g. a random heading) from the layer stream.
    // Returns null when nothing needs resolving.
    [[nodiscard]] virtual std::shared_ptr<const Primitive> resolve(Rng&, std::string&) const {
        return nullptr;
    }

protected:
    [[nodiscard]] virtual bool armed_at_start(std::size_t, const LayerSetup&) const { return true; }
    virtual void init_scratch(PrimitiveScratch&) const {}
};

struct PrimitiveBinding {
    PrimitiveId id = PrimitiveId::Synchronization;
    TimerRule timer_rule = TimerRule::RandomUpToMax;
    std::optional<ObjectStimulus> stimulus;
    std::shared_ptr<const Primitive> codeblocks;

    [[nodiscard]] bool moves() const { return codeblocks && codeblocks->moves(); }
};

// How the leader of follow_leader advances along its ray.
enum class LeaderMotion : std::uint8_t {
    PerWave,  // one step d per own initiation, matching follower speed
    PerStep,  // one step per timestep
};

std::string_view to_string(LeaderMotion m);
std::optional<LeaderMotion> leader_motion_from_string(std::string_view name);

struct FollowLeaderParams {
    std::optional<Vec2> target_direction;  // unit vector; drawn at bind time when absent
    std::optional<int> leader_id;          // preset leader; otherwise carried flags decide
    LeaderMotion motion = LeaderMotion::PerWave;
    std::optional<double> leader_speed;  // defaults to step length d

    friend bool operator==(const FollowLeaderParams&, const FollowLeaderParams&) = default;
};

// What an aggregating relayer does with its timer.
enum class RelayTimer : std::uint8_t {
    Redraw,  // fresh draw in (0, cycle_max]
    Max,     // timer <- cycle_max; the first initiator then paces every wave
};

std::string_view to_string(RelayTimer r);
std::optional<RelayTimer> relay_timer_from_string(std::string_view name);

PrimitiveBinding leader_election();
PrimitiveBinding synchronization();
// Stimulus-gated bindings fall back to the world stimulus when none is given.
PrimitiveBinding localize_object(std::optional<ObjectStimulus> stimulus = std::nullopt);
PrimitiveBinding localize_center();
PrimitiveBinding estimate_count();
PrimitiveBinding periphery_detect();
PrimitiveBinding aggregate(RelayTimer rule = RelayTimer::Redraw);
PrimitiveBinding aggregate_at_object(std::optional<ObjectStimulus> stimulus = std::nullopt,
                                     RelayTimer rule = RelayTimer::Redraw);
PrimitiveBinding follow_leader(FollowLeaderParams params = {});
PrimitiveBinding gas_expansion();

// Circular mean of unit bearings; absent when the resultant vanishes.
std::optional<Vec2> circular_mean(std::span<const Vec2> bearings);

// Fixed global quadrant of a direction: [0°,90°) -> 0, [90°,180°) -> 1, ...
int quadrant_of(Vec2 direction);

}  // namespace wospp
