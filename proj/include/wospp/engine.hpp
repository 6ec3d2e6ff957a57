#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wospp/config.hpp"
#include "wospp/primitives.hpp"
#include "wospp/rng.hpp"
#include "wospp/vec2.hpp"

namespace wospp {

// One delivered ping.
struct PingReception {
    int receiver_id = 0;
    int sender_id = 0;
    Vec2 bearing{};  // unit vector from receiver toward sender
    std::int64_t timestep = 0;

    friend bool operator==(const PingReception&, const PingReception&) = default;
};

struct Move {
    int agent_id = 0;
    Vec2 displacement{};
    friend bool operator==(const Move&, const Move&) = default;
};

struct LayerEvents {
    int channel = 0;
    std::vector<int> broadcasts;   // agents that emitted a ping this step
    std::vector<int> initiations;  // agents whose timer expired this step
    std::vector<PingReception> relays;

    friend bool operator==(const LayerEvents&, const LayerEvents&) = default;
};

struct StepEvents {
    std::int64_t timestep = 0;
    std::vector<LayerEvents> layers;
    std::vector<Move> moves;
    std::vector<std::string> notes;

    [[nodiscard]] const LayerEvents* layer(int channel) const;
    friend bool operator==(const StepEvents&, const StepEvents&) = default;
};

// One independent single-bit signalling channel bound to a primitive.
struct Layer {
    int channel = 0;
    PrimitiveBinding binding;
    LayerParams params;
    std::vector<AgentCore> cores;
    std::vector<PrimitiveScratch> scratch;
    Rng rng;
};

struct SwarmState {
    SimConfig config;
    std::int64_t timestep = 0;
    std::vector<Vec2> positions;
    std::vector<double> headings;
    std::vector<Layer> layers;  // ascending channel order
    std::optional<ObjectStimulus> stimulus;

    [[nodiscard]] std::size_t size() const { return positions.size(); }
    [[nodiscard]] Layer& layer(int channel);
    [[nodiscard]] const Layer& layer(int channel) const;
    [[nodiscard]] const Layer& primary() const { return layers.front(); }
    [[nodiscard]] Layer& primary() { return layers.front(); }
};

struct LayerSpec {
    int channel = 0;
    PrimitiveBinding binding;
    std::optional<int> refractory_time;
    std::optional<int> cycle_max;
};

LayerParams layer_params(const SimConfig& config, const LayerSpec& spec);

// Random connected layout in the disc of radius swarm_radius, bound to `layers`.
SwarmState init_swarm(const SimConfig& config, const std::vector<LayerSpec>& layers,
                      std::optional<ObjectStimulus> stimulus = std::nullopt,
                      std::vector<std::string>* notes = nullptr);

// Explicit layout (no connectivity requirement). Headings start at 0.
SwarmState make_swarm(const SimConfig& config, std::vector<Vec2> positions,
                      const std::vector<LayerSpec>& layers,
                      std::optional<ObjectStimulus> stimulus = std::nullopt);

// Rebinds a layer: all cores reset to Inactive, scratch cleared except `carryover`,
// then the primitive arms timers. Positions are untouched.
void bind_layer(SwarmState& state, Layer& layer, PrimitiveBinding binding,
                const CarryoverSet& carryover = {}, std::vector<std::string>* notes = nullptr);

// Receptions for this step's broadcasters, sorted by (receiver, sender). Only
// Inactive agents within perception range receive; each pair survives with
// probability 1 - loss and bearings carry optional Gaussian angular noise.
std::vector<PingReception> deliver_pings(std::span<const Vec2> positions,
                                         std::span<const AgentCore> cores,
                                         std::span<const int> broadcasters, double range,
                                         double loss_probability, double noise_std, Rng& rng,
                                         std::int64_t timestep,
                                         std::span<const double> headings = {});

// Advances the swarm by exactly one timestep.
StepEvents step(SwarmState& state);

class TraceSink {
public:
    virtual ~TraceSink() = default;
    virtual void on_step(const SwarmState& state, const StepEvents& events) = 0;
    virtual void on_note(std::int64_t, const std::string&) {}
};

void run(SwarmState& state, std::int64_t horizon, TraceSink* sink = nullptr);

}  // namespace wospp
