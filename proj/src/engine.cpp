#include "wospp/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "wospp/log.hpp"
#include "wospp/spatial.hpp"

namespace wospp {

namespace {

constexpr std::uint64_t kLayoutStream = 0;

std::uint64_t layer_stream(int channel) { return 1 + static_cast<std::uint64_t>(channel); }

const ObjectStimulus* effective_stimulus(const SwarmState& state, const Layer& layer) {
    if (layer.binding.stimulus) return &*layer.binding.stimulus;
    if (state.stimulus) return &*state.stimulus;
    return nullptr;
}

Vec2 bearing_between(Vec2 from, Vec2 to, double fallback_heading) {
    const Vec2 d = to - from;
    const double n = d.norm();
    if (n <= 1e-12) return unit_from_angle(fallback_heading);
    return d * (1.0 / n);
}

Vec2 rotate(Vec2 v, double radians) {
    const double c = std::cos(radians);
    const double s = std::sin(radians);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

std::vector<PingReception> deliver_with_grid(const NeighborGrid& grid, std::span<const Vec2> positions,
                                             std::span<const AgentCore> cores,
                                             std::span<const int> broadcasters, double range,
                                             double loss, double noise_std, Rng& rng,
                                             std::int64_t timestep, std::span<const double> headings) {
    std::vector<std::pair<int, int>> pairs;  // (receiver, sender)
    std::vector<int> nbrs;
    for (int b : broadcasters) {
        grid.within(static_cast<std::size_t>(b), range, nbrs);
        for (int a : nbrs) {
            if (cores[static_cast<std::size_t>(a)].state == SignalState::Inactive) pairs.emplace_back(a, b);
        }
    }
    std::sort(pairs.begin(), pairs.end());

    // Draw order: every loss draw in (receiver, sender) order, then noise draws.
    if (loss > 0.0) {
        std::erase_if(pairs, [&](const auto&) { return rng.uniform01() < loss; });
    }
    std::vector<PingReception> out;
    out.reserve(pairs.size());
    for (auto [a, b] : pairs) {
        const double heading = headings.empty() ? 0.0 : headings[static_cast<std::size_t>(a)];
        out.push_back({a, b,
                       bearing_between(positions[static_cast<std::size_t>(a)],
                                       positions[static_cast<std::size_t>(b)], heading),
                       timestep});
    }
    if (noise_std > 0.0) {
        for (auto& r : out) r.bearing = rotate(r.bearing, noise_std * rng.normal());
    }
    return out;
}

Layer make_layer(const SimConfig& config, const LayerSpec& spec, std::size_t n) {
    Layer layer;
    layer.channel = spec.channel;
    layer.binding = spec.binding;
    layer.params = layer_params(config, spec);
    layer.cores.assign(n, AgentCore{});
    layer.scratch.assign(n, PrimitiveScratch{});
    layer.rng = Rng(config.rng_seed, layer_stream(spec.channel));
    return layer;
}

void install_layers(SwarmState& state, const std::vector<LayerSpec>& specs,
                    std::vector<std::string>* notes) {
    if (specs.empty()) throw ConfigError("layers", "at least one layer is required");
    std::vector<LayerSpec> sorted = specs;
    std::sort(sorted.begin(), sorted.end(),
              [](const LayerSpec& a, const LayerSpec& b) { return a.channel < b.channel; });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i].channel == sorted[i - 1].channel)
            throw ConfigError("layers", fmt::format("duplicate channel id {}", sorted[i].channel));
    }
    state.layers.clear();
    for (const auto& spec : sorted) {
        if (!spec.binding.codeblocks) throw ConfigError("layers", "layer has no primitive bound");
        state.layers.push_back(make_layer(state.config, spec, state.size()));
    }
    for (auto& layer : state.layers) bind_layer(state, layer, layer.binding, {}, notes);
}

}  // namespace

const LayerEvents* StepEvents::layer(int channel) const {
    for (const auto& l : layers)
        if (l.channel == channel) return &l;
    return nullptr;
}

Layer& SwarmState::layer(int channel) {
    for (auto& l : layers)
        if (l.channel == channel) return l;
    throw std::out_of_range(fmt::format("no layer on channel {}", channel));
}

const Layer& SwarmState::layer(int channel) const {
    for (const auto& l : layers)
        if (l.channel == channel) return l;
    throw std::out_of_range(fmt::format("no layer on channel {}", channel));
}

LayerParams layer_params(const SimConfig& config, const LayerSpec& spec) {
    return LayerParams{spec.refractory_time.value_or(config.refractory_time),
                       spec.cycle_max.value_or(config.cycle_max), config.loss_probability};
}

SwarmState init_swarm(const SimConfig& config, const std::vector<LayerSpec>& layers,
                      std::optional<ObjectStimulus> stimulus, std::vector<std::string>* notes) {
    validate(config);
    Rng rng(config.rng_seed, kLayoutStream);
    const auto n = static_cast<std::size_t>(config.n_agents);
    std::vector<Vec2> positions(n);
    bool connected = false;
    for (int attempt = 0; attempt < config.init_attempts && !connected; ++attempt) {
        for (auto& p : positions) {
            const double radius = config.swarm_radius * std::sqrt(rng.uniform01());
            p = unit_from_angle(kTwoPi * rng.uniform01()) * radius;
        }
        connected = is_connected(positions, config.perception_range);
    }
    if (!connected) {
        throw InitError(fmt::format(
            "no connected layout for n_agents={} in swarm_radius={} within init_attempts={} tries",
            config.n_agents, config.swarm_radius, config.init_attempts));
    }

    SwarmState state;
    state.config = config;
    state.positions = std::move(positions);
    state.headings.resize(n);
    for (auto& h : state.headings) h = kTwoPi * rng.uniform01();
    state.stimulus = std::move(stimulus);
    install_layers(state, layers, notes);

    const int diameter = hop_diameter(state.positions, config.perception_range);
    for (const auto& layer : state.layers) {
        if (layer.params.refractory_time <= diameter) {
            const auto msg = fmt::format(
                "channel {}: refractory_time={} does not exceed the layout hop diameter {}; "
                "waves may re-enter",
                layer.channel, layer.params.refractory_time, diameter);
            log().warn(msg);
            if (notes) notes->push_back(msg);
        }
    }
    return state;
}

SwarmState make_swarm(const SimConfig& config, std::vector<Vec2> positions,
                      const std::vector<LayerSpec>& layers, std::optional<ObjectStimulus> stimulus) {
    SimConfig c = config;
    c.n_agents = static_cast<int>(positions.size());
    validate(c);
    SwarmState state;
    state.config = c;
    state.headings.assign(positions.size(), 0.0);
    state.positions = std::move(positions);
    state.stimulus = std::move(stimulus);
    install_layers(state, layers, nullptr);
    return state;
}

void bind_layer(SwarmState& state, Layer& layer, PrimitiveBinding binding,
                const CarryoverSet& carryover, std::vector<std::string>* notes) {
    if (!binding.codeblocks) throw ConfigError("primitive", "binding has no codeblocks");
    std::string note;
    if (auto resolved = binding.codeblocks->resolve(layer.rng, note)) {
        binding.codeblocks = std::move(resolved);
        if (notes && !note.empty()) notes->push_back(note);
    }
    layer.binding = std::move(binding);
    for (auto& c : layer.cores) c = AgentCore{};
    for (auto& s : layer.scratch) clear_scratch(s, carryover);
    LayerSetup setup{state.positions, layer.cores,  layer.scratch,
                     layer.rng,       layer.params, effective_stimulus(state, layer),
                     notes};
    layer.binding.codeblocks->prepare(setup, layer.binding.timer_rule);
}

std::vector<PingReception> deliver_pings(std::span<const Vec2> positions,
                                         std::span<const AgentCore> cores,
                                         std::span<const int> broadcasters, double range,
                                         double loss_probability, double noise_std, Rng& rng,
                                         std::int64_t timestep, std::span<const double> headings) {
    const NeighborGrid grid(positions, range);
    return deliver_with_grid(grid, positions, cores, broadcasters, range, loss_probability,
                             noise_std, rng, timestep, headings);
}

StepEvents step(SwarmState& state) {
    const std::int64_t t = state.timestep + 1;
    const std::size_t n = state.size();
    const double range = state.config.perception_range;
    StepEvents events;
    events.timestep = t;

    std::vector<Vec2> displacement(n);
    std::vector<char> entered(n);
    std::vector<char> rearmed(n);
    std::optional<NeighborGrid> grid;

    for (auto& layer : state.layers) {
        LayerEvents le;
        le.channel = layer.channel;
        const Primitive& blocks = *layer.binding.codeblocks;
        const ObjectStimulus* stimulus = effective_stimulus(state, layer);
        auto context = [&](std::size_t i) {
            return AgentContext{static_cast<int>(i), state.positions[i], state.headings[i], t,
                                state.config,        layer.params,       stimulus,
                                layer.cores[i],      layer.scratch[i],   displacement[i],
                                layer.rng};
        };

        // (1) broadcast
        std::fill(entered.begin(), entered.end(), 0);
        std::fill(rearmed.begin(), rearmed.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto& c = layer.cores[i];
            if (!c.pending_broadcast) continue;
            c.pending_broadcast = false;
            c.state = SignalState::Refractory;
            c.refractory_remaining = layer.params.refractory_time;
            entered[i] = 1;
            le.broadcasts.push_back(static_cast<int>(i));
        }

        // (2) delivery and relay
        if (!le.broadcasts.empty()) {
            if (!grid) grid.emplace(state.positions, range);
            le.relays = deliver_with_grid(*grid, state.positions, layer.cores, le.broadcasts, range,
                                          layer.params.loss_probability,
                                          state.config.heading_noise_std, layer.rng, t,
                                          state.headings);
            std::vector<Vec2> bearings;
            for (std::size_t k = 0; k < le.relays.size();) {
                const int receiver = le.relays[k].receiver_id;
                bearings.clear();
                for (; k < le.relays.size() && le.relays[k].receiver_id == receiver; ++k)
                    bearings.push_back(le.relays[k].bearing);
                const auto i = static_cast<std::size_t>(receiver);
                auto ctx = context(i);
                blocks.relay(ctx, bearings);
                rearmed[i] = ctx.timer_touched;
                layer.cores[i].state = SignalState::Active;
                layer.cores[i].pending_broadcast = true;
            }
        }

        // (3) refractory countdown; agents that broadcast this step start counting next step
        for (std::size_t i = 0; i < n; ++i) {
            auto& c = layer.cores[i];
            if (c.state != SignalState::Refractory || entered[i]) continue;
            if (--c.refractory_remaining <= 0) {
                c.refractory_remaining = 0;
                c.state = SignalState::Inactive;
            }
        }

        // (4) timers; expiry forces Active from any state. A timer re-armed by this
        // step's relay starts counting next step, like one re-armed on initiation.
        for (std::size_t i = 0; i < n; ++i) {
            auto& c = layer.cores[i];
            if (!c.timer || rearmed[i]) continue;
            if (*c.timer > 0) --*c.timer;
            if (*c.timer > 0) continue;
            c.state = SignalState::Active;
            c.pending_broadcast = true;
            c.refractory_remaining = 0;
            auto ctx = context(i);
            blocks.initiate(ctx);
            le.initiations.push_back(static_cast<int>(i));
        }

        for (std::size_t i = 0; i < n; ++i) {
            auto ctx = context(i);
            blocks.advance(ctx);
        }

        events.layers.push_back(std::move(le));
    }

    // (5) motion, summed over layers and capped at one step length
    const double cap = state.config.step();
    for (std::size_t i = 0; i < n; ++i) {
        Vec2 d = displacement[i];
        const double len = d.norm();
        if (len <= 0.0) continue;
        if (len > cap) d *= cap / len;
        state.positions[i] += d;
        state.headings[i] = wrap_angle(d.angle());
        events.moves.push_back({static_cast<int>(i), d});
    }

    state.timestep = t;
    return events;
}

void run(SwarmState& state, std::int64_t horizon, TraceSink* sink) {
    for (std::int64_t k = 0; k < horizon; ++k) {
        const StepEvents ev = step(state);
        if (sink) sink->on_step(state, ev);
    }
}

}  // namespace wospp
