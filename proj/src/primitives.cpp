#include "wospp/primitives.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include <fmt/format.h>

namespace wospp {

namespace {

constexpr double kTinyResultant = 1e-12;

constexpr std::array<std::pair<PrimitiveId, std::string_view>, 10> kPrimitiveNames{{
    {PrimitiveId::LeaderElection, "leader_election"},
    {PrimitiveId::Synchronization, "synchronization"},
    {PrimitiveId::LocalizeObject, "localize_object"},
    {PrimitiveId::LocalizeCenter, "localize_center"},
    {PrimitiveId::EstimateCount, "estimate_count"},
    {PrimitiveId::PeripheryDetect, "periphery_detect"},
    {PrimitiveId::Aggregate, "aggregate"},
    {PrimitiveId::AggregateAtObject, "aggregate_at_object"},
    {PrimitiveId::FollowLeader, "follow_leader"},
    {PrimitiveId::GasExpansion, "gas_expansion"},
}};

constexpr std::array<std::pair<ScratchField, std::string_view>, 6> kFieldNames{{
    {ScratchField::Candidate, "candidate"},
    {ScratchField::Leader, "leader"},
    {ScratchField::Direction, "direction"},
    {ScratchField::Bins, "bins"},
    {ScratchField::Count, "count"},
    {ScratchField::Periphery, "periphery"},
}};

void record_bearings(PrimitiveScratch& s, std::span<const Vec2> bearings) {
    for (Vec2 b : bearings) s.direction_sum += b;
    s.direction_count += static_cast<int>(bearings.size());
}

std::optional<Vec2> normalized(Vec2 v) {
    const double n = v.norm();
    if (n <= kTinyResultant) return std::nullopt;
    return v * (1.0 / n);
}

// ---------------------------------------------------------------------------

class LeaderElection final : public Primitive {
public:
    PrimitiveId id() const override { return PrimitiveId::LeaderElection; }
    void initiate(AgentContext& ctx) const override {
        ctx.scratch.candidate = true;
        ctx.randomize_timer();
    }
    void relay(AgentContext& ctx, std::span<const Vec2>) const override {
        ctx.deactivate_timer();
        ctx.scratch.candidate = false;
    }

protected:
    void init_scratch(PrimitiveScratch& s) const override { s.candidate = true; }
};

class Synchronization final : public Primitive {
public:
    PrimitiveId id() const override { return PrimitiveId::Synchronization; }
    void initiate(AgentContext& ctx) const override { ctx.set_timer(ctx.params.cycle_max); }
    void relay(AgentContext& ctx, std::span<const Vec2>) const override {
        ctx.set_timer(ctx.params.cycle_max);
    }
};

// Only agents that detect the stimulus keep an armed timer.
class StimulusGated : public Primitive {
public:
    void prepare(LayerSetup& setup, TimerRule rule) const override {
        Primitive::prepare(setup, rule);
        const bool any = std::any_of(setup.cores.begin(), setup.cores.end(),
                                     [](const AgentCore& c) { return c.timer.has_value(); });
        if (!setup.stimulus) {
            setup.note(fmt::format("{}: no stimulus installed; no agent can initiate",
                                   to_string(id())));
        } else if (!any) {
            setup.note(fmt::format("{}: no agent detects the stimulus; no waves",
                                   to_string(id())));
        }
    }

protected:
    bool armed_at_start(std::size_t i, const LayerSetup& setup) const override {
        return setup.stimulus && setup.stimulus->detects(setup.positions[i]);
    }
    static void rearm_if_detecting(AgentContext& ctx) {
        if (ctx.detects_stimulus())
            ctx.randomize_timer();
        else
            ctx.deactivate_timer();
    }
};

class LocalizeObject final : public StimulusGated {
public:
    PrimitiveId id() const override { return PrimitiveId::LocalizeObject; }
    void initiate(AgentContext& ctx) const override { rearm_if_detecting(ctx); }
    void relay(AgentContext& ctx, std::span<const Vec2> bearings) const override {
        // a detector relays but keeps no estimate of its own
        if (ctx.detects_stimulus()) return;
        record_bearings(ctx.scratch, bearings);
        ctx.scratch.estimate_bearing = normalized(ctx.scratch.direction_sum);
    }
};

class LocalizeCenter final : public Primitive {
public:
    PrimitiveId id() const override { return PrimitiveId::LocalizeCenter; }
    void initiate(AgentContext& ctx) const override {
        ctx.scratch.estimate_bearing = normalized(ctx.scratch.direction_sum);
        ctx.randomize_timer();
    }
    void relay(AgentContext& ctx, std::span<const Vec2> bearings) const override {
        record_bearings(ctx.scratch, bearings);
    }
};

class EstimateCount final : public Primitive {
public:
    PrimitiveId id() const override { return PrimitiveId::EstimateCount; }
    void initiate(AgentContext& ctx) const override {
        auto& s = ctx.scratch;
        s.count_estimates.push_back(s.ping_count);
        s.ping_count = 0;
        double sum = 0.0;
        for (int c : s.count_estimates) sum += c;
        s.n_est = sum / static_cast<double>(s.count_estimates.size());
        ctx.randomize_timer();
    }
    void relay(AgentContext& ctx, std::span<const Vec2>) const override { ++ctx.scratch.ping_count; }
};

class PeripheryDetect final : public Primitive {
public:
    PrimitiveId id() const override { return PrimitiveId::PeripheryDetect; }
    void initiate(AgentContext& ctx) const override {
        const auto& bins = ctx.scratch.quadrant_bins;
        ctx.scratch.periphery = std::any_of(bins.begin(), bins.end(), [](int n) { return n == 0; });
        ctx.randomize_timer();
    }
    void relay(AgentContext& ctx, std::span<const Vec2> bearings) const override {
        record_bearings(ctx.scratch, bearings);
        for (Vec2 b : bearings) ++ctx.scratch.quadrant_bins[static_cast<std::size_t>(quadrant_of(b))];
    }
};

void reset_relay_timer(AgentContext& ctx, RelayTimer rule) {
    if (rule == RelayTimer::Redraw)
        ctx.randomize_timer();
    else
        ctx.set_timer(ctx.params.cycle_max);
}

class Aggregate final : public Primitive {
public:
    explicit Aggregate(RelayTimer rule) : rule_(rule) {}

    PrimitiveId id() const override { return PrimitiveId::Aggregate; }
    bool moves() const override { return true; }
    void initiate(AgentContext& ctx) const override { ctx.randomize_timer(); }
    void relay(AgentContext& ctx, std::span<const Vec2> bearings) const override {
        reset_relay_timer(ctx, rule_);
        record_bearings(ctx.scratch, bearings);
        if (auto toward = circular_mean(bearings)) ctx.move_along(*toward, ctx.config.step());
    }

private:
    RelayTimer rule_;
};

class AggregateAtObject final : public StimulusGated {
public:
    explicit AggregateAtObject(RelayTimer rule) : rule_(rule) {}

    PrimitiveId id() const override { return PrimitiveId::AggregateAtObject; }
    bool moves() const override { return true; }
    void initiate(AgentContext& ctx) const override { rearm_if_detecting(ctx); }
    void relay(AgentContext& ctx, std::span<const Vec2> bearings) const override {
        if (ctx.detects_stimulus()) reset_relay_timer(ctx, rule_);
        record_bearings(ctx.scratch, bearings);
        if (auto toward = circular_mean(bearings)) ctx.move_along(*toward, ctx.config.step());
    }

private:
    RelayTimer rule_;
};

class FollowLeader final : public Primitive {
public:
    explicit FollowLeader(FollowLeaderParams p) : params_(std::move(p)) {}

    PrimitiveId id() const override { return PrimitiveId::FollowLeader; }
    bool moves() const override { return true; }

    std::shared_ptr<const Primitive> resolve(Rng& rng, std::string& note) const override {
        if (params_.target_direction) return nullptr;
        const double angle = kTwoPi * rng.uniform01();
        FollowLeaderParams p = params_;
        p.target_direction = unit_from_angle(angle);
        note = fmt::format("follow_leader: target direction drawn at {:.6f} rad", angle);
        return std::make_shared<FollowLeader>(std::move(p));
    }

    void prepare(LayerSetup& setup, TimerRule rule) const override {
        const std::size_t n = setup.scratch.size();
        if (params_.leader_id) {
            for (auto& s : setup.scratch) s.leader = false;
            if (*params_.leader_id >= 0 && static_cast<std::size_t>(*params_.leader_id) < n)
                setup.scratch[static_cast<std::size_t>(*params_.leader_id)].leader = true;
        } else {
            const bool any_leader = std::any_of(setup.scratch.begin(), setup.scratch.end(),
                                                [](const PrimitiveScratch& s) { return s.leader; });
            if (!any_leader)
                for (auto& s : setup.scratch) s.leader = s.candidate;
        }
        int leaders = 0;
        for (std::size_t i = 0; i < n; ++i) {
            setup.cores[i].timer.reset();
            if (!setup.scratch[i].leader || rule == TimerRule::Deactivated) continue;
            ++leaders;
            setup.cores[i].timer = rule == TimerRule::FixedMax
                                       ? setup.params.cycle_max
                                       : static_cast<int>(setup.rng.uniform_int(1, setup.params.cycle_max));
        }
        if (leaders == 0) setup.note("follow_leader: no leader flagged; swarm is inert");
        if (leaders > 1) setup.note(fmt::format("follow_leader: {} leaders flagged", leaders));
    }

    void initiate(AgentContext& ctx) const override {
        ctx.scratch.leader = true;
        ctx.randomize_timer();
        if (params_.motion == LeaderMotion::PerWave) ctx.move_along(direction(), speed(ctx));
    }
    void advance(AgentContext& ctx) const override {
        if (params_.motion == LeaderMotion::PerStep && ctx.scratch.leader)
            ctx.move_along(direction(), speed(ctx));
    }
    void relay(AgentContext& ctx, std::span<const Vec2> bearings) const override {
        ctx.deactivate_timer();
        ctx.scratch.leader = false;
        record_bearings(ctx.scratch, bearings);
        if (auto toward = circular_mean(bearings)) ctx.move_along(*toward, ctx.config.step());
    }

private:
    Vec2 direction() const { return params_.target_direction.value_or(Vec2{1.0, 0.0}); }
    double speed(const AgentContext& ctx) const { return params_.leader_speed.value_or(ctx.config.step()); }

    FollowLeaderParams params_;
};

class GasExpansion final : public Primitive {
public:
    PrimitiveId id() const override { return PrimitiveId::GasExpansion; }
    bool moves() const override { return true; }
    void initiate(AgentContext& ctx) const override { ctx.randomize_timer(); }
    void relay(AgentContext& ctx, std::span<const Vec2> bearings) const override {
        record_bearings(ctx.scratch, bearings);
        if (auto toward = circular_mean(bearings)) ctx.move_along(-*toward, ctx.config.step());
    }
};

template <class P, class... Args>
PrimitiveBinding make_binding(std::optional<ObjectStimulus> stimulus, Args&&... args) {
    auto blocks = std::make_shared<const P>(std::forward<Args>(args)...);
    return PrimitiveBinding{blocks->id(), TimerRule::RandomUpToMax, std::move(stimulus), blocks};
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(SignalState s) {
    switch (s) {
        case SignalState::Inactive: return "inactive";
        case SignalState::Active: return "active";
        case SignalState::Refractory: return "refractory";
    }
    return "inactive";
}

std::string_view to_string(PrimitiveId id) {
    for (const auto& [k, v] : kPrimitiveNames)
        if (k == id) return v;
    return "unknown";
}

std::optional<PrimitiveId> primitive_from_string(std::string_view name) {
    for (const auto& [k, v] : kPrimitiveNames)
        if (v == name) return k;
    return std::nullopt;
}

bool requires_stimulus(PrimitiveId id) {
    return id == PrimitiveId::LocalizeObject || id == PrimitiveId::AggregateAtObject;
}

std::string_view to_string(ScratchField f) {
    for (const auto& [k, v] : kFieldNames)
        if (k == f) return v;
    return "unknown";
}

std::optional<ScratchField> scratch_field_from_string(std::string_view name) {
    for (const auto& [k, v] : kFieldNames)
        if (v == name) return k;
    return std::nullopt;
}

std::string_view to_string(LeaderMotion m) {
    return m == LeaderMotion::PerWave ? "per_wave" : "per_step";
}

std::string_view to_string(RelayTimer r) { return r == RelayTimer::Redraw ? "redraw" : "max"; }

std::optional<RelayTimer> relay_timer_from_string(std::string_view name) {
    if (name == "redraw") return RelayTimer::Redraw;
    if (name == "max") return RelayTimer::Max;
    return std::nullopt;
}

std::optional<LeaderMotion> leader_motion_from_string(std::string_view name) {
    if (name == "per_wave") return LeaderMotion::PerWave;
    if (name == "per_step") return LeaderMotion::PerStep;
    return std::nullopt;
}

void clear_scratch(PrimitiveScratch& s, const CarryoverSet& keep) {
    auto kept = [&](ScratchField f) { return std::find(keep.begin(), keep.end(), f) != keep.end(); };
    if (!kept(ScratchField::Candidate)) s.candidate = false;
    if (!kept(ScratchField::Leader)) s.leader = false;
    if (!kept(ScratchField::Direction)) {
        s.direction_sum = {};
        s.direction_count = 0;
        s.estimate_bearing.reset();
    }
    if (!kept(ScratchField::Bins)) s.quadrant_bins = {};
    if (!kept(ScratchField::Count)) {
        s.ping_count = 0;
        s.count_estimates.clear();
        s.n_est = 0.0;
    }
    if (!kept(ScratchField::Periphery)) s.periphery = false;
}

void Primitive::prepare(LayerSetup& setup, TimerRule rule) const {
    for (std::size_t i = 0; i < setup.scratch.size(); ++i) {
        init_scratch(setup.scratch[i]);
        auto& timer = setup.cores[i].timer;
        timer.reset();
        if (rule == TimerRule::Deactivated || !armed_at_start(i, setup)) continue;
        timer = rule == TimerRule::FixedMax
                    ? setup.params.cycle_max
                    : static_cast<int>(setup.rng.uniform_int(1, setup.params.cycle_max));
    }
}

std::optional<Vec2> circular_mean(std::span<const Vec2> bearings) {
    Vec2 sum{};
    for (Vec2 b : bearings) sum += b;
    return normalized(sum);
}

int quadrant_of(Vec2 d) {
    if (d.x > 0.0 && d.y >= 0.0) return 0;
    if (d.x <= 0.0 && d.y > 0.0) return 1;
    if (d.x < 0.0 && d.y <= 0.0) return 2;
    return 3;
}

PrimitiveBinding leader_election() { return make_binding<LeaderElection>(std::nullopt); }
PrimitiveBinding synchronization() { return make_binding<Synchronization>(std::nullopt); }
PrimitiveBinding localize_object(std::optional<ObjectStimulus> stimulus) {
    return make_binding<LocalizeObject>(std::move(stimulus));
}
PrimitiveBinding localize_center() { return make_binding<LocalizeCenter>(std::nullopt); }
PrimitiveBinding estimate_count() { return make_binding<EstimateCount>(std::nullopt); }
PrimitiveBinding periphery_detect() { return make_binding<PeripheryDetect>(std::nullopt); }
PrimitiveBinding aggregate(RelayTimer rule) { return make_binding<Aggregate>(std::nullopt, rule); }
PrimitiveBinding aggregate_at_object(std::optional<ObjectStimulus> stimulus, RelayTimer rule) {
    return make_binding<AggregateAtObject>(std::move(stimulus), rule);
}
PrimitiveBinding follow_leader(FollowLeaderParams params) {
    return make_binding<FollowLeader>(std::nullopt, std::move(params));
}
PrimitiveBinding gas_expansion() { return make_binding<GasExpansion>(std::nullopt); }

}  // namespace wospp
