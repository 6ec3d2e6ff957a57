#include <doctest.h>

#include "helpers.hpp"
#include "wospp/composer.hpp"
#include "wospp/metrics.hpp"
#include "wospp/spatial.hpp"

using namespace wospp;

namespace {

struct NoteSink : TraceSink {
    std::vector<std::pair<std::int64_t, std::string>> notes;
    std::int64_t steps = 0;
    void on_step(const SwarmState&, const StepEvents&) override { ++steps; }
    void on_note(std::int64_t t, const std::string& text) override { notes.emplace_back(t, text); }
};

SimConfig small() {
    SimConfig c;
    c.n_agents = 30;
    c.swarm_radius = 1.5;
    c.refractory_time = 8;
    c.cycle_max = 60;
    c.rng_seed = 21;
    return c;
}

}  // namespace

TEST_SUITE("composer") {

TEST_CASE("schedule validation") {
    Schedule bad{{synchronization(), 0, {}, {}, {}}};
    CHECK_THROWS_AS(validate_schedule(bad), ConfigError);
    Schedule empty_binding{{PrimitiveBinding{}, 5, {}, {}, {}}};
    CHECK_THROWS_AS(validate_schedule(empty_binding), ConfigError);
    Schedule ok{{synchronization(), 3, {}, 4, 20}};
    CHECK_NOTHROW(validate_schedule(ok));
}

TEST_CASE("stages run back to back for their durations") {
    auto s = init_swarm(small(), {{0, leader_election()}});
    const Schedule sched{{leader_election(), 300, {}, {}, {}},
                         {synchronization(), 50, {ScratchField::Candidate}, 4, 25},
                         {aggregate(), 20, {}, {}, {}}};
    NoteSink sink;
    const auto rec = run_sequence(s, sched, &sink, true);
    CHECK(s.timestep == 370);
    CHECK(sink.steps == 370);
    REQUIRE(rec.size() == 3);
    CHECK(rec[0].start == 0);
    CHECK(rec[1].start == 300);
    CHECK(rec[2].start == 350);
    CHECK(rec[1].primitive == PrimitiveId::Synchronization);
    CHECK(rec[0].connected);
    // stage 1 kept the election result
    CHECK(rec[1].candidates == 1);
    CHECK(rec[2].candidates == 0);
    CHECK(s.primary().binding.id == PrimitiveId::Aggregate);
    CHECK(s.primary().params.cycle_max == small().cycle_max);
    REQUIRE(sink.notes.size() >= 3);
    CHECK(sink.notes.front().second.rfind("stage 0 leader_election starts", 0) == 0);
}

TEST_CASE("synchronization then leader election composes both results") {
    SimConfig c = small();
    c.cycle_max = 100;
    auto s = init_swarm(c, {{0, synchronization()}});
    const Schedule sched{{synchronization(), 200, {}, {}, {}}, {leader_election(), 2000, {}, {}, {}}};
    ScheduleCursor cur(sched, 0, true);
    std::optional<double> at_boundary;
    while (!cur.done(s)) {
        if (s.timestep == 200) at_boundary = delta_phi_max(s.primary());
        cur.before_step(s, nullptr);
        step(s);
    }
    REQUIRE(at_boundary);
    const int diameter = hop_diameter(s.positions, 1.0);
    CHECK(*at_boundary <= kTwoPi * diameter / 100 + 1e-9);
    CHECK(candidate_count(s.primary().scratch) == 1);
}

TEST_CASE("stage overrides apply to the layer parameters") {
    auto s = init_swarm(small(), {{0, synchronization()}});
    ScheduleCursor cur({{synchronization(), 5, {}, 3, 17}}, 0, false);
    CHECK(cur.before_step(s, nullptr));
    CHECK(s.primary().params.refractory_time == 3);
    CHECK(s.primary().params.cycle_max == 17);
    for (const auto& c : s.primary().cores) CHECK(*c.timer <= 17);
    CHECK_FALSE(cur.before_step(s, nullptr));
    CHECK(cur.current() != nullptr);
}

TEST_CASE("positions persist across a boundary") {
    auto s = init_swarm(small(), {{0, aggregate()}});
    ScheduleCursor cur({{aggregate(), 100, {}, {}, {}}, {synchronization(), 10, {}, {}, {}}}, 0, true);
    while (s.timestep < 100) {
        cur.before_step(s, nullptr);
        step(s);
    }
    const auto before = s.positions;
    CHECK(cur.before_step(s, nullptr));
    CHECK(s.positions == before);
    CHECK(s.primary().binding.id == PrimitiveId::Synchronization);
}

TEST_CASE("interleaved layers step with independent signalling") {
    auto s = init_swarm(small(), {{0, synchronization()}, {3, estimate_count()}});
    run_interleaved(s, 200);
    CHECK(s.timestep == 200);
    CHECK(motion_layer_count(s) == 0);
    CHECK(s.layer(3).binding.id == PrimitiveId::EstimateCount);
    CHECK(s.layer(0).cores != s.layer(3).cores);
}

TEST_CASE("stage_params falls back to the config") {
    SimConfig c = small();
    c.loss_probability = 0.25;
    const Stage st{synchronization(), 1, {}, std::nullopt, 9};
    const auto p = stage_params(c, st);
    CHECK(p.refractory_time == c.refractory_time);
    CHECK(p.cycle_max == 9);
    CHECK(p.loss_probability == 0.25);
}

}  // TEST_SUITE
