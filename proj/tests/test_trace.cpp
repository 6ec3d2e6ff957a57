#include <doctest.h>

#include <filesystem>
#include <random>

#include "helpers.hpp"
#include "wospp/runner.hpp"
#include "wospp/trace_io.hpp"

using namespace wospp;
namespace fs = std::filesystem;
using testutil::slurp;
using testutil::TempDir;

namespace {

Scenario small(const std::string& primitive = "aggregate", int horizon = 60) {
    return parse_scenario(R"({"n_agents": 12, "swarm_radius": 1.2, "refractory_time": 4, "cycle_max": 20,
        "seed": 5, "primitive": ")" + primitive + R"(", "horizon": )" + std::to_string(horizon) + "}");
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < text.size()) {
        const auto end = text.find('\n', start);
        out.push_back(text.substr(start, end - start));
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return out;
}

// Everything after the metadata line, which names the output path.
std::string body(const std::string& text) { return text.substr(text.find('\n')); }

bool no_partials(const fs::path& dir) {
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".partial") return false;
    return true;
}

}  // namespace

TEST_SUITE("trace") {

TEST_CASE("format_number is shortest round-trip text") {
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(-0.0) == "0");
    CHECK(format_number(3.0) == "3");
    std::mt19937_64 g(1);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(g);
        REQUIRE(std::stod(format_number(v)) == v);
    }
}

TEST_CASE("trace and metrics layout") {
    TempDir dir("layout");
    Scenario s = small();
    s.outputs.trace = dir.file("t.csv");
    s.outputs.metrics = dir.file("m.csv");
    s.outputs.snapshot_period = 20;
    run_scenario(s);
    const auto t = lines(slurp(dir.file("t.csv")));
    REQUIRE(t.size() >= 2);
    CHECK(t[0].find(R"("schema":"wospp.trace")") != std::string::npos);
    CHECK(t[1] == "timestep,id,x,y,state,timer,candidate,leader,periphery,estimate_x,estimate_y,n_est,channel");
    std::vector<std::string> steps;
    std::size_t rows = 0;
    for (std::size_t i = 2; i < t.size(); ++i) {
        if (t[i].rfind("#note", 0) == 0) continue;
        ++rows;
        CHECK(std::count(t[i].begin(), t[i].end(), ',') == 12);
        const std::string ts = t[i].substr(0, t[i].find(','));
        if (steps.empty() || steps.back() != ts) steps.push_back(ts);
    }
    CHECK(steps == std::vector<std::string>{"0", "20", "40", "60"});
    CHECK(rows == 4 * 12);

    const auto m = lines(slurp(dir.file("m.csv")));
    CHECK(m[0].find(R"("schema":"wospp.metrics")") != std::string::npos);
    CHECK(m[1] == "timestep,channel,name,value");
    CHECK(slurp(dir.file("m.csv")).find("\n60,,rms_to_centroid,") != std::string::npos);
    CHECK(no_partials(dir.path));
}

TEST_CASE("a zero-step run writes the initial snapshot only") {
    TempDir dir("zero");
    Scenario s = small("synchronization", 0);
    s.outputs.trace = dir.file("t.csv");
    run_scenario(s);
    const auto t = lines(slurp(dir.file("t.csv")));
    CHECK(std::count_if(t.begin() + 2, t.end(), [](const std::string& l) { return l[0] != '#'; }) == 12);
}

TEST_CASE("identical seeds give byte-identical files, other seeds differ") {
    TempDir dir("det");
    Scenario s = small("gas_expansion", 200);
    s.sim.loss_probability = 0.2;
    s.sim.heading_noise_std = 0.1;
    s.outputs.snapshot_period = 1;
    s.outputs.trace = dir.file("a.csv");
    run_scenario(s);
    s.outputs.trace = dir.file("b.csv");
    run_scenario(s);
    CHECK(body(slurp(dir.file("a.csv"))) == body(slurp(dir.file("b.csv"))));
    s.sim.rng_seed = 6;
    s.outputs.trace = dir.file("c.csv");
    run_scenario(s);
    CHECK(body(slurp(dir.file("a.csv"))) != body(slurp(dir.file("c.csv"))));
}

TEST_CASE("schedules emit stage notes in the trace") {
    TempDir dir("notes");
    Scenario s = parse_scenario(R"({"n_agents": 10, "swarm_radius": 1, "seed": 2,
        "schedule": [{"primitive": "leader_election", "duration": 30},
                     {"primitive": "follow_leader", "carryover": ["candidate"], "duration": 10}]})");
    s.outputs.trace = dir.file("t.csv");
    const auto r = run_scenario(s);
    REQUIRE(r.stages.size() == 2);
    const auto text = slurp(dir.file("t.csv"));
    CHECK(text.find("#note,0,stage 0 leader_election starts") != std::string::npos);
    CHECK(text.find("#note,30,stage 1 follow_leader starts") != std::string::npos);
    CHECK(text.find("follow_leader: target direction drawn at") != std::string::npos);
}

TEST_CASE("failed runs leave nothing on disk") {
    TempDir dir("fail");
    Scenario s = small();
    s.sim.n_agents = 40;
    s.sim.swarm_radius = 50;
    s.sim.init_attempts = 2;
    s.outputs.trace = dir.file("t.csv");
    s.outputs.metrics = dir.file("m.csv");
    CHECK_THROWS_AS(run_scenario(s), InitError);
    CHECK(fs::is_empty(dir.path));

    {
        Scenario ok = small();
        ok.outputs.trace = dir.file("t.csv");
        SwarmState st = Program(ok).init();
        FileSink sink(ok, ok.outputs.trace, std::nullopt);
        sink.begin(st);
        CHECK(fs::exists(dir.file("t.csv.partial")));
    }
    CHECK(fs::is_empty(dir.path));
}

TEST_CASE("an unwritable output is an IoError") {
    Scenario s = small();
    s.outputs.trace = "/nonexistent-dir/t.csv";
    CHECK_THROWS_AS(run_scenario(s), IoError);
}

TEST_CASE("seeded paths") {
    CHECK(seeded_path("out/trace.csv", 7) == "out/trace.seed7.csv");
    CHECK(seeded_path("trace", 12) == "trace.seed12");
}

TEST_CASE("aggregation does not depend on run order or thread count") {
    TempDir dir("sweep");
    Scenario s = small("estimate_count", 100);
    SweepOptions o;
    o.seeds = 5;
    o.threads = 1;
    o.aggregate_out = dir.file("one.csv");
    const auto a = sweep_scenario(s, o);
    o.threads = 3;
    o.aggregate_out = dir.file("three.csv");
    o.trace_pattern = dir.file("tr.csv");
    const auto b = sweep_scenario(s, o);
    CHECK(body(slurp(dir.file("one.csv"))) == body(slurp(dir.file("three.csv"))));
    CHECK(a.seeds == std::vector<std::uint64_t>{5, 6, 7, 8, 9});
    for (auto seed : b.seeds) CHECK(fs::exists(seeded_path(dir.file("tr.csv"), seed)));

    auto runs = a.runs;
    std::reverse(runs.begin(), runs.end());
    const auto fwd = aggregate_samples(a.runs);
    const auto rev = aggregate_samples(runs);
    REQUIRE(fwd.size() == rev.size());
    for (std::size_t i = 0; i < fwd.size(); ++i) {
        CHECK(fwd[i].mean == rev[i].mean);
        CHECK(fwd[i].std == rev[i].std);
        CHECK(fwd[i].count == 5);
    }
    const auto rows = lines(slurp(dir.file("one.csv")));
    CHECK(rows[0].find(R"("schema":"wospp.sweep")") != std::string::npos);
    CHECK(rows[1] == "timestep,channel,name,mean,std,count");
}

TEST_CASE("aggregate rows: sample std over runs") {
    std::vector<std::vector<MetricSample>> runs(3);
    const double v[3] = {1.0, 2.0, 6.0};
    for (int k = 0; k < 3; ++k) runs[static_cast<std::size_t>(k)].push_back({4, "x", v[k], 0, {}});
    const auto rows = aggregate_samples(runs);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].mean == doctest::Approx(3.0));
    CHECK(rows[0].std == doctest::Approx(std::sqrt(7.0)));
    CHECK(rows[0].channel == 0);
}

}  // TEST_SUITE
