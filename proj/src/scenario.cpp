#include "wospp/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "scenario_json.hpp"

namespace wospp {

namespace detail {

namespace {

constexpr std::array<std::pair<TimerRule, std::string_view>, 3> kTimerRules{{
    {TimerRule::RandomUpToMax, "random"},
    {TimerRule::FixedMax, "max"},
    {TimerRule::Deactivated, "deactivated"},
}};

std::string_view timer_rule_name(TimerRule r) {
    for (const auto& [k, v] : kTimerRules)
        if (k == r) return v;
    return "random";
}

std::optional<TimerRule> timer_rule_from(std::string_view s) {
    for (const auto& [k, v] : kTimerRules)
        if (v == s) return k;
    return std::nullopt;
}

bool accepts_relay_timer(PrimitiveId id) {
    return id == PrimitiveId::Aggregate || id == PrimitiveId::AggregateAtObject;
}

}  // namespace

ObjectReader::ObjectReader(const json& obj, std::string prefix)
    : obj_(obj), prefix_(std::move(prefix)) {}

std::string ObjectReader::path(const char* key) const {
    return prefix_.empty() ? std::string(key) : prefix_ + "." + key;
}

bool ObjectReader::has(const char* key) const { return obj_.contains(key); }

const json& ObjectReader::raw(const char* key) {
    seen_.emplace_back(key);
    return obj_.at(key);
}

std::optional<std::int64_t> ObjectReader::integer(const char* key, std::int64_t lo,
                                                  std::int64_t hi) {
    if (!has(key)) return std::nullopt;
    const json& v = raw(key);
    std::int64_t out = 0;
    if (v.is_number_unsigned()) {
        const auto u = v.get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
            throw ConfigError(path(key), "integer out of range");
        out = static_cast<std::int64_t>(u);
    } else if (v.is_number_integer()) {
        out = v.get<std::int64_t>();
    } else {
        throw ConfigError(path(key), "must be an integer");
    }
    if (out < lo || out > hi)
        throw ConfigError(path(key), fmt::format("must lie in [{}, {}]", lo, hi));
    return out;
}

std::optional<std::uint64_t> ObjectReader::unsigned_integer(const char* key) {
    if (!has(key)) return std::nullopt;
    const json& v = raw(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError(path(key), "must be a non-negative integer");
}

std::optional<double> ObjectReader::number(const char* key) {
    if (!has(key)) return std::nullopt;
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(path(key), "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path(key), "must be finite");
    return d;
}

std::optional<std::string> ObjectReader::string(const char* key) {
    if (!has(key)) return std::nullopt;
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(path(key), "must be a string");
    return v.get<std::string>();
}

std::optional<bool> ObjectReader::boolean(const char* key) {
    if (!has(key)) return std::nullopt;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(path(key), "must be true or false");
    return v.get<bool>();
}

void ObjectReader::finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
        if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
            throw ConfigError(path(it.key().c_str()), "unknown key");
    }
}

const json& require_object(const json& j, const std::string& key) {
    if (!j.is_object()) throw ConfigError(key, "must be an object");
    return j;
}

ObjectStimulus stimulus_from_json(const json& j, const std::string& key) {
    ObjectReader r(require_object(j, key), key);
    ObjectStimulus s;
    const auto x = r.number("x");
    const auto y = r.number("y");
    if (!x || !y) throw ConfigError(key, "needs x and y");
    s.position = {*x, *y};
    s.detection_radius = r.number("radius").value_or(1.0);
    if (!(s.detection_radius > 0.0)) throw ConfigError(r.path("radius"), "must be > 0");
    r.finish();
    return s;
}

json to_json(const ObjectStimulus& s) {
    return json{{"x", s.position.x}, {"y", s.position.y}, {"radius", s.detection_radius}};
}

PrimitiveSpec primitive_from_json(const json& name, const json* params, const std::string& key) {
    if (!name.is_string()) throw ConfigError(key, "must be a primitive name");
    const auto id = primitive_from_string(name.get<std::string>());
    if (!id) throw ConfigError(key, fmt::format("unknown primitive '{}'", name.get<std::string>()));
    PrimitiveSpec spec;
    spec.id = *id;
    if (!params) return spec;

    const std::string pkey = key + ".params";
    ObjectReader r(require_object(*params, pkey), pkey);
    auto& p = spec.params;
    if (auto rule = r.string("timer_rule")) {
        p.timer_rule = timer_rule_from(*rule);
        if (!p.timer_rule) throw ConfigError(r.path("timer_rule"), "must be random, max or deactivated");
    }
    if (accepts_relay_timer(*id)) {
        if (auto rt = r.string("relay_timer")) {
            p.relay_timer = relay_timer_from_string(*rt);
            if (!p.relay_timer)
                throw ConfigError(r.path("relay_timer"), "must be redraw or max");
        }
    }
    if (requires_stimulus(*id) && r.has("stimulus"))
        p.stimulus = stimulus_from_json(r.raw("stimulus"), r.path("stimulus"));
    if (*id == PrimitiveId::FollowLeader) {
        if (r.has("target_direction")) {
            const json& d = r.raw("target_direction");
            if (!d.is_array() || d.size() != 2 || !d[0].is_number() || !d[1].is_number())
                throw ConfigError(r.path("target_direction"), "must be [x, y]");
            const Vec2 v{d[0].get<double>(), d[1].get<double>()};
            if (!(v.norm() > 1e-12) || !std::isfinite(v.norm()))
                throw ConfigError(r.path("target_direction"), "must be a non-zero finite vector");
            p.target_direction = v;
        }
        if (auto id2 = r.integer("leader_id", 0, std::numeric_limits<int>::max()))
            p.leader_id = static_cast<int>(*id2);
        if (auto m = r.string("leader_motion")) {
            p.leader_motion = leader_motion_from_string(*m);
            if (!p.leader_motion)
                throw ConfigError(r.path("leader_motion"), "must be per_wave or per_step");
        }
        if (auto sp = r.number("leader_speed")) {
            if (!(*sp > 0.0)) throw ConfigError(r.path("leader_speed"), "must be > 0");
            p.leader_speed = *sp;
        }
    }
    r.finish();
    return spec;
}

json params_to_json(const PrimitiveParams& p) {
    json j = json::object();
    if (p.timer_rule) j["timer_rule"] = std::string(timer_rule_name(*p.timer_rule));
    if (p.relay_timer) j["relay_timer"] = std::string(to_string(*p.relay_timer));
    if (p.stimulus) j["stimulus"] = to_json(*p.stimulus);
    if (p.target_direction) j["target_direction"] = json::array({p.target_direction->x, p.target_direction->y});
    if (p.leader_id) j["leader_id"] = *p.leader_id;
    if (p.leader_motion) j["leader_motion"] = std::string(to_string(*p.leader_motion));
    if (p.leader_speed) j["leader_speed"] = *p.leader_speed;
    return j;
}

namespace {

json primitive_fields(const PrimitiveSpec& spec) {
    json j{{"primitive", std::string(to_string(spec.id))}};
    json params = params_to_json(spec.params);
    if (!params.empty()) j["params"] = std::move(params);
    return j;
}

PrimitiveSpec read_primitive(ObjectReader& r, const std::string& key) {
    const json& name = r.raw("primitive");
    const json* params = r.has("params") ? &r.raw("params") : nullptr;
    return primitive_from_json(name, params, key);
}

std::optional<int> read_positive_int(ObjectReader& r, const char* key) {
    if (auto v = r.integer(key, 1, std::numeric_limits<int>::max())) return static_cast<int>(*v);
    return std::nullopt;
}

}  // namespace

json scenario_to_json(const Scenario& s) {
    json j;
    const SimConfig& c = s.sim;
    j["n_agents"] = c.n_agents;
    j["swarm_radius"] = c.swarm_radius;
    j["perception_range"] = c.perception_range;
    j["refractory_time"] = c.refractory_time;
    j["cycle_max"] = c.cycle_max;
    if (c.step_length) j["step_length"] = *c.step_length;
    j["activate_delay"] = c.activate_delay;
    j["loss_probability"] = c.loss_probability;
    j["heading_noise_std"] = c.heading_noise_std;
    j["seed"] = c.rng_seed;
    j["init_attempts"] = c.init_attempts;

    if (s.primitive) {
        j.update(primitive_fields(*s.primitive));
    }
    if (s.schedule) {
        json stages = json::array();
        for (const auto& st : *s.schedule) {
            json e = primitive_fields(st.primitive);
            e["duration"] = st.duration;
            if (!st.carryover.empty()) {
                json keep = json::array();
                for (auto f : st.carryover) keep.push_back(std::string(to_string(f)));
                e["carryover"] = std::move(keep);
            }
            if (st.refractory_time) e["refractory_time"] = *st.refractory_time;
            if (st.cycle_max) e["cycle_max"] = *st.cycle_max;
            stages.push_back(std::move(e));
        }
        j["schedule"] = std::move(stages);
    }
    if (s.layers) {
        json layers = json::array();
        for (const auto& l : *s.layers) {
            json e = primitive_fields(l.primitive);
            e["channel"] = l.channel;
            if (l.refractory_time) e["refractory_time"] = *l.refractory_time;
            if (l.cycle_max) e["cycle_max"] = *l.cycle_max;
            layers.push_back(std::move(e));
        }
        j["layers"] = std::move(layers);
    }
    if (s.horizon) j["horizon"] = *s.horizon;
    if (s.stimulus) j["stimulus"] = to_json(*s.stimulus);

    json out{{"snapshot_period", s.outputs.snapshot_period}};
    if (s.outputs.trace) out["trace"] = *s.outputs.trace;
    if (s.outputs.metrics) out["metrics"] = *s.outputs.metrics;
    j["outputs"] = std::move(out);
    j["live"] = json{{"steps_per_second", s.live.steps_per_second}};
    return j;
}

}  // namespace detail

using detail::json;
using detail::ObjectReader;

std::int64_t Scenario::total_steps() const {
    if (schedule) {
        std::int64_t n = 0;
        for (const auto& s : *schedule) n += s.duration;
        return n;
    }
    return horizon.value_or(0);
}

void validate_scenario(const Scenario& s) {
    validate(s.sim);
    const int kinds = (s.primitive ? 1 : 0) + (s.schedule ? 1 : 0) + (s.layers ? 1 : 0);
    if (kinds != 1) throw ConfigError("primitive", "exactly one of primitive, schedule, layers must be set");
    if (s.schedule) {
        if (s.horizon) throw ConfigError("horizon", "not allowed with a schedule (stage durations decide)");
        if (s.schedule->empty()) throw ConfigError("schedule", "must contain at least one stage");
        for (std::size_t i = 0; i < s.schedule->size(); ++i) {
            const auto& st = (*s.schedule)[i];
            if (st.duration < 1) throw ConfigError(fmt::format("schedule[{}].duration", i), "must be >= 1");
            if (st.refractory_time && *st.refractory_time < 1)
                throw ConfigError(fmt::format("schedule[{}].refractory_time", i), "must be >= 1");
            if (st.cycle_max && *st.cycle_max < 1)
                throw ConfigError(fmt::format("schedule[{}].cycle_max", i), "must be >= 1");
        }
    } else {
        if (!s.horizon) throw ConfigError("horizon", "required with primitive or layers");
        if (*s.horizon < 0) throw ConfigError("horizon", "must be >= 0");
    }
    if (s.layers) {
        if (s.layers->empty()) throw ConfigError("layers", "must contain at least one layer");
        std::vector<int> channels;
        for (const auto& l : *s.layers) {
            if (l.channel < 0) throw ConfigError("layers", "channel must be >= 0");
            if (std::find(channels.begin(), channels.end(), l.channel) != channels.end())
                throw ConfigError("layers", fmt::format("duplicate channel id {}", l.channel));
            channels.push_back(l.channel);
        }
    }
    if (s.outputs.snapshot_period < 1) throw ConfigError("outputs.snapshot_period", "must be >= 1");
    if (!(s.live.steps_per_second > 0.0)) throw ConfigError("live.steps_per_second", "must be > 0");
}

Scenario parse_scenario(std::string_view text) {
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError("scenario", fmt::format("invalid JSON: {}", e.what()));
    }
    ObjectReader r(detail::require_object(root, "scenario"), "");
    Scenario s;
    SimConfig& c = s.sim;
    constexpr auto kIntMax = std::numeric_limits<int>::max();
    if (auto v = r.integer("n_agents", 2, kIntMax)) c.n_agents = static_cast<int>(*v);
    else throw ConfigError("n_agents", "required");
    if (auto v = r.number("swarm_radius")) c.swarm_radius = *v;
    else throw ConfigError("swarm_radius", "required");
    if (auto v = r.number("perception_range")) c.perception_range = *v;
    if (auto v = r.integer("refractory_time", 1, kIntMax)) c.refractory_time = static_cast<int>(*v);
    if (auto v = r.integer("cycle_max", 1, kIntMax)) c.cycle_max = static_cast<int>(*v);
    if (auto v = r.number("step_length")) c.step_length = *v;
    if (auto v = r.integer("activate_delay", 1, 1)) c.activate_delay = static_cast<int>(*v);
    if (auto v = r.number("loss_probability")) c.loss_probability = *v;
    if (auto v = r.number("heading_noise_std")) c.heading_noise_std = *v;
    if (auto v = r.unsigned_integer("seed")) c.rng_seed = *v;
    if (auto v = r.integer("init_attempts", 1, kIntMax)) c.init_attempts = static_cast<int>(*v);

    if (r.has("primitive")) {
        s.primitive = detail::primitive_from_json(r.raw("primitive"),
                                                  r.has("params") ? &r.raw("params") : nullptr,
                                                  "primitive");
    } else if (r.has("params")) {
        throw ConfigError("params", "only allowed together with primitive");
    }
    if (r.has("schedule")) {
        const json& arr = r.raw("schedule");
        if (!arr.is_array()) throw ConfigError("schedule", "must be an array of stages");
        std::vector<StageSpec> stages;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string key = fmt::format("schedule[{}]", i);
            ObjectReader sr(detail::require_object(arr[i], key), key);
            if (!sr.has("primitive")) throw ConfigError(key + ".primitive", "required");
            StageSpec st;
            st.primitive = detail::read_primitive(sr, key + ".primitive");
            if (auto d = sr.integer("duration", 1, std::numeric_limits<std::int64_t>::max()))
                st.duration = *d;
            else
                throw ConfigError(key + ".duration", "required");
            if (sr.has("carryover")) {
                const json& keep = sr.raw("carryover");
                if (!keep.is_array()) throw ConfigError(key + ".carryover", "must be an array of field names");
                for (const auto& f : keep) {
                    const auto field = f.is_string() ? scratch_field_from_string(f.get<std::string>())
                                                     : std::nullopt;
                    if (!field)
                        throw ConfigError(key + ".carryover",
                                          "fields are candidate, leader, direction, bins, count, periphery");
                    if (std::find(st.carryover.begin(), st.carryover.end(), *field) == st.carryover.end())
                        st.carryover.push_back(*field);
                }
            }
            st.refractory_time = detail::read_positive_int(sr, "refractory_time");
            st.cycle_max = detail::read_positive_int(sr, "cycle_max");
            sr.finish();
            stages.push_back(std::move(st));
        }
        s.schedule = std::move(stages);
    }
    if (r.has("layers")) {
        const json& arr = r.raw("layers");
        if (!arr.is_array()) throw ConfigError("layers", "must be an array of layers");
        std::vector<LayerDesc> layers;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string key = fmt::format("layers[{}]", i);
            ObjectReader lr(detail::require_object(arr[i], key), key);
            if (!lr.has("primitive")) throw ConfigError(key + ".primitive", "required");
            LayerDesc l;
            l.primitive = detail::read_primitive(lr, key + ".primitive");
            if (auto ch = lr.integer("channel", 0, std::numeric_limits<int>::max()))
                l.channel = static_cast<int>(*ch);
            else
                l.channel = static_cast<int>(i);
            l.refractory_time = detail::read_positive_int(lr, "refractory_time");
            l.cycle_max = detail::read_positive_int(lr, "cycle_max");
            lr.finish();
            layers.push_back(std::move(l));
        }
        s.layers = std::move(layers);
    }
    if (auto h = r.integer("horizon", 0, std::numeric_limits<std::int64_t>::max())) s.horizon = *h;
    if (r.has("stimulus")) s.stimulus = detail::stimulus_from_json(r.raw("stimulus"), "stimulus");
    if (r.has("outputs")) {
        ObjectReader o(detail::require_object(r.raw("outputs"), "outputs"), "outputs");
        s.outputs.trace = o.string("trace");
        s.outputs.metrics = o.string("metrics");
        if (auto p = o.integer("snapshot_period", 1, std::numeric_limits<int>::max()))
            s.outputs.snapshot_period = static_cast<int>(*p);
        o.finish();
    }
    if (r.has("live")) {
        ObjectReader l(detail::require_object(r.raw("live"), "live"), "live");
        if (auto v = l.number("steps_per_second")) s.live.steps_per_second = *v;
        l.finish();
    }
    r.finish();
    validate_scenario(s);
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("scenario", fmt::format("cannot read '{}'", path));
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string serialize_scenario(const Scenario& scenario, int indent) {
    return detail::scenario_to_json(scenario).dump(indent);
}

PrimitiveBinding make_binding(const PrimitiveSpec& spec) {
    const auto& p = spec.params;
    const RelayTimer relay = p.relay_timer.value_or(RelayTimer::Redraw);
    PrimitiveBinding b;
    switch (spec.id) {
        case PrimitiveId::LeaderElection: b = leader_election(); break;
        case PrimitiveId::Synchronization: b = synchronization(); break;
        case PrimitiveId::LocalizeObject: b = localize_object(p.stimulus); break;
        case PrimitiveId::LocalizeCenter: b = localize_center(); break;
        case PrimitiveId::EstimateCount: b = estimate_count(); break;
        case PrimitiveId::PeripheryDetect: b = periphery_detect(); break;
        case PrimitiveId::Aggregate: b = aggregate(relay); break;
        case PrimitiveId::AggregateAtObject: b = aggregate_at_object(p.stimulus, relay); break;
        case PrimitiveId::FollowLeader: {
            FollowLeaderParams fp;
            if (p.target_direction) fp.target_direction = *p.target_direction * (1.0 / p.target_direction->norm());
            fp.leader_id = p.leader_id;
            fp.motion = p.leader_motion.value_or(LeaderMotion::PerWave);
            fp.leader_speed = p.leader_speed;
            b = follow_leader(fp);
            break;
        }
        case PrimitiveId::GasExpansion: b = gas_expansion(); break;
    }
    if (p.timer_rule) b.timer_rule = *p.timer_rule;
    return b;
}

Schedule make_schedule(const std::vector<StageSpec>& stages) {
    Schedule out;
    for (const auto& st : stages)
        out.push_back(Stage{make_binding(st.primitive), st.duration, st.carryover, st.refractory_time,
                            st.cycle_max});
    return out;
}

std::vector<LayerSpec> make_layer_specs(const Scenario& s) {
    std::vector<LayerSpec> out;
    if (s.primitive) out.push_back(LayerSpec{0, make_binding(*s.primitive), std::nullopt, std::nullopt});
    if (s.schedule) {
        const auto& st = s.schedule->front();
        out.push_back(LayerSpec{0, make_binding(st.primitive), st.refractory_time, st.cycle_max});
    }
    if (s.layers)
        for (const auto& l : *s.layers)
            out.push_back(LayerSpec{l.channel, make_binding(l.primitive), l.refractory_time, l.cycle_max});
    return out;
}

}  // namespace wospp
