#include "wospp/wospp.h"

#include <atomic>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include <unistd.h>

#include "wospp/config.hpp"
#include "wospp/gateway.hpp"
#include "wospp/metrics.hpp"
#include "wospp/runner.hpp"
#include "wospp/scenario.hpp"

struct wospp_scenario {
    wospp::Scenario value;
};

struct wospp_sim {
    std::unique_ptr<wospp::Program> program;
    wospp::SwarmState state;
};

struct wospp_gateway {
    std::unique_ptr<wospp::Gateway> impl;
};

namespace {

thread_local std::string g_error;

// Stop descriptors (plus one) of live gateways, read by the signal-safe shutdown.
constexpr int kMaxGateways = 16;
std::atomic<int> g_stop_fds[kMaxGateways] = {};
std::atomic<bool> g_shutdown{false};

void register_stop_fd(int fd) {
    for (auto& slot : g_stop_fds) {
        int empty = 0;
        if (slot.compare_exchange_strong(empty, fd + 1)) return;
    }
}

void unregister_stop_fd(int fd) {
    for (auto& slot : g_stop_fds) {
        int mine = fd + 1;
        if (slot.compare_exchange_strong(mine, 0)) return;
    }
}

wospp_status fail(wospp_status code, const char* what) {
    g_error = what;
    return code;
}

template <class F>
wospp_status guarded(F&& f) {
    try {
        g_error.clear();
        f();
        return WOSPP_OK;
    } catch (const wospp::ConfigError& e) {
        return fail(WOSPP_ERR_CONFIG, e.what());
    } catch (const wospp::InitError& e) {
        return fail(WOSPP_ERR_INIT, e.what());
    } catch (const wospp::IoError& e) {
        return fail(WOSPP_ERR_IO, e.what());
    } catch (const std::bad_alloc&) {
        return fail(WOSPP_ERR_RUNTIME, "out of memory");
    } catch (const std::exception& e) {
        return fail(WOSPP_ERR_RUNTIME, e.what());
    } catch (...) {
        return fail(WOSPP_ERR_RUNTIME, "unknown error");
    }
}

#define WOSPP_REQUIRE(p) \
    if (!(p)) return fail(WOSPP_ERR_NULL, #p " is null")

}  // namespace

extern "C" {

const char* wospp_last_error(void) { return g_error.c_str(); }

const char* wospp_version(void) { return "1.0.0"; }

wospp_status wospp_scenario_load(const char* path, wospp_scenario** out) {
    WOSPP_REQUIRE(path);
    WOSPP_REQUIRE(out);
    *out = nullptr;
    return guarded([&] { *out = new wospp_scenario{wospp::load_scenario(path)}; });
}

wospp_status wospp_scenario_parse(const char* json_text, wospp_scenario** out) {
    WOSPP_REQUIRE(json_text);
    WOSPP_REQUIRE(out);
    *out = nullptr;
    return guarded([&] { *out = new wospp_scenario{wospp::parse_scenario(json_text)}; });
}

void wospp_scenario_free(wospp_scenario* s) { delete s; }

wospp_status wospp_scenario_set_seed(wospp_scenario* s, uint64_t seed) {
    WOSPP_REQUIRE(s);
    return guarded([&] {
        wospp::RunOverrides o;
        o.seed = seed;
        s->value = wospp::apply_overrides(s->value, o);
    });
}

wospp_status wospp_scenario_set_steps(wospp_scenario* s, int64_t steps) {
    WOSPP_REQUIRE(s);
    return guarded([&] {
        wospp::RunOverrides o;
        o.steps = steps;
        s->value = wospp::apply_overrides(s->value, o);
    });
}

wospp_status wospp_scenario_set_outputs(wospp_scenario* s, const char* trace_path, const char* metrics_path) {
    WOSPP_REQUIRE(s);
    return guarded([&] {
        auto set = [](std::optional<std::string>& slot, const char* p) {
            if (!p) return;
            if (*p)
                slot = p;
            else
                slot.reset();
        };
        set(s->value.outputs.trace, trace_path);
        set(s->value.outputs.metrics, metrics_path);
    });
}

wospp_status wospp_scenario_steps(const wospp_scenario* s, int64_t* out) {
    WOSPP_REQUIRE(s);
    WOSPP_REQUIRE(out);
    return guarded([&] { *out = s->value.total_steps(); });
}

wospp_status wospp_scenario_serialize(const wospp_scenario* s, char** out) {
    WOSPP_REQUIRE(s);
    WOSPP_REQUIRE(out);
    *out = nullptr;
    return guarded([&] {
        const std::string text = wospp::serialize_scenario(s->value);
        char* buf = new char[text.size() + 1];
        std::memcpy(buf, text.c_str(), text.size() + 1);
        *out = buf;
    });
}

void wospp_string_free(char* str) { delete[] str; }

wospp_status wospp_run(const wospp_scenario* s) {
    WOSPP_REQUIRE(s);
    return guarded([&] { wospp::run_scenario(s->value); });
}

wospp_status wospp_sweep(const wospp_scenario* s, int count, const char* metrics_out,
                         const char* trace_pattern, int threads) {
    WOSPP_REQUIRE(s);
    return guarded([&] {
        wospp::SweepOptions o;
        o.seeds = count;
        if (metrics_out && *metrics_out)
            o.aggregate_out = metrics_out;
        else if (!metrics_out)
            o.aggregate_out = s->value.outputs.metrics;
        if (trace_pattern && *trace_pattern) o.trace_pattern = trace_pattern;
        o.threads = threads;
        wospp::sweep_scenario(s->value, o);
    });
}

wospp_status wospp_gateway_start(const wospp_scenario* s, int port, wospp_gateway** out) {
    WOSPP_REQUIRE(s);
    WOSPP_REQUIRE(out);
    *out = nullptr;
    return guarded([&] {
        auto g = std::make_unique<wospp_gateway>();
        g->impl = std::make_unique<wospp::Gateway>(s->value, port);
        register_stop_fd(g->impl->stop_fd());
        if (g_shutdown) g->impl->request_stop();
        *out = g.release();
    });
}

int wospp_gateway_port(const wospp_gateway* g) { return g && g->impl ? g->impl->port() : -1; }

wospp_status wospp_gateway_wait(wospp_gateway* g) {
    WOSPP_REQUIRE(g);
    WOSPP_REQUIRE(g->impl);
    return guarded([&] { g->impl->wait(); });
}

wospp_status wospp_gateway_stop(wospp_gateway* g) {
    WOSPP_REQUIRE(g);
    WOSPP_REQUIRE(g->impl);
    return guarded([&] { g->impl->stop(); });
}

void wospp_gateway_free(wospp_gateway* g) {
    if (!g) return;
    if (g->impl) unregister_stop_fd(g->impl->stop_fd());
    delete g;
    // A handled request does not outlive the gateways it was aimed at.
    g_shutdown = false;
}

wospp_status wospp_serve(const wospp_scenario* s, int port, void (*on_listening)(int, void*), void* user) {
    wospp_gateway* g = nullptr;
    wospp_status st = wospp_gateway_start(s, port, &g);
    if (st != WOSPP_OK) return st;
    if (on_listening) on_listening(wospp_gateway_port(g), user);
    st = wospp_gateway_wait(g);
    const wospp_status stopped = wospp_gateway_stop(g);
    wospp_gateway_free(g);
    return st != WOSPP_OK ? st : stopped;
}

void wospp_request_shutdown(void) {
    g_shutdown = true;
    for (auto& slot : g_stop_fds) {
        const int v = slot.load();
        if (v > 0) {
            const char b = 's';
            [[maybe_unused]] auto n = ::write(v - 1, &b, 1);
        }
    }
}

wospp_status wospp_sim_create(const wospp_scenario* s, wospp_sim** out) {
    WOSPP_REQUIRE(s);
    WOSPP_REQUIRE(out);
    *out = nullptr;
    return guarded([&] {
        auto sim = std::make_unique<wospp_sim>();
        sim->program = std::make_unique<wospp::Program>(s->value);
        sim->state = sim->program->init();
        sim->program->begin(sim->state, nullptr);
        *out = sim.release();
    });
}

void wospp_sim_free(wospp_sim* sim) { delete sim; }

wospp_status wospp_sim_step(wospp_sim* sim, int64_t n) {
    WOSPP_REQUIRE(sim);
    if (n < 0) return fail(WOSPP_ERR_CONFIG, "n: must be >= 0");
    return guarded([&] {
        for (int64_t i = 0; i < n; ++i) sim->program->advance(sim->state, nullptr);
    });
}

int64_t wospp_sim_timestep(const wospp_sim* sim) { return sim ? sim->state.timestep : -1; }

size_t wospp_sim_agent_count(const wospp_sim* sim) { return sim ? sim->state.size() : 0; }

wospp_status wospp_sim_positions(const wospp_sim* sim, double* xy, size_t capacity) {
    WOSPP_REQUIRE(sim);
    WOSPP_REQUIRE(xy);
    if (capacity < sim->state.size()) return fail(WOSPP_ERR_CONFIG, "capacity: smaller than the agent count");
    for (size_t i = 0; i < sim->state.size(); ++i) {
        xy[2 * i] = sim->state.positions[i].x;
        xy[2 * i + 1] = sim->state.positions[i].y;
    }
    g_error.clear();
    return WOSPP_OK;
}

wospp_status wospp_sim_metric(const wospp_sim* sim, const char* name, double* out) {
    WOSPP_REQUIRE(sim);
    WOSPP_REQUIRE(name);
    WOSPP_REQUIRE(out);
    return guarded([&] {
        const int primary = sim->state.primary().channel;
        for (const auto& m : wospp::collect_metrics(sim->state)) {
            if (m.name == name && (!m.channel || *m.channel == primary)) {
                *out = m.value;
                return;
            }
        }
        throw wospp::ConfigError("name", std::string("no metric '") + name + "' for the current binding");
    });
}

}  // extern "C"
