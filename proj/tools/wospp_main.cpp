// Command-line front end. Talks to the simulator only through the C API.
#include <csignal>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wospp/wospp.h"

namespace {

int exit_code(wospp_status st) {
    switch (st) {
        case WOSPP_OK: return 0;
        case WOSPP_ERR_CONFIG:
        case WOSPP_ERR_INIT: return 2;
        default: return 1;
    }
}

int report(wospp_status st) {
    if (st != WOSPP_OK) std::fprintf(stderr, "wospp: %s\n", wospp_last_error());
    return exit_code(st);
}

void on_signal(int) { wospp_request_shutdown(); }

void on_listening(int port, void*) {
    std::printf("listening on 127.0.0.1:%d\n", port);
    std::fflush(stdout);
}

struct Common {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> steps;
    std::optional<std::string> trace_out;
    std::optional<std::string> metrics_out;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--scenario", c.scenario, "scenario JSON file")->required();
    cmd->add_option("--seed", c.seed, "overrides the scenario seed");
    cmd->add_option("--steps", c.steps, "overrides the horizon")->check(CLI::NonNegativeNumber);
    cmd->add_option("--trace-out", c.trace_out, "trace CSV path");
    cmd->add_option("--metrics-out", c.metrics_out, "metrics CSV path");
}

// Owns the scenario handle for the lifetime of one command.
struct Loaded {
    wospp_scenario* s = nullptr;
    ~Loaded() { wospp_scenario_free(s); }
};

wospp_status load(const Common& c, Loaded& out, bool apply_outputs) {
    wospp_status st = wospp_scenario_load(c.scenario.c_str(), &out.s);
    if (st != WOSPP_OK) return st;
    if (c.seed && (st = wospp_scenario_set_seed(out.s, *c.seed)) != WOSPP_OK) return st;
    if (c.steps && (st = wospp_scenario_set_steps(out.s, *c.steps)) != WOSPP_OK) return st;
    if (apply_outputs)
        st = wospp_scenario_set_outputs(out.s, c.trace_out ? c.trace_out->c_str() : nullptr,
                                        c.metrics_out ? c.metrics_out->c_str() : nullptr);
    return st;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wave oriented swarm simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(wospp_version()));

    Common run_opts, sweep_opts, serve_opts;
    int seeds = 1;
    int threads = 0;
    int port = 7070;

    auto* run = app.add_subcommand("run", "headless run");
    add_common(run, run_opts);
    auto* sweep = app.add_subcommand("sweep", "consecutive seeds, aggregated metrics");
    add_common(sweep, sweep_opts);
    sweep->add_option("--seeds", seeds, "number of seeds")->check(CLI::PositiveNumber);
    sweep->add_option("--threads", threads, "worker threads (0: one per core)")->check(CLI::NonNegativeNumber);
    auto* serve = app.add_subcommand("serve", "live steering gateway");
    add_common(serve, serve_opts);
    serve->add_option("--port", port, "TCP port on 127.0.0.1 (0: any free port)")->check(CLI::Range(0, 65535));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    Loaded sc;
    if (*run) {
        if (auto st = load(run_opts, sc, true); st != WOSPP_OK) return report(st);
        return report(wospp_run(sc.s));
    }
    if (*sweep) {
        if (auto st = load(sweep_opts, sc, false); st != WOSPP_OK) return report(st);
        // Per-seed traces only when asked for.
        const char* metrics = sweep_opts.metrics_out ? sweep_opts.metrics_out->c_str() : nullptr;
        const char* pattern = sweep_opts.trace_out ? sweep_opts.trace_out->c_str() : nullptr;
        return report(wospp_sweep(sc.s, seeds, metrics, pattern, threads));
    }

    if (auto st = load(serve_opts, sc, true); st != WOSPP_OK) return report(st);
    struct sigaction sa {};
    sa.sa_handler = on_signal;
    sigemptyset(&sa.sa_mask);
    sigaction(SIGINT, &sa, nullptr);
    sigaction(SIGTERM, &sa, nullptr);
    return report(wospp_serve(sc.s, port, on_listening, nullptr));
}
