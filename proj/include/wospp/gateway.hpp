#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "wospp/engine.hpp"
#include "wospp/runner.hpp"
#include "wospp/scenario.hpp"
#include "wospp/trace_io.hpp"

namespace wospp {

inline constexpr int kWireVersion = 1;

// Live simulation driven by operator commands. Transport independent: messages
// are NDJSON lines handed to `emit`. All calls must come from one thread.
class SteeringSession {
public:
    // (client, line); client -1 addresses every connected console.
    using Emit = std::function<void(int client, std::string line)>;

    // Trace and metrics go to the scenario's outputs, exactly as in a headless run.
    SteeringSession(Scenario scenario, Emit emit);

    // Parses and applies one command at the current step boundary and acknowledges it
    // to `client`. Malformed commands are rejected without touching the simulation.
    void apply(std::string_view line, int client = -1);

    // One timestep when running. Pauses automatically when the scenario horizon is
    // reached. Returns whether a step was taken.
    bool tick();

    void send_snapshot(int client = -1);
    [[nodiscard]] std::string snapshot_line();

    // Moves the output files into place.
    void finish();

    [[nodiscard]] bool paused() const { return paused_; }
    [[nodiscard]] const SwarmState& state() const { return state_; }
    [[nodiscard]] std::int64_t steps_taken() const { return steps_; }
    [[nodiscard]] const Scenario& scenario() const { return scenario_; }

private:
    void advance();
    void restart(std::uint64_t seed);

    Scenario scenario_;
    Emit emit_;
    std::unique_ptr<Program> program_;
    std::unique_ptr<FileSink> sink_;
    SwarmState state_;
    bool paused_ = false;
    bool horizon_pause_ = true;  // the first arrival at the horizon pauses
    std::uint64_t seq_ = 0;
    std::int64_t steps_ = 0;  // since the last reset
    int period_;
    std::optional<std::size_t> stage_override_;
    std::string active_;
};

// Serves a SteeringSession over TCP on 127.0.0.1. One I/O worker owns the sockets,
// one stepper thread owns the session; they meet at two queues.
class Gateway {
public:
    // Port 0 binds an ephemeral port. Throws std::runtime_error if the port is busy.
    Gateway(Scenario scenario, int port);
    ~Gateway();
    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    [[nodiscard]] int port() const { return port_; }
    // Stops both workers, closes connections and commits the output files. Rethrows
    // a failure of the stepper, if any.
    void stop();
    // Blocks until a stop is requested or the stepper fails.
    void wait();
    // Async-signal-safe: only writes one byte to a pipe.
    void request_stop() const;
    [[nodiscard]] int stop_fd() const { return stop_[1]; }

private:
    struct Inbound {
        int client;
        std::string line;
        bool hello = false;  // a console just connected
    };
    struct Outbound {
        int client;
        std::string line;
    };

    void io_loop();
    void step_loop();
    void post(int client, std::string line);
    void mark_stop_requested();

    int listen_fd_ = -1;
    int wake_[2] = {-1, -1};  // wakes the I/O worker (outbound data, stop)
    int stop_[2] = {-1, -1};  // shutdown requests
    int port_ = 0;
    std::atomic<bool> stopping_{false};

    std::mutex wait_mu_;
    std::condition_variable wait_cv_;
    bool stop_requested_ = false;

    std::mutex in_mu_;
    std::condition_variable in_cv_;
    std::deque<Inbound> inbox_;

    std::mutex out_mu_;
    std::deque<Outbound> outbox_;

    std::unique_ptr<SteeringSession> session_;
    std::exception_ptr failure_;  // from the stepper
    std::thread io_, stepper_;
    std::mutex stop_mu_;
    bool stopped_ = false;
    double steps_per_second_;
};

}  // namespace wospp
