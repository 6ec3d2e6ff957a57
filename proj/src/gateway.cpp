#include "wospp/gateway.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <limits>
#include <map>
#include <stdexcept>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <fmt/format.h>

#include "scenario_json.hpp"
#include "wospp/log.hpp"
#include "wospp/metrics.hpp"

namespace wospp {

using detail::json;

namespace {

constexpr std::size_t kMaxLine = 1 << 20;
constexpr std::size_t kMaxBacklog = 64u << 20;  // per console, before it is dropped
constexpr std::int64_t kMaxStepN = 1'000'000;

// Rejects a command; the message goes back in the negative ack.
struct CommandError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json agent_json(const SwarmState& state, std::size_t i) {
    const auto& layer = state.primary();
    const auto& s = layer.scratch[i];
    json a{{"id", i},
           {"x", state.positions[i].x},
           {"y", state.positions[i].y},
           {"state", std::string(to_string(layer.cores[i].state))},
           {"candidate", s.candidate},
           {"leader", s.leader},
           {"periphery", s.periphery}};
    if (s.estimate_bearing)
        a["estimate"] = json::array({s.estimate_bearing->x, s.estimate_bearing->y});
    else
        a["estimate"] = nullptr;
    return a;
}

int channel_arg(detail::ObjectReader& r, const SwarmState& state) {
    const auto ch = r.integer("channel", std::numeric_limits<int>::min(), std::numeric_limits<int>::max());
    if (!ch) return state.primary().channel;
    for (const auto& l : state.layers)
        if (l.channel == *ch) return l.channel;
    throw CommandError(fmt::format("payload.channel: no layer {}", *ch));
}

void set_nonblocking(int fd) {
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

void drain(int fd) {
    char buf[256];
    while (::read(fd, buf, sizeof buf) > 0) {
    }
}

void make_pipe(int fds[2]) {
    if (::pipe(fds) != 0) throw std::runtime_error(fmt::format("pipe: {}", std::strerror(errno)));
    set_nonblocking(fds[0]);
    set_nonblocking(fds[1]);
}

void close_fd(int& fd) {
    if (fd >= 0) ::close(fd);
    fd = -1;
}

}  // namespace

SteeringSession::SteeringSession(Scenario scenario, Emit emit)
    : scenario_(std::move(scenario)), emit_(std::move(emit)), period_(scenario_.outputs.snapshot_period) {
    validate_scenario(scenario_);
    program_ = std::make_unique<Program>(scenario_);
    std::vector<std::string> notes;
    state_ = program_->init(&notes);
    sink_ = std::make_unique<FileSink>(scenario_, scenario_.outputs.trace, scenario_.outputs.metrics);
    program_->begin(state_, sink_.get(), notes);
    sink_->begin(state_);
    if (program_->horizon() == 0) paused_ = true;
}

void SteeringSession::advance() {
    program_->advance(state_, sink_.get());
    ++steps_;
    if (state_.timestep % period_ == 0) send_snapshot();
}

bool SteeringSession::tick() {
    if (paused_) return false;
    advance();
    if (horizon_pause_ && steps_ >= program_->horizon()) {
        paused_ = true;
        horizon_pause_ = false;
        log().info("horizon {} reached; paused", program_->horizon());
        send_snapshot();
    }
    return true;
}

void SteeringSession::finish() { sink_->commit(); }

std::string SteeringSession::snapshot_line() {
    const auto& layer = state_.primary();
    json m;
    if (auto dp = delta_phi_max(layer))
        m["delta_phi_max"] = *dp;
    else
        m["delta_phi_max"] = nullptr;
    m["rms_to_centroid"] = rms_to_centroid(state_.positions);
    m["candidate_count"] = candidate_count(layer.scratch);
    m["n_est_mean"] = n_est_stats(layer.scratch).mean;

    json layers = json::array();
    for (const auto& l : state_.layers)
        layers.push_back({{"channel", l.channel}, {"primitive", std::string(to_string(l.binding.id))}});

    json agents = json::array();
    for (std::size_t i = 0; i < state_.size(); ++i) agents.push_back(agent_json(state_, i));

    json snap{{"v", kWireVersion},
              {"type", "snapshot"},
              {"seq", ++seq_},
              {"timestep", state_.timestep},
              {"paused", paused_},
              {"active_binding", std::string(to_string(layer.binding.id))},
              {"metrics", m},
              {"layers", layers},
              {"agents", agents}};
    if (program_->following_schedule() && !program_->stages().empty())
        snap["stage"] = program_->stages().back().index;
    else
        snap["stage"] = nullptr;
    snap["stimulus"] = state_.stimulus ? detail::to_json(*state_.stimulus) : json(nullptr);
    return snap.dump();
}

void SteeringSession::send_snapshot(int client) { emit_(client, snapshot_line()); }

void SteeringSession::restart(std::uint64_t seed) {
    Scenario next = scenario_;
    next.sim.rng_seed = seed;
    auto program = std::make_unique<Program>(next);
    std::vector<std::string> notes;
    SwarmState state = program->init(&notes);  // throws before anything changes

    sink_->on_note(state_.timestep, fmt::format("reset seed {}", seed));
    program_ = std::move(program);
    state_ = std::move(state);
    scenario_ = std::move(next);
    program_->begin(state_, sink_.get(), notes);
    sink_->begin(state_);
    steps_ = 0;
    horizon_pause_ = true;
}

void SteeringSession::apply(std::string_view line, int client) {
    json request_id = nullptr;
    std::string kind;
    const std::int64_t at = state_.timestep;
    json ack{{"v", kWireVersion}, {"type", "ack"}};
    bool changed = false;
    try {
        json cmd;
        try {
            cmd = json::parse(line);
        } catch (const json::parse_error& e) {
            throw CommandError(fmt::format("not JSON: {}", e.what()));
        }
        if (!cmd.is_object()) throw CommandError("command must be a JSON object");
        if (cmd.contains("request_id")) request_id = cmd["request_id"];
        detail::ObjectReader r(cmd, "");
        const auto v = r.integer("v", std::numeric_limits<int>::min(), std::numeric_limits<int>::max());
        if (!v || *v != kWireVersion) throw CommandError(fmt::format("v must be {}", kWireVersion));
        if (!r.has("request_id")) throw CommandError("request_id required");
        (void)r.raw("request_id");
        const auto k = r.string("kind");
        if (!k) throw CommandError("kind required");
        kind = *k;
        static const json empty = json::object();
        const json& payload = r.has("payload") ? r.raw("payload") : empty;
        r.finish();
        detail::ObjectReader p(detail::require_object(payload, "payload"), "payload");

        if (kind == "pause") {
            p.finish();
            paused_ = true;
            changed = true;
        } else if (kind == "resume") {
            p.finish();
            paused_ = false;
            changed = true;
        } else if (kind == "step_n") {
            const auto n = p.integer("n", 1, kMaxStepN);
            if (!n) throw ConfigError("payload.n", "required");
            p.finish();
            if (!paused_) throw CommandError("step_n needs a paused simulation");
            for (std::int64_t i = 0; i < *n; ++i) advance();
            ack["steps"] = *n;
            changed = true;
        } else if (kind == "set_primitive") {
            if (!p.has("primitive")) throw ConfigError("payload.primitive", "required");
            PrimitiveSpec spec = detail::primitive_from_json(
                p.raw("primitive"), p.has("params") ? &p.raw("params") : nullptr, "payload.primitive");
            CarryoverSet carry;
            if (p.has("carryover")) {
                const json& c = p.raw("carryover");
                if (!c.is_array()) throw ConfigError("payload.carryover", "must be an array of field names");
                for (const auto& f : c) {
                    const auto field = f.is_string() ? scratch_field_from_string(f.get<std::string>()) : std::nullopt;
                    if (!field) throw ConfigError("payload.carryover", fmt::format("unknown field {}", f.dump()));
                    if (std::find(carry.begin(), carry.end(), *field) == carry.end()) carry.push_back(*field);
                }
            }
            const int ch = channel_arg(p, state_);
            p.finish();
            PrimitiveBinding binding = make_binding(spec);
            if (requires_stimulus(spec.id) && !binding.stimulus && !state_.stimulus)
                throw CommandError(fmt::format("{} needs a stimulus; place one first", to_string(spec.id)));
            program_->abandon_schedule();
            std::vector<std::string> notes;
            bind_layer(state_, state_.layer(ch), std::move(binding), carry, &notes);
            sink_->on_note(at, fmt::format("set_primitive {} channel {}", to_string(spec.id), ch));
            for (const auto& n : notes) sink_->on_note(at, n);
            changed = true;
        } else if (kind == "set_param") {
            const auto name = p.string("name");
            if (!name) throw ConfigError("payload.name", "required");
            if (!p.has("value")) throw ConfigError("payload.value", "required");
            if (*name == "loss_probability") {
                const auto value = p.number("value");
                if (!value || !(*value >= 0.0 && *value <= 1.0))
                    throw ConfigError("payload.value", "loss_probability must lie in [0, 1]");
                const int ch = channel_arg(p, state_);
                p.finish();
                state_.layer(ch).params.loss_probability = *value;
            } else if (*name == "cycle_max" || *name == "refractory_time" || *name == "snapshot_period") {
                const auto value = p.integer("value", 1, std::numeric_limits<int>::max());
                if (!value) throw ConfigError("payload.value", "required");
                const int ch = channel_arg(p, state_);
                p.finish();
                const int iv = static_cast<int>(*value);
                if (*name == "cycle_max")
                    state_.layer(ch).params.cycle_max = iv;
                else if (*name == "refractory_time")
                    state_.layer(ch).params.refractory_time = iv;
                else
                    period_ = iv;
            } else {
                throw CommandError(fmt::format(
                    "set_param: '{}' is not live-tunable (cycle_max, refractory_time, loss_probability, snapshot_period)",
                    *name));
            }
            changed = true;
        } else if (kind == "place_stimulus") {
            const ObjectStimulus s = detail::stimulus_from_json(payload, "payload");
            state_.stimulus = s;
            // The placed object supersedes any per-binding one.
            for (auto& l : state_.layers) l.binding.stimulus.reset();
            sink_->on_note(at, fmt::format("place_stimulus {} {} {}", format_number(s.position.x),
                                           format_number(s.position.y), format_number(s.detection_radius)));
            changed = true;
        } else if (kind == "reset") {
            const auto seed = p.unsigned_integer("seed");
            p.finish();
            try {
                restart(seed.value_or(scenario_.sim.rng_seed + 1));
            } catch (const InitError& e) {
                throw CommandError(e.what());
            }
            ack["seed"] = scenario_.sim.rng_seed;
            changed = true;
        } else {
            throw CommandError(fmt::format("unknown kind '{}'", kind));
        }
        ack["ok"] = true;
        ack["applied_at"] = at;
    } catch (const CommandError& e) {
        ack["ok"] = false;
        ack["error"] = e.what();
    } catch (const ConfigError& e) {
        ack["ok"] = false;
        ack["error"] = e.what();
    }
    ack["request_id"] = request_id;
    if (!kind.empty()) ack["kind"] = kind;
    emit_(client, ack.dump());
    if (changed) send_snapshot();
}

Gateway::Gateway(Scenario scenario, int port) : steps_per_second_(scenario.live.steps_per_second) {
    if (port < 0 || port > 65535) throw ConfigError("port", "must lie in [0, 65535]");
    session_ = std::make_unique<SteeringSession>(std::move(scenario),
                                                 [this](int c, std::string l) { post(c, std::move(l)); });

    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw IoError(fmt::format("socket: {}", std::strerror(errno)));
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
        ::listen(listen_fd_, 16) != 0) {
        const std::string why = std::strerror(errno);
        close_fd(listen_fd_);
        throw IoError(fmt::format("cannot listen on 127.0.0.1:{}: {}", port, why));
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    set_nonblocking(listen_fd_);
    make_pipe(wake_);
    make_pipe(stop_);

    io_ = std::thread([this] { io_loop(); });
    stepper_ = std::thread([this] { step_loop(); });
    log().info("steering gateway listening on 127.0.0.1:{}", port_);
}

Gateway::~Gateway() {
    try {
        stop();
    } catch (const std::exception& e) {
        log().error("gateway: {}", e.what());
    }
    close_fd(listen_fd_);
    close_fd(wake_[0]);
    close_fd(wake_[1]);
    close_fd(stop_[0]);
    close_fd(stop_[1]);
}

void Gateway::post(int client, std::string line) {
    {
        std::lock_guard lk(out_mu_);
        outbox_.push_back({client, std::move(line)});
    }
    const char b = 'o';
    [[maybe_unused]] auto n = ::write(wake_[1], &b, 1);
}

void Gateway::request_stop() const {
    const char b = 's';
    [[maybe_unused]] auto n = ::write(stop_[1], &b, 1);
}

void Gateway::mark_stop_requested() {
    {
        std::lock_guard lk(wait_mu_);
        stop_requested_ = true;
    }
    wait_cv_.notify_all();
}

void Gateway::wait() {
    std::unique_lock lk(wait_mu_);
    wait_cv_.wait(lk, [this] { return stop_requested_; });
}

void Gateway::stop() {
    std::lock_guard lk(stop_mu_);
    if (stopped_) return;
    stopped_ = true;
    stopping_ = true;
    in_cv_.notify_all();
    post(-1, {});  // wakes the I/O worker; the empty line is never sent
    if (stepper_.joinable()) stepper_.join();
    if (io_.joinable()) io_.join();
    mark_stop_requested();
    if (failure_) std::rethrow_exception(failure_);
    session_->finish();
}

void Gateway::step_loop() {
    using clock = std::chrono::steady_clock;
    const auto interval = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(1.0 / steps_per_second_));
    auto next = clock::now();
    try {
        while (!stopping_) {
            std::deque<Inbound> batch;
            {
                std::unique_lock lk(in_mu_);
                auto ready = [this] { return stopping_ || !inbox_.empty(); };
                if (session_->paused())
                    in_cv_.wait(lk, ready);
                else
                    in_cv_.wait_until(lk, next, ready);
                batch.swap(inbox_);
            }
            if (stopping_) break;
            // Commands land between two steps, never inside one.
            for (auto& in : batch) {
                if (in.hello)
                    session_->send_snapshot(in.client);
                else
                    session_->apply(in.line, in.client);
            }
            const auto now = clock::now();
            if (!session_->paused() && now >= next) {
                session_->tick();
                next += interval;
                if (next < now) next = now;
            }
        }
    } catch (...) {
        failure_ = std::current_exception();
        log().error("simulation stopped on an error");
        mark_stop_requested();
    }
}

void Gateway::io_loop() {
    struct Client {
        int fd;
        std::string in, out;
    };
    std::map<int, Client> clients;  // by id
    int next_id = 0;

    auto push_in = [this](Inbound msg) {
        {
            std::lock_guard lk(in_mu_);
            inbox_.push_back(std::move(msg));
        }
        in_cv_.notify_one();
    };
    auto drop = [&](std::map<int, Client>::iterator it) {
        ::close(it->second.fd);
        return clients.erase(it);
    };

    while (!stopping_) {
        std::vector<pollfd> fds;
        fds.push_back({listen_fd_, POLLIN, 0});
        fds.push_back({wake_[0], POLLIN, 0});
        fds.push_back({stop_[0], POLLIN, 0});
        std::vector<int> ids;
        for (auto& [id, c] : clients) {
            fds.push_back({c.fd, static_cast<short>(POLLIN | (c.out.empty() ? 0 : POLLOUT)), 0});
            ids.push_back(id);
        }
        if (::poll(fds.data(), fds.size(), -1) < 0) {
            if (errno == EINTR) continue;
            log().error("poll: {}", std::strerror(errno));
            break;
        }
        if (stopping_) break;

        if (fds[2].revents & POLLIN) {
            drain(stop_[0]);
            mark_stop_requested();
        }
        if (fds[1].revents & POLLIN) {
            drain(wake_[0]);
            std::deque<Outbound> out;
            {
                std::lock_guard lk(out_mu_);
                out.swap(outbox_);
            }
            for (auto& m : out) {
                if (m.line.empty()) continue;
                for (auto& [id, c] : clients)
                    if (m.client < 0 || m.client == id) {
                        c.out += m.line;
                        c.out += '\n';
                    }
            }
        }
        if (fds[0].revents & POLLIN) {
            for (;;) {
                const int fd = ::accept(listen_fd_, nullptr, nullptr);
                if (fd < 0) break;
                set_nonblocking(fd);
                const int id = next_id++;
                clients[id] = Client{fd, {}, {}};
                log().info("console {} connected", id);
                push_in({id, {}, true});
            }
        }
        for (std::size_t k = 0; k < ids.size(); ++k) {
            auto it = clients.find(ids[k]);
            if (it == clients.end()) continue;
            Client& c = it->second;
            const short ev = fds[3 + k].revents;
            bool dead = (ev & (POLLERR | POLLNVAL)) != 0;
            if (!dead && (ev & (POLLIN | POLLHUP))) {
                char buf[4096];
                for (;;) {
                    const auto n = ::recv(c.fd, buf, sizeof buf, 0);
                    if (n > 0) {
                        c.in.append(buf, static_cast<std::size_t>(n));
                        continue;
                    }
                    if (n == 0 || (errno != EAGAIN && errno != EWOULDBLOCK)) dead = true;
                    break;
                }
                std::size_t start = 0;
                for (std::size_t nl; (nl = c.in.find('\n', start)) != std::string::npos; start = nl + 1) {
                    std::string line = c.in.substr(start, nl - start);
                    if (!line.empty() && line.back() == '\r') line.pop_back();
                    if (!line.empty()) push_in({ids[k], std::move(line)});
                }
                c.in.erase(0, start);
                if (c.in.size() > kMaxLine) {
                    log().warn("console {} sent an oversized line; dropped", ids[k]);
                    dead = true;
                }
            }
            if (!dead && !c.out.empty()) {
                const auto n = ::send(c.fd, c.out.data(), c.out.size(), MSG_NOSIGNAL);
                if (n > 0)
                    c.out.erase(0, static_cast<std::size_t>(n));
                else if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK)
                    dead = true;
                if (c.out.size() > kMaxBacklog) {
                    log().warn("console {} is not reading; dropped", ids[k]);
                    dead = true;
                }
            }
            if (dead) {
                log().info("console {} disconnected", ids[k]);
                drop(it);
            }
        }
    }
    for (auto it = clients.begin(); it != clients.end();) it = drop(it);
}

}  // namespace wospp
