#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace wospp {

// Invalid user-supplied configuration. The message names the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& key, const std::string& constraint)
        : std::runtime_error(key + ": " + constraint), key_(key) {}
    [[nodiscard]] const std::string& key() const { return key_; }

private:
    std::string key_;
};

// The initial layout could not be made connected within the attempt cap.
class InitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A file or socket could not be opened, written or moved into place.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Paradigm parameters. Lengths are in units of perception range, times in timesteps.
struct SimConfig {
    int n_agents = 2;
    double swarm_radius = 1.0;
    double perception_range = 1.0;
    int refractory_time = 10;
    int cycle_max = 100;
    std::optional<double> step_length;  // defaults to perception_range / 6
    int activate_delay = 1;
    double loss_probability = 0.0;
    double heading_noise_std = 0.0;
    std::uint64_t rng_seed = 1;
    int init_attempts = 10000;

    [[nodiscard]] double step() const { return step_length.value_or(perception_range / 6.0); }

    friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

// Throws ConfigError on the first violated invariant.
void validate(const SimConfig& config);

}  // namespace wospp
