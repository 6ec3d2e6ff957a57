#include "wospp/config.hpp"

#include <cmath>

namespace wospp {

void validate(const SimConfig& c) {
    if (c.n_agents < 2) throw ConfigError("n_agents", "must be >= 2");
    if (!(c.swarm_radius > 0.0) || !std::isfinite(c.swarm_radius))
        throw ConfigError("swarm_radius", "must be a finite length > 0");
    if (!(c.perception_range > 0.0) || !std::isfinite(c.perception_range))
        throw ConfigError("perception_range", "must be a finite length > 0");
    if (c.refractory_time < 1) throw ConfigError("refractory_time", "must be >= 1");
    if (c.cycle_max < 1) throw ConfigError("cycle_max", "must be >= 1");
    if (c.step_length && (!(*c.step_length > 0.0) || !std::isfinite(*c.step_length)))
        throw ConfigError("step_length", "must be a finite length > 0");
    if (c.activate_delay != 1) throw ConfigError("activate_delay", "is fixed at 1 timestep");
    if (!(c.loss_probability >= 0.0 && c.loss_probability <= 1.0))
        throw ConfigError("loss_probability", "must lie in [0, 1]");
    if (!(c.heading_noise_std >= 0.0) || !std::isfinite(c.heading_noise_std))
        throw ConfigError("heading_noise_std", "must be >= 0");
    if (c.init_attempts < 1) throw ConfigError("init_attempts", "must be >= 1");
}

}  // namespace wospp
