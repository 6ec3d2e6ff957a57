#include "wospp/log.hpp"

#include <cstdlib>
#include <memory>
#include <string_view>

#include <spdlog/sinks/stdout_sinks.h>

namespace wospp {

namespace {

spdlog::level::level_enum level_from_env() {
    const char* v = std::getenv("WOSPP_LOG");
    if (!v) return spdlog::level::warn;
    const std::string_view s{v};
    if (s == "error") return spdlog::level::err;
    if (s == "info") return spdlog::level::info;
    if (s == "debug") return spdlog::level::debug;
    return spdlog::level::warn;
}

}  // namespace

spdlog::logger& log() {
    static const std::shared_ptr<spdlog::logger> logger = [] {
        auto l = std::make_shared<spdlog::logger>(
            "wospp", std::make_shared<spdlog::sinks::stderr_sink_mt>());
        l->set_level(level_from_env());
        l->set_pattern("[wospp] [%l] %v");
        return l;
    }();
    return *logger;
}

}  // namespace wospp
