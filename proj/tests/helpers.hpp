#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "wospp/engine.hpp"

namespace testutil {

inline wospp::SimConfig config(int refractory = 5, int cycle_max = 100) {
    wospp::SimConfig c;
    c.refractory_time = refractory;
    c.cycle_max = cycle_max;
    return c;
}

inline std::vector<wospp::Vec2> line(int n, double spacing) {
    std::vector<wospp::Vec2> p;
    for (int i = 0; i < n; ++i) p.push_back({spacing * i, 0.0});
    return p;
}

// Explicit timers; std::nullopt deactivates.
inline void set_timers(wospp::Layer& layer, const std::vector<std::optional<int>>& timers) {
    for (std::size_t i = 0; i < timers.size(); ++i) layer.cores[i].timer = timers[i];
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Fresh scratch directory under the system temp dir, removed on scope exit.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("wospp_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    [[nodiscard]] std::string file(const std::string& name) const { return (path / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

}  // namespace testutil
