#pragma once

#include <string>

#include <json.hpp>

#include "wospp/scenario.hpp"

namespace wospp::detail {

using nlohmann::json;

// Reads fields of one JSON object, remembering which keys were consumed so that
// leftovers can be rejected.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string prefix);

    [[nodiscard]] bool has(const char* key) const;
    const json& raw(const char* key);
    std::optional<std::int64_t> integer(const char* key, std::int64_t lo, std::int64_t hi);
    std::optional<std::uint64_t> unsigned_integer(const char* key);
    std::optional<double> number(const char* key);
    std::optional<std::string> string(const char* key);
    std::optional<bool> boolean(const char* key);
    [[nodiscard]] std::string path(const char* key) const;
    // Throws for the first key never read.
    void finish() const;

private:
    const json& obj_;
    std::string prefix_;
    std::vector<std::string> seen_;
};

const json& require_object(const json& j, const std::string& key);

ObjectStimulus stimulus_from_json(const json& j, const std::string& key);
json to_json(const ObjectStimulus& s);

PrimitiveSpec primitive_from_json(const json& name, const json* params, const std::string& key);
json params_to_json(const PrimitiveParams& p);

json scenario_to_json(const Scenario& s);

}  // namespace wospp::detail
