#pragma once

// Shared JSON conversions for report structs (internal to the library).

#include <json.hpp>

#include "ccsp/metrics.hpp"

namespace ccsp::detail {

inline nlohmann::json metrics_to_json(const MetricsReport& r) {
    nlohmann::json j;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["map50"] = r.map50;
    j["map75"] = r.map75;
    j["fps"] = r.fps;
    j["wall_clock"] = true;
    j["parameter_count"] = r.parameter_count;
    nlohmann::json pca = nlohmann::json::object();
    for (const auto& [cls, ap] : r.per_class_ap) pca[std::to_string(cls)] = ap;
    j["per_class_ap"] = pca;
    return j;
}

inline MetricsReport metrics_from_json(const nlohmann::json& j) {
    MetricsReport r;
    r.precision = j.at("precision").get<double>();
    r.recall = j.at("recall").get<double>();
    r.map50 = j.at("map50").get<double>();
    r.map75 = j.at("map75").get<double>();
    r.fps = j.at("fps").get<double>();
    r.parameter_count = j.at("parameter_count").get<int64_t>();
    for (const auto& [key, value] : j.at("per_class_ap").items()) {
        r.per_class_ap[std::stoi(key)] = value.get<double>();
    }
    return r;
}

}  // namespace ccsp::detail
