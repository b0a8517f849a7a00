#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "duforge/taxonomy.hpp"

namespace duforge {

// Insertion-ordered JSON keeps emitted documents byte-stable.
using Json = nlohmann::ordered_json;

struct SpecParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Wire shape: {"type": "haze", "params": {"A": 0.8, "t": 0.45}}.
// cam is a nested 3x3 array; a transmission map is {"w", "h", "data"}.
inline Json spec_to_json(const DegradationSpec& spec) {
    Json params = Json::object();
    for (ParamKey k : required_keys(spec.type)) {
        auto it = spec.params.find(k);
        if (it == spec.params.end()) continue;
        if (const double* s = std::get_if<double>(&it->second)) {
            params[key_name(k)] = *s;
        } else if (const Mat3* m = std::get_if<Mat3>(&it->second)) {
            Json rows = Json::array();
            for (int r = 0; r < 3; ++r)
                rows.push_back({m->m[r * 3], m->m[r * 3 + 1], m->m[r * 3 + 2]});
            params[key_name(k)] = rows;
        } else if (const ParamMap* pm = std::get_if<ParamMap>(&it->second)) {
            Json obj = Json::object();
            obj["w"] = pm->width;
            obj["h"] = pm->height;
            obj["data"] = pm->data;
            params[key_name(k)] = obj;
        }
    }
    // Keys outside the schema still serialize (preserved for diagnostics).
    for (const auto& [k, v] : spec.params) {
        if (params.contains(key_name(k))) continue;
        if (const double* s = std::get_if<double>(&v)) params[key_name(k)] = *s;
    }
    return Json{{"type", type_name(spec.type)}, {"params", params}};
}

inline DegradationSpec spec_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("type") || !j.contains("params"))
        throw SpecParseError("spec document needs 'type' and 'params'");
    if (!j["type"].is_string())
        throw SpecParseError("spec 'type' must be a string");
    auto t = type_from_name(j["type"].get<std::string>());
    if (!t) throw SpecParseError("unknown degradation type: " + j["type"].get<std::string>());
    if (!j["params"].is_object())
        throw SpecParseError("spec 'params' must be an object");

    DegradationSpec spec;
    spec.type = *t;
    for (const auto& [name, val] : j["params"].items()) {
        auto k = key_from_name(name);
        if (!k) throw SpecParseError("unknown parameter key: " + name);
        if (val.is_number()) {
            spec.params[*k] = val.get<double>();
        } else if (val.is_array()) {
            if (val.size() != 3) throw SpecParseError("matrix parameter must be 3x3");
            Mat3 m;
            for (int r = 0; r < 3; ++r) {
                if (!val[r].is_array() || val[r].size() != 3)
                    throw SpecParseError("matrix parameter must be 3x3");
                for (int c = 0; c < 3; ++c) {
                    if (!val[r][c].is_number())
                        throw SpecParseError("matrix entries must be numbers");
                    m.m[r * 3 + c] = val[r][c].get<double>();
                }
            }
            spec.params[*k] = m;
        } else if (val.is_object()) {
            if (!val.contains("w") || !val.contains("h") || !val.contains("data"))
                throw SpecParseError("map parameter needs w, h, data");
            int w = val["w"].get<int>(), h = val["h"].get<int>();
            if (w <= 0 || h <= 0) throw SpecParseError("map parameter has bad dims");
            ParamMap pm(w, h);
            if (!val["data"].is_array() ||
                val["data"].size() != static_cast<size_t>(w) * h)
                throw SpecParseError("map data length mismatch");
            for (size_t i = 0; i < pm.data.size(); ++i)
                pm.data[i] = val["data"][i].get<double>();
            spec.params[*k] = pm;
        } else {
            throw SpecParseError("parameter " + name + " has unsupported JSON type");
        }
    }
    return spec;
}

inline DegradationSpec spec_from_string(const std::string& text) {
    Json j = Json::parse(text, nullptr, false);
    if (j.is_discarded()) throw SpecParseError("spec document is not valid JSON");
    return spec_from_json(j);
}

inline DegradationSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecParseError("cannot open spec file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return spec_from_string(ss.str());
}

inline void save_spec(const DegradationSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw SpecParseError("cannot open for writing: " + path);
    out << spec_to_json(spec).dump(2) << "\n";
}

} // namespace duforge
