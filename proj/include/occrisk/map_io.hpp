#pragma once

// Intersection documents (JSON).
//
//   {
//     "meta":      {"name": "...", "origin": {"latitude": 42.28, "longitude": -83.74}},
//     "lanes":     [{"id": "S_in", "waypoints": [[x, y], ...], "v_min": 0, "v_max": 12, "width": 3.5}],
//     "routes":    [{"id": "S_left", "lane_ids": ["S_in", "S_in:W_out", "W_out"], "stopline_s": 60}],
//     "buildings": [{"id": "b0", "vertices": [[x, y], ...]}]
//   }
//
// Lengths in metres, speeds in m/s, coordinates in a local planar frame.
// "meta", "origin", "stopline_s" and building "id" are optional.

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <json.hpp>

#include "occrisk/error.hpp"
#include "occrisk/scene.hpp"

namespace occrisk {

using Json = nlohmann::json;

namespace detail {

inline Vec2 parse_point(const Json& j, const std::string& entity) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw LoadError("schema: point must be [x, y] in " + entity, entity);
    return {j[0].get<double>(), j[1].get<double>()};
}

inline std::vector<Vec2> parse_points(const Json& j, const char* key, const std::string& entity) {
    if (!j.contains(key) || !j[key].is_array())
        throw LoadError(std::string("schema: missing array '") + key + "' in " + entity, entity);
    std::vector<Vec2> pts;
    for (const auto& p : j[key]) pts.push_back(parse_point(p, entity));
    return pts;
}

inline double get_number(const Json& j, const char* key, const std::string& entity) {
    if (!j.contains(key) || !j[key].is_number())
        throw LoadError(std::string("schema: missing number '") + key + "' in " + entity, entity);
    return j[key].get<double>();
}

inline std::string get_id(const Json& j, const std::string& fallback) {
    if (!j.is_object()) throw LoadError("schema: expected an object for " + fallback, fallback);
    if (!j.contains("id")) return {};
    if (!j["id"].is_string()) throw LoadError("schema: id must be a string in " + fallback, fallback);
    return j["id"].get<std::string>();
}

inline Json point_json(Vec2 p) { return Json::array({p.x, p.y}); }

}  // namespace detail

/// Schema-level parse. Map invariants are checked by IntersectionMap::build.
inline MapSpec parse_map_document(const Json& doc) {
    if (!doc.is_object()) throw LoadError("schema: document must be an object", "document");
    for (const char* key : {"lanes", "routes"})
        if (!doc.contains(key) || !doc[key].is_array())
            throw LoadError(std::string("schema: missing array '") + key + "'", key);
    MapSpec spec;
    if (doc.contains("meta")) {
        const auto& m = doc["meta"];
        if (!m.is_object()) throw LoadError("schema: meta must be an object", "meta");
        if (m.contains("name")) {
            if (!m["name"].is_string()) throw LoadError("schema: meta.name must be a string", "meta");
            spec.meta.name = m["name"].get<std::string>();
        }
        if (m.contains("origin")) {
            const auto& o = m["origin"];
            if (!o.is_object()) throw LoadError("schema: meta.origin must be an object", "meta");
            if (o.contains("latitude")) spec.meta.origin_lat = detail::get_number(o, "latitude", "meta");
            if (o.contains("longitude")) spec.meta.origin_lon = detail::get_number(o, "longitude", "meta");
        }
    }
    std::size_t i = 0;
    for (const auto& l : doc["lanes"]) {
        const std::string fallback = "lanes[" + std::to_string(i++) + "]";
        LaneSpec ls;
        ls.id = detail::get_id(l, fallback);
        if (ls.id.empty()) throw LoadError("schema: lane without id", fallback);
        ls.waypoints = detail::parse_points(l, "waypoints", ls.id);
        ls.v_min = detail::get_number(l, "v_min", ls.id);
        ls.v_max = detail::get_number(l, "v_max", ls.id);
        ls.width = detail::get_number(l, "width", ls.id);
        spec.lanes.push_back(std::move(ls));
    }
    i = 0;
    for (const auto& r : doc["routes"]) {
        const std::string fallback = "routes[" + std::to_string(i++) + "]";
        RouteSpec rs;
        rs.id = detail::get_id(r, fallback);
        if (rs.id.empty()) throw LoadError("schema: route without id", fallback);
        if (!r.contains("lane_ids") || !r["lane_ids"].is_array())
            throw LoadError("schema: missing array 'lane_ids' in " + rs.id, rs.id);
        for (const auto& id : r["lane_ids"]) {
            if (!id.is_string()) throw LoadError("schema: lane id must be a string in " + rs.id, rs.id);
            rs.lane_ids.push_back(id.get<std::string>());
        }
        if (r.contains("stopline_s")) rs.stopline_s = detail::get_number(r, "stopline_s", rs.id);
        spec.routes.push_back(std::move(rs));
    }
    if (doc.contains("buildings")) {
        if (!doc["buildings"].is_array()) throw LoadError("schema: buildings must be an array", "buildings");
        i = 0;
        for (const auto& b : doc["buildings"]) {
            const std::string fallback = "building[" + std::to_string(i++) + "]";
            BuildingSpec bs;
            bs.id = detail::get_id(b, fallback);
            bs.vertices = detail::parse_points(b, "vertices", bs.id.empty() ? fallback : bs.id);
            spec.buildings.push_back(std::move(bs));
        }
    }
    return spec;
}

inline Json to_json(const MapSpec& spec) {
    Json doc;
    Json meta = {{"name", spec.meta.name}};
    if (spec.meta.origin_lat || spec.meta.origin_lon) {
        Json origin = Json::object();
        if (spec.meta.origin_lat) origin["latitude"] = *spec.meta.origin_lat;
        if (spec.meta.origin_lon) origin["longitude"] = *spec.meta.origin_lon;
        meta["origin"] = origin;
    }
    doc["meta"] = meta;
    doc["lanes"] = Json::array();
    for (const auto& l : spec.lanes) {
        Json pts = Json::array();
        for (Vec2 p : l.waypoints) pts.push_back(detail::point_json(p));
        doc["lanes"].push_back(
            {{"id", l.id}, {"waypoints", pts}, {"v_min", l.v_min}, {"v_max", l.v_max}, {"width", l.width}});
    }
    doc["routes"] = Json::array();
    for (const auto& r : spec.routes) {
        Json jr = {{"id", r.id}, {"lane_ids", r.lane_ids}};
        if (r.stopline_s) jr["stopline_s"] = *r.stopline_s;
        doc["routes"].push_back(jr);
    }
    doc["buildings"] = Json::array();
    for (const auto& b : spec.buildings) {
        Json pts = Json::array();
        for (Vec2 p : b.vertices) pts.push_back(detail::point_json(p));
        Json jb = {{"vertices", pts}};
        if (!b.id.empty()) jb["id"] = b.id;
        doc["buildings"].push_back(jb);
    }
    return doc;
}

inline std::string serialize_map(const IntersectionMap& map) { return to_json(map.spec()).dump(2); }

inline Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot read " + path.string(), path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw LoadError(std::string("schema: malformed document: ") + e.what(), path.string());
    }
}

inline std::shared_ptr<const IntersectionMap> load_intersection(const Json& doc) {
    return make_map(parse_map_document(doc));
}

inline std::shared_ptr<const IntersectionMap> load_intersection_text(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw LoadError(std::string("schema: malformed document: ") + e.what(), "document");
    }
    return load_intersection(doc);
}

/// Loads a map file. Unnamed maps take the file stem as their name.
inline std::shared_ptr<const IntersectionMap> load_intersection_file(const std::filesystem::path& path) {
    MapSpec spec = parse_map_document(read_json_file(path));
    if (spec.meta.name.empty()) spec.meta.name = path.stem().string();
    return make_map(spec);
}

}  // namespace occrisk
