#include "deltaforge/geojson.hpp"

#include <fstream>

#include "deltaforge/error.hpp"

namespace deltaforge {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json position(Vec2 p) { return ordered_json::array({p.x, p.y}); }

ordered_json positions(std::span<const Vec2> pts) {
  ordered_json out = ordered_json::array();
  for (auto p : pts) out.push_back(position(p));
  return out;
}

Vec2 read_position(const json& j) {
  if (!j.is_array() || j.size() < 2) throw Error(ErrorCode::BadRequest, "position must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<Vec2> read_positions(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::BadRequest, "expected an array of positions");
  std::vector<Vec2> out;
  out.reserve(j.size());
  for (const auto& p : j) out.push_back(read_position(p));
  return out;
}

}  // namespace

ordered_json geometry_to_json(const Geometry& g) {
  ordered_json j;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Vec2>) {
          j["type"] = "Point";
          j["coordinates"] = position(v);
        } else if constexpr (std::is_same_v<T, LineString>) {
          j["type"] = "LineString";
          j["coordinates"] = positions(v);
        } else if constexpr (std::is_same_v<T, Polygon>) {
          j["type"] = "Polygon";
          ordered_json rings = ordered_json::array();
          rings.push_back(positions(v.exterior));
          for (const auto& h : v.holes) rings.push_back(positions(h));
          j["coordinates"] = std::move(rings);
        } else {
          j["type"] = "MultiLineString";
          ordered_json lines = ordered_json::array();
          for (const auto& l : v) lines.push_back(positions(l));
          j["coordinates"] = std::move(lines);
        }
      },
      g);
  return j;
}

Geometry geometry_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j.contains("coordinates")) {
    throw Error(ErrorCode::BadRequest, "geometry needs 'type' and 'coordinates'");
  }
  const auto type = j["type"].get<std::string>();
  const auto& c = j["coordinates"];
  if (type == "Point") return read_position(c);
  if (type == "LineString") return read_positions(c);
  if (type == "Polygon") {
    if (!c.is_array() || c.empty()) throw Error(ErrorCode::BadRequest, "polygon needs an exterior ring");
    Polygon p;
    p.exterior = read_positions(c[0]);
    for (std::size_t i = 1; i < c.size(); ++i) p.holes.push_back(read_positions(c[i]));
    return p;
  }
  if (type == "MultiLineString") {
    if (!c.is_array()) throw Error(ErrorCode::BadRequest, "expected an array of lines");
    MultiLineString m;
    for (const auto& l : c) m.push_back(read_positions(l));
    return m;
  }
  throw Error(ErrorCode::BadRequest, "unsupported geometry type '" + type + "'");
}

std::string geojson_document(std::span<const WorldFeature> features,
                             const std::map<int, std::string>& class_names) {
  ordered_json doc;
  doc["type"] = "FeatureCollection";
  doc["features"] = ordered_json::array();
  for (const auto& wf : features) {
    if (wf.frame != WorldFrame::LonLat) {
      throw Error(ErrorCode::NotGeoreferenced, "GeoJSON output needs lon/lat coordinates");
    }
    const auto& f = wf.feature;
    ordered_json feat;
    feat["type"] = "Feature";
    feat["id"] = f.id;
    feat["geometry"] = geometry_to_json(f.geometry);
    ordered_json props;
    auto name = class_names.find(f.class_id);
    props["class"] = name != class_names.end() ? name->second : std::to_string(f.class_id);
    props["class_id"] = f.class_id;
    props["kind"] = to_string(f.kind);
    props["stage"] = to_string(f.stage);
    props["version"] = f.version;
    feat["properties"] = std::move(props);
    doc["features"].push_back(std::move(feat));
  }
  return doc.dump();
}

void write_geojson(std::span<const WorldFeature> features, const std::map<int, std::string>& class_names,
                   const std::filesystem::path& path) {
  const std::string text = geojson_document(features, class_names);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

}  // namespace deltaforge
