#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>

#include <json.hpp>

#include "deltaforge/geometry.hpp"
#include "deltaforge/world.hpp"

namespace deltaforge {

/// GeoJSON geometry object: Point, LineString, Polygon or MultiLineString.
nlohmann::ordered_json geometry_to_json(const Geometry& g);
Geometry geometry_from_json(const nlohmann::json& j);

/// RFC 7946 FeatureCollection. Features must already be in lon/lat
/// (NotGeoreferenced otherwise); polygon exteriors are written
/// counter-clockwise and holes clockwise. Properties carry class name,
/// stage and version.
std::string geojson_document(std::span<const WorldFeature> features,
                             const std::map<int, std::string>& class_names);
void write_geojson(std::span<const WorldFeature> features,
                   const std::map<int, std::string>& class_names, const std::filesystem::path& path);

}  // namespace deltaforge
