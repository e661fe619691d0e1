#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "deltaforge/world.hpp"

namespace deltaforge {

using OsmTag = std::pair<std::string, std::string>;
using OsmTags = std::vector<OsmTag>;

/// Class name -> OSM tags. Polygons and points look up the plain class name;
/// line and skeleton features look up "<name>:line" and are unmapped
/// without it. A "<name>:point" entry overrides the plain one for points.
class TagMap {
 public:
  TagMap() = default;
  explicit TagMap(std::map<std::string, OsmTags> entries);

  const OsmTags* find(std::string_view class_name, FeatureKind kind) const;
  const std::map<std::string, OsmTags>& entries() const { return entries_; }

 private:
  std::map<std::string, OsmTags> entries_;
};

TagMap default_tagmap();
/// {"water": ["natural=water"], "water:line": ["waterway=stream"], ...}
TagMap tagmap_from_json(const nlohmann::json& j);
nlohmann::json tagmap_to_json(const TagMap& tags);
TagMap read_tagmap(const std::filesystem::path& path);

struct OsmNode {
  std::int64_t id = 0;
  std::int64_t lat_e7 = 0;  // degrees * 1e7
  std::int64_t lon_e7 = 0;
  OsmTags tags;
  bool operator==(const OsmNode&) const = default;
};

struct OsmWay {
  std::int64_t id = 0;
  std::vector<std::int64_t> refs;
  OsmTags tags;
  bool operator==(const OsmWay&) const = default;
};

struct OsmMember {
  std::string type;
  std::int64_t ref = 0;
  std::string role;
  bool operator==(const OsmMember&) const = default;
};

struct OsmRelation {
  std::int64_t id = 0;
  std::vector<OsmMember> members;
  OsmTags tags;
  bool operator==(const OsmRelation&) const = default;
};

struct OsmDocument {
  std::vector<OsmNode> nodes;
  std::vector<OsmWay> ways;
  std::vector<OsmRelation> relations;
  bool empty() const { return nodes.empty() && ways.empty() && relations.empty(); }
  bool operator==(const OsmDocument&) const = default;
};

inline constexpr std::size_t kMaxWayNodes = 2000;

struct OsmBuildOptions {
  bool include_points = false;
};

/// Features must be in lon/lat. Ids count down from -1 per entity type in
/// feature order, then geometry order.
OsmDocument build_osm_doc(std::span<const WorldFeature> features,
                          const std::map<int, std::string>& class_names, const TagMap& tags,
                          OsmBuildOptions options = {});

std::string osm_xml(const OsmDocument& doc);
void write_osm_xml(const OsmDocument& doc, const std::filesystem::path& path);

/// Parses the subset of OSM XML 0.6 that osm_xml() emits.
OsmDocument parse_osm_xml(std::string_view text);

struct OsmLintReport {
  std::vector<std::string> problems;
  std::size_t nodes = 0, ways = 0, relations = 0;
  bool ok() const { return problems.empty(); }
};

/// Structural checks on a serialized file: root attributes, negative unique
/// ids, way and member references resolve, way length limit, closed ways in
/// multipolygons, no two nodes at the same quantized position.
OsmLintReport lint_osm_xml(std::string_view text);

}  // namespace deltaforge
