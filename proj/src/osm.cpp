#include "deltaforge/osm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "deltaforge/error.hpp"

namespace deltaforge {

using nlohmann::json;
namespace pt = boost::property_tree;

TagMap::TagMap(std::map<std::string, OsmTags> entries) : entries_(std::move(entries)) {
  for (const auto& [name, tags] : entries_) {
    if (tags.empty()) throw Error(ErrorCode::UnmappedClass, "tagmap entry '" + name + "' has no tags");
    for (const auto& [k, v] : tags) {
      if (k.empty() || v.empty()) throw Error(ErrorCode::UnmappedClass, "empty key or value in tagmap entry '" + name + "'");
    }
  }
}

const OsmTags* TagMap::find(std::string_view class_name, FeatureKind kind) const {
  auto lookup = [&](const std::string& key) -> const OsmTags* {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  };
  const std::string name(class_name);
  switch (kind) {
    case FeatureKind::Line:
    case FeatureKind::Skeleton:
      return lookup(name + ":line");
    case FeatureKind::Point:
      if (const auto* t = lookup(name + ":point")) return t;
      return lookup(name);
    case FeatureKind::Polygon:
      return lookup(name);
  }
  return nullptr;
}

TagMap default_tagmap() {
  return TagMap({
      {"water", {{"natural", "water"}}},
      {"vegetation", {{"natural", "wood"}}},
      {"grass", {{"natural", "grassland"}}},
      {"soil", {{"natural", "bare_rock"}}},
      {"water:line", {{"waterway", "stream"}}},
  });
}

TagMap tagmap_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::BadRequest, "tagmap must be a JSON object");
  std::map<std::string, OsmTags> entries;
  for (const auto& [name, list] : j.items()) {
    if (!list.is_array()) throw Error(ErrorCode::BadRequest, "tagmap entry '" + name + "' must be a list");
    OsmTags tags;
    for (const auto& item : list) {
      const auto s = item.get<std::string>();
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::BadRequest, "tag '" + s + "' is not key=value");
      tags.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    entries[name] = std::move(tags);
  }
  return TagMap(std::move(entries));
}

json tagmap_to_json(const TagMap& tags) {
  json j = json::object();
  for (const auto& [name, list] : tags.entries()) {
    json arr = json::array();
    for (const auto& [k, v] : list) arr.push_back(k + "=" + v);
    j[name] = std::move(arr);
  }
  return j;
}

TagMap read_tagmap(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open tagmap " + path.string());
  try {
    return tagmap_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadRequest, path.string() + ": " + e.what());
  }
}

namespace {

class DocBuilder {
 public:
  OsmDocument doc;

  std::int64_t node(Vec2 lonlat) {
    const std::int64_t lat = std::llround(lonlat.y * 1e7);
    const std::int64_t lon = std::llround(lonlat.x * 1e7);
    auto [it, fresh] = node_ids_.try_emplace({lat, lon}, 0);
    if (fresh) {
      it->second = -static_cast<std::int64_t>(doc.nodes.size() + 1);
      doc.nodes.push_back({it->second, lat, lon, {}});
    }
    return it->second;
  }

  OsmNode& node_ref(std::int64_t id) { return doc.nodes[static_cast<std::size_t>(-id - 1)]; }

  std::vector<std::int64_t> refs(std::span<const Vec2> pts) {
    std::vector<std::int64_t> out;
    out.reserve(pts.size());
    for (auto p : pts) {
      const auto id = node(p);
      if (out.empty() || out.back() != id) out.push_back(id);
    }
    return out;
  }

  /// Splits at every kMaxWayNodes-th ref, consecutive pieces sharing an endpoint.
  std::vector<std::int64_t> ways(const std::vector<std::int64_t>& refs, const OsmTags& tags) {
    std::vector<std::int64_t> ids;
    std::size_t start = 0;
    do {
      const std::size_t end = std::min(refs.size(), start + kMaxWayNodes);
      OsmWay way;
      way.id = -static_cast<std::int64_t>(doc.ways.size() + 1);
      way.refs.assign(refs.begin() + static_cast<std::ptrdiff_t>(start),
                      refs.begin() + static_cast<std::ptrdiff_t>(end));
      way.tags = tags;
      ids.push_back(way.id);
      doc.ways.push_back(std::move(way));
      start = end - 1;
    } while (start + 1 < refs.size());
    return ids;
  }

  void relation(std::vector<OsmMember> members, OsmTags tags) {
    OsmRelation rel;
    rel.id = -static_cast<std::int64_t>(doc.relations.size() + 1);
    rel.members = std::move(members);
    rel.tags = std::move(tags);
    doc.relations.push_back(std::move(rel));
  }

 private:
  std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> node_ids_;
};

bool ring_usable(const std::vector<std::int64_t>& refs) { return refs.size() >= 4 && refs.front() == refs.back(); }

}  // namespace

OsmDocument build_osm_doc(std::span<const WorldFeature> features, const std::map<int, std::string>& class_names,
                          const TagMap& tagmap, OsmBuildOptions options) {
  std::vector<const WorldFeature*> ordered;
  for (const auto& wf : features) {
    if (wf.frame != WorldFrame::LonLat) {
      throw Error(ErrorCode::NotGeoreferenced, "feature " + wf.feature.id + " is not in lon/lat");
    }
    if (wf.feature.kind == FeatureKind::Point && !options.include_points) continue;
    ordered.push_back(&wf);
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->feature.id < b->feature.id; });

  DocBuilder b;
  for (const auto* wf : ordered) {
    const auto& f = wf->feature;
    auto name = class_names.find(f.class_id);
    const std::string class_name = name != class_names.end() ? name->second : std::to_string(f.class_id);
    const OsmTags* tags = tagmap.find(class_name, f.kind);
    if (tags == nullptr) {
      throw Error(ErrorCode::UnmappedClass, "no tags for class '" + class_name + "' (" +
                                                std::string(to_string(f.kind)) + ")",
                  f.class_id);
    }

    if (const auto* p = std::get_if<Vec2>(&f.geometry)) {
      auto& node = b.node_ref(b.node(*p));
      for (const auto& t : *tags) {
        if (std::find(node.tags.begin(), node.tags.end(), t) == node.tags.end()) node.tags.push_back(t);
      }
    } else if (const auto* line = std::get_if<LineString>(&f.geometry)) {
      const auto refs = b.refs(*line);
      if (refs.size() >= 2) b.ways(refs, *tags);
    } else if (const auto* lines = std::get_if<MultiLineString>(&f.geometry)) {
      for (const auto& l : *lines) {
        const auto refs = b.refs(l);
        if (refs.size() >= 2) b.ways(refs, *tags);
      }
    } else if (const auto* poly = std::get_if<Polygon>(&f.geometry)) {
      const auto outer = b.refs(poly->exterior);
      if (!ring_usable(outer)) continue;  // collapsed below OSM resolution
      std::vector<std::vector<std::int64_t>> inners;
      for (const auto& h : poly->holes) {
        auto r = b.refs(h);
        if (ring_usable(r)) inners.push_back(std::move(r));
      }
      if (inners.empty() && outer.size() <= kMaxWayNodes) {
        b.ways(outer, *tags);
        continue;
      }
      std::vector<OsmMember> members;
      for (auto id : b.ways(outer, {})) members.push_back({"way", id, "outer"});
      for (const auto& r : inners) {
        for (auto id : b.ways(r, {})) members.push_back({"way", id, "inner"});
      }
      OsmTags rel_tags{{"type", "multipolygon"}};
      rel_tags.insert(rel_tags.end(), tags->begin(), tags->end());
      b.relation(std::move(members), std::move(rel_tags));
    }
  }
  return std::move(b.doc);
}

namespace {

std::string fixed7(std::int64_t e7) {
  std::string out = e7 < 0 ? "-" : "";
  const std::uint64_t mag = e7 < 0 ? static_cast<std::uint64_t>(-(e7 + 1)) + 1 : static_cast<std::uint64_t>(e7);
  std::string frac = std::to_string(mag % 10000000);
  out += std::to_string(mag / 10000000) + "." + std::string(7 - frac.size(), '0') + frac;
  return out;
}

std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      case '\n': out += "&#10;"; break;
      case '\t': out += "&#9;"; break;
      default: out += c;
    }
  }
  return out;
}

void write_tags(std::ostringstream& out, const OsmTags& tags) {
  for (const auto& [k, v] : tags) out << "    <tag k=\"" << escape(k) << "\" v=\"" << escape(v) << "\"/>\n";
}

std::int64_t parse_int(const std::string& s, std::string_view what) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw Error(ErrorCode::BadRequest, "bad " + std::string(what) + " '" + s + "'");
  return v;
}

/// Exact decimal -> e7 conversion for the fixed-point coordinates we write.
std::int64_t parse_e7(const std::string& s) {
  const double v = std::strtod(s.c_str(), nullptr);
  if (!std::isfinite(v)) throw Error(ErrorCode::BadRequest, "bad coordinate '" + s + "'");
  return std::llround(v * 1e7);
}

OsmTags read_tags(const pt::ptree& element) {
  OsmTags tags;
  for (const auto& [name, child] : element) {
    if (name == "tag") tags.emplace_back(child.get<std::string>("<xmlattr>.k"), child.get<std::string>("<xmlattr>.v"));
  }
  return tags;
}

pt::ptree read_tree(std::string_view text) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::BadRequest, std::string("malformed OSM XML: ") + e.what());
  }
  return tree;
}

}  // namespace

std::string osm_xml(const OsmDocument& doc) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<osm version=\"0.6\" generator=\"deltaforge\" upload=\"false\">\n";
  for (const auto& n : doc.nodes) {
    out << "  <node id=\"" << n.id << "\" lat=\"" << fixed7(n.lat_e7) << "\" lon=\"" << fixed7(n.lon_e7) << "\"";
    if (n.tags.empty()) {
      out << "/>\n";
    } else {
      out << ">\n";
      write_tags(out, n.tags);
      out << "  </node>\n";
    }
  }
  for (const auto& w : doc.ways) {
    out << "  <way id=\"" << w.id << "\">\n";
    for (auto r : w.refs) out << "    <nd ref=\"" << r << "\"/>\n";
    write_tags(out, w.tags);
    out << "  </way>\n";
  }
  for (const auto& r : doc.relations) {
    out << "  <relation id=\"" << r.id << "\">\n";
    for (const auto& m : r.members) {
      out << "    <member type=\"" << m.type << "\" ref=\"" << m.ref << "\" role=\"" << escape(m.role) << "\"/>\n";
    }
    write_tags(out, r.tags);
    out << "  </relation>\n";
  }
  out << "</osm>\n";
  return out.str();
}

void write_osm_xml(const OsmDocument& doc, const std::filesystem::path& path) {
  const std::string text = osm_xml(doc);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

OsmDocument parse_osm_xml(std::string_view text) {
  const pt::ptree tree = read_tree(text);
  const auto root = tree.get_child_optional("osm");
  if (!root) throw Error(ErrorCode::BadRequest, "missing <osm> root");
  OsmDocument doc;
  try {
    for (const auto& [name, el] : *root) {
      if (name == "node") {
        OsmNode n;
        n.id = parse_int(el.get<std::string>("<xmlattr>.id"), "node id");
        n.lat_e7 = parse_e7(el.get<std::string>("<xmlattr>.lat"));
        n.lon_e7 = parse_e7(el.get<std::string>("<xmlattr>.lon"));
        n.tags = read_tags(el);
        doc.nodes.push_back(std::move(n));
      } else if (name == "way") {
        OsmWay w;
        w.id = parse_int(el.get<std::string>("<xmlattr>.id"), "way id");
        for (const auto& [child_name, child] : el) {
          if (child_name == "nd") w.refs.push_back(parse_int(child.get<std::string>("<xmlattr>.ref"), "nd ref"));
        }
        w.tags = read_tags(el);
        doc.ways.push_back(std::move(w));
      } else if (name == "relation") {
        OsmRelation r;
        r.id = parse_int(el.get<std::string>("<xmlattr>.id"), "relation id");
        for (const auto& [child_name, child] : el) {
          if (child_name != "member") continue;
          r.members.push_back({child.get<std::string>("<xmlattr>.type"),
                               parse_int(child.get<std::string>("<xmlattr>.ref"), "member ref"),
                               child.get<std::string>("<xmlattr>.role", "")});
        }
        r.tags = read_tags(el);
        doc.relations.push_back(std::move(r));
      }
    }
  } catch (const pt::ptree_error& e) {
    throw Error(ErrorCode::BadRequest, std::string("malformed OSM element: ") + e.what());
  }
  return doc;
}

OsmLintReport lint_osm_xml(std::string_view text) {
  OsmLintReport report;
  auto problem = [&](std::string msg) { report.problems.push_back(std::move(msg)); };

  if (!text.starts_with("<?xml version=\"1.0\" encoding=\"UTF-8\"?>")) problem("missing UTF-8 XML declaration");

  OsmDocument doc;
  try {
    const pt::ptree tree = read_tree(text);
    const auto root = tree.get_child_optional("osm");
    if (!root) {
      problem("missing <osm> root");
      return report;
    }
    if (root->get<std::string>("<xmlattr>.version", "") != "0.6") problem("osm version is not 0.6");
    if (root->get<std::string>("<xmlattr>.upload", "") != "false") problem("upload attribute is not false");
    doc = parse_osm_xml(text);
  } catch (const Error& e) {
    problem(e.what());
    return report;
  }
  report.nodes = doc.nodes.size();
  report.ways = doc.ways.size();
  report.relations = doc.relations.size();

  std::set<std::int64_t> node_ids, way_ids, relation_ids;
  std::set<std::pair<std::int64_t, std::int64_t>> positions;
  for (const auto& n : doc.nodes) {
    if (n.id >= 0) problem("node " + std::to_string(n.id) + " has a non-negative id");
    if (!node_ids.insert(n.id).second) problem("duplicate node id " + std::to_string(n.id));
    if (!positions.insert({n.lat_e7, n.lon_e7}).second) problem("node " + std::to_string(n.id) + " duplicates a position");
    if (std::llabs(n.lat_e7) > 900000000LL || std::llabs(n.lon_e7) > 1800000000LL) {
      problem("node " + std::to_string(n.id) + " is out of range");
    }
  }
  std::map<std::int64_t, const OsmWay*> ways;
  for (const auto& w : doc.ways) {
    if (w.id >= 0) problem("way " + std::to_string(w.id) + " has a non-negative id");
    if (!way_ids.insert(w.id).second) problem("duplicate way id " + std::to_string(w.id));
    ways[w.id] = &w;
    if (w.refs.size() < 2) problem("way " + std::to_string(w.id) + " has fewer than 2 nodes");
    if (w.refs.size() > kMaxWayNodes) problem("way " + std::to_string(w.id) + " exceeds " + std::to_string(kMaxWayNodes) + " nodes");
    for (auto r : w.refs) {
      if (!node_ids.contains(r)) problem("way " + std::to_string(w.id) + " references missing node " + std::to_string(r));
    }
  }
  for (const auto& r : doc.relations) relation_ids.insert(r.id);
  for (const auto& r : doc.relations) {
    if (r.id >= 0) problem("relation " + std::to_string(r.id) + " has a non-negative id");
    const bool multipolygon = std::find(r.tags.begin(), r.tags.end(), OsmTag{"type", "multipolygon"}) != r.tags.end();
    bool has_outer = false;
    for (const auto& m : r.members) {
      const bool resolves = (m.type == "node" && node_ids.contains(m.ref)) ||
                            (m.type == "way" && way_ids.contains(m.ref)) ||
                            (m.type == "relation" && relation_ids.contains(m.ref));
      if (!resolves) {
        problem("relation " + std::to_string(r.id) + " member " + m.type + " " + std::to_string(m.ref) + " does not resolve");
      }
      if (multipolygon && m.type != "way") problem("multipolygon " + std::to_string(r.id) + " has a non-way member");
      if (multipolygon && m.role != "outer" && m.role != "inner") problem("multipolygon " + std::to_string(r.id) + " has role '" + m.role + "'");
      has_outer = has_outer || m.role == "outer";
    }
    if (multipolygon && !has_outer) problem("multipolygon " + std::to_string(r.id) + " has no outer member");
    if (multipolygon) {
      // Member ways of each role must join into closed rings.
      for (const std::string role : {"outer", "inner"}) {
        std::map<std::int64_t, int> endpoint_degree;
        for (const auto& m : r.members) {
          if (m.role != role || !ways.contains(m.ref)) continue;
          const auto* w = ways[m.ref];
          if (w->refs.empty()) continue;
          ++endpoint_degree[w->refs.front()];
          ++endpoint_degree[w->refs.back()];
        }
        for (auto [node, degree] : endpoint_degree) {
          if (degree % 2 != 0) {
            problem("multipolygon " + std::to_string(r.id) + " " + role + " ring is open at node " + std::to_string(node));
            break;
          }
        }
      }
    }
  }
  if (relation_ids.size() != doc.relations.size()) problem("duplicate relation id");
  return report;
}

}  // namespace deltaforge
