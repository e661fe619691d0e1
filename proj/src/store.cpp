#include "deltaforge/store.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "deltaforge/error.hpp"
#include "deltaforge/geojson.hpp"
#include "deltaforge/hashing.hpp"

namespace deltaforge {

using nlohmann::json;

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Point: return "point";
    case FeatureKind::Line: return "line";
    case FeatureKind::Polygon: return "polygon";
    case FeatureKind::Skeleton: return "skeleton";
  }
  return "polygon";
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Auto: return "auto";
    case Stage::Edited: return "edited";
    case Stage::Validated: return "validated";
  }
  return "auto";
}

FeatureKind parse_kind(std::string_view s) {
  if (s == "point") return FeatureKind::Point;
  if (s == "line") return FeatureKind::Line;
  if (s == "polygon") return FeatureKind::Polygon;
  if (s == "skeleton") return FeatureKind::Skeleton;
  throw Error(ErrorCode::BadRequest, "unknown feature kind '" + std::string(s) + "'");
}

Stage parse_stage(std::string_view s) {
  if (s == "auto") return Stage::Auto;
  if (s == "edited") return Stage::Edited;
  if (s == "validated") return Stage::Validated;
  throw Error(ErrorCode::BadRequest, "unknown stage '" + std::string(s) + "'");
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool Query::matches(const StoredFeature& f) const {
  if (classes && !classes->contains(f.class_id)) return false;
  if (kinds && !kinds->contains(f.kind)) return false;
  if (stages && !stages->contains(f.stage)) return false;
  if (bbox && !bbox->intersects(f.bbox)) return false;
  return true;
}

namespace {

[[noreturn]] void reject(const std::string& why) { throw Error(ErrorCode::RejectedGeometry, why); }

bool finite(Vec2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

void check_line(const LineString& line) {
  if (line.size() < 2) reject("line needs at least two vertices");
  for (auto p : line) {
    if (!finite(p)) reject("line vertex is not finite");
  }
}

}  // namespace

void validate_geometry(FeatureKind kind, const Geometry& geometry) {
  switch (kind) {
    case FeatureKind::Point: {
      const auto* p = std::get_if<Vec2>(&geometry);
      if (p == nullptr) reject("point feature needs Point geometry");
      if (!finite(*p)) reject("point is not finite");
      return;
    }
    case FeatureKind::Line: {
      const auto* line = std::get_if<LineString>(&geometry);
      if (line == nullptr) reject("line feature needs LineString geometry");
      check_line(*line);
      return;
    }
    case FeatureKind::Skeleton: {
      const auto* lines = std::get_if<MultiLineString>(&geometry);
      if (lines == nullptr) reject("skeleton feature needs MultiLineString geometry");
      if (lines->empty()) reject("skeleton has no lines");
      for (const auto& l : *lines) check_line(l);
      return;
    }
    case FeatureKind::Polygon: {
      const auto* poly = std::get_if<Polygon>(&geometry);
      if (poly == nullptr) reject("polygon feature needs Polygon geometry");
      if (!ring_is_valid(poly->exterior)) reject("exterior ring is not closed and simple");
      if (!(signed_area(poly->exterior) > 0)) reject("exterior ring must have positive area");
      for (const auto& h : poly->holes) {
        if (!ring_is_valid(h)) reject("hole ring is not closed and simple");
        if (!(signed_area(h) < 0)) reject("hole ring must have negative area");
        for (std::size_t i = 0; i + 1 < h.size(); ++i) {
          bool on_boundary = false;
          for (std::size_t k = 0; k + 1 < poly->exterior.size() && !on_boundary; ++k) {
            on_boundary = point_segment_distance(h[i], poly->exterior[k], poly->exterior[k + 1]) == 0.0;
          }
          if (!on_boundary && !point_in_ring(h[i], poly->exterior)) reject("hole lies outside the exterior");
        }
      }
      return;
    }
  }
}

PrimitiveStore::PrimitiveStore(std::string id_seed, CrsId crs, AffineTransform geo)
    : id_seed_(std::move(id_seed)), crs_(std::move(crs)), geo_(geo), clock_(utc_timestamp) {}

PrimitiveStore::PrimitiveStore(const PrimitiveStore& other) {
  std::shared_lock lock(other.mutex_);
  id_seed_ = other.id_seed_;
  next_sequence_ = other.next_sequence_;
  crs_ = other.crs_;
  geo_ = other.geo_;
  clock_ = other.clock_;
  features_ = other.features_;
  grid_ = other.grid_;
}

PrimitiveStore& PrimitiveStore::operator=(const PrimitiveStore& other) {
  if (this == &other) return *this;
  PrimitiveStore copy(other);
  std::unique_lock lock(mutex_);
  id_seed_ = std::move(copy.id_seed_);
  next_sequence_ = copy.next_sequence_;
  crs_ = copy.crs_;
  geo_ = copy.geo_;
  clock_ = std::move(copy.clock_);
  features_ = std::move(copy.features_);
  grid_ = std::move(copy.grid_);
  return *this;
}

void PrimitiveStore::set_clock(Clock clock) {
  std::unique_lock lock(mutex_);
  clock_ = std::move(clock);
}

namespace {

constexpr double kCellSize = 64.0;
constexpr std::size_t kMaxIndexCells = 4096;

std::int64_t cell_key(std::int64_t cx, std::int64_t cy) { return (cy << 32) ^ (cx & 0xffffffff); }

}  // namespace

std::vector<std::pair<std::int64_t, std::int64_t>> PrimitiveStore::cells(const BBox& box) const {
  const auto x0 = static_cast<std::int64_t>(std::floor(box.min_x / kCellSize));
  const auto x1 = static_cast<std::int64_t>(std::floor(box.max_x / kCellSize));
  const auto y0 = static_cast<std::int64_t>(std::floor(box.min_y / kCellSize));
  const auto y1 = static_cast<std::int64_t>(std::floor(box.max_y / kCellSize));
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  if (static_cast<double>(x1 - x0 + 1) * static_cast<double>(y1 - y0 + 1) > kMaxIndexCells) return out;
  for (auto y = y0; y <= y1; ++y) {
    for (auto x = x0; x <= x1; ++x) out.emplace_back(x, y);
  }
  return out;
}

void PrimitiveStore::index_insert(const std::string& id, const BBox& box) {
  const auto cs = cells(box);
  if (cs.empty()) {
    grid_[std::numeric_limits<std::int64_t>::min()].insert(id);  // oversized bucket
    return;
  }
  for (auto [x, y] : cs) grid_[cell_key(x, y)].insert(id);
}

void PrimitiveStore::index_erase(const std::string& id, const BBox& box) {
  const auto cs = cells(box);
  if (cs.empty()) {
    grid_[std::numeric_limits<std::int64_t>::min()].erase(id);
    return;
  }
  for (auto [x, y] : cs) grid_[cell_key(x, y)].erase(id);
}

std::string PrimitiveStore::insert(const NewFeature& feature) {
  validate_geometry(feature.kind, feature.geometry);
  if (feature.class_id < 1) throw Error(ErrorCode::RejectedGeometry, "class id must be >= 1");
  std::unique_lock lock(mutex_);
  std::string id;
  do {
    id = derived_uuid(id_seed_, next_sequence_++);
  } while (features_.contains(id));
  StoredFeature f;
  f.id = id;
  f.kind = feature.kind;
  f.class_id = feature.class_id;
  f.geometry = feature.geometry;
  f.bbox = bounds(feature.geometry);
  f.stage = feature.stage;
  f.version = 1;
  f.created_at = clock_();
  f.lossy_simplified = feature.lossy_simplified;
  index_insert(id, f.bbox);
  features_[id].push_back(std::move(f));
  return id;
}

int PrimitiveStore::update_geometry(const std::string& id, const std::optional<Geometry>& geometry,
                                    std::optional<Stage> stage) {
  std::unique_lock lock(mutex_);
  auto it = features_.find(id);
  if (it == features_.end()) throw Error(ErrorCode::NotFound, "no feature " + id);
  const StoredFeature& latest = it->second.back();

  const Stage next_stage = stage.value_or(geometry ? Stage::Edited : latest.stage);
  const bool legal = (latest.stage == Stage::Auto && next_stage != Stage::Auto) ||
                     (latest.stage == Stage::Edited && next_stage != Stage::Auto);
  if (!legal) {
    throw Error(ErrorCode::IllegalTransition, std::string(to_string(latest.stage)) + " -> " +
                                                   std::string(to_string(next_stage)) + " on " + id);
  }
  if (geometry) validate_geometry(latest.kind, *geometry);

  StoredFeature next = latest;
  next.version = latest.version + 1;
  next.parent_version = latest.version;
  next.stage = next_stage;
  next.created_at = clock_();
  if (geometry) {
    next.geometry = *geometry;
    next.bbox = bounds(*geometry);
    next.lossy_simplified = false;
  }
  index_erase(id, latest.bbox);
  index_insert(id, next.bbox);
  it->second.push_back(std::move(next));
  return it->second.back().version;
}

StoredFeature PrimitiveStore::get(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = features_.find(id);
  if (it == features_.end()) throw Error(ErrorCode::NotFound, "no feature " + id);
  return it->second.back();
}

std::vector<StoredFeature> PrimitiveStore::history(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = features_.find(id);
  if (it == features_.end()) throw Error(ErrorCode::NotFound, "no feature " + id);
  return it->second;
}

std::vector<StoredFeature> PrimitiveStore::query(const Query& q) const {
  std::shared_lock lock(mutex_);
  std::vector<StoredFeature> out;
  const auto cs = q.bbox ? cells(*q.bbox) : decltype(cells(BBox{})){};
  if (q.bbox && !cs.empty()) {
    std::set<std::string> candidates;
    for (auto [x, y] : cs) {
      if (auto it = grid_.find(cell_key(x, y)); it != grid_.end()) {
        candidates.insert(it->second.begin(), it->second.end());
      }
    }
    if (auto it = grid_.find(std::numeric_limits<std::int64_t>::min()); it != grid_.end()) {
      candidates.insert(it->second.begin(), it->second.end());
    }
    for (const auto& id : candidates) {
      const auto& f = features_.at(id).back();
      if (q.matches(f)) out.push_back(f);
    }
    return out;  // std::set iteration is already id-ordered
  }
  for (const auto& [id, versions] : features_) {
    if (q.matches(versions.back())) out.push_back(versions.back());
  }
  return out;
}

std::size_t PrimitiveStore::size() const {
  std::shared_lock lock(mutex_);
  return features_.size();
}

bool PrimitiveStore::operator==(const PrimitiveStore& other) const {
  if (this == &other) return true;
  std::shared_lock a(mutex_);
  std::shared_lock b(other.mutex_);
  return id_seed_ == other.id_seed_ && next_sequence_ == other.next_sequence_ && crs_ == other.crs_ &&
         geo_ == other.geo_ && features_ == other.features_;
}

namespace {

json crs_to_json(const CrsId& crs) {
  if (!crs.epsg) return nullptr;
  return *crs.epsg;
}

json version_to_json(const StoredFeature& f) {
  json j;
  j["version"] = f.version;
  j["parent_version"] = f.parent_version ? json(*f.parent_version) : json(nullptr);
  j["stage"] = to_string(f.stage);
  j["created_at"] = f.created_at;
  j["lossy_simplified"] = f.lossy_simplified;
  j["bbox"] = {f.bbox.min_x, f.bbox.min_y, f.bbox.max_x, f.bbox.max_y};
  j["geometry"] = json::parse(geometry_to_json(f.geometry).dump());
  return j;
}

}  // namespace

std::string PrimitiveStore::snapshot_text() const {
  std::shared_lock lock(mutex_);
  std::ostringstream out;
  json header;
  header["format_version"] = kFormatVersion;
  header["crs"] = crs_to_json(crs_);
  header["geotransform"] = {geo_.a, geo_.b, geo_.c, geo_.d, geo_.e, geo_.f};
  header["id_seed"] = id_seed_;
  header["next_sequence"] = next_sequence_;
  out << header.dump() << '\n';
  for (const auto& [id, versions] : features_) {
    json line;
    line["id"] = id;
    line["kind"] = to_string(versions.front().kind);
    line["class_id"] = versions.front().class_id;
    json hist = json::array();
    for (const auto& v : versions) hist.push_back(version_to_json(v));
    line["versions"] = std::move(hist);
    out << line.dump() << '\n';
  }
  return out.str();
}

void PrimitiveStore::snapshot_save(const std::filesystem::path& path) const {
  const std::string text = snapshot_text();
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << text;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

PrimitiveStore PrimitiveStore::snapshot_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return snapshot_parse(in, path.string());
}

PrimitiveStore PrimitiveStore::snapshot_parse(std::istream& in, const std::string& source) {
  std::string text;
  std::int64_t line_no = 0;

  auto corrupt = [&](const std::string& why) -> Error {
    return Error(ErrorCode::CorruptSnapshot, source + " line " + std::to_string(line_no) + ": " + why,
                 line_no);
  };

  if (!std::getline(in, text)) {
    line_no = 1;
    throw corrupt("missing header");
  }
  line_no = 1;
  PrimitiveStore store;
  try {
    const json header = json::parse(text);
    const int version = header.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw Error(ErrorCode::IncompatibleSnapshot,
                  "snapshot format " + std::to_string(version) + ", expected " +
                      std::to_string(kFormatVersion),
                  version);
    }
    const auto gt = header.at("geotransform").get<std::vector<double>>();
    if (gt.size() != 6) throw corrupt("geotransform needs six coefficients");
    store.geo_ = {gt[0], gt[1], gt[2], gt[3], gt[4], gt[5]};
    if (!header.at("crs").is_null()) store.crs_ = CrsId::from_epsg(header["crs"].get<int>());
    store.id_seed_ = header.value("id_seed", std::string{});
    store.next_sequence_ = header.value("next_sequence", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw corrupt(e.what());
  }

  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    try {
      const json line = json::parse(text);
      const std::string id = line.at("id").get<std::string>();
      const FeatureKind kind = parse_kind(line.at("kind").get<std::string>());
      const int class_id = line.at("class_id").get<int>();
      std::vector<StoredFeature> versions;
      for (const auto& v : line.at("versions")) {
        StoredFeature f;
        f.id = id;
        f.kind = kind;
        f.class_id = class_id;
        f.version = v.at("version").get<int>();
        if (!v.at("parent_version").is_null()) f.parent_version = v["parent_version"].get<int>();
        f.stage = parse_stage(v.at("stage").get<std::string>());
        f.created_at = v.at("created_at").get<std::string>();
        f.lossy_simplified = v.at("lossy_simplified").get<bool>();
        f.geometry = geometry_from_json(v.at("geometry"));
        validate_geometry(kind, f.geometry);
        f.bbox = bounds(f.geometry);
        if (!versions.empty() && f.version <= versions.back().version) {
          throw corrupt("versions of " + id + " are not increasing");
        }
        versions.push_back(std::move(f));
      }
      if (versions.empty()) throw corrupt("feature " + id + " has no versions");
      store.index_insert(id, versions.back().bbox);
      store.features_[id] = std::move(versions);
    } catch (const json::exception& e) {
      throw corrupt(e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::CorruptSnapshot) throw;
      throw corrupt(e.what());
    }
  }
  return store;
}

}  // namespace deltaforge
