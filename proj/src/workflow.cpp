#include "deltaforge/workflow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "deltaforge/boundary.hpp"
#include "deltaforge/components.hpp"
#include "deltaforge/error.hpp"
#include "deltaforge/geojson.hpp"
#include "deltaforge/hashing.hpp"
#include "deltaforge/osm.hpp"
#include "deltaforge/simplify.hpp"
#include "deltaforge/skeleton.hpp"
#include "deltaforge/world.hpp"

namespace deltaforge {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kSessionFormat = 1;
constexpr const char* kSessionFile = "session.json";
constexpr const char* kLabelsFile = "labels.json";
constexpr const char* kModelFile = "model.json";
constexpr const char* kClassMapFile = "classmap.bin";
constexpr const char* kStoreFile = "store.jsonl";
constexpr const char* kOverlayFile = "overlay.png";

[[noreturn]] void bad_config(const std::string& why) { throw Error(ErrorCode::BadRequest, "config: " + why); }

json read_json(const fs::path& path, ErrorCode code) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(code, path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << text;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::shared_ptr<const RasterImage> georeferenced(const RasterImage& raster, const std::optional<AffineTransform>& geo,
                                                 const std::optional<int>& epsg) {
  if (!geo && !epsg) return std::make_shared<const RasterImage>(raster);
  RasterImage copy = raster;
  copy.set_georeference(geo.value_or(raster.geo()), epsg ? CrsId::from_epsg(*epsg) : raster.crs());
  return std::make_shared<const RasterImage>(std::move(copy));
}

PrimitiveStore empty_store(const Session& s) {
  return PrimitiveStore(s.raster_digest, s.raster->crs(), s.raster->geo());
}

}  // namespace

std::string_view to_string(ModelKind kind) { return kind == ModelKind::Svm ? "svm" : "knn"; }

ModelKind parse_model_kind(std::string_view s) {
  if (s == "svm") return ModelKind::Svm;
  if (s == "knn") return ModelKind::Knn;
  throw Error(ErrorCode::BadRequest, "unknown model '" + std::string(s) + "' (svm|knn)");
}

void PipelineConfig::validate() const {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) bad_config("holdout_fraction must lie in (0, 1)");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) bad_config("epsilon must be >= 0");
  if (min_pixels < 1) bad_config("min_pixels must be >= 1");
  if (knn_k < 1) bad_config("k must be >= 1");
  if (!(svm.c > 0.0)) bad_config("C must be > 0");
  if (svm.gamma && !(*svm.gamma > 0.0)) bad_config("gamma must be > 0");
  if (!(svm.tol > 0.0)) bad_config("tol must be > 0");
  if (svm.max_passes < 1) bad_config("max_passes must be >= 1");
}

bool PipelineConfig::operator==(const PipelineConfig& o) const {
  return svm.c == o.svm.c && svm.kernel == o.svm.kernel && svm.gamma == o.svm.gamma && svm.tol == o.svm.tol &&
         svm.max_passes == o.svm.max_passes && svm.seed == o.svm.seed && knn_k == o.knn_k &&
         holdout_fraction == o.holdout_fraction && epsilon == o.epsilon && min_pixels == o.min_pixels &&
         skeleton == o.skeleton && skeleton_classes == o.skeleton_classes && tagmap == o.tagmap &&
         export_points == o.export_points && threads == o.threads;
}

json config_to_json(const PipelineConfig& c) {
  json j;
  j["c"] = c.svm.c;
  j["kernel"] = c.svm.kernel == KernelKind::Rbf ? "rbf" : "linear";
  j["gamma"] = c.svm.gamma ? json(*c.svm.gamma) : json(nullptr);
  j["tol"] = c.svm.tol;
  j["max_passes"] = c.svm.max_passes;
  j["seed"] = c.svm.seed;
  j["k"] = c.knn_k;
  j["holdout_fraction"] = c.holdout_fraction;
  j["epsilon"] = c.epsilon;
  j["min_pixels"] = c.min_pixels;
  j["skeleton"] = c.skeleton;
  j["skeleton_classes"] = c.skeleton_classes;
  j["tagmap"] = c.tagmap;
  j["export_points"] = c.export_points;
  j["threads"] = c.threads;
  return j;
}

PipelineConfig config_from_json(const json& j, const PipelineConfig& base) {
  if (!j.is_object()) bad_config("expected a JSON object");
  static const std::set<std::string> known{"c",  "kernel",   "gamma",   "tol",      "max_passes",       "seed",
                                           "k",  "holdout_fraction",  "epsilon",  "min_pixels",       "skeleton",
                                           "skeleton_classes", "tagmap", "export_points", "threads"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) bad_config("unknown key '" + key + "'");
  }
  PipelineConfig c = base;
  try {
    if (j.contains("c")) c.svm.c = j["c"].get<double>();
    if (j.contains("kernel")) {
      const auto k = j["kernel"].get<std::string>();
      if (k == "rbf") c.svm.kernel = KernelKind::Rbf;
      else if (k == "linear") c.svm.kernel = KernelKind::Linear;
      else bad_config("kernel must be rbf or linear");
    }
    if (j.contains("gamma")) c.svm.gamma = j["gamma"].is_null() ? std::nullopt : std::optional(j["gamma"].get<double>());
    if (j.contains("tol")) c.svm.tol = j["tol"].get<double>();
    if (j.contains("max_passes")) c.svm.max_passes = j["max_passes"].get<int>();
    if (j.contains("seed")) c.svm.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("k")) c.knn_k = j["k"].get<int>();
    if (j.contains("holdout_fraction")) c.holdout_fraction = j["holdout_fraction"].get<double>();
    if (j.contains("epsilon")) c.epsilon = j["epsilon"].get<double>();
    if (j.contains("min_pixels")) c.min_pixels = j["min_pixels"].get<int>();
    if (j.contains("skeleton")) c.skeleton = j["skeleton"].get<bool>();
    if (j.contains("skeleton_classes")) c.skeleton_classes = j["skeleton_classes"].get<std::vector<std::string>>();
    if (j.contains("tagmap")) c.tagmap = j["tagmap"].get<std::string>();
    if (j.contains("export_points")) c.export_points = j["export_points"].get<bool>();
    if (j.contains("threads")) c.threads = j["threads"].get<int>();
  } catch (const json::exception& e) {
    bad_config(e.what());
  }
  c.validate();
  return c;
}

json iteration_to_json(const IterationRecord& r) {
  json counts = json::object();
  for (auto [cls, n] : r.sample_counts) counts[std::to_string(cls)] = n;
  return {{"iteration", r.iteration},
          {"model", r.model},
          {"sample_counts", counts},
          {"train_size", r.train_size},
          {"holdout_size", r.holdout_size},
          {"holdout_accuracy", r.holdout_accuracy ? json(*r.holdout_accuracy) : json(nullptr)}};
}

namespace {

IterationRecord iteration_from_json(const json& j) {
  IterationRecord r;
  r.iteration = j.at("iteration").get<int>();
  r.model = j.at("model").get<std::string>();
  for (const auto& [cls, n] : j.at("sample_counts").items()) r.sample_counts[std::stoi(cls)] = n.get<std::size_t>();
  r.train_size = j.at("train_size").get<std::size_t>();
  r.holdout_size = j.at("holdout_size").get<std::size_t>();
  if (!j.at("holdout_accuracy").is_null()) r.holdout_accuracy = j["holdout_accuracy"].get<double>();
  return r;
}

}  // namespace

std::map<int, std::string> Session::class_names() const {
  std::map<int, std::string> out;
  for (const auto& c : palette.classes()) out[c.id] = c.name;
  return out;
}

bool Session::same_state(const Session& o) const {
  return id == o.id && raster_path == o.raster_path && raster_digest == o.raster_digest &&
         geo_override == o.geo_override && epsg_override == o.epsg_override && palette == o.palette &&
         labels == o.labels && model == o.model && classmap == o.classmap && iterations == o.iterations &&
         store == o.store && config == o.config;
}

std::vector<GroundControlPoint> read_gcps(const fs::path& path) {
  const json j = read_json(path, ErrorCode::DegenerateGcps);
  std::vector<GroundControlPoint> out;
  try {
    for (const auto& g : j) {
      out.push_back({g.at("col").get<double>(), g.at("row").get<double>(), g.at("x").get<double>(),
                     g.at("y").get<double>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::DegenerateGcps, path.string() + ": " + e.what());
  }
  return out;
}

Session session_create(const fs::path& dir, const fs::path& raster_path, const Palette& palette,
                       const PipelineConfig& config, const CreateOptions& options) {
  config.validate();
  if (palette.classes().empty()) throw Error(ErrorCode::BadPalette, "palette defines no classes");
  const RasterImage raster = load_raster(raster_path);

  Session s;
  fs::create_directories(dir);
  s.dir = fs::absolute(dir).lexically_normal();
  fs::path named = s.dir;
  if (named.filename().empty()) named = named.parent_path();
  s.id = named.filename().string();
  if (s.id.empty()) s.id = sha256_hex(s.dir.string()).substr(0, 16);
  s.raster_path = fs::absolute(raster_path).lexically_normal();
  s.raster_digest = raster_digest(raster);
  if (options.gcps) s.geo_override = fit_affine(read_gcps(*options.gcps)).transform;
  s.epsg_override = options.epsg;
  s.raster = georeferenced(raster, s.geo_override, s.epsg_override);
  s.palette = palette;
  s.labels = LabelSet(s.raster_digest);
  s.store = empty_store(s);
  s.config = config;
  session_save(s);
  return s;
}

bool is_session_dir(const fs::path& dir) { return fs::is_regular_file(dir / kSessionFile); }

void session_save(const Session& s) {
  json j;
  j["format_version"] = kSessionFormat;
  j["id"] = s.id;
  j["raster"] = s.raster_path.string();
  j["raster_digest"] = s.raster_digest;
  if (s.geo_override) {
    const auto& g = *s.geo_override;
    j["geotransform"] = {g.a, g.b, g.c, g.d, g.e, g.f};
  } else {
    j["geotransform"] = nullptr;
  }
  j["epsg"] = s.epsg_override ? json(*s.epsg_override) : json(nullptr);
  j["palette"] = palette_to_json(s.palette);
  j["config"] = config_to_json(s.config);
  j["iterations"] = json::array();
  for (const auto& r : s.iterations) j["iterations"].push_back(iteration_to_json(r));

  write_text(s.dir / kLabelsFile, labels_to_json(s.labels).dump() + "\n");
  if (s.model) {
    write_text(s.dir / kModelFile, model_to_json(*s.model).dump() + "\n");
  } else {
    fs::remove(s.dir / kModelFile);
  }
  if (s.classmap) {
    write_classmap(*s.classmap, s.dir / kClassMapFile);
  } else {
    fs::remove(s.dir / kClassMapFile);
  }
  s.store.snapshot_save(s.dir / kStoreFile);
  write_text(s.dir / kSessionFile, j.dump(2) + "\n");
}

Session session_load(const fs::path& dir) {
  if (!is_session_dir(dir)) throw Error(ErrorCode::NotFound, "no session in " + dir.string());
  const json j = read_json(dir / kSessionFile, ErrorCode::BadRequest);
  Session s;
  try {
    if (j.at("format_version").get<int>() != kSessionFormat) {
      throw Error(ErrorCode::BadRequest, "unsupported session format in " + dir.string());
    }
    s.dir = fs::absolute(dir).lexically_normal();
    s.id = j.at("id").get<std::string>();
    s.raster_path = j.at("raster").get<std::string>();
    s.raster_digest = j.at("raster_digest").get<std::string>();
    if (!j.at("geotransform").is_null()) {
      const auto g = j["geotransform"].get<std::vector<double>>();
      if (g.size() != 6) throw Error(ErrorCode::BadRequest, "session geotransform needs 6 values");
      s.geo_override = AffineTransform{g[0], g[1], g[2], g[3], g[4], g[5]};
    }
    if (!j.at("epsg").is_null()) s.epsg_override = j["epsg"].get<int>();
    s.palette = palette_from_json(j.at("palette"));
    s.config = config_from_json(j.at("config"));
    for (const auto& r : j.at("iterations")) s.iterations.push_back(iteration_from_json(r));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadRequest, (dir / kSessionFile).string() + ": " + e.what());
  }

  const RasterImage raster = load_raster(s.raster_path);
  if (raster_digest(raster) != s.raster_digest) {
    throw Error(ErrorCode::StaleLabels, "raster " + s.raster_path.string() + " changed since the session was created");
  }
  s.raster = georeferenced(raster, s.geo_override, s.epsg_override);
  s.labels = read_labels(s.dir / kLabelsFile);
  if (s.labels.raster_digest() != s.raster_digest) throw Error(ErrorCode::StaleLabels, "session labels are stale");
  if (fs::exists(s.dir / kModelFile)) s.model = model_from_json(read_json(s.dir / kModelFile, ErrorCode::BadRequest));
  if (fs::exists(s.dir / kClassMapFile)) {
    s.classmap = read_classmap(s.dir / kClassMapFile);
    if (s.classmap->width() != s.raster->width() || s.classmap->height() != s.raster->height()) {
      throw Error(ErrorCode::ShapeMismatch, "class map does not match the raster");
    }
  }
  s.store = fs::exists(s.dir / kStoreFile) ? PrimitiveStore::snapshot_load(s.dir / kStoreFile) : empty_store(s);
  return s;
}

std::map<int, std::size_t> add_labels(Session& s, const std::vector<LabelSample>& samples, const std::string& digest) {
  if (!digest.empty() && digest != s.raster_digest) {
    throw Error(ErrorCode::StaleLabels, "labels reference raster " + digest + ", session has " + s.raster_digest);
  }
  LabelSet additions(s.raster_digest);
  for (const auto& l : samples) {
    const std::string where = "(" + std::to_string(l.row) + "," + std::to_string(l.col) + ")";
    if (!s.raster->in_bounds(l.row, l.col)) throw Error(ErrorCode::BadLabel, "label " + where + " is out of bounds");
    if (s.raster->is_nodata(l.row, l.col)) throw Error(ErrorCode::BadLabel, "label " + where + " is a nodata pixel");
    if (s.palette.find(l.class_id) == nullptr) {
      throw Error(ErrorCode::BadLabel, "label " + where + " has undefined class " + std::to_string(l.class_id));
    }
    additions.set(l.row, l.col, l.class_id);
  }
  s.labels = merge_labels(s.labels, additions);
  return s.labels.counts();
}

TrainSplit stratified_split(const LabelSet& labels, double fraction, std::uint64_t seed) {
  std::map<int, std::vector<LabelSample>> by_class;
  for (const auto& l : labels.samples()) by_class[l.class_id].push_back(l);
  TrainSplit split;
  for (auto& [cls, items] : by_class) {
    std::mt19937_64 rng(seed ^ (static_cast<std::uint64_t>(cls) * 0x9E3779B97F4A7C15ULL));
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[rng() % i]);
    }
    const auto n = items.size();
    const std::size_t hold = std::min<std::size_t>(n - 1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
    split.holdout.insert(split.holdout.end(), items.begin(), items.begin() + static_cast<std::ptrdiff_t>(hold));
    split.train.insert(split.train.end(), items.begin() + static_cast<std::ptrdiff_t>(hold), items.end());
  }
  auto row_major = [](const LabelSample& a, const LabelSample& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  };
  std::sort(split.train.begin(), split.train.end(), row_major);
  std::sort(split.holdout.begin(), split.holdout.end(), row_major);
  return split;
}

TrainResult run_train(Session& s, ModelKind kind, const TrainOverrides& overrides) {
  PipelineConfig config = s.config;
  if (overrides.c) config.svm.c = *overrides.c;
  if (overrides.gamma) config.svm.gamma = *overrides.gamma;
  if (overrides.k) config.knn_k = *overrides.k;
  if (overrides.seed) config.svm.seed = *overrides.seed;
  config.validate();

  const TrainSplit split = stratified_split(s.labels, config.holdout_fraction, config.svm.seed);
  LabelSet train_labels(s.raster_digest);
  for (const auto& l : split.train) train_labels.set(l.row, l.col, l.class_id);

  TrainingSet training = build_training_set(*s.raster, train_labels, &s.palette);
  Model model = kind == ModelKind::Svm ? Model(train_svm(training, config.svm)) : Model(train_knn(training, config.knn_k));

  TrainResult result;
  result.warnings = training.warnings;
  auto& r = result.record;
  r.iteration = s.iterations.empty() ? 1 : s.iterations.back().iteration + 1;
  r.model = std::string(to_string(kind));
  r.sample_counts = s.labels.counts();
  r.train_size = split.train.size();
  r.holdout_size = split.holdout.size();
  if (!split.holdout.empty()) {
    std::vector<double> scratch(static_cast<std::size_t>(s.raster->band_count()));
    std::size_t correct = 0;
    for (const auto& l : split.holdout) {
      const auto raw = pixel_features(*s.raster, l.row, l.col);
      if (predict_pixel(model, raw, scratch) == l.class_id) ++correct;
    }
    r.holdout_accuracy = static_cast<double>(correct) / static_cast<double>(split.holdout.size());
  }

  s.config = config;
  s.model = std::move(model);
  s.iterations.push_back(r);
  return result;
}

RgbaImage render_overlay(const ClassMap& map, const Palette& palette) {
  RgbaImage img;
  img.width = map.width();
  img.height = map.height();
  img.pixels.assign(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height) * 4, 0);
  const auto ids = map.ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const ClassDef* c = ids[i] > 0 ? palette.find(ids[i]) : nullptr;
    if (c == nullptr) continue;
    img.pixels[4 * i + 0] = c->color.r;
    img.pixels[4 * i + 1] = c->color.g;
    img.pixels[4 * i + 2] = c->color.b;
    img.pixels[4 * i + 3] = 153;  // 60% of 255
  }
  return img;
}

ClassifyResult run_classify(Session& s) {
  if (!s.model) throw Error(ErrorCode::NoModel, "train a model before classifying");
  ClassMap map = predict_map(*s.model, *s.raster, s.config.threads);
  ClassifyResult result;
  for (int id : map.ids()) {
    if (id > 0) ++result.pixel_counts[id];
  }
  const auto png = encode_png(render_overlay(map, s.palette));
  result.overlay = s.dir / kOverlayFile;
  write_text(result.overlay, std::string(png.begin(), png.end()));
  s.classmap = std::move(map);
  return result;
}

VectorizeResult run_vectorize(Session& s, const VectorizeOptions& options) {
  if (!s.classmap) throw Error(ErrorCode::NoClassMap, "classify the raster before vectorizing");
  PipelineConfig config = s.config;
  if (options.epsilon) config.epsilon = *options.epsilon;
  if (options.skeleton) config.skeleton = *options.skeleton;
  if (options.min_pixels) config.min_pixels = *options.min_pixels;
  config.validate();

  const ComponentLabeling labeling = label_components(*s.classmap);
  const auto polygons = polygonize(labeling, config.threads);
  std::set<int> skeleton_ids;
  for (const auto& name : config.skeleton_classes) {
    if (const auto* c = s.palette.find(std::string_view(name))) skeleton_ids.insert(c->id);
  }

  PrimitiveStore store = empty_store(s);
  VectorizeResult result;
  for (const auto& fp : polygons) {
    if (fp.pixel_count < static_cast<std::size_t>(config.min_pixels)) {
      ++result.skipped_small;
      continue;
    }
    NewFeature poly{FeatureKind::Polygon, fp.class_id, to_polygon(fp), Stage::Auto, false};
    if (config.epsilon > 0.0) {
      const auto simplified = simplify_polygon(std::get<Polygon>(poly.geometry), config.epsilon);
      if (simplified.reverted) ++result.simplification_reverted;
      poly.lossy_simplified = simplified.dropped_vertices && !simplified.reverted;
      poly.geometry = simplified.polygon;
    }
    store.insert(poly);
    ++result.polygons;

    if (!config.skeleton || !skeleton_ids.contains(fp.class_id)) continue;
    MultiLineString lines;
    bool lossy = false;
    for (const auto& line : skeleton_lines(skeletonize(labeling, fp.component_id))) {
      if (line.size() < 2) continue;
      if (config.epsilon > 0.0) {
        auto simplified = simplify_line(line, config.epsilon);
        lossy = lossy || simplified.dropped_vertices;
        lines.push_back(std::move(simplified.line));
      } else {
        lines.push_back(line);
      }
    }
    if (lines.empty()) continue;
    store.insert({FeatureKind::Skeleton, fp.class_id, std::move(lines), Stage::Auto, lossy});
    ++result.skeletons;
  }
  s.config = config;
  s.store = std::move(store);
  return result;
}

std::vector<FeaturePatch> patches_from_json(const json& j) {
  std::vector<FeaturePatch> out;
  auto one = [](const json& p) {
    FeaturePatch patch;
    try {
      patch.id = p.at("id").get<std::string>();
      if (p.contains("geometry") && !p["geometry"].is_null()) patch.geometry = geometry_from_json(p["geometry"]);
      if (p.contains("stage") && !p["stage"].is_null()) patch.stage = parse_stage(p["stage"].get<std::string>());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::BadRequest, std::string("malformed patch: ") + e.what());
    }
    if (!patch.geometry && !patch.stage) throw Error(ErrorCode::BadRequest, "patch for " + patch.id + " changes nothing");
    return patch;
  };
  if (j.is_array()) {
    for (const auto& p : j) out.push_back(one(p));
  } else {
    out.push_back(one(j));
  }
  return out;
}

std::vector<int> apply_patches(Session& s, const std::vector<FeaturePatch>& patches) {
  PrimitiveStore store = s.store;  // all or nothing
  std::vector<int> versions;
  for (const auto& p : patches) versions.push_back(store.update_geometry(p.id, p.geometry, p.stage));
  s.store = std::move(store);
  return versions;
}

ExportFormat parse_export_format(std::string_view s) {
  if (s == "osm") return ExportFormat::Osm;
  if (s == "geojson") return ExportFormat::GeoJson;
  if (s == "snapshot") return ExportFormat::Snapshot;
  throw Error(ErrorCode::BadRequest, "unknown export format '" + std::string(s) + "' (osm|geojson|snapshot)");
}

ExportResult export_session(const Session& s, ExportFormat format, bool include_unvalidated) {
  ExportResult result;
  if (format == ExportFormat::Snapshot) {
    result.content = s.store.snapshot_text();
    result.feature_count = s.store.size();
    return result;
  }
  const CrsId& crs = s.raster->crs();
  if (!crs.is_known()) {
    throw Error(ErrorCode::NotGeoreferenced, "raster CRS is " + crs.describe() + "; lon/lat output needs WGS84 or UTM");
  }
  Query q;
  if (!include_unvalidated) q.stages = std::set<Stage>{Stage::Validated};
  if (!s.config.export_points) {
    q.kinds = std::set<FeatureKind>{FeatureKind::Line, FeatureKind::Polygon, FeatureKind::Skeleton};
  }
  std::vector<WorldFeature> world;
  for (const auto& f : s.store.query(q)) world.push_back(to_world(f, s.raster->geo(), crs, WorldFrame::LonLat));
  result.feature_count = world.size();
  if (world.empty()) {
    result.warnings.push_back(std::string(to_string(ErrorCode::EmptyExport)) +
                              (include_unvalidated ? ": the store holds no features" : ": no validated features"));
  }
  if (format == ExportFormat::Osm) {
    const TagMap tags = s.config.tagmap.empty() ? default_tagmap() : read_tagmap(s.config.tagmap);
    result.content = osm_xml(build_osm_doc(world, s.class_names(), tags, {s.config.export_points}));
  } else {
    result.content = geojson_document(world, s.class_names());
  }
  return result;
}

void write_export(const ExportResult& result, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << result.content;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

json feature_to_json(const StoredFeature& f) {
  return {{"id", f.id},
          {"kind", to_string(f.kind)},
          {"class_id", f.class_id},
          {"stage", to_string(f.stage)},
          {"version", f.version},
          {"parent_version", f.parent_version ? json(*f.parent_version) : json(nullptr)},
          {"created_at", f.created_at},
          {"lossy_simplified", f.lossy_simplified},
          {"bbox", {f.bbox.min_x, f.bbox.min_y, f.bbox.max_x, f.bbox.max_y}},
          {"geometry", json::parse(geometry_to_json(f.geometry).dump())}};
}

json session_summary(const Session& s) {
  json counts = json::object();
  for (auto [cls, n] : s.labels.counts()) counts[std::to_string(cls)] = n;
  json iterations = json::array();
  for (const auto& r : s.iterations) iterations.push_back(iteration_to_json(r));
  const auto& crs = s.raster->crs();
  return {{"id", s.id},
          {"raster",
           {{"path", s.raster_path.string()},
            {"digest", s.raster_digest},
            {"width", s.raster->width()},
            {"height", s.raster->height()},
            {"bands", s.raster->band_count()},
            {"crs", crs.describe()},
            {"epsg", crs.epsg ? json(*crs.epsg) : json(nullptr)}}},
          {"palette", palette_to_json(s.palette)},
          {"label_counts", counts},
          {"iterations", iterations},
          {"has_model", s.model.has_value()},
          {"has_classmap", s.classmap.has_value()},
          {"feature_count", s.store.size()},
          {"config", config_to_json(s.config)}};
}

}  // namespace deltaforge
