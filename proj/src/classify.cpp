#include "deltaforge/classify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "deltaforge/error.hpp"

namespace deltaforge {

using nlohmann::json;

Palette::Palette(std::vector<ClassDef> classes) : classes_(std::move(classes)) {
  std::set<int> seen;
  for (const auto& c : classes_) {
    if (c.id < 1) {
      throw Error(ErrorCode::BadPalette, "class id " + std::to_string(c.id) + " is reserved", c.id);
    }
    if (!seen.insert(c.id).second) {
      throw Error(ErrorCode::BadPalette, "duplicate class id " + std::to_string(c.id), c.id);
    }
  }
  for (const auto& c : classes_) {
    if (!c.parent_id) continue;
    const ClassDef* parent = find(*c.parent_id);
    if (parent == nullptr || parent->id == c.id) {
      throw Error(ErrorCode::BadPalette, "class " + c.name + " has unknown parent", c.id);
    }
    if (parent->parent_id) {
      throw Error(ErrorCode::BadPalette, "class " + c.name + " nests deeper than two levels", c.id);
    }
  }
  std::sort(classes_.begin(), classes_.end(),
            [](const ClassDef& a, const ClassDef& b) { return a.id < b.id; });
}

const ClassDef* Palette::find(int id) const {
  for (const auto& c : classes_) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

const ClassDef* Palette::find(std::string_view name) const {
  for (const auto& c : classes_) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::vector<int> Palette::ids() const {
  std::vector<int> out;
  for (const auto& c : classes_) out.push_back(c.id);
  return out;
}

namespace {

Rgb parse_color(const json& j) {
  if (j.is_array() && j.size() == 3) {
    return {j[0].get<std::uint8_t>(), j[1].get<std::uint8_t>(), j[2].get<std::uint8_t>()};
  }
  const auto s = j.get<std::string>();
  unsigned r = 0, g = 0, b = 0;
  if (s.size() != 7 || s[0] != '#' || std::sscanf(s.c_str() + 1, "%2x%2x%2x", &r, &g, &b) != 3) {
    throw Error(ErrorCode::BadPalette, "bad color '" + s + "'");
  }
  return {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
}

std::string color_hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

}  // namespace

json palette_to_json(const Palette& palette) {
  json out = json::array();
  for (const auto& c : palette.classes()) {
    json item = {{"id", c.id}, {"name", c.name}, {"color", color_hex(c.color)}};
    if (c.parent_id) item["parent_id"] = *c.parent_id;
    out.push_back(item);
  }
  return out;
}

Palette palette_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::BadPalette, "palette must be a JSON list");
  std::vector<ClassDef> classes;
  try {
    for (const auto& item : j) {
      ClassDef c;
      c.id = item.at("id").get<int>();
      c.name = item.at("name").get<std::string>();
      if (item.contains("color")) c.color = parse_color(item["color"]);
      if (item.contains("parent_id") && !item["parent_id"].is_null()) {
        c.parent_id = item["parent_id"].get<int>();
      }
      classes.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadPalette, e.what());
  }
  return Palette(std::move(classes));
}

Palette read_palette(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return palette_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadPalette, path.string() + ": " + e.what());
  }
}

namespace {

bool row_major_less(const LabelSample& a, const LabelSample& b) {
  return a.row != b.row ? a.row < b.row : a.col < b.col;
}

}  // namespace

void LabelSet::set(int row, int col, int class_id) {
  const LabelSample s{row, col, class_id};
  auto it = std::lower_bound(samples_.begin(), samples_.end(), s, row_major_less);
  if (it != samples_.end() && it->row == row && it->col == col) {
    it->class_id = class_id;
  } else {
    samples_.insert(it, s);
  }
}

std::optional<int> LabelSet::get(int row, int col) const {
  const LabelSample s{row, col, 0};
  auto it = std::lower_bound(samples_.begin(), samples_.end(), s, row_major_less);
  if (it != samples_.end() && it->row == row && it->col == col) return it->class_id;
  return std::nullopt;
}

std::map<int, std::size_t> LabelSet::counts() const {
  std::map<int, std::size_t> out;
  for (const auto& s : samples_) ++out[s.class_id];
  return out;
}

LabelSet merge_labels(const LabelSet& base, const LabelSet& additions) {
  if (base.raster_digest() != additions.raster_digest()) {
    throw Error(ErrorCode::StaleLabels, "label sets index different rasters");
  }
  LabelSet out = base;
  for (const auto& s : additions.samples()) out.set(s.row, s.col, s.class_id);
  return out;
}

json labels_to_json(const LabelSet& labels) {
  json samples = json::array();
  for (const auto& s : labels.samples()) {
    samples.push_back({{"row", s.row}, {"col", s.col}, {"class", s.class_id}});
  }
  return {{"raster_digest", labels.raster_digest()}, {"samples", samples}};
}

LabelSet labels_from_json(const json& j) {
  try {
    LabelSet out(j.value("raster_digest", std::string{}));
    for (const auto& s : j.at("samples")) {
      out.set(s.at("row").get<int>(), s.at("col").get<int>(), s.at("class").get<int>());
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadLabel, std::string("malformed label set: ") + e.what());
  }
}

LabelSet read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return labels_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::BadLabel, path.string() + ": " + e.what());
  }
}

void write_labels(const LabelSet& labels, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << labels_to_json(labels).dump() << '\n';
}

void Normalizer::apply(std::span<const double> raw, std::span<double> out) const {
  for (std::size_t b = 0; b < mean.size(); ++b) out[b] = (raw[b] - mean[b]) / std[b];
}

Normalizer fit_normalizer(std::span<const double> features, std::size_t bands) {
  Normalizer n;
  n.mean.assign(bands, 0.0);
  n.std.assign(bands, 1.0);
  const std::size_t rows = bands == 0 ? 0 : features.size() / bands;
  if (rows == 0) return n;
  for (std::size_t b = 0; b < bands; ++b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < rows; ++i) sum += features[i * bands + b];
    const double mean = sum / static_cast<double>(rows);
    double sq = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      const double d = features[i * bands + b] - mean;
      sq += d * d;
    }
    const double sd = std::sqrt(sq / static_cast<double>(rows));
    n.mean[b] = mean;
    n.std[b] = sd > 0.0 ? sd : 1.0;
  }
  return n;
}

std::vector<double> pixel_features(const RasterImage& raster, int row, int col) {
  std::vector<double> out(static_cast<std::size_t>(raster.band_count()));
  const std::size_t pix = raster.index(row, col);
  for (int b = 0; b < raster.band_count(); ++b) out[static_cast<std::size_t>(b)] = raster.band(b)[pix];
  return out;
}

TrainingSet build_training_set(const RasterImage& raster, const LabelSet& labels,
                               const Palette* palette) {
  if (labels.raster_digest() != raster_digest(raster)) {
    throw Error(ErrorCode::StaleLabels, "labels were drawn on a different raster");
  }
  const auto bands = static_cast<std::size_t>(raster.band_count());
  TrainingSet ts;
  ts.features.cols = bands;
  for (const auto& s : labels.samples()) {
    if (!raster.in_bounds(s.row, s.col) || raster.is_nodata(s.row, s.col)) {
      throw Error(ErrorCode::BadLabel,
                  "label at (" + std::to_string(s.row) + "," + std::to_string(s.col) +
                      ") is outside the raster or on nodata");
    }
    if (palette != nullptr && palette->find(s.class_id) == nullptr) {
      throw Error(ErrorCode::UnknownClass, "label uses undefined class " + std::to_string(s.class_id),
                  s.class_id);
    }
    const auto raw = pixel_features(raster, s.row, s.col);
    ts.features.values.insert(ts.features.values.end(), raw.begin(), raw.end());
    ts.targets.push_back(s.class_id);
  }
  ts.features.rows = ts.targets.size();

  ts.normalizer = fit_normalizer(ts.features.values, bands);
  for (std::size_t i = 0; i < ts.features.rows; ++i) {
    std::span<double> row(ts.features.values.data() + i * bands, bands);
    ts.normalizer.apply(row, row);
  }

  if (palette != nullptr) {
    const auto counts = labels.counts();
    for (const auto& c : palette->classes()) {
      if (!counts.contains(c.id)) {
        ts.warnings.push_back("class " + std::to_string(c.id) + " (" + c.name +
                              ") has no samples and is skipped");
      }
    }
  }
  return ts;
}

ClassMap::ClassMap(int width, int height, std::vector<int> class_table)
    : width_(width),
      height_(height),
      ids_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0),
      table_(std::move(class_table)) {
  std::sort(table_.begin(), table_.end());
  table_.erase(std::unique(table_.begin(), table_.end()), table_.end());
}

void write_classmap(const ClassMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  const std::int32_t header[3] = {map.width(), map.height(),
                                  static_cast<std::int32_t>(map.class_table().size())};
  out.write("DFCM", 4);
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(map.class_table().data()),
            static_cast<std::streamsize>(map.class_table().size() * sizeof(int)));
  out.write(reinterpret_cast<const char*>(map.ids().data()),
            static_cast<std::streamsize>(map.ids().size_bytes()));
}

ClassMap read_classmap(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  std::int32_t header[3] = {};
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || std::string(magic, 4) != "DFCM" || header[0] <= 0 || header[1] <= 0 || header[2] < 0) {
    throw Error(ErrorCode::Io, "bad class map file " + path.string());
  }
  std::vector<int> table(static_cast<std::size_t>(header[2]));
  in.read(reinterpret_cast<char*>(table.data()), static_cast<std::streamsize>(table.size() * sizeof(int)));
  ClassMap map(header[0], header[1], std::move(table));
  in.read(reinterpret_cast<char*>(map.ids().data()), static_cast<std::streamsize>(map.ids().size_bytes()));
  if (!in) throw Error(ErrorCode::Io, "truncated class map file " + path.string());
  return map;
}

Evaluation evaluate(const ClassMap& map, const LabelSet& truth) {
  if (truth.empty()) throw Error(ErrorCode::EmptyEvaluation, "no truth samples");
  Evaluation ev;
  ev.classes = map.class_table();
  const std::size_t k = ev.classes.size();
  auto slot = [&](int id) -> std::optional<std::size_t> {
    auto it = std::lower_bound(ev.classes.begin(), ev.classes.end(), id);
    if (it == ev.classes.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - ev.classes.begin());
  };
  ev.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::size_t correct = 0;
  for (const auto& s : truth.samples()) {
    if (s.row < 0 || s.col < 0 || s.row >= map.height() || s.col >= map.width()) {
      throw Error(ErrorCode::BadLabel, "truth pixel out of bounds");
    }
    const auto t = slot(s.class_id);
    if (!t) {
      throw Error(ErrorCode::UnknownClass,
                  "truth class " + std::to_string(s.class_id) + " is not in the map's class table",
                  s.class_id);
    }
    const int predicted = map.at(s.row, s.col);
    if (predicted == 0) continue;
    const auto p = slot(predicted);
    if (!p) continue;
    ++ev.confusion[*t][*p];
    ++ev.valid;
    if (*t == *p) ++correct;
  }
  if (ev.valid == 0) throw Error(ErrorCode::EmptyEvaluation, "no truth pixel was classified");
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(ev.valid);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t total = 0;
    for (std::size_t j = 0; j < k; ++j) total += ev.confusion[i][j];
    if (total == 0) {
      ev.recall.emplace_back();
    } else {
      ev.recall.emplace_back(static_cast<double>(ev.confusion[i][i]) / static_cast<double>(total));
    }
  }
  return ev;
}

json evaluation_to_json(const Evaluation& e) {
  json recall = json::array();
  for (const auto& r : e.recall) recall.push_back(r ? json(*r) : json(nullptr));
  return {{"classes", e.classes}, {"confusion", e.confusion}, {"accuracy", e.accuracy},
          {"recall", recall}, {"valid", e.valid}};
}

}  // namespace deltaforge
