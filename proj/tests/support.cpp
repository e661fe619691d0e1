#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <zlib.h>

namespace testsupport {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          (tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter.fetch_add(1)));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

namespace {

class Bytes {
 public:
  explicit Bytes(bool big) : big_(big) {}
  std::vector<std::uint8_t> data;

  void u8(std::uint8_t v) { data.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void put(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) {
      const int shift = big_ ? 8 * (width - 1 - i) : 8 * i;
      data.push_back(static_cast<std::uint8_t>((v >> shift) & 0xff));
    }
  }

 private:
  bool big_;
};

void encode_sample(Bytes& out, double v, int bits, int format) {
  if (format == 3) {
    if (bits != 32) throw std::invalid_argument("float fixtures are 32-bit");
    const float f = static_cast<float>(v);
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    out.u32(u);
    return;
  }
  const auto i = static_cast<std::int64_t>(std::llround(v));
  out.put(static_cast<std::uint64_t>(i), bits / 8);
}

struct Entry {
  std::uint16_t tag;
  std::uint16_t type;
  std::uint32_t count;
  std::vector<std::uint8_t> payload;
};

}  // namespace

std::vector<std::uint8_t> write_tiff(const TiffSpec& spec) {
  const bool big = spec.big_endian;
  const int w = spec.width, h = spec.height, nb = spec.bands;
  const int bps = spec.bits / 8;
  const int planes = spec.planar ? nb : 1;
  const int spp_chunk = spec.planar ? 1 : nb;
  auto sample = [&](int band, int row, int col) {
    return spec.samples[static_cast<std::size_t>(band) * static_cast<std::size_t>(w * h) +
                        static_cast<std::size_t>(row * w + col)];
  };

  // Chunk payloads.
  std::vector<std::vector<std::uint8_t>> chunks;
  const int cw = spec.tiled ? spec.tile_width : w;
  const int ch = spec.tiled ? spec.tile_height : (spec.rows_per_strip > 0 ? spec.rows_per_strip : h);
  const int across = (w + cw - 1) / cw;
  const int down = (h + ch - 1) / ch;
  for (int p = 0; p < planes; ++p) {
    for (int cy = 0; cy < down; ++cy) {
      for (int cx = 0; cx < across; ++cx) {
        Bytes raw(big);
        const int rows = spec.tiled ? ch : std::min(ch, h - cy * ch);
        for (int y = 0; y < rows; ++y) {
          for (int x = 0; x < cw; ++x) {
            const int row = cy * ch + y, col = cx * cw + x;
            for (int s = 0; s < spp_chunk; ++s) {
              const int band = spec.planar ? p : s;
              const double v = (row < h && col < w) ? sample(band, row, col) : 0.0;
              encode_sample(raw, v, spec.bits, spec.sample_format);
            }
          }
        }
        if (spec.compression == 8) {
          uLongf len = compressBound(static_cast<uLong>(raw.data.size()));
          std::vector<std::uint8_t> z(len);
          if (compress2(z.data(), &len, raw.data.data(), static_cast<uLong>(raw.data.size()), 6) != Z_OK) {
            throw std::runtime_error("compress2 failed");
          }
          z.resize(len);
          chunks.push_back(std::move(z));
        } else {
          chunks.push_back(std::move(raw.data));
        }
      }
    }
  }

  auto build = [&](std::uint32_t data_start) {
    std::vector<Entry> entries;
    auto add = [&](std::uint16_t tag, std::uint16_t type, const std::vector<double>& values) {
      Bytes b(big);
      for (double v : values) {
        switch (type) {
          case 3: b.u16(static_cast<std::uint16_t>(v)); break;
          case 4: b.u32(static_cast<std::uint32_t>(v)); break;
          case 12: b.f64(v); break;
        }
      }
      entries.push_back({tag, type, static_cast<std::uint32_t>(values.size()), std::move(b.data)});
    };
    auto shorts = [&](std::uint16_t tag, double v, int n = 1) { add(tag, 3, std::vector<double>(static_cast<std::size_t>(n), v)); };

    add(256, 4, {static_cast<double>(w)});
    add(257, 4, {static_cast<double>(h)});
    shorts(258, spec.bits, nb);
    shorts(259, spec.compression);
    shorts(262, nb == 3 ? 2 : 1);
    std::vector<double> offsets, counts;
    std::uint32_t at = data_start;
    for (const auto& c : chunks) {
      offsets.push_back(at);
      counts.push_back(static_cast<double>(c.size()));
      at += static_cast<std::uint32_t>(c.size());
    }
    if (!spec.tiled) add(273, 4, offsets);
    shorts(277, nb);
    if (!spec.tiled) add(278, 4, {static_cast<double>(ch)});
    if (!spec.tiled) add(279, 4, counts);
    shorts(284, spec.planar ? 2 : 1);
    if (spec.predictor) shorts(317, *spec.predictor);
    if (spec.tiled) {
      add(322, 4, {static_cast<double>(cw)});
      add(323, 4, {static_cast<double>(ch)});
      add(324, 4, offsets);
      add(325, 4, counts);
    }
    shorts(339, spec.sample_format, nb);
    if (spec.pixel_scale) add(33550, 12, {(*spec.pixel_scale)[0], (*spec.pixel_scale)[1], (*spec.pixel_scale)[2]});
    if (spec.tiepoint) add(33922, 12, std::vector<double>(spec.tiepoint->begin(), spec.tiepoint->end()));
    if (spec.epsg) {
      const double model = spec.geographic ? 2 : 1;
      const double key = spec.geographic ? 2048 : 3072;
      add(34735, 3, {1, 1, 0, 2, 1024, 0, 1, model, key, 0, 1, static_cast<double>(*spec.epsg)});
    }
    if (spec.nodata) {
      std::vector<std::uint8_t> text(spec.nodata->begin(), spec.nodata->end());
      text.push_back(0);
      entries.push_back({42113, 2, static_cast<std::uint32_t>(text.size()), text});
    }
    return entries;
  };

  auto layout = [&](std::vector<Entry>& entries, Bytes& out) {
    out.data.clear();
    if (big) {
      out.u8('M');
      out.u8('M');
    } else {
      out.u8('I');
      out.u8('I');
    }
    out.u16(42);
    out.u32(8);
    const std::uint32_t ifd_size = static_cast<std::uint32_t>(2 + entries.size() * 12 + 4);
    std::uint32_t overflow = 8 + ifd_size;
    std::vector<std::uint8_t> extra;
    out.u16(static_cast<std::uint16_t>(entries.size()));
    for (const auto& e : entries) {
      out.u16(e.tag);
      out.u16(e.type);
      out.u32(e.count);
      if (e.payload.size() <= 4) {
        auto p = e.payload;
        p.resize(4, 0);
        out.data.insert(out.data.end(), p.begin(), p.end());
      } else {
        out.u32(overflow + static_cast<std::uint32_t>(extra.size()));
        extra.insert(extra.end(), e.payload.begin(), e.payload.end());
        if (extra.size() % 2) extra.push_back(0);
      }
    }
    out.u32(0);
    out.data.insert(out.data.end(), extra.begin(), extra.end());
    return static_cast<std::uint32_t>(out.data.size());
  };

  Bytes out(big);
  auto entries = build(0);
  const std::uint32_t data_start = layout(entries, out);
  entries = build(data_start);
  layout(entries, out);
  for (const auto& c : chunks) out.data.insert(out.data.end(), c.begin(), c.end());
  if (spec.truncate_bytes > 0) out.data.resize(out.data.size() - std::min(spec.truncate_bytes, out.data.size()));
  return out.data;
}

std::vector<double> random_samples(std::mt19937_64& rng, std::size_t n, int bits, int format) {
  std::vector<double> out(n);
  for (auto& v : out) {
    if (format == 3) {
      v = static_cast<double>(static_cast<float>(std::uniform_real_distribution<double>(-1e4, 1e4)(rng)));
    } else if (format == 2) {
      const std::int64_t lo = -(std::int64_t{1} << (bits - 1));
      const std::int64_t hi = (std::int64_t{1} << (bits - 1)) - 1;
      v = static_cast<double>(std::uniform_int_distribution<std::int64_t>(lo, hi)(rng));
    } else {
      const std::uint64_t hi = (std::uint64_t{1} << bits) - 1;
      v = static_cast<double>(std::uniform_int_distribution<std::uint64_t>(0, hi)(rng));
    }
  }
  return out;
}

const std::array<SpectralClass, 3>& delta_classes() {
  static const std::array<SpectralClass, 3> classes{{
      {kWater, {800.0, 500.0, 300.0}},
      {kVegetation, {700.0, 500.0, 4000.0}},
      {kSoil, {1500.0, 2000.0, 2500.0}},
  }};
  return classes;
}

namespace {

int delta_truth(double n, int row, int col) {
  const double r = row, c = col;
  const double sea = 0.78 * n + 0.03 * n * std::sin(2.0 * std::numbers::pi * c / (0.3 * n));
  if (r > sea) return kWater;
  const double bank = 0.016 * n;
  bool near_water = r > sea - bank;

  const double trunk_hw = 0.035 * n;
  if (r < 0.3 * n) {
    const double d = std::abs(c - 0.5 * n);
    if (d <= trunk_hw) return kWater;
    near_water = near_water || d <= trunk_hw + bank;
  } else {
    static constexpr std::array<double, 5> targets{0.12, 0.3, 0.5, 0.7, 0.88};
    const double t = std::clamp((r - 0.3 * n) / (0.5 * n), 0.0, 1.0);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const double x = 0.5 * n + (targets[i] - 0.5) * n * std::pow(t, 1.3) +
                       0.015 * n * std::sin(r / (0.05 * n) + static_cast<double>(i));
      const double hw = 0.02 * n * (1.0 - 0.4 * t) + 1.0;
      const double d = std::abs(c - x);
      if (d <= hw) return kWater;
      near_water = near_water || d <= hw + bank;
    }
  }
  // An inland lake and a bare sandbar.
  if (std::hypot(r - 0.55 * n, c - 0.2 * n) < 0.045 * n) return kWater;
  if (near_water) return kSoil;
  if (std::hypot(r - 0.15 * n, c - 0.2 * n) < 0.07 * n) return kSoil;
  if (std::hypot(r - 0.6 * n, c - 0.61 * n) < 0.03 * n) return kSoil;
  return kVegetation;
}

}  // namespace

SyntheticDelta make_delta(int size, std::uint64_t seed) {
  const int n = size;
  ClassMap truth(n, n, {kWater, kVegetation, kSoil});
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) truth.set(r, c, delta_truth(n, r, c));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, kDeltaNoise);
  std::vector<std::vector<double>> bands(3, std::vector<double>(static_cast<std::size_t>(n) * n));
  for (std::size_t b = 0; b < 3; ++b) {
    for (std::size_t i = 0; i < bands[b].size(); ++i) {
      const int cls = truth.ids()[i];
      bands[b][i] = delta_classes()[static_cast<std::size_t>(cls - 1)].mean[b] + noise(rng);
    }
  }
  AffineTransform geo{30.0, 0.0, 650000.0, 0.0, -30.0, 3290000.0};
  RasterImage raster(n, n, std::move(bands), std::nullopt, geo, CrsId::utm(15, Hemisphere::North),
                     {"green", "red", "nir"});
  return {std::move(raster), std::move(truth)};
}

double nearest_mean_accuracy(const SyntheticDelta& d) {
  std::size_t correct = 0;
  const auto n = d.raster.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    int best = 0;
    double best_d = INFINITY;
    for (const auto& c : delta_classes()) {
      double s = 0;
      for (int b = 0; b < 3; ++b) {
        const double diff = d.raster.band(b)[i] - c.mean[static_cast<std::size_t>(b)];
        s += diff * diff;
      }
      if (s < best_d) {
        best_d = s;
        best = c.id;
      }
    }
    if (best == d.truth.ids()[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

Palette delta_palette() {
  return Palette({{kWater, "water", {30, 90, 200}, std::nullopt},
                  {kVegetation, "vegetation", {40, 150, 60}, std::nullopt},
                  {kSoil, "soil", {170, 130, 80}, std::nullopt}});
}

std::vector<LabelSample> sample_labels(const ClassMap& truth, int per_class, std::mt19937_64& rng) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < truth.ids().size(); ++i) by_class[truth.ids()[i]].push_back(i);
  std::vector<LabelSample> out;
  for (auto& [cls, idx] : by_class) {
    if (cls == 0) continue;
    for (int k = 0; k < per_class && !idx.empty(); ++k) {
      const std::size_t pick = rng() % idx.size();
      const std::size_t i = idx[pick];
      idx[pick] = idx.back();
      idx.pop_back();
      out.push_back({static_cast<int>(i / static_cast<std::size_t>(truth.width())),
                     static_cast<int>(i % static_cast<std::size_t>(truth.width())), cls});
    }
  }
  return out;
}

ClassMap random_blobs(int width, int height, int classes, double fill, std::mt19937_64& rng) {
  std::vector<int> table;
  for (int c = 1; c <= classes; ++c) table.push_back(c);
  ClassMap map(width, height, table);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int shapes = 2 + static_cast<int>(rng() % 12);
  for (int s = 0; s < shapes; ++s) {
    const int cls = 1 + static_cast<int>(rng() % static_cast<unsigned>(classes));
    const double cr = u(rng) * height, cc = u(rng) * width;
    const double rad = 1.0 + u(rng) * 0.3 * std::max(width, height);
    const bool disk = rng() % 2 == 0;
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const bool inside = disk ? std::hypot(r - cr, c - cc) <= rad
                                 : std::abs(r - cr) <= rad * 0.6 && std::abs(c - cc) <= rad;
        if (inside) map.set(r, c, cls);
      }
    }
  }
  // Specks and erasures so diagonal contacts and holes show up.
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const double x = u(rng);
      if (x < 0.03 * (1.0 - fill)) map.set(r, c, 0);
      else if (x < 0.05) map.set(r, c, 1 + static_cast<int>(rng() % static_cast<unsigned>(classes)));
    }
  }
  return map;
}

ClassMap random_noise(int width, int height, int classes, double fill, std::mt19937_64& rng) {
  std::vector<int> table;
  for (int c = 1; c <= classes; ++c) table.push_back(c);
  ClassMap map(width, height, table);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (u(rng) < fill) map.set(r, c, 1 + static_cast<int>(rng() % static_cast<unsigned>(classes)));
    }
  }
  return map;
}

ClassMap from_rows(const std::vector<std::string>& rows) {
  const int h = static_cast<int>(rows.size());
  const int w = h == 0 ? 0 : static_cast<int>(rows[0].size());
  std::vector<int> ids;
  for (const auto& row : rows) {
    for (char ch : row) {
      if (ch != '.' && std::find(ids.begin(), ids.end(), ch - '0') == ids.end()) ids.push_back(ch - '0');
    }
  }
  std::sort(ids.begin(), ids.end());
  ClassMap map(w, h, ids);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const char ch = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      map.set(r, c, ch == '.' ? 0 : ch - '0');
    }
  }
  return map;
}

std::vector<int> flood_fill_labels(const ClassMap& map) {
  const int w = map.width(), h = map.height();
  std::vector<int> labels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0);
  int next = 0;
  std::vector<std::pair<int, int>> stack;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (map.at(r, c) == 0 || labels[map.index(r, c)] != 0) continue;
      const int cls = map.at(r, c);
      labels[map.index(r, c)] = ++next;
      stack.push_back({r, c});
      while (!stack.empty()) {
        auto [y, x] = stack.back();
        stack.pop_back();
        const int dy[] = {-1, 1, 0, 0}, dx[] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
          const int ny = y + dy[k], nx = x + dx[k];
          if (ny < 0 || nx < 0 || ny >= h || nx >= w) continue;
          if (map.at(ny, nx) != cls || labels[map.index(ny, nx)] != 0) continue;
          labels[map.index(ny, nx)] = next;
          stack.push_back({ny, nx});
        }
      }
    }
  }
  return labels;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] == 0) != (b[i] == 0)) return false;
    if (a[i] == 0) continue;
    auto [it1, new1] = ab.try_emplace(a[i], b[i]);
    auto [it2, new2] = ba.try_emplace(b[i], a[i]);
    if (it1->second != b[i] || it2->second != a[i]) return false;
  }
  return true;
}

}  // namespace testsupport
