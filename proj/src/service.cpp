#include "deltaforge/service.hpp"

#include <atomic>
#include <map>
#include <mutex>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "deltaforge/hashing.hpp"
#include "deltaforge/workflow.hpp"

namespace deltaforge {

using nlohmann::json;
namespace fs = std::filesystem;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::Busy:
    case ErrorCode::IllegalTransition:
    case ErrorCode::NoModel:
    case ErrorCode::NoClassMap:
      return 409;
    case ErrorCode::Io:
      return 500;
    default:
      return 400;
  }
}

namespace {

struct Entry {
  fs::path dir;
  std::mutex write;
  mutable std::mutex state_mutex;  // guards `current` and `status`
  std::shared_ptr<const Session> current;
  json status = {{"state", "idle"}, {"operation", nullptr}, {"last_error", nullptr}};

  std::shared_ptr<const Session> snapshot() const {
    std::lock_guard lock(state_mutex);
    return current;
  }
  json status_copy() const {
    std::lock_guard lock(state_mutex);
    return status;
  }
};

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                std::optional<std::int64_t> detail = std::nullopt) {
  json body = {{"error", code}, {"message", message}};
  if (detail) body["detail"] = *detail;
  send_json(res, body, status);
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadRequest, std::string("request body is not JSON: ") + e.what());
  }
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_number(const std::string& s, std::string_view what) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw Error(ErrorCode::BadRequest, "bad " + std::string(what) + " '" + s + "'");
  return v;
}

template <class T>
std::optional<T> opt(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  try {
    return j[key].get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadRequest, std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

struct Service::Impl {
  fs::path root;
  httplib::Server server;
  std::mutex registry_mutex;
  std::map<std::string, std::shared_ptr<Entry>> sessions;
  std::function<void(std::string_view)> write_hook;
  std::atomic<std::uint64_t> created{0};

  explicit Impl(fs::path r) : root(std::move(r)) {
    if (is_session_dir(root)) {
      add(root);
    } else if (fs::is_directory(root)) {
      for (const auto& d : fs::directory_iterator(root)) {
        if (d.is_directory() && is_session_dir(d.path())) add(d.path());
      }
    } else {
      fs::create_directories(root);
    }
    routes();
  }

  void add(const fs::path& dir) {
    auto e = std::make_shared<Entry>();
    e->dir = dir;
    e->current = std::make_shared<const Session>(session_load(dir));
    std::lock_guard lock(registry_mutex);
    sessions[e->current->id] = e;
  }

  std::shared_ptr<Entry> find(const std::string& id) {
    std::lock_guard lock(registry_mutex);
    auto it = sessions.find(id);
    if (it == sessions.end()) throw Error(ErrorCode::NotFound, "no session '" + id + "'");
    return it->second;
  }

  template <class F>
  void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), to_string(e.code()), e.what(), e.detail());
    } catch (const std::exception& e) {
      send_error(res, 500, "Internal", e.what());
    }
  }

  /// Runs `f` on a private copy of the session under its write lock, then
  /// persists and publishes the result.
  template <class F>
  void write_op(const httplib::Request& req, httplib::Response& res, std::string_view op, F&& f) {
    guarded(res, [&] {
      auto entry = find(req.matches[1]);
      std::unique_lock lock(entry->write, std::try_to_lock);
      if (!lock.owns_lock()) throw Error(ErrorCode::Busy, "session is busy with another write");
      {
        std::lock_guard s(entry->state_mutex);
        entry->status["state"] = "busy";
        entry->status["operation"] = op;
      }
      try {
        if (write_hook) write_hook(op);
        Session copy = *entry->snapshot();
        json out = f(copy);
        session_save(copy);
        std::lock_guard s(entry->state_mutex);
        entry->current = std::make_shared<const Session>(std::move(copy));
        entry->status = {{"state", "idle"}, {"operation", nullptr}, {"last_error", nullptr}};
        send_json(res, out);
      } catch (const std::exception& e) {
        std::lock_guard s(entry->state_mutex);
        entry->status = {{"state", "idle"}, {"operation", nullptr}, {"last_error", e.what()}};
        throw;
      }
    });
  }

  template <class F>
  void read_op(const httplib::Request& req, httplib::Response& res, F&& f) {
    guarded(res, [&] {
      auto entry = find(req.matches[1]);
      f(*entry->snapshot());
    });
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

    server.Get("/sessions", [this](const httplib::Request&, httplib::Response& res) {
      json ids = json::array();
      std::lock_guard lock(registry_mutex);
      for (const auto& [id, e] : sessions) ids.push_back(id);
      send_json(res, {{"sessions", ids}});
    });

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = body_json(req);
        const auto raster = opt<std::string>(body, "raster");
        if (!raster) throw Error(ErrorCode::BadRequest, "'raster' path is required");
        if (!body.contains("palette")) throw Error(ErrorCode::BadRequest, "'palette' is required");
        const Palette palette = body["palette"].is_string() ? read_palette(body["palette"].get<std::string>())
                                                            : palette_from_json(body["palette"]);
        const PipelineConfig config = body.contains("config") ? config_from_json(body["config"]) : PipelineConfig{};
        CreateOptions options;
        if (auto g = opt<std::string>(body, "gcps")) options.gcps = *g;
        options.epsg = opt<int>(body, "epsg");

        const std::string name =
            sha256_hex(fs::absolute(*raster).string() + ":" + utc_timestamp() + ":" + std::to_string(created++))
                .substr(0, 16);
        const fs::path dir = root / name;
        Session s = session_create(dir, *raster, palette, config, options);
        auto e = std::make_shared<Entry>();
        e->dir = dir;
        e->current = std::make_shared<const Session>(std::move(s));
        json summary = session_summary(*e->current);
        {
          std::lock_guard lock(registry_mutex);
          sessions[e->current->id] = e;
        }
        send_json(res, summary, 201);
      });
    });

    server.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      read_op(req, res, [&](const Session& s) { send_json(res, session_summary(s)); });
    });

    server.Get(R"(/sessions/([^/]+)/status)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto entry = find(req.matches[1]);
        json status = entry->status_copy();
        const auto s = entry->snapshot();
        status["iteration"] = s->iterations.empty() ? 0 : s->iterations.back().iteration;
        status["has_model"] = s->model.has_value();
        status["has_classmap"] = s->classmap.has_value();
        status["feature_count"] = s->store.size();
        send_json(res, status);
      });
    });

    server.Get(R"(/sessions/([^/]+)/preview\.png)", [this](const httplib::Request& req, httplib::Response& res) {
      read_op(req, res, [&](const Session& s) {
        std::array<int, 3> bands = s.raster->band_count() >= 3 ? std::array{0, 1, 2} : std::array{0, 0, 0};
        if (req.has_param("bands")) {
          const auto parts = split_csv(req.get_param_value("bands"));
          if (parts.size() != 3) throw Error(ErrorCode::BadBandSelection, "bands needs three indices");
          for (int i = 0; i < 3; ++i) bands[static_cast<std::size_t>(i)] = static_cast<int>(parse_number(parts[static_cast<std::size_t>(i)], "band"));
        }
        Stretch stretch;
        if (req.has_param("stretch")) {
          const auto parts = split_csv(req.get_param_value("stretch"));
          if (parts.size() != 2) throw Error(ErrorCode::BadRequest, "stretch needs low,high percentiles");
          stretch = {parse_number(parts[0], "stretch"), parse_number(parts[1], "stretch")};
          if (!(stretch.low >= 0 && stretch.low < stretch.high && stretch.high <= 100)) {
            throw Error(ErrorCode::BadRequest, "stretch must satisfy 0 <= low < high <= 100");
          }
        }
        const auto png = encode_png(render_preview(*s.raster, bands, stretch));
        res.set_content(std::string(png.begin(), png.end()), "image/png");
      });
    });

    server.Get(R"(/sessions/([^/]+)/overlay\.png)", [this](const httplib::Request& req, httplib::Response& res) {
      read_op(req, res, [&](const Session& s) {
        if (!s.classmap) throw Error(ErrorCode::NoClassMap, "session has no class map yet");
        const auto png = encode_png(render_overlay(*s.classmap, s.palette));
        res.set_content(std::string(png.begin(), png.end()), "image/png");
      });
    });

    server.Get(R"(/sessions/([^/]+)/labels)", [this](const httplib::Request& req, httplib::Response& res) {
      read_op(req, res, [&](const Session& s) { send_json(res, labels_to_json(s.labels)); });
    });

    server.Post(R"(/sessions/([^/]+)/labels)", [this](const httplib::Request& req, httplib::Response& res) {
      const json body = [&] {
        try {
          return body_json(req);
        } catch (...) {
          return json();
        }
      }();
      write_op(req, res, "label", [&](Session& s) {
        if (!body.is_object() || !body.contains("samples")) throw Error(ErrorCode::BadRequest, "expected {samples: [...]}");
        const LabelSet parsed = labels_from_json(body);
        const auto counts = add_labels(s, parsed.samples(), parsed.raster_digest());
        json out = json::object();
        for (auto [cls, n] : counts) out[std::to_string(cls)] = n;
        return json{{"counts", out}, {"total", s.labels.size()}};
      });
    });

    server.Post(R"(/sessions/([^/]+)/train)", [this](const httplib::Request& req, httplib::Response& res) {
      write_op(req, res, "train", [&](Session& s) {
        const json body = body_json(req);
        const ModelKind kind = parse_model_kind(opt<std::string>(body, "model").value_or("svm"));
        TrainOverrides o{opt<double>(body, "c"), opt<double>(body, "gamma"), opt<int>(body, "k"),
                         opt<std::uint64_t>(body, "seed")};
        const TrainResult r = run_train(s, kind, o);
        json out = iteration_to_json(r.record);
        out["warnings"] = r.warnings;
        return out;
      });
    });

    server.Post(R"(/sessions/([^/]+)/classify)", [this](const httplib::Request& req, httplib::Response& res) {
      write_op(req, res, "classify", [&](Session& s) {
        const ClassifyResult r = run_classify(s);
        json counts = json::object();
        for (auto [cls, n] : r.pixel_counts) counts[std::to_string(cls)] = n;
        return json{{"pixel_counts", counts}, {"overlay", "/sessions/" + s.id + "/overlay.png"}};
      });
    });

    server.Post(R"(/sessions/([^/]+)/vectorize)", [this](const httplib::Request& req, httplib::Response& res) {
      write_op(req, res, "vectorize", [&](Session& s) {
        const json body = body_json(req);
        VectorizeOptions o{opt<double>(body, "epsilon"), opt<bool>(body, "skeleton"), opt<int>(body, "min_pixels")};
        const VectorizeResult r = run_vectorize(s, o);
        return json{{"polygons", r.polygons},
                    {"skeletons", r.skeletons},
                    {"skipped_small", r.skipped_small},
                    {"simplification_reverted", r.simplification_reverted},
                    {"feature_count", s.store.size()}};
      });
    });

    server.Get(R"(/sessions/([^/]+)/features)", [this](const httplib::Request& req, httplib::Response& res) {
      read_op(req, res, [&](const Session& s) {
        Query q;
        if (req.has_param("bbox")) {
          const auto p = split_csv(req.get_param_value("bbox"));
          if (p.size() != 4) throw Error(ErrorCode::BadRequest, "bbox needs min_x,min_y,max_x,max_y");
          BBox b{parse_number(p[0], "bbox"), parse_number(p[1], "bbox"), parse_number(p[2], "bbox"),
                 parse_number(p[3], "bbox")};
          if (b.min_x > b.max_x || b.min_y > b.max_y) throw Error(ErrorCode::BadRequest, "bbox min exceeds max");
          q.bbox = b;
        }
        if (req.has_param("class")) {
          std::set<int> classes;
          for (const auto& c : split_csv(req.get_param_value("class"))) {
            if (const auto* def = s.palette.find(std::string_view(c))) {
              classes.insert(def->id);
            } else {
              classes.insert(static_cast<int>(parse_number(c, "class")));
            }
          }
          q.classes = classes;
        }
        if (req.has_param("stage")) {
          std::set<Stage> stages;
          for (const auto& st : split_csv(req.get_param_value("stage"))) stages.insert(parse_stage(st));
          q.stages = stages;
        }
        if (req.has_param("kind")) {
          std::set<FeatureKind> kinds;
          for (const auto& k : split_csv(req.get_param_value("kind"))) kinds.insert(parse_kind(k));
          q.kinds = kinds;
        }
        json features = json::array();
        for (const auto& f : s.store.query(q)) features.push_back(feature_to_json(f));
        send_json(res, {{"features", features}});
      });
    });

    server.Patch(R"(/sessions/([^/]+)/features/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      write_op(req, res, "edit", [&](Session& s) {
        json body = body_json(req);
        body["id"] = req.matches[2].str();
        apply_patches(s, patches_from_json(body));
        return feature_to_json(s.store.get(req.matches[2]));
      });
    });

    server.Post(R"(/sessions/([^/]+)/export)", [this](const httplib::Request& req, httplib::Response& res) {
      read_op(req, res, [&](const Session& s) {
        const json body = body_json(req);
        const ExportFormat format = parse_export_format(opt<std::string>(body, "format").value_or("osm"));
        const ExportResult r = export_session(s, format, opt<bool>(body, "include_unvalidated").value_or(false));
        const char* type = format == ExportFormat::Osm       ? "application/xml"
                           : format == ExportFormat::GeoJson ? "application/geo+json"
                                                             : "application/x-ndjson";
        res.set_header("X-Feature-Count", std::to_string(r.feature_count));
        if (!r.warnings.empty()) res.set_header("X-Warning", r.warnings.front());
        res.set_content(r.content, type);
      });
    });
  }
};

Service::Service(fs::path root) : impl_(std::make_unique<Impl>(std::move(root))) {}
Service::~Service() { stop(); }

void Service::set_write_hook(std::function<void(std::string_view)> hook) { impl_->write_hook = std::move(hook); }

int Service::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  if (!impl_->server.bind_to_port(host, port)) throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void Service::run() { impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace deltaforge
