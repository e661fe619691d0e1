#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "deltaforge/error.hpp"
#include "deltaforge/service.hpp"
#include "deltaforge/workflow.hpp"

using namespace deltaforge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json counts_json(const std::map<int, std::size_t>& counts) {
  json out = json::object();
  for (auto [cls, n] : counts) out[std::to_string(cls)] = n;
  return out;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadRequest, path.string() + ": " + e.what());
  }
}

Service* g_service = nullptr;

void on_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deltaforge: satellite raster to OSM vector pipeline"};
  app.require_subcommand(1);

  std::string session_dir = ".";
  std::string config_path;
  app.add_option("--session", session_dir, "Session directory")->capture_default_str();
  app.add_option("--config", config_path, "Pipeline config JSON");

  auto* create = app.add_subcommand("create", "Create a session for a raster");
  std::string raster, palette, gcps;
  int epsg = 0;
  create->add_option("--raster", raster, "GeoTIFF or gridpack header")->required();
  create->add_option("--palette", palette, "Class palette JSON")->required();
  create->add_option("--gcps", gcps, "Ground control points JSON; replaces the raster geotransform");
  create->add_option("--epsg", epsg, "Override the raster CRS");

  auto* label = app.add_subcommand("label", "Add training labels");
  std::string label_file;
  label->add_option("--file", label_file, "Label set JSON")->required();

  auto* train = app.add_subcommand("train", "Train a classifier");
  std::string model = "svm";
  std::optional<double> c, gamma;
  std::optional<int> k;
  std::optional<std::uint64_t> seed;
  train->add_option("--model", model, "svm or knn")->check(CLI::IsMember({"svm", "knn"}))->capture_default_str();
  train->add_option("--c", c, "SVM C");
  train->add_option("--gamma", gamma, "RBF gamma");
  train->add_option("--k", k, "k-NN neighbours");
  train->add_option("--seed", seed, "Split and SMO seed");

  auto* classify = app.add_subcommand("classify", "Classify every pixel");

  auto* vectorize = app.add_subcommand("vectorize", "Trace features from the class map");
  std::optional<double> epsilon;
  std::optional<int> min_pixels;
  bool skeleton = false;
  vectorize->add_option("--epsilon", epsilon, "Douglas-Peucker tolerance in pixels");
  vectorize->add_flag("--skeleton", skeleton, "Also store medial skeleton lines");
  vectorize->add_option("--min-pixels", min_pixels, "Skip smaller components");

  auto* edit = app.add_subcommand("edit", "Apply a geometry patch file");
  std::string patch_file;
  edit->add_option("patch", patch_file, "Patch JSON")->required();

  auto* validate = app.add_subcommand("validate", "Mark a feature validated");
  std::vector<std::string> ids;
  validate->add_option("--id", ids, "Feature id")->required();

  auto* exp = app.add_subcommand("export", "Export features");
  std::string format, out_path;
  bool include_unvalidated = false;
  exp->add_option("--format", format, "osm, geojson or snapshot")
      ->required()
      ->check(CLI::IsMember({"osm", "geojson", "snapshot"}));
  exp->add_option("--out", out_path, "Output file")->required();
  exp->add_flag("--include-unvalidated", include_unvalidated, "Also export auto and edited features");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  int port = 8080;
  std::string host = "127.0.0.1";
  serve->add_option("--port", port, "Port")->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    std::optional<PipelineConfig> config;
    if (!config_path.empty()) config = config_from_json(read_json_file(config_path));

    if (*create) {
      CreateOptions options;
      if (!gcps.empty()) options.gcps = gcps;
      if (epsg != 0) options.epsg = epsg;
      const Session s = session_create(session_dir, raster, read_palette(palette), config.value_or(PipelineConfig{}), options);
      std::cout << session_summary(s).dump(2) << '\n';
      return 0;
    }

    if (*serve) {
      Service service(session_dir);
      const int bound = service.bind(host, port);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving " << fs::absolute(session_dir).string() << " on http://" << host << ":" << bound << '\n';
      service.run();
      g_service = nullptr;
      return 0;
    }

    Session s = session_load(session_dir);
    if (config) s.config = *config;
    json out;

    if (*label) {
      const LabelSet labels = read_labels(label_file);
      out["counts"] = counts_json(add_labels(s, labels.samples(), labels.raster_digest()));
      out["total"] = s.labels.size();
    } else if (*train) {
      const TrainResult r = run_train(s, parse_model_kind(model), {c, gamma, k, seed});
      out = iteration_to_json(r.record);
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    } else if (*classify) {
      const ClassifyResult r = run_classify(s);
      out["pixel_counts"] = counts_json(r.pixel_counts);
      out["overlay"] = r.overlay.string();
    } else if (*vectorize) {
      VectorizeOptions o{epsilon, skeleton ? std::optional(true) : std::nullopt, min_pixels};
      const VectorizeResult r = run_vectorize(s, o);
      out = {{"polygons", r.polygons},
             {"skeletons", r.skeletons},
             {"skipped_small", r.skipped_small},
             {"simplification_reverted", r.simplification_reverted}};
    } else if (*edit) {
      const auto versions = apply_patches(s, patches_from_json(read_json_file(patch_file)));
      out["versions"] = versions;
    } else if (*validate) {
      std::vector<FeaturePatch> patches;
      for (const auto& id : ids) patches.push_back({id, std::nullopt, Stage::Validated});
      out["versions"] = apply_patches(s, patches);
    } else if (*exp) {
      const ExportResult r = export_session(s, parse_export_format(format), include_unvalidated);
      write_export(r, out_path);
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
      out = {{"path", out_path}, {"features", r.feature_count}};
      std::cout << out.dump(2) << '\n';
      return 0;  // export does not modify the session
    }

    session_save(s);
    std::cout << out.dump(2) << '\n';
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
