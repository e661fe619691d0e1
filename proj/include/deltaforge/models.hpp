#pragma once

#include <cstdint>
#include <variant>

#include "deltaforge/classify.hpp"

namespace deltaforge {

struct KnnModel {
  int k = 5;
  FeatureMatrix features;  // normalized training vectors, stored verbatim
  std::vector<int> targets;
  Normalizer normalizer;

  bool operator==(const KnnModel& o) const {
    return k == o.k && features.values == o.features.values && features.cols == o.features.cols &&
           targets == o.targets && normalizer == o.normalizer;
  }
};

KnnModel train_knn(const TrainingSet& training, int k);

/// Majority vote of the k nearest training vectors (squared Euclidean,
/// distance ties broken by training order, vote ties by smallest class id).
int knn_predict(const KnnModel& model, std::span<const double> normalized);

enum class KernelKind { Linear, Rbf };

struct SvmParams {
  double c = 10.0;
  KernelKind kernel = KernelKind::Rbf;
  std::optional<double> gamma;  // default 1 / (bands * mean band variance)
  double tol = 1e-3;
  int max_passes = 20;
  std::uint64_t seed = 42;
};

/// One-vs-rest binary machine: f(x) = sum_i coef_i K(sv_i, x) + bias,
/// where coef_i = alpha_i * y_i.
struct BinarySvm {
  int class_id = 0;
  FeatureMatrix support_vectors;
  std::vector<double> alpha;
  std::vector<double> coef;
  double bias = 0.0;
  bool operator==(const BinarySvm& o) const {
    return class_id == o.class_id && support_vectors.values == o.support_vectors.values &&
           alpha == o.alpha && coef == o.coef && bias == o.bias;
  }
};

struct SvmModel {
  std::vector<BinarySvm> machines;  // sorted by class id
  KernelKind kernel = KernelKind::Rbf;
  double gamma = 1.0;
  double c = 10.0;
  std::uint64_t seed = 42;
  Normalizer normalizer;
  bool operator==(const SvmModel&) const = default;
};

/// Simplified SMO per one-vs-rest machine.
SvmModel train_svm(const TrainingSet& training, const SvmParams& params = {});

double svm_decision(const SvmModel& model, const BinarySvm& machine,
                    std::span<const double> normalized);
/// Largest decision value; ties go to the smaller class id.
int svm_predict(const SvmModel& model, std::span<const double> normalized);

using Model = std::variant<KnnModel, SvmModel>;

const Normalizer& model_normalizer(const Model& model);
std::vector<int> model_classes(const Model& model);
int predict_pixel(const Model& model, std::span<const double> raw, std::span<double> scratch);

/// Classifies every pixel; nodata pixels become 0. Rows are distributed
/// over OpenMP threads; `threads` <= 0 uses the runtime default.
ClassMap predict_map(const Model& model, const RasterImage& raster, int threads = 0);

/// Single-threaded reference for predict_map.
ClassMap predict_map_serial(const Model& model, const RasterImage& raster);

nlohmann::json model_to_json(const Model& model);
Model model_from_json(const nlohmann::json& j);

}  // namespace deltaforge
