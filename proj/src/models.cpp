#include "deltaforge/models.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "deltaforge/error.hpp"

namespace deltaforge {

using nlohmann::json;

KnnModel train_knn(const TrainingSet& training, int k) {
  const auto n = training.features.rows;
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw Error(ErrorCode::BadK,
                "k=" + std::to_string(k) + " must be in 1.." + std::to_string(n), k);
  }
  KnnModel m;
  m.k = k;
  m.features = training.features;
  m.targets = training.targets;
  m.normalizer = training.normalizer;
  return m;
}

int knn_predict(const KnnModel& model, std::span<const double> x) {
  const std::size_t n = model.features.rows;
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = model.features.row(i);
    double d = 0.0;
    for (std::size_t b = 0; b < row.size(); ++b) d += (row[b] - x[b]) * (row[b] - x[b]);
    dist[i] = {d, i};
  }
  const auto k = static_cast<std::size_t>(model.k);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::map<int, int> votes;
  for (std::size_t i = 0; i < k; ++i) ++votes[model.targets[dist[i].second]];
  int best = 0, best_votes = -1;
  for (const auto& [cls, v] : votes) {  // ascending id, so ties keep the smallest
    if (v > best_votes) {
      best = cls;
      best_votes = v;
    }
  }
  return best;
}

namespace {

double kernel(KernelKind kind, double gamma, std::span<const double> a, std::span<const double> b) {
  if (kind == KernelKind::Linear) {
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return dot;
  }
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return std::exp(-gamma * d);
}

constexpr std::size_t kGramLimit = 4096;
constexpr int kMaxSweeps = 20000;

class Gram {
 public:
  Gram(const FeatureMatrix& x, KernelKind kind, double gamma)
      : x_(x), kind_(kind), gamma_(gamma), cached_(x.rows <= kGramLimit) {
    if (!cached_) return;
    const std::size_t n = x.rows;
    k_.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        k_[i * n + j] = k_[j * n + i] = kernel(kind, gamma, x.row(i), x.row(j));
      }
    }
  }
  double operator()(std::size_t i, std::size_t j) const {
    return cached_ ? k_[i * x_.rows + j] : kernel(kind_, gamma_, x_.row(i), x_.row(j));
  }

 private:
  const FeatureMatrix& x_;
  KernelKind kind_;
  double gamma_;
  bool cached_;
  std::vector<double> k_;
};

BinarySvm train_binary(const FeatureMatrix& x, const Gram& gram, const std::vector<double>& y,
                       int class_id, const SvmParams& p) {
  const std::size_t n = x.rows;
  std::vector<double> alpha(n, 0.0);
  double b = 0.0;
  std::mt19937_64 rng(p.seed ^ (static_cast<std::uint64_t>(class_id) * 0x9E3779B97F4A7C15ull));

  auto f = [&](std::size_t i) {
    double s = b;
    for (std::size_t k = 0; k < n; ++k) {
      if (alpha[k] != 0.0) s += alpha[k] * y[k] * gram(k, i);
    }
    return s;
  };

  int passes = 0;
  for (int sweep = 0; passes < p.max_passes && sweep < kMaxSweeps; ++sweep) {
    int changed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ei = f(i) - y[i];
      if (!((y[i] * ei < -p.tol && alpha[i] < p.c) || (y[i] * ei > p.tol && alpha[i] > 0.0))) {
        continue;
      }
      std::size_t j = static_cast<std::size_t>(rng() % (n - 1));
      if (j >= i) ++j;
      const double ej = f(j) - y[j];
      const double ai_old = alpha[i], aj_old = alpha[j];
      double lo, hi;
      if (y[i] != y[j]) {
        lo = std::max(0.0, aj_old - ai_old);
        hi = std::min(p.c, p.c + aj_old - ai_old);
      } else {
        lo = std::max(0.0, ai_old + aj_old - p.c);
        hi = std::min(p.c, ai_old + aj_old);
      }
      if (lo >= hi) continue;
      const double kij = gram(i, j), kii = gram(i, i), kjj = gram(j, j);
      const double eta = 2.0 * kij - kii - kjj;
      if (eta >= 0.0) continue;
      double aj = std::clamp(aj_old - y[j] * (ei - ej) / eta, lo, hi);
      if (std::abs(aj - aj_old) < 1e-5) continue;
      double ai = std::clamp(ai_old + y[i] * y[j] * (aj_old - aj), 0.0, p.c);
      alpha[i] = ai;
      alpha[j] = aj;
      const double b1 = b - ei - y[i] * (ai - ai_old) * kii - y[j] * (aj - aj_old) * kij;
      const double b2 = b - ej - y[i] * (ai - ai_old) * kij - y[j] * (aj - aj_old) * kjj;
      if (ai > 0.0 && ai < p.c) {
        b = b1;
      } else if (aj > 0.0 && aj < p.c) {
        b = b2;
      } else {
        b = 0.5 * (b1 + b2);
      }
      ++changed;
    }
    passes = changed == 0 ? passes + 1 : 0;
  }

  BinarySvm m;
  m.class_id = class_id;
  m.bias = b;
  m.support_vectors.cols = x.cols;
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] <= 0.0) continue;
    const auto row = x.row(i);
    m.support_vectors.values.insert(m.support_vectors.values.end(), row.begin(), row.end());
    m.alpha.push_back(alpha[i]);
    m.coef.push_back(alpha[i] * y[i]);
  }
  m.support_vectors.rows = m.alpha.size();
  return m;
}

}  // namespace

SvmModel train_svm(const TrainingSet& training, const SvmParams& params) {
  const auto& x = training.features;
  std::vector<int> classes = training.targets;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (x.rows < 2 || classes.size() < 2) {
    throw Error(ErrorCode::DegenerateTraining, "SVM training needs at least two classes");
  }
  if (!(params.c > 0.0) || !(params.tol > 0.0) || params.max_passes < 1) {
    throw Error(ErrorCode::BadRequest, "SVM parameters C, tol and max_passes must be positive");
  }

  SvmModel model;
  model.kernel = params.kernel;
  model.c = params.c;
  model.seed = params.seed;
  model.normalizer = training.normalizer;
  if (params.gamma) {
    model.gamma = *params.gamma;
  } else {
    // Mean per-band population variance of the (normalized) training features.
    double mean_var = 0.0;
    for (std::size_t b = 0; b < x.cols; ++b) {
      double sum = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < x.rows; ++i) sum += x.values[i * x.cols + b];
      const double mean = sum / static_cast<double>(x.rows);
      for (std::size_t i = 0; i < x.rows; ++i) {
        const double d = x.values[i * x.cols + b] - mean;
        sq += d * d;
      }
      mean_var += sq / static_cast<double>(x.rows);
    }
    mean_var /= static_cast<double>(x.cols);
    model.gamma = mean_var > 0.0 ? 1.0 / (static_cast<double>(x.cols) * mean_var)
                                 : 1.0 / static_cast<double>(x.cols);
  }

  const Gram gram(x, model.kernel, model.gamma);
  for (int cls : classes) {
    std::vector<double> y(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) y[i] = training.targets[i] == cls ? 1.0 : -1.0;
    model.machines.push_back(train_binary(x, gram, y, cls, params));
  }
  return model;
}

double svm_decision(const SvmModel& model, const BinarySvm& m, std::span<const double> x) {
  double s = m.bias;
  for (std::size_t i = 0; i < m.coef.size(); ++i) {
    s += m.coef[i] * kernel(model.kernel, model.gamma, m.support_vectors.row(i), x);
  }
  return s;
}

int svm_predict(const SvmModel& model, std::span<const double> x) {
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (const auto& m : model.machines) {  // sorted by id; strict > keeps smallest on ties
    const double v = svm_decision(model, m, x);
    if (v > best_value) {
      best_value = v;
      best = m.class_id;
    }
  }
  return best;
}

const Normalizer& model_normalizer(const Model& model) {
  return std::visit([](const auto& m) -> const Normalizer& { return m.normalizer; }, model);
}

std::vector<int> model_classes(const Model& model) {
  if (const auto* knn = std::get_if<KnnModel>(&model)) {
    std::vector<int> ids = knn->targets;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
  }
  std::vector<int> ids;
  for (const auto& m : std::get<SvmModel>(model).machines) ids.push_back(m.class_id);
  return ids;
}

int predict_pixel(const Model& model, std::span<const double> raw, std::span<double> scratch) {
  model_normalizer(model).apply(raw, scratch);
  if (const auto* knn = std::get_if<KnnModel>(&model)) return knn_predict(*knn, scratch);
  return svm_predict(std::get<SvmModel>(model), scratch);
}

namespace {

void check_bands(const Model& model, const RasterImage& raster) {
  const auto bands = model_normalizer(model).bands();
  if (bands != static_cast<std::size_t>(raster.band_count())) {
    throw Error(ErrorCode::ShapeMismatch,
                "model expects " + std::to_string(bands) + " bands, raster has " +
                    std::to_string(raster.band_count()));
  }
}

void classify_row(const Model& model, const RasterImage& raster, int row, ClassMap& out,
                  std::vector<double>& raw, std::vector<double>& scratch) {
  for (int col = 0; col < raster.width(); ++col) {
    const std::size_t pix = raster.index(row, col);
    if (raster.is_nodata(pix)) continue;
    for (int b = 0; b < raster.band_count(); ++b) raw[static_cast<std::size_t>(b)] = raster.band(b)[pix];
    out.set(row, col, predict_pixel(model, raw, scratch));
  }
}

}  // namespace

ClassMap predict_map_serial(const Model& model, const RasterImage& raster) {
  check_bands(model, raster);
  ClassMap out(raster.width(), raster.height(), model_classes(model));
  std::vector<double> raw(static_cast<std::size_t>(raster.band_count()));
  std::vector<double> scratch(raw.size());
  for (int row = 0; row < raster.height(); ++row) classify_row(model, raster, row, out, raw, scratch);
  return out;
}

ClassMap predict_map(const Model& model, const RasterImage& raster, int threads) {
  check_bands(model, raster);
  ClassMap out(raster.width(), raster.height(), model_classes(model));
  const int nthreads = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel num_threads(nthreads)
  {
    std::vector<double> raw(static_cast<std::size_t>(raster.band_count()));
    std::vector<double> scratch(raw.size());
#pragma omp for schedule(dynamic, 4)
    for (int row = 0; row < raster.height(); ++row) {
      classify_row(model, raster, row, out, raw, scratch);
    }
  }
  return out;
}

namespace {

json matrix_to_json(const FeatureMatrix& m) {
  return {{"rows", m.rows}, {"cols", m.cols}, {"values", m.values}};
}

FeatureMatrix matrix_from_json(const json& j) {
  FeatureMatrix m;
  m.rows = j.at("rows").get<std::size_t>();
  m.cols = j.at("cols").get<std::size_t>();
  m.values = j.at("values").get<std::vector<double>>();
  if (m.values.size() != m.rows * m.cols) throw Error(ErrorCode::BadRequest, "matrix size mismatch");
  return m;
}

json normalizer_to_json(const Normalizer& n) { return {{"mean", n.mean}, {"std", n.std}}; }

Normalizer normalizer_from_json(const json& j) {
  Normalizer n;
  n.mean = j.at("mean").get<std::vector<double>>();
  n.std = j.at("std").get<std::vector<double>>();
  return n;
}

}  // namespace

json model_to_json(const Model& model) {
  if (const auto* knn = std::get_if<KnnModel>(&model)) {
    return {{"kind", "knn"}, {"k", knn->k}, {"features", matrix_to_json(knn->features)},
            {"targets", knn->targets}, {"normalizer", normalizer_to_json(knn->normalizer)}};
  }
  const auto& svm = std::get<SvmModel>(model);
  json machines = json::array();
  for (const auto& m : svm.machines) {
    machines.push_back({{"class_id", m.class_id}, {"support_vectors", matrix_to_json(m.support_vectors)},
                        {"alpha", m.alpha}, {"coef", m.coef}, {"bias", m.bias}});
  }
  return {{"kind", "svm"},
          {"kernel", svm.kernel == KernelKind::Rbf ? "rbf" : "linear"},
          {"gamma", svm.gamma},
          {"c", svm.c},
          {"seed", svm.seed},
          {"normalizer", normalizer_to_json(svm.normalizer)},
          {"machines", machines}};
}

Model model_from_json(const json& j) {
  try {
    if (j.at("kind") == "knn") {
      KnnModel m;
      m.k = j.at("k").get<int>();
      m.features = matrix_from_json(j.at("features"));
      m.targets = j.at("targets").get<std::vector<int>>();
      m.normalizer = normalizer_from_json(j.at("normalizer"));
      return m;
    }
    SvmModel m;
    m.kernel = j.at("kernel") == "linear" ? KernelKind::Linear : KernelKind::Rbf;
    m.gamma = j.at("gamma").get<double>();
    m.c = j.at("c").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.normalizer = normalizer_from_json(j.at("normalizer"));
    for (const auto& mj : j.at("machines")) {
      BinarySvm b;
      b.class_id = mj.at("class_id").get<int>();
      b.support_vectors = matrix_from_json(mj.at("support_vectors"));
      b.alpha = mj.at("alpha").get<std::vector<double>>();
      b.coef = mj.at("coef").get<std::vector<double>>();
      b.bias = mj.at("bias").get<double>();
      m.machines.push_back(std::move(b));
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadRequest, std::string("malformed model: ") + e.what());
  }
}

}  // namespace deltaforge
