#include <doctest.h>

#include "deltaforge/error.hpp"
#include "deltaforge/models.hpp"
#include "support.hpp"

using namespace deltaforge;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

LabelSet labels_for(const RasterImage& r, std::initializer_list<LabelSample> samples) {
  LabelSet l(raster_digest(r));
  for (const auto& s : samples) l.set(s.row, s.col, s.class_id);
  return l;
}

/// Two Gaussian blobs far apart on a 2-band raster, class by column half.
std::pair<RasterImage, LabelSet> blobs(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::vector<std::vector<double>> bands(2, std::vector<double>(static_cast<std::size_t>(2 * n)));
  for (int i = 0; i < 2 * n; ++i) {
    const double centre = i < n ? -5.0 : 5.0;
    bands[0][static_cast<std::size_t>(i)] = centre + noise(rng);
    bands[1][static_cast<std::size_t>(i)] = -centre + noise(rng);
  }
  RasterImage r(2 * n, 1, std::move(bands));
  LabelSet l(raster_digest(r));
  for (int i = 0; i < 2 * n; ++i) l.set(0, i, i < n ? 1 : 2);
  return {std::move(r), std::move(l)};
}

}  // namespace

TEST_CASE("palette validation") {
  CHECK(code_of([] { Palette({{1, "a", {}, {}}, {1, "b", {}, {}}}); }) == ErrorCode::BadPalette);
  CHECK(code_of([] { Palette({{0, "none", {}, {}}}); }) == ErrorCode::BadPalette);
  CHECK(code_of([] { Palette({{1, "a", {}, 7}}); }) == ErrorCode::BadPalette);
  CHECK(code_of([] { Palette({{1, "a", {}, {}}, {2, "b", {}, 1}, {3, "c", {}, 2}}); }) == ErrorCode::BadPalette);
  const Palette p({{1, "water", {1, 2, 3}, {}}, {2, "lake", {4, 5, 6}, 1}});
  CHECK(p.find(2)->parent_id == 1);
  CHECK(p.find("water")->id == 1);
  CHECK(palette_from_json(palette_to_json(p)) == p);
  CHECK(palette_from_json(nlohmann::json::parse(R"([{"id":1,"name":"w","color":"#0a0b0c"}])")).find(1)->color ==
        Rgb{10, 11, 12});
}

TEST_CASE("label set keeps one label per pixel") {
  LabelSet l("d");
  l.set(1, 1, 1);
  l.set(0, 5, 2);
  l.set(1, 1, 3);
  REQUIRE(l.size() == 2);
  CHECK(l.samples()[0] == LabelSample{0, 5, 2});
  CHECK(l.get(1, 1) == 3);
  CHECK(labels_from_json(labels_to_json(l)) == l);
}

TEST_CASE("merge labels") {
  LabelSet base("d"), add("d");
  for (int i = 0; i < 30; ++i) base.set(0, i, 1);
  SUBCASE("empty additions") { CHECK(merge_labels(base, LabelSet("d")) == base); }
  SUBCASE("override") {
    add.set(0, 3, 3);
    CHECK(merge_labels(base, add).get(0, 3) == 3);
  }
  SUBCASE("disjoint union") {
    for (int i = 0; i < 20; ++i) add.set(1, i, 2);
    CHECK(merge_labels(base, add).size() == 50);
  }
  SUBCASE("digest mismatch") { CHECK(code_of([&] { merge_labels(base, LabelSet("e")); }) == ErrorCode::StaleLabels); }
}

TEST_CASE("build training set") {
  SUBCASE("z-score of the mean is zero") {
    const RasterImage r(1, 1, {{10}});
    const auto t = build_training_set(r, labels_for(r, {{0, 0, 1}}));
    CHECK(t.features.values[0] == 0.0);
    CHECK(t.normalizer.std[0] == 1.0);
  }
  SUBCASE("constant band normalizes to zero") {
    const RasterImage r(3, 1, {{4, 4, 4}, {1, 2, 3}});
    const auto t = build_training_set(r, labels_for(r, {{0, 0, 1}, {0, 1, 2}, {0, 2, 1}}));
    CHECK(t.normalizer.std[0] == 1.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(t.features.row(i)[0] == 0.0);
  }
  SUBCASE("matches direct indexing") {
    const RasterImage r(3, 2, {{1, 2, 3, 4, 5, 6}, {10, 20, 30, 40, 50, 60}});
    const auto t = build_training_set(r, labels_for(r, {{1, 2, 1}, {0, 1, 2}, {1, 0, 1}}));
    REQUIRE(t.features.rows == 3);
    REQUIRE(t.features.cols == 2);
    // Row-major order: (0,1)=2/20, (1,0)=4/40, (1,2)=6/60.
    const std::vector<double> raw{2, 20, 4, 40, 6, 60};
    CHECK(t.targets == std::vector<int>{2, 1, 1});
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t b = 0; b < 2; ++b) {
        const double expect = (raw[i * 2 + b] - t.normalizer.mean[b]) / t.normalizer.std[b];
        CHECK(t.features.row(i)[b] == doctest::Approx(expect));
      }
    }
    CHECK(t.normalizer.mean[0] == doctest::Approx(4.0));
  }
  SUBCASE("stale labels") {
    const RasterImage r(1, 1, {{1}});
    LabelSet l("other");
    l.set(0, 0, 1);
    CHECK(code_of([&] { build_training_set(r, l); }) == ErrorCode::StaleLabels);
  }
  SUBCASE("empty palette class warns") {
    const RasterImage r(2, 1, {{1, 2}});
    const Palette p({{1, "a", {}, {}}, {2, "b", {}, {}}, {3, "c", {}, {}}});
    const auto t = build_training_set(r, labels_for(r, {{0, 0, 1}, {0, 1, 2}}), &p);
    CHECK(t.warnings.size() == 1);
  }
}

TEST_CASE("k-NN") {
  const RasterImage r(4, 1, {{0, 1, 2, 10}});
  SUBCASE("k=1 memorizes") {
    const auto t = build_training_set(r, labels_for(r, {{0, 0, 1}, {0, 1, 2}, {0, 2, 3}, {0, 3, 4}}));
    const Model m = train_knn(t, 1);
    CHECK(predict_map(m, r).ids()[0] == 1);
    const auto map = predict_map(m, r);
    CHECK(std::vector<int>(map.ids().begin(), map.ids().end()) == std::vector<int>{1, 2, 3, 4});
  }
  SUBCASE("majority of equidistant neighbours") {
    const RasterImage q(3, 1, {{5, 5, 5}});
    const auto t = build_training_set(q, labels_for(q, {{0, 0, 1}, {0, 1, 1}, {0, 2, 2}}));
    const KnnModel m = train_knn(t, 3);
    CHECK(knn_predict(m, std::vector<double>{0.0}) == 1);
  }
  SUBCASE("vote ties go to the smallest class") {
    const RasterImage q(2, 1, {{5, 5}});
    const auto t = build_training_set(q, labels_for(q, {{0, 0, 7}, {0, 1, 3}}));
    CHECK(knn_predict(train_knn(t, 2), std::vector<double>{0.0}) == 3);
  }
  SUBCASE("k larger than the training set") {
    const auto t = build_training_set(r, labels_for(r, {{0, 0, 1}, {0, 1, 2}}));
    CHECK(code_of([&] { train_knn(t, 3); }) == ErrorCode::BadK);
  }
}

TEST_CASE("SVM on separable blobs") {
  auto [r, l] = blobs(40, 3);
  const auto t = build_training_set(r, l);
  const SvmModel m = train_svm(t);
  const ClassMap map = predict_map(m, r);
  const Evaluation e = evaluate(map, l);
  CHECK(e.accuracy == 1.0);
  for (const auto& machine : m.machines) {
    for (double a : machine.alpha) {
      CHECK(a >= 0.0);
      CHECK(a <= m.c + 1e-12);
    }
  }
}

TEST_CASE("SVM separates XOR with an RBF kernel") {
  const RasterImage r(4, 1, {{0, 1, 0, 1}, {0, 1, 1, 0}});
  const auto t = build_training_set(r, labels_for(r, {{0, 0, 1}, {0, 1, 1}, {0, 2, 2}, {0, 3, 2}}));
  SvmParams p;
  p.gamma = 1.0;
  const Model m = train_svm(t, p);
  const auto map = predict_map(m, r);
  CHECK(std::vector<int>(map.ids().begin(), map.ids().end()) == std::vector<int>{1, 1, 2, 2});
}

TEST_CASE("SVM is deterministic for a seed") {
  auto [r, l] = blobs(25, 8);
  const auto t = build_training_set(r, l);
  CHECK(train_svm(t) == train_svm(t));
}

TEST_CASE("SVM needs two classes") {
  const RasterImage r(2, 1, {{0, 1}});
  const auto t = build_training_set(r, labels_for(r, {{0, 0, 1}, {0, 1, 1}}));
  CHECK(code_of([&] { train_svm(t); }) == ErrorCode::DegenerateTraining);
}

TEST_CASE("SVM decisions are invariant under affine band rescaling up to solver tolerance") {
  const auto delta = testsupport::make_delta(48, 17);
  std::mt19937_64 rng(4);
  LabelSet l(raster_digest(delta.raster));
  for (const auto& s : testsupport::sample_labels(delta.truth, 15, rng)) l.set(s.row, s.col, s.class_id);

  std::vector<std::vector<double>> scaled;
  for (int b = 0; b < 3; ++b) scaled.emplace_back(delta.raster.band(b).begin(), delta.raster.band(b).end());
  for (auto& v : scaled[1]) v = 3.7 * v - 1250.0;
  const RasterImage rescaled(48, 48, scaled);
  LabelSet l2(raster_digest(rescaled));
  for (const auto& s : l.samples()) l2.set(s.row, s.col, s.class_id);

  const SvmModel a = train_svm(build_training_set(delta.raster, l));
  const SvmModel b = train_svm(build_training_set(rescaled, l2));
  std::vector<double> na(3), nb(3);
  double worst = 0;
  for (int row = 0; row < 48; row += 3) {
    for (int col = 0; col < 48; col += 3) {
      a.normalizer.apply(pixel_features(delta.raster, row, col), na);
      b.normalizer.apply(pixel_features(rescaled, row, col), nb);
      for (std::size_t m = 0; m < a.machines.size(); ++m) {
        worst = std::max(worst, std::abs(svm_decision(a, a.machines[m], na) - svm_decision(b, b.machines[m], nb)));
      }
    }
  }
  // Normalized features agree to rounding, so the two solves differ only by
  // SMO stopping within tol of the optimum.
  CHECK(worst <= 10 * SvmParams{}.tol);
}

TEST_CASE("predict_map matches the serial reference and is thread-count independent") {
  const auto delta = testsupport::make_delta(64, 2);
  std::mt19937_64 rng(1);
  LabelSet l(raster_digest(delta.raster));
  for (const auto& s : testsupport::sample_labels(delta.truth, 10, rng)) l.set(s.row, s.col, s.class_id);
  const auto t = build_training_set(delta.raster, l);
  for (const Model& m : {Model(train_svm(t)), Model(train_knn(t, 5))}) {
    const ClassMap serial = predict_map_serial(m, delta.raster);
    CHECK(predict_map(m, delta.raster, 1) == serial);
    CHECK(predict_map(m, delta.raster, 3) == serial);
    CHECK(predict_map(m, delta.raster, 8) == serial);
  }
}

TEST_CASE("predict_map shape and nodata") {
  const RasterImage r(2, 1, {{-1, -1}}, -1.0);
  const RasterImage train_r(2, 1, {{0, 5}});
  const auto t = build_training_set(train_r, labels_for(train_r, {{0, 0, 1}, {0, 1, 2}}));
  const Model m = train_knn(t, 1);
  const auto map = predict_map(m, r);
  CHECK(map.ids()[0] == 0);
  CHECK(map.ids()[1] == 0);
  const RasterImage two(1, 1, {{1}, {2}});
  CHECK(code_of([&] { predict_map(m, two); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("evaluate") {
  ClassMap map(4, 1, {1, 2});
  map.set(0, 0, 1);
  map.set(0, 1, 1);
  map.set(0, 2, 2);
  map.set(0, 3, 2);
  LabelSet truth("d");
  truth.set(0, 0, 1);
  truth.set(0, 1, 1);
  truth.set(0, 2, 2);
  SUBCASE("perfect") {
    truth.set(0, 3, 2);
    const auto e = evaluate(map, truth);
    CHECK(e.accuracy == 1.0);
    CHECK(e.confusion[0][1] == 0);
    CHECK(e.confusion[1][0] == 0);
  }
  SUBCASE("one of four wrong") {
    truth.set(0, 3, 1);
    CHECK(evaluate(map, truth).accuracy == 0.75);
  }
  SUBCASE("empty truth") { CHECK(code_of([&] { evaluate(map, LabelSet("d")); }) == ErrorCode::EmptyEvaluation); }
  SUBCASE("disjoint classes") {
    LabelSet other("d");
    other.set(0, 0, 9);
    CHECK(code_of([&] { evaluate(map, other); }) == ErrorCode::UnknownClass);
  }
}

TEST_CASE("model JSON round trip is exact") {
  auto [r, l] = blobs(10, 2);
  const auto t = build_training_set(r, l);
  const Model svm = train_svm(t);
  const Model knn = train_knn(t, 3);
  CHECK(model_from_json(model_to_json(svm)) == svm);
  CHECK(model_from_json(model_to_json(knn)) == knn);
}

TEST_CASE("class map file round trip") {
  testsupport::TempDir dir;
  std::mt19937_64 rng(3);
  const ClassMap m = testsupport::random_noise(13, 7, 3, 0.7, rng);
  write_classmap(m, dir / "c.bin");
  CHECK(read_classmap(dir / "c.bin") == m);
}
