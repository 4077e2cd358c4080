#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "acs/classify.hpp"
#include "acs/errors.hpp"

using namespace acs;

namespace {

FeatureMatrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
  FeatureMatrix fm;
  fm.frames = static_cast<int>(rows.size());
  fm.bins = static_cast<int>(rows.front().size());
  fm.sample_rate = 1000;
  fm.config.n_fft = 2;
  fm.config.hop_length = 1;
  fm.frame_hop_s = 0.001;
  fm.frame_center_offset_s = 0.001;
  for (const auto& row : rows) {
    fm.data.insert(fm.data.end(), row.begin(), row.end());
  }
  return fm;
}

ChunkSet chunks_over(const FeatureMatrix& fm, int chunk_size,
                     std::vector<int> labels = {}) {
  ChunkConfig cc;
  cc.chunk_size = chunk_size;
  cc.chunk_hop = 1;
  ChunkSet cs = extract_chunks(fm, cc);
  if (!labels.empty()) cs.labels = std::move(labels);
  return cs;
}

TrackConfig simple_track(int n) {
  TrackConfig track;
  for (int i = 0; i < n; ++i) {
    track.surfaces.push_back("s" + std::to_string(i));
    track.min_duration_s.push_back(0.0);
  }
  return track;
}

std::string temp_file(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("chunk features average the chunk's frames") {
  SUBCASE("constant chunk gives a constant feature") {
    const FeatureMatrix fm =
        matrix_from_rows({{7.0, 7.0}, {7.0, 7.0}, {7.0, 7.0}});
    const ChunkFeatures feats = chunk_features(chunks_over(fm, 3));
    REQUIRE(feats.count == 1);
    CHECK(feats.row(0)[0] == 7.0);
    CHECK(feats.row(0)[1] == 7.0);
  }
  SUBCASE("chunks over identical frames give identical features") {
    const FeatureMatrix fm =
        matrix_from_rows({{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}});
    const ChunkFeatures feats = chunk_features(chunks_over(fm, 2));
    REQUIRE(feats.count == 3);
    for (int i = 1; i < feats.count; ++i) {
      CHECK(feats.row(i)[0] == feats.row(0)[0]);
      CHECK(feats.row(i)[1] == feats.row(0)[1]);
    }
  }
  SUBCASE("random chunk equals the naive per-bin mean") {
    std::mt19937_64 rng(5);
    std::vector<std::vector<double>> rows(40, std::vector<double>(6));
    for (auto& row : rows) {
      for (double& v : row) v = ((rng() >> 11) * 0x1.0p-53) * 100.0 - 50.0;
    }
    const FeatureMatrix fm = matrix_from_rows(rows);
    const int chunk_size = 7;
    const ChunkSet cs = chunks_over(fm, chunk_size);
    const ChunkFeatures feats = chunk_features(cs);
    for (int i = 0; i < feats.count; ++i) {
      for (int b = 0; b < 6; ++b) {
        double acc = 0.0;
        for (int f = 0; f < chunk_size; ++f) acc += rows[cs.start_frames[i] + f][b];
        CHECK(feats.row(i)[b] == doctest::Approx(acc / chunk_size).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("training with one chunk per class copies the features") {
  const FeatureMatrix fm = matrix_from_rows({{1.0, 0.0}, {0.0, 1.0}});
  const ChunkSet cs = chunks_over(fm, 1, {0, 1});
  const CentroidModel model = train_centroid({&cs}, simple_track(2));
  CHECK(model.centroids[0] == std::vector<double>{1.0, 0.0});
  CHECK(model.centroids[1] == std::vector<double>{0.0, 1.0});
}

TEST_CASE("duplicating the training set leaves the model unchanged") {
  std::mt19937_64 rng(9);
  std::vector<std::vector<double>> rows(20, std::vector<double>(4));
  std::vector<int> labels(20);
  for (int i = 0; i < 20; ++i) {
    labels[i] = i % 3;
    for (double& v : rows[i]) v = ((rng() >> 11) * 0x1.0p-53) * 10.0;
  }
  const FeatureMatrix fm = matrix_from_rows(rows);
  const ChunkSet cs = chunks_over(fm, 1, labels);

  const CentroidModel once = train_centroid({&cs}, simple_track(3));
  const CentroidModel twice = train_centroid({&cs, &cs}, simple_track(3));
  for (int k = 0; k < 3; ++k) {
    for (int b = 0; b < 4; ++b) {
      CHECK(twice.centroids[k][b] == doctest::Approx(once.centroids[k][b]));
    }
  }
}

TEST_CASE("a surface with no training chunks is an error naming it") {
  const FeatureMatrix fm = matrix_from_rows({{1.0, 0.0}, {0.0, 1.0}});
  const ChunkSet cs = chunks_over(fm, 1, {0, 0});
  CHECK_THROWS_WITH_AS(train_centroid({&cs}, simple_track(2)),
                       doctest::Contains("s1"), ValidationError);
}

TEST_CASE("predictions on separable clusters match a nearest-centroid scan") {
  std::mt19937_64 rng(33);
  auto noise = [&]() { return ((rng() >> 11) * 0x1.0p-53 - 0.5) * 0.5; };
  const std::vector<std::vector<double>> centers = {
      {0.0, 0.0, 10.0}, {10.0, 0.0, 0.0}, {0.0, 10.0, 0.0}};

  auto sample_rows = [&](int count, std::vector<int>* labels) {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < count; ++i) {
      const int k = static_cast<int>(rng() % 3);
      labels->push_back(k);
      std::vector<double> row = centers[k];
      for (double& v : row) v += noise();
      rows.push_back(std::move(row));
    }
    return rows;
  };

  std::vector<int> train_labels;
  const FeatureMatrix train_fm = matrix_from_rows(sample_rows(120, &train_labels));
  const ChunkSet train_cs = chunks_over(train_fm, 1, train_labels);
  const CentroidModel model = train_centroid({&train_cs}, simple_track(3));

  std::vector<int> test_labels;
  const FeatureMatrix test_fm = matrix_from_rows(sample_rows(60, &test_labels));
  const ChunkSet test_cs = chunks_over(test_fm, 1, test_labels);
  const ProbMatrix probs = predict(model, test_cs);
  const ChunkFeatures feats = chunk_features(test_cs);

  int correct = 0;
  for (int m = 0; m < probs.chunks; ++m) {
    int argmax = 0;
    for (int k = 1; k < 3; ++k) {
      if (probs.at(m, k) > probs.at(m, argmax)) argmax = k;
    }
    // Oracle: nearest centroid by L2.
    int nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
      double d2 = 0.0;
      for (int b = 0; b < 3; ++b) {
        const double diff = feats.row(m)[b] - model.centroids[k][b];
        d2 += diff * diff;
      }
      if (d2 < best) {
        best = d2;
        nearest = k;
      }
    }
    CHECK(argmax == nearest);
    if (argmax == test_labels[m]) ++correct;
  }
  CHECK(correct >= 54);  // >= 90% on well-separated clusters
}

TEST_CASE("equidistant features give a uniform prediction row") {
  CentroidModel model;
  model.labels = {"a", "b", "c"};
  model.centroids = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}};
  // All centroids at distance 1 from the origin.
  const FeatureMatrix fm = matrix_from_rows({{0.0, 0.0}});
  const ProbMatrix probs = predict(model, chunks_over(fm, 1));
  for (int k = 0; k < 3; ++k) {
    CHECK(probs.at(0, k) == doctest::Approx(-std::log(3.0)).epsilon(1e-12));
  }
}

TEST_CASE("a feature sitting on a centroid wins the argmax") {
  CentroidModel model;
  model.labels = {"a", "b"};
  model.centroids = {{0.0, 0.0}, {50.0, 50.0}};
  const FeatureMatrix fm = matrix_from_rows({{50.0, 50.0}});
  const ProbMatrix probs = predict(model, chunks_over(fm, 1));
  CHECK(probs.at(0, 1) > probs.at(0, 0));
  CHECK(std::exp(probs.at(0, 1)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("raising the temperature flattens prediction rows monotonically") {
  const FeatureMatrix fm = matrix_from_rows({{2.0, 1.0}});
  CentroidModel model;
  model.labels = {"a", "b", "c"};
  model.centroids = {{0.0, 0.0}, {3.0, 1.0}, {2.0, 5.0}};

  double previous_spread = std::numeric_limits<double>::infinity();
  for (double tau : {1.0, 2.0, 4.0, 8.0}) {
    model.temperature = tau;
    const ProbMatrix probs = predict(model, chunks_over(fm, 1));
    double lo = probs.at(0, 0);
    double hi = probs.at(0, 0);
    for (int k = 1; k < 3; ++k) {
      lo = std::min(lo, probs.at(0, k));
      hi = std::max(hi, probs.at(0, k));
    }
    CHECK(hi - lo < previous_spread);
    previous_spread = hi - lo;
  }
}

TEST_CASE("predict is permutation-equivariant in the centroids") {
  std::mt19937_64 rng(41);
  std::vector<std::vector<double>> rows(10, std::vector<double>(4));
  for (auto& row : rows) {
    for (double& v : row) v = ((rng() >> 11) * 0x1.0p-53) * 4.0;
  }
  const FeatureMatrix fm = matrix_from_rows(rows);
  const ChunkSet cs = chunks_over(fm, 1);

  CentroidModel model;
  model.labels = {"a", "b", "c"};
  model.centroids = {{0.0, 0.0, 0.0, 0.0},
                     {1.0, 2.0, 3.0, 4.0},
                     {4.0, 3.0, 2.0, 1.0}};
  const ProbMatrix base = predict(model, cs);

  const std::vector<int> perm = {2, 0, 1};
  CentroidModel permuted;
  permuted.labels = {"c", "a", "b"};
  for (int k : perm) permuted.centroids.push_back(model.centroids[k]);
  const ProbMatrix shuffled = predict(permuted, cs);

  for (int m = 0; m < base.chunks; ++m) {
    for (int k = 0; k < 3; ++k) {
      CHECK(shuffled.at(m, k) == doctest::Approx(base.at(m, perm[k])).epsilon(1e-12));
    }
  }
}

TEST_CASE("prediction rows are normalized and free of NaN") {
  std::mt19937_64 rng(55);
  std::vector<std::vector<double>> rows(30, std::vector<double>(3));
  for (auto& row : rows) {
    for (double& v : row) v = ((rng() >> 11) * 0x1.0p-53) * 200.0 - 100.0;
  }
  const FeatureMatrix fm = matrix_from_rows(rows);
  CentroidModel model;
  model.labels = {"a", "b"};
  model.centroids = {{0.0, 0.0, 0.0}, {100.0, 100.0, 100.0}};
  const ProbMatrix probs = predict(model, chunks_over(fm, 1));
  CHECK_NOTHROW(validate(probs));
}

TEST_CASE("probability CSV import") {
  const TrackConfig track = simple_track(2);

  SUBCASE("plain rows convert to logs") {
    const std::string path = temp_file("probs_ok.csv");
    std::ofstream(path) << "s0,s1\n0.2,0.8\n0.5,0.5\n";
    const ProbMatrix probs = import_probs(path, track);
    REQUIRE(probs.chunks == 2);
    CHECK(probs.at(0, 0) == doctest::Approx(std::log(0.2)).epsilon(1e-12));
    CHECK(probs.at(0, 1) == doctest::Approx(std::log(0.8)).epsilon(1e-12));
    CHECK(probs.chunk_times_s.empty());
  }
  SUBCASE("a time_s column fills the chunk times") {
    const std::string path = temp_file("probs_time.csv");
    std::ofstream(path) << "time_s,s0,s1\n0.5,1.0,0.0\n0.6,0.0,1.0\n";
    const ProbMatrix probs = import_probs(path, track);
    CHECK(probs.chunk_times_s == std::vector<double>{0.5, 0.6});
    CHECK(probs.at(0, 0) == 0.0);
    CHECK(probs.at(0, 1) == doctest::Approx(std::log(1e-12)));
  }
  SUBCASE("unnormalized rows are rejected") {
    const std::string path = temp_file("probs_bad_sum.csv");
    std::ofstream(path) << "s0,s1\n0.5,0.6\n";
    CHECK_THROWS_AS(import_probs(path, track), ValidationError);
  }
  SUBCASE("negative probabilities are rejected") {
    const std::string path = temp_file("probs_neg.csv");
    std::ofstream(path) << "s0,s1\n-0.2,1.2\n";
    CHECK_THROWS_AS(import_probs(path, track), ValidationError);
  }
  SUBCASE("column mismatches are rejected") {
    const std::string path = temp_file("probs_cols.csv");
    std::ofstream(path) << "s0,s1,s2\n0.2,0.3,0.5\n";
    CHECK_THROWS_AS(import_probs(path, track), ValidationError);
  }
  SUBCASE("wrong label order is rejected") {
    const std::string path = temp_file("probs_order.csv");
    std::ofstream(path) << "s1,s0\n0.2,0.8\n";
    CHECK_THROWS_AS(import_probs(path, track), ValidationError);
  }
}

TEST_CASE("models round-trip through their text form") {
  CentroidModel model;
  model.labels = {"gravel", "asphalt"};
  model.centroids = {{1.5, -2.25, 1.0 / 3.0}, {0.0, 1e-7, 42.0}};
  model.temperature = 2.5;

  const std::string path = temp_file("model.txt");
  save_model(model, path);
  const CentroidModel loaded = load_model(path);
  CHECK(loaded.labels == model.labels);
  CHECK(loaded.temperature == model.temperature);
  REQUIRE(loaded.centroids.size() == 2);
  for (int k = 0; k < 2; ++k) {
    CHECK(loaded.centroids[k] == model.centroids[k]);
  }
}

TEST_CASE("validate rejects malformed probability matrices") {
  ProbMatrix probs;
  probs.chunks = 1;
  probs.surfaces = 2;
  probs.logp = {std::log(0.7), std::log(0.2)};  // sums to 0.9
  CHECK_THROWS_AS(validate(probs), ValidationError);

  probs.logp = {0.0, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(validate(probs), ValidationError);
}

TEST_CASE("dimension mismatches between model and features are rejected") {
  CentroidModel model;
  model.labels = {"a"};
  model.centroids = {{0.0, 0.0, 0.0}};
  const FeatureMatrix fm = matrix_from_rows({{1.0, 2.0}});
  CHECK_THROWS_AS(predict(model, chunks_over(fm, 1)), ValidationError);
}
