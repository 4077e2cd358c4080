#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "acs/align.hpp"
#include "acs/errors.hpp"

using namespace acs;

namespace {

ProbMatrix probs_from_rows(const std::vector<std::vector<double>>& rows) {
  ProbMatrix probs;
  probs.chunks = static_cast<int>(rows.size());
  probs.surfaces = static_cast<int>(rows.front().size());
  for (int m = 0; m < probs.chunks; ++m) {
    probs.logp.insert(probs.logp.end(), rows[m].begin(), rows[m].end());
    probs.chunk_times_s.push_back(0.1 * m);
  }
  return probs;
}

// Columns given per surface (as in the worked examples), transposed into
// chunk-major storage.
ProbMatrix probs_from_columns(const std::vector<std::vector<double>>& columns) {
  const int n = static_cast<int>(columns.size());
  const int m = static_cast<int>(columns.front().size());
  std::vector<std::vector<double>> rows(m, std::vector<double>(n));
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < m; ++i) rows[i][k] = columns[k][i];
  }
  return probs_from_rows(rows);
}

TrackConfig simple_track(int n) {
  TrackConfig track;
  for (int i = 0; i < n; ++i) {
    track.surfaces.push_back("s" + std::to_string(i));
    track.min_duration_s.push_back(0.0);
  }
  return track;
}

MinChunks min_chunks(std::initializer_list<int> counts) {
  MinChunks mc;
  mc.counts = counts;
  return mc;
}

struct RandomInstance {
  ProbMatrix probs;
  MinChunks mc;
};

RandomInstance random_instance(std::mt19937_64& rng, int max_n, int max_m) {
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53);
  };
  const int n = 1 + static_cast<int>(rng() % max_n);
  const int m =
      n + static_cast<int>(rng() % static_cast<unsigned>(max_m - n + 1));

  std::vector<std::vector<double>> rows(m, std::vector<double>(n));
  for (auto& row : rows) {
    double sum = 0.0;
    for (double& v : row) {
      v = uniform(0.01, 1.0);
      sum += v;
    }
    for (double& v : row) v = std::log(v / sum);
  }

  RandomInstance inst;
  inst.probs = probs_from_rows(rows);
  inst.mc.counts.assign(n, 1);
  // Distribute part of the slack into the minimum counts.
  int slack = m - n;
  while (slack > 0 && (rng() % 2) == 0) {
    inst.mc.counts[rng() % n] += 1;
    --slack;
  }
  return inst;
}

}  // namespace

TEST_CASE("min chunk estimation follows the floor-with-clamp rule") {
  TrackConfig track = simple_track(1);

  SUBCASE("floor of duration over hop") {
    SegmentAnnotation ann;
    ann.segments = {{"s0", 0.0, 3.0}};
    const MinChunks mc = min_chunks_from_annotations({ann}, track, 0.09288);
    CHECK(mc.counts[0] == 32);
  }
  SUBCASE("durations shorter than one hop clamp to 1") {
    SegmentAnnotation ann;
    ann.segments = {{"s0", 0.0, 0.05}};
    const MinChunks mc = min_chunks_from_annotations({ann}, track, 0.09288);
    CHECK(mc.counts[0] == 1);
  }
  SUBCASE("the minimum over annotations wins") {
    TrackConfig two = simple_track(2);
    SegmentAnnotation a;
    a.segments = {{"s0", 0.0, 2.0}, {"s1", 2.0, 6.0}};
    SegmentAnnotation b;
    b.segments = {{"s0", 0.0, 2.0}, {"s1", 2.0, 8.0}};
    const MinChunks mc = min_chunks_from_annotations({a, b}, two, 1.0);
    CHECK(mc.counts[1] == 4);
  }
  SUBCASE("an empty annotation list is an error") {
    CHECK_THROWS_AS(min_chunks_from_annotations({}, track, 1.0), ValidationError);
  }
}

TEST_CASE("min chunks from the track config use the declared durations") {
  TrackConfig track = simple_track(2);
  track.min_duration_s = {3.0, 0.01};
  const MinChunks mc = min_chunks_from_track(track, 0.09288);
  CHECK(mc.counts == std::vector<int>{32, 1});
}

TEST_CASE("a single surface accumulates the prefix sum") {
  const ProbMatrix probs = probs_from_columns({{-1.0, -2.0, -3.0}});
  const MinChunks mc = min_chunks({1});
  const CostMatrix cm = fill_cost_matrix(probs, mc);
  CHECK(cm.at(0, 0) == -1.0);
  CHECK(cm.at(0, 1) == -3.0);
  CHECK(cm.at(0, 2) == -6.0);
  CHECK(backtrace(cm, mc) == std::vector<int>{0, 0, 0});
}

TEST_CASE("the two-surface worked example aligns to [0,0,1,1]") {
  const ProbMatrix probs = probs_from_columns({{-0.1, -0.2, -3.0, -3.0},
                                               {-2.0, -2.5, -0.1, -0.2}});
  const MinChunks mc = min_chunks({1, 2});

  const Segmentation seg = segment(probs, simple_track(2), mc);
  CHECK(seg.chunk_labels == std::vector<int>{0, 0, 1, 1});
  CHECK(labeling_logp(probs, seg.chunk_labels) == doctest::Approx(-0.6));

  const AlignResult bf = brute_force_align(probs, mc);
  CHECK(bf.labels == seg.chunk_labels);
  CHECK(bf.total_logp == labeling_logp(probs, seg.chunk_labels));

  // Hand check of both feasible labelings.
  CHECK(labeling_logp(probs, {0, 0, 1, 1}) == doctest::Approx(-0.6));
  CHECK(labeling_logp(probs, {0, 1, 1, 1}) == doctest::Approx(-2.9));
}

TEST_CASE("infeasible instances are rejected with the counts in the message") {
  const ProbMatrix probs = probs_from_columns(
      {{-1.0, -1.0}, {-1.0, -1.0}, {-1.0, -1.0}});
  CHECK_THROWS_WITH_AS(fill_cost_matrix(probs, min_chunks({1, 1, 1})),
                       doctest::Contains("exceeds"), InfeasibleError);
  CHECK_THROWS_AS(brute_force_align(probs, min_chunks({1, 1, 1})), InfeasibleError);

  const ProbMatrix two = probs_from_columns({{-1.0, -1.0, -1.0},
                                             {-1.0, -1.0, -1.0}});
  CHECK_THROWS_AS(fill_cost_matrix(two, min_chunks({2, 2})), InfeasibleError);
}

TEST_CASE("blockwise-confident probabilities backtrace to their blocks") {
  // Chunks 0-1 prefer surface 0, 2-3 surface 1, 4-5 surface 2.
  std::vector<std::vector<double>> rows;
  for (int m = 0; m < 6; ++m) {
    std::vector<double> row(3, std::log(0.05));
    row[m / 2] = std::log(0.9);
    rows.push_back(row);
  }
  const ProbMatrix probs = probs_from_rows(rows);
  const MinChunks mc = min_chunks({1, 1, 1});
  const Segmentation seg = segment(probs, simple_track(3), mc);
  CHECK(seg.chunk_labels == std::vector<int>{0, 0, 1, 1, 2, 2});

  // Per-chunk argmax is already monotone here, so it is a valid oracle.
  const AlignResult bf = brute_force_align(probs, mc);
  CHECK(bf.labels == seg.chunk_labels);
}

TEST_CASE("boundaries fall on the midpoint between adjacent chunk centers") {
  const ProbMatrix probs = probs_from_columns({{-0.1, -0.1, -3.0, -3.0},
                                               {-3.0, -3.0, -0.1, -0.1}});
  const Segmentation seg = segment(probs, simple_track(2), min_chunks({1, 1}));
  REQUIRE(seg.chunk_labels == std::vector<int>{0, 0, 1, 1});
  REQUIRE(seg.boundaries_s.size() == 1);
  CHECK(seg.boundaries_s[0] == doctest::Approx(0.15));
}

TEST_CASE("a single surface yields no boundaries") {
  const ProbMatrix probs = probs_from_columns({{-1.0, -2.0}});
  const Segmentation seg = segment(probs, simple_track(1), min_chunks({1}));
  CHECK(seg.boundaries_s.empty());
  CHECK(seg.chunk_labels == std::vector<int>{0, 0});
}

TEST_CASE("exact ties resolve to the latest transition in both routes") {
  // All chunks equally happy everywhere: every labeling ties.
  const ProbMatrix probs = probs_from_rows(
      {{-1.0, -1.0}, {-1.0, -1.0}, {-1.0, -1.0}, {-1.0, -1.0}});
  const MinChunks mc = min_chunks({1, 1});
  const Segmentation seg = segment(probs, simple_track(2), mc);
  const AlignResult bf = brute_force_align(probs, mc);
  // Latest transition: surface 1 takes only the final chunk.
  CHECK(seg.chunk_labels == std::vector<int>{0, 0, 0, 1});
  CHECK(bf.labels == seg.chunk_labels);
}

TEST_CASE("dp and exhaustive search agree on random instances") {
  std::mt19937_64 rng(101);
  const TrackConfig tracks[4] = {simple_track(1), simple_track(2),
                                 simple_track(3), simple_track(4)};
  for (int trial = 0; trial < 300; ++trial) {
    const RandomInstance inst = random_instance(rng, 4, 12);
    const Segmentation seg =
        segment(inst.probs, tracks[inst.probs.surfaces - 1], inst.mc);
    const AlignResult bf = brute_force_align(inst.probs, inst.mc);
    REQUIRE(seg.chunk_labels == bf.labels);
    REQUIRE(labeling_logp(inst.probs, seg.chunk_labels) == bf.total_logp);
  }
}

TEST_CASE("alignments are monotone, complete and respect the minima") {
  std::mt19937_64 rng(202);
  for (int trial = 0; trial < 200; ++trial) {
    const RandomInstance inst = random_instance(rng, 8, 120);
    const int n = inst.probs.surfaces;
    const CostMatrix cm = fill_cost_matrix(inst.probs, inst.mc);
    const std::vector<int> labels = backtrace(cm, inst.mc);

    std::vector<int> counts(n, 0);
    for (size_t i = 0; i < labels.size(); ++i) {
      if (i > 0) REQUIRE(labels[i] >= labels[i - 1]);
      ++counts[labels[i]];
    }
    for (int k = 0; k < n; ++k) REQUIRE(counts[k] >= inst.mc.counts[k]);

    // -infinity exactly left of the cumulative-minimum frontier.
    int cumulative = 0;
    for (int k = 0; k < n; ++k) {
      cumulative += inst.mc.counts[k];
      for (int m = 0; m < inst.probs.chunks; ++m) {
        REQUIRE(std::isfinite(cm.at(k, m)) == (m >= cumulative - 1));
      }
    }
  }
}

TEST_CASE("per-chunk constant shifts leave the labeling unchanged") {
  std::mt19937_64 rng(303);
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53);
  };
  for (int trial = 0; trial < 50; ++trial) {
    const RandomInstance inst = random_instance(rng, 5, 40);
    const std::vector<int> before =
        backtrace(fill_cost_matrix(inst.probs, inst.mc), inst.mc);

    ProbMatrix shifted = inst.probs;
    for (int m = 0; m < shifted.chunks; ++m) {
      const double delta = uniform(-5.0, 5.0);
      for (int k = 0; k < shifted.surfaces; ++k) shifted.at(m, k) += delta;
    }
    const std::vector<int> after =
        backtrace(fill_cost_matrix(shifted, inst.mc), inst.mc);
    REQUIRE(before == after);
  }
}

TEST_CASE("brute force refuses oversized instances") {
  std::vector<std::vector<double>> rows(60, std::vector<double>(6, -1.0));
  const ProbMatrix probs = probs_from_rows(rows);
  CHECK_THROWS_AS(brute_force_align(probs, min_chunks({1, 1, 1, 1, 1, 1}), 1000),
                  ValidationError);
}

TEST_CASE("min-chunk files round-trip and validate against the track") {
  TrackConfig track = simple_track(3);
  const MinChunks mc = min_chunks({4, 1, 7});
  const auto path =
      (std::filesystem::temp_directory_path() / "acs_min_chunks.csv").string();
  save_min_chunks(mc, track, path);
  const MinChunks loaded = load_min_chunks(path, track);
  CHECK(loaded.counts == mc.counts);

  TrackConfig other = simple_track(2);
  CHECK_THROWS_AS(load_min_chunks(path, other), ValidationError);
}

TEST_CASE("segment validates dimensions and chunk times") {
  const ProbMatrix probs = probs_from_columns({{-1.0, -1.0}, {-1.0, -1.0}});
  CHECK_THROWS_AS(segment(probs, simple_track(3), min_chunks({1, 1, 1})),
                  ValidationError);

  ProbMatrix no_times = probs;
  no_times.chunk_times_s.clear();
  CHECK_THROWS_AS(segment(no_times, simple_track(2), min_chunks({1, 1})),
                  ValidationError);
}
