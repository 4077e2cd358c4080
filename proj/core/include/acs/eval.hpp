#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "acs/core.hpp"

namespace acs {

// Boundary-error thresholds for barrier accuracy, in seconds.
inline constexpr std::array<double, 3> kBarrierThresholds = {0.2, 0.5, 1.0};

struct MetricsReport {
  double mean_error_s = 0.0;
  // (threshold, hit fraction) for each entry of kBarrierThresholds. An error
  // exactly equal to the threshold counts as a hit.
  std::vector<std::pair<double, double>> barrier_acc;
  std::vector<double> per_boundary_errors_s;
  double chunk_accuracy = 0.0;
  double chunk_f1_macro = 0.0;
};

// Positional comparison of the N-1 predicted boundaries against the truth
// annotation's internal boundaries. Throws ValidationError on a count
// mismatch. Chunk-level fields are left at zero.
MetricsReport boundary_metrics(const Segmentation& pred,
                               const SegmentAnnotation& truth);

// Builds the boundary fields from a pool of absolute errors (used for
// aggregating several runs: pool first, then average).
MetricsReport metrics_from_errors(std::vector<double> errors_s);

struct ChunkMetrics {
  double accuracy = 0.0;
  double f1_macro = 0.0;
};

// Plain accuracy plus unweighted macro F1 over surface_count classes. A
// class with neither predicted nor true instances contributes an F1 of 0.
ChunkMetrics chunk_metrics(const std::vector<int>& pred_labels,
                           const std::vector<int>& true_labels,
                           int surface_count);

// JSON object with fixed keys: mean_error_s, barrier_acc_0p2,
// barrier_acc_0p5, barrier_acc_1p0, chunk_accuracy, chunk_f1_macro.
void write_metrics_json(const MetricsReport& report, std::ostream& out);
void save_metrics_json(const MetricsReport& report, const std::string& path);

}  // namespace acs
