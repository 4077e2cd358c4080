#include "acs/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

#include "acs/errors.hpp"

namespace acs {

MetricsReport metrics_from_errors(std::vector<double> errors_s) {
  MetricsReport report;
  report.per_boundary_errors_s = std::move(errors_s);
  const auto& errs = report.per_boundary_errors_s;
  if (!errs.empty()) {
    report.mean_error_s =
        std::accumulate(errs.begin(), errs.end(), 0.0) / errs.size();
  }
  for (double threshold : kBarrierThresholds) {
    double hits = 0.0;
    // An error exactly at the threshold is a hit; only strictly larger
    // errors miss. The guard keeps representation noise (e.g. |5.0 - 4.8|
    // being 1 ulp above 0.2) from flipping exact-threshold cases.
    for (double e : errs) {
      if (e <= threshold + 1e-12) hits += 1.0;
    }
    const double acc = errs.empty() ? 1.0 : hits / errs.size();
    report.barrier_acc.emplace_back(threshold, acc);
  }
  return report;
}

MetricsReport boundary_metrics(const Segmentation& pred,
                               const SegmentAnnotation& truth) {
  const std::vector<double> truth_boundaries = truth.boundaries_s();
  if (pred.boundaries_s.size() != truth_boundaries.size()) {
    throw ValidationError("predicted " + std::to_string(pred.boundaries_s.size()) +
                          " boundaries, truth has " +
                          std::to_string(truth_boundaries.size()));
  }
  std::vector<double> errors(truth_boundaries.size());
  for (size_t i = 0; i < errors.size(); ++i) {
    errors[i] = std::fabs(pred.boundaries_s[i] - truth_boundaries[i]);
  }
  return metrics_from_errors(std::move(errors));
}

ChunkMetrics chunk_metrics(const std::vector<int>& pred_labels,
                           const std::vector<int>& true_labels,
                           int surface_count) {
  if (pred_labels.size() != true_labels.size()) {
    throw ValidationError("label sequences differ in length: " +
                          std::to_string(pred_labels.size()) + " vs " +
                          std::to_string(true_labels.size()));
  }
  if (pred_labels.empty()) throw ValidationError("empty label sequences");

  std::vector<long> tp(surface_count, 0), fp(surface_count, 0), fn(surface_count, 0);
  long correct = 0;
  for (size_t i = 0; i < pred_labels.size(); ++i) {
    const int p = pred_labels[i];
    const int t = true_labels[i];
    if (p < 0 || p >= surface_count || t < 0 || t >= surface_count) {
      throw ValidationError("label index out of range at position " +
                            std::to_string(i));
    }
    if (p == t) {
      ++correct;
      ++tp[p];
    } else {
      ++fp[p];
      ++fn[t];
    }
  }

  ChunkMetrics out;
  out.accuracy = static_cast<double>(correct) / pred_labels.size();
  double f1_sum = 0.0;
  for (int k = 0; k < surface_count; ++k) {
    const double denom = 2.0 * tp[k] + fp[k] + fn[k];
    f1_sum += denom > 0.0 ? 2.0 * tp[k] / denom : 0.0;
  }
  out.f1_macro = f1_sum / surface_count;
  return out;
}

void write_metrics_json(const MetricsReport& report, std::ostream& out) {
  char buf[32];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  auto acc_at = [&](double threshold) {
    for (const auto& [t, acc] : report.barrier_acc) {
      if (t == threshold) return acc;
    }
    throw ValidationError("missing barrier accuracy threshold");
  };
  out << "{\n";
  out << "  \"mean_error_s\": " << fmt(report.mean_error_s) << ",\n";
  out << "  \"barrier_acc_0p2\": " << fmt(acc_at(0.2)) << ",\n";
  out << "  \"barrier_acc_0p5\": " << fmt(acc_at(0.5)) << ",\n";
  out << "  \"barrier_acc_1p0\": " << fmt(acc_at(1.0)) << ",\n";
  out << "  \"chunk_accuracy\": " << fmt(report.chunk_accuracy) << ",\n";
  out << "  \"chunk_f1_macro\": " << fmt(report.chunk_f1_macro) << "\n";
  out << "}\n";
}

void save_metrics_json(const MetricsReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_metrics_json(report, out);
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace acs
