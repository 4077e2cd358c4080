#pragma once

#include <string>
#include <vector>

#include "acs/core.hpp"
#include "acs/dsp.hpp"

namespace acs {

// Per-chunk log-probabilities over the track surfaces, M x N row-major.
// Every row is a normalized distribution: logsumexp(row) == 0 within 1e-6.
struct ProbMatrix {
  std::vector<double> logp;
  int chunks = 0;
  int surfaces = 0;
  std::vector<double> chunk_times_s;

  double at(int chunk, int surface) const {
    return logp[static_cast<size_t>(chunk) * surfaces + surface];
  }
  double& at(int chunk, int surface) {
    return logp[static_cast<size_t>(chunk) * surfaces + surface];
  }
};

// Throws ValidationError when a row is not a normalized distribution or
// contains NaN.
void validate(const ProbMatrix& probs);

// M x F chunk feature vectors (row-major), F = spectrogram bins.
struct ChunkFeatures {
  std::vector<double> values;
  int count = 0;
  int dim = 0;

  const double* row(int chunk) const {
    return values.data() + static_cast<size_t>(chunk) * dim;
  }
};

// Mean over each chunk's time axis, one F-dimensional vector per chunk.
ChunkFeatures chunk_features(const ChunkSet& cs);

// Nearest-centroid classifier over chunk features: one mean feature vector
// per surface, softmax of -||f - c||^2 / temperature.
struct CentroidModel {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> centroids;
  double temperature = 1.0;

  int surface_count() const { return static_cast<int>(centroids.size()); }
  int feature_dim() const {
    return centroids.empty() ? 0 : static_cast<int>(centroids.front().size());
  }
};

// centroid[k] = mean feature of all chunks labeled k across the runs. Every
// ChunkSet must carry labels; a surface with no training chunks is an error
// naming the label.
CentroidModel train_centroid(const std::vector<const ChunkSet*>& runs,
                             const TrackConfig& track,
                             double temperature = 1.0);

// logp[m][k] = log softmax_k(-||feat_m - centroid_k||^2 / temperature).
ProbMatrix predict(const CentroidModel& model, const ChunkSet& cs);

// Probability CSV: header with the surface labels in track order (optional
// leading `time_s` column), one row of N probabilities per chunk. Rows must
// sum to 1 within 1e-3; they are renormalized, floored at 1e-12 and logged.
// chunk_times_s is filled from the time_s column when present.
ProbMatrix import_probs(const std::string& path, const TrackConfig& track);

// Model file: `temperature=<t>`, `F=<dim>`, then one `label:<v1>,...,<vF>`
// line per surface in track order.
void save_model(const CentroidModel& model, const std::string& path);
CentroidModel load_model(const std::string& path);

}  // namespace acs
