#include "acs/classify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "acs/errors.hpp"

namespace acs {

namespace {

constexpr double kProbFloor = 1e-12;

double logsumexp(const double* row, int n) {
  double max_v = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) max_v = std::max(max_v, row[i]);
  if (!std::isfinite(max_v)) return max_v;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += std::exp(row[i] - max_v);
  return max_v + std::log(acc);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string::size_type pos = 0;
  while (true) {
    auto next = line.find(sep, pos);
    if (next == std::string::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return fields;
}

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) {
    throw ParseError(context + ": not a number: '" + t + "'");
  }
  return v;
}

}  // namespace

void validate(const ProbMatrix& probs) {
  if (probs.chunks <= 0 || probs.surfaces <= 0) {
    throw ValidationError("probability matrix is empty");
  }
  for (int m = 0; m < probs.chunks; ++m) {
    const double* row = probs.logp.data() + static_cast<size_t>(m) * probs.surfaces;
    bool any_finite = false;
    for (int k = 0; k < probs.surfaces; ++k) {
      if (std::isnan(row[k]) || row[k] > 0.0) {
        throw ValidationError("log-probability out of range at chunk " +
                              std::to_string(m));
      }
      any_finite |= std::isfinite(row[k]);
    }
    if (!any_finite) {
      throw ValidationError("chunk " + std::to_string(m) +
                            " has no finite log-probability");
    }
    const double lse = logsumexp(row, probs.surfaces);
    if (std::fabs(lse) > 1e-6) {
      throw ValidationError("chunk " + std::to_string(m) +
                            " is not a normalized distribution (logsumexp=" +
                            std::to_string(lse) + ")");
    }
  }
}

ChunkFeatures chunk_features(const ChunkSet& cs) {
  if (cs.size() == 0 || cs.features == nullptr) {
    throw ValidationError("chunk set is empty");
  }
  const FeatureMatrix& fm = *cs.features;
  const int chunk_size = cs.chunk_config.chunk_size;

  ChunkFeatures out;
  out.count = cs.size();
  out.dim = fm.bins;
  out.values.assign(static_cast<size_t>(out.count) * out.dim, 0.0);
  for (int i = 0; i < out.count; ++i) {
    double* dst = out.values.data() + static_cast<size_t>(i) * out.dim;
    for (int f = cs.start_frames[i]; f < cs.start_frames[i] + chunk_size; ++f) {
      const double* src = fm.row(f);
      for (int b = 0; b < out.dim; ++b) dst[b] += src[b];
    }
    for (int b = 0; b < out.dim; ++b) dst[b] /= chunk_size;
  }
  return out;
}

CentroidModel train_centroid(const std::vector<const ChunkSet*>& runs,
                             const TrackConfig& track, double temperature) {
  if (runs.empty()) throw ValidationError("no training runs");
  if (temperature <= 0.0) throw ValidationError("temperature must be positive");

  const int n = track.surface_count();
  CentroidModel model;
  model.labels = track.surfaces;
  model.temperature = temperature;

  std::vector<std::vector<double>> sums(n);
  std::vector<int> counts(n, 0);
  int dim = -1;

  for (const ChunkSet* cs : runs) {
    if (cs == nullptr || !cs->labels.has_value()) {
      throw ValidationError("training chunk set has no labels");
    }
    const ChunkFeatures feats = chunk_features(*cs);
    if (dim < 0) {
      dim = feats.dim;
      for (auto& s : sums) s.assign(dim, 0.0);
    } else if (feats.dim != dim) {
      throw ValidationError("feature dimension mismatch across runs");
    }
    const auto& labels = *cs->labels;
    for (int i = 0; i < feats.count; ++i) {
      const int k = labels[i];
      if (k < 0 || k >= n) throw ValidationError("label index out of range");
      const double* row = feats.row(i);
      for (int b = 0; b < dim; ++b) sums[k][b] += row[b];
      ++counts[k];
    }
  }

  for (int k = 0; k < n; ++k) {
    if (counts[k] == 0) {
      throw ValidationError("surface '" + track.surfaces[k] +
                            "' has no training chunks");
    }
    for (double& v : sums[k]) v /= counts[k];
  }
  model.centroids = std::move(sums);
  return model;
}

ProbMatrix predict(const CentroidModel& model, const ChunkSet& cs) {
  const ChunkFeatures feats = chunk_features(cs);
  if (feats.dim != model.feature_dim()) {
    throw ValidationError("feature dimension " + std::to_string(feats.dim) +
                          " does not match model dimension " +
                          std::to_string(model.feature_dim()));
  }
  const int n = model.surface_count();

  ProbMatrix probs;
  probs.chunks = feats.count;
  probs.surfaces = n;
  probs.chunk_times_s = cs.center_times_s;
  probs.logp.resize(static_cast<size_t>(feats.count) * n);

  std::vector<double> scores(n);
  for (int m = 0; m < feats.count; ++m) {
    const double* f = feats.row(m);
    for (int k = 0; k < n; ++k) {
      const double* c = model.centroids[k].data();
      double d2 = 0.0;
      for (int b = 0; b < feats.dim; ++b) {
        const double diff = f[b] - c[b];
        d2 += diff * diff;
      }
      scores[k] = -d2 / model.temperature;
    }
    const double lse = logsumexp(scores.data(), n);
    for (int k = 0; k < n; ++k) probs.at(m, k) = scores[k] - lse;
  }
  return probs;
}

ProbMatrix import_probs(const std::string& path, const TrackConfig& track) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");

  const int n = track.surface_count();
  std::string line;
  int line_no = 0;

  // Header: surface labels in track order, optionally preceded by time_s.
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  ++line_no;
  auto header = split(trim(line), ',');
  bool has_time = !header.empty() && trim(header[0]) == "time_s";
  const size_t label_offset = has_time ? 1 : 0;
  if (header.size() != label_offset + static_cast<size_t>(n)) {
    throw ValidationError(path + ": header has " +
                          std::to_string(header.size() - label_offset) +
                          " surface columns, track defines " + std::to_string(n));
  }
  for (int k = 0; k < n; ++k) {
    if (trim(header[label_offset + k]) != track.surfaces[k]) {
      throw ValidationError(path + ": header column " + std::to_string(k) +
                            " is '" + trim(header[label_offset + k]) +
                            "', expected '" + track.surfaces[k] + "'");
    }
  }

  ProbMatrix probs;
  probs.surfaces = n;
  std::vector<double> row(n);
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::string context = path + ":" + std::to_string(line_no);
    auto fields = split(stripped, ',');
    if (fields.size() != label_offset + static_cast<size_t>(n)) {
      throw ValidationError(context + ": expected " +
                            std::to_string(label_offset + n) + " fields, got " +
                            std::to_string(fields.size()));
    }
    if (has_time) {
      probs.chunk_times_s.push_back(parse_double(fields[0], context));
    }
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
      row[k] = parse_double(fields[label_offset + k], context);
      if (row[k] < 0.0) {
        throw ValidationError(context + ": negative probability " +
                              std::to_string(row[k]));
      }
      sum += row[k];
    }
    if (std::fabs(sum - 1.0) > 1e-3) {
      throw ValidationError(context + ": row sums to " + std::to_string(sum) +
                            ", outside 1 +/- 1e-3");
    }
    // Renormalize before flooring so stored rows are exact distributions.
    for (int k = 0; k < n; ++k) {
      probs.logp.push_back(std::log(std::max(row[k] / sum, kProbFloor)));
    }
    ++probs.chunks;
  }
  if (probs.chunks == 0) throw ValidationError(path + ": no probability rows");
  validate(probs);
  return probs;
}

void save_model(const CentroidModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  char buf[32];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "temperature=" << fmt(model.temperature) << "\n";
  out << "F=" << model.feature_dim() << "\n";
  for (int k = 0; k < model.surface_count(); ++k) {
    out << model.labels[k] << ":";
    const auto& c = model.centroids[k];
    for (size_t b = 0; b < c.size(); ++b) {
      if (b > 0) out << ",";
      out << fmt(c[b]);
    }
    out << "\n";
  }
  if (!out) throw IoError("failed writing " + path);
}

CentroidModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");

  CentroidModel model;
  std::string line;
  if (!std::getline(in, line) || line.rfind("temperature=", 0) != 0) {
    throw ParseError(path + ": expected 'temperature=<t>' on line 1");
  }
  model.temperature = parse_double(line.substr(12), path + ":1");
  if (model.temperature <= 0.0) {
    throw ValidationError(path + ": temperature must be positive");
  }
  if (!std::getline(in, line) || line.rfind("F=", 0) != 0) {
    throw ParseError(path + ": expected 'F=<dim>' on line 2");
  }
  const int dim = static_cast<int>(parse_double(line.substr(2), path + ":2"));
  if (dim < 1) throw ValidationError(path + ": feature dimension must be >= 1");

  int line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::string context = path + ":" + std::to_string(line_no);
    auto colon = stripped.find(':');
    if (colon == std::string::npos) {
      throw ParseError(context + ": expected '<label>:<v1>,...,<vF>'");
    }
    model.labels.push_back(stripped.substr(0, colon));
    auto fields = split(stripped.substr(colon + 1), ',');
    if (fields.size() != static_cast<size_t>(dim)) {
      throw ValidationError(context + ": expected " + std::to_string(dim) +
                            " values, got " + std::to_string(fields.size()));
    }
    std::vector<double> centroid(dim);
    for (int b = 0; b < dim; ++b) {
      centroid[b] = parse_double(fields[b], context);
      if (!std::isfinite(centroid[b])) {
        throw ValidationError(context + ": non-finite centroid value");
      }
    }
    model.centroids.push_back(std::move(centroid));
  }
  if (model.centroids.empty()) throw ValidationError(path + ": no centroids");
  return model;
}

}  // namespace acs
