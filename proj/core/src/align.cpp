#include "acs/align.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "acs/errors.hpp"

namespace acs {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int duration_to_chunks(double duration_s, double chunk_hop_s) {
  return std::max(1, static_cast<int>(std::floor(duration_s / chunk_hop_s)));
}

}  // namespace

int MinChunks::total() const {
  return std::accumulate(counts.begin(), counts.end(), 0);
}

MinChunks min_chunks_from_annotations(const std::vector<SegmentAnnotation>& anns,
                                      const TrackConfig& track,
                                      double chunk_hop_s) {
  if (anns.empty()) throw ValidationError("no annotations given");
  if (!(chunk_hop_s > 0.0)) throw ValidationError("chunk_hop_s must be positive");

  const int n = track.surface_count();
  std::vector<double> min_duration(n, std::numeric_limits<double>::infinity());
  for (const auto& ann : anns) {
    validate_annotation(ann, track);
    for (int k = 0; k < n; ++k) {
      const double d = ann.segments[k].end_s - ann.segments[k].start_s;
      min_duration[k] = std::min(min_duration[k], d);
    }
  }

  MinChunks mc;
  mc.counts.resize(n);
  for (int k = 0; k < n; ++k) {
    mc.counts[k] = duration_to_chunks(min_duration[k], chunk_hop_s);
  }
  return mc;
}

MinChunks min_chunks_from_track(const TrackConfig& track, double chunk_hop_s) {
  if (!(chunk_hop_s > 0.0)) throw ValidationError("chunk_hop_s must be positive");
  MinChunks mc;
  mc.counts.resize(track.surface_count());
  for (int k = 0; k < track.surface_count(); ++k) {
    mc.counts[k] = duration_to_chunks(track.min_duration_s[k], chunk_hop_s);
  }
  return mc;
}

void save_min_chunks(const MinChunks& mc, const TrackConfig& track,
                     const std::string& path) {
  if (mc.size() != track.surface_count()) {
    throw ValidationError("min chunks / track surface count mismatch");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "label,min_chunks\n";
  for (int k = 0; k < mc.size(); ++k) {
    out << track.surfaces[k] << "," << mc.counts[k] << "\n";
  }
  if (!out) throw IoError("failed writing " + path);
}

MinChunks load_min_chunks(const std::string& path, const TrackConfig& track) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");

  MinChunks mc;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) {
      line.pop_back();
    }
    if (line.empty()) continue;
    const std::string context = path + ":" + std::to_string(line_no);
    if (!header_seen) {
      if (line != "label,min_chunks") {
        throw ParseError(context + ": expected header 'label,min_chunks'");
      }
      header_seen = true;
      continue;
    }
    auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ParseError(context + ": expected '<label>,<count>'");
    }
    const std::string label = line.substr(0, comma);
    const int index = static_cast<int>(mc.counts.size());
    if (index >= track.surface_count() || label != track.surfaces[index]) {
      throw ValidationError(context + ": label '" + label +
                            "' does not match track order");
    }
    char* end = nullptr;
    const long count = std::strtol(line.c_str() + comma + 1, &end, 10);
    if (end != line.c_str() + line.size() || count < 1) {
      throw ParseError(context + ": invalid chunk count");
    }
    mc.counts.push_back(static_cast<int>(count));
  }
  if (mc.size() != track.surface_count()) {
    throw ValidationError(path + ": expected " +
                          std::to_string(track.surface_count()) +
                          " rows, got " + std::to_string(mc.size()));
  }
  return mc;
}

CostMatrix fill_cost_matrix(const ProbMatrix& probs, const MinChunks& mc) {
  const int n_surfaces = probs.surfaces;
  const int m_chunks = probs.chunks;
  if (mc.size() != n_surfaces) {
    throw ValidationError("min chunks has " + std::to_string(mc.size()) +
                          " entries, probabilities cover " +
                          std::to_string(n_surfaces) + " surfaces");
  }
  for (int c : mc.counts) {
    if (c < 1) throw ValidationError("min chunk counts must be >= 1");
  }
  if (mc.total() > m_chunks) {
    throw InfeasibleError("minimum chunks total " + std::to_string(mc.total()) +
                          " exceeds available chunks " + std::to_string(m_chunks));
  }

  CostMatrix cm;
  cm.surfaces = n_surfaces;
  cm.chunks = m_chunks;
  cm.d.assign(static_cast<size_t>(n_surfaces) * m_chunks, kNegInf);
  cm.steps.assign(static_cast<size_t>(n_surfaces) * m_chunks, Step::kUnreachable);

  // Per-surface running sums of logp, so the diagonal step's bridged-chunk
  // sum is two lookups: prefix[n][m] = sum of logp[0..m][n].
  std::vector<double> prefix(static_cast<size_t>(n_surfaces) * m_chunks);
  for (int n = 0; n < n_surfaces; ++n) {
    double acc = 0.0;
    for (int m = 0; m < m_chunks; ++m) {
      acc += probs.at(m, n);
      prefix[static_cast<size_t>(n) * m_chunks + m] = acc;
    }
  }
  auto window_sum = [&](int n, int last, int count) {
    const double hi = prefix[static_cast<size_t>(n) * m_chunks + last];
    const int before = last - count;
    return before < 0 ? hi : hi - prefix[static_cast<size_t>(n) * m_chunks + before];
  };

  // Row 0 is the running sum of surface 0's log-probabilities, stored from
  // the row's own frontier on.
  int frontier = mc.counts[0] - 1;
  for (int m = frontier; m < m_chunks; ++m) {
    cm.d[m] = prefix[m];
    cm.steps[m] = Step::kHorizontal;
  }

  for (int n = 1; n < n_surfaces; ++n) {
    frontier += mc.counts[n];
    const size_t row = static_cast<size_t>(n) * m_chunks;
    const size_t prev_row = row - m_chunks;
    for (int m = frontier; m < m_chunks; ++m) {
      const double diagonal =
          cm.d[prev_row + m - mc.counts[n]] + window_sum(n, m, mc.counts[n]);
      double horizontal = kNegInf;
      if (m - 1 >= frontier) horizontal = cm.d[row + m - 1] + probs.at(m, n);
      // Exact ties go to the diagonal branch: transitions land as late as
      // possible.
      if (horizontal > diagonal) {
        cm.d[row + m] = horizontal;
        cm.steps[row + m] = Step::kHorizontal;
      } else {
        cm.d[row + m] = diagonal;
        cm.steps[row + m] = Step::kDiagonal;
      }
    }
  }
  return cm;
}

std::vector<int> backtrace(const CostMatrix& cm, const MinChunks& mc) {
  const int n_surfaces = cm.surfaces;
  const int m_chunks = cm.chunks;
  if (!std::isfinite(cm.at(n_surfaces - 1, m_chunks - 1))) {
    throw InfeasibleError("terminal cell is unreachable");
  }

  std::vector<int> labels(m_chunks, 0);
  int n = n_surfaces - 1;
  int m = m_chunks - 1;
  while (n > 0) {
    const Step step = cm.step_at(n, m);
    if (step == Step::kHorizontal) {
      labels[m] = n;
      --m;
    } else if (step == Step::kDiagonal) {
      for (int i = 0; i < mc.counts[n]; ++i) labels[m - i] = n;
      m -= mc.counts[n];
      --n;
    } else {
      throw InfeasibleError("backtrace reached an unreachable cell");
    }
  }
  // Everything left of the last diagonal belongs to surface 0.
  return labels;
}

double labeling_logp(const ProbMatrix& probs, const std::vector<int>& labels) {
  double total = 0.0;
  for (int m = 0; m < probs.chunks; ++m) total += probs.at(m, labels[m]);
  return total;
}

Segmentation segment(const ProbMatrix& probs, const TrackConfig& track,
                     const MinChunks& mc) {
  if (track.surface_count() != probs.surfaces) {
    throw ValidationError("track defines " + std::to_string(track.surface_count()) +
                          " surfaces, probabilities cover " +
                          std::to_string(probs.surfaces));
  }
  if (static_cast<int>(probs.chunk_times_s.size()) != probs.chunks) {
    throw ValidationError("probability matrix is missing chunk center times");
  }

  const CostMatrix cm = fill_cost_matrix(probs, mc);

  Segmentation seg;
  seg.chunk_labels = backtrace(cm, mc);
  seg.chunk_times_s = probs.chunk_times_s;
  seg.boundaries_s.reserve(probs.surfaces - 1);
  for (int m = 0; m + 1 < probs.chunks; ++m) {
    if (seg.chunk_labels[m + 1] != seg.chunk_labels[m]) {
      seg.boundaries_s.push_back(
          0.5 * (seg.chunk_times_s[m] + seg.chunk_times_s[m + 1]));
    }
  }
  return seg;
}

AlignResult brute_force_align(const ProbMatrix& probs, const MinChunks& mc,
                              std::uint64_t max_candidates) {
  const int n_surfaces = probs.surfaces;
  const int m_chunks = probs.chunks;
  if (mc.size() != n_surfaces) {
    throw ValidationError("min chunks / surface count mismatch");
  }
  const int slack = m_chunks - mc.total();
  if (slack < 0) {
    throw InfeasibleError("minimum chunks total " + std::to_string(mc.total()) +
                          " exceeds available chunks " + std::to_string(m_chunks));
  }

  // Number of feasible labelings = C(slack + N - 1, N - 1); refuse huge
  // instances before enumerating.
  double count = 1.0;
  for (int i = 1; i < n_surfaces; ++i) {
    count *= static_cast<double>(slack + i) / i;
    if (count > static_cast<double>(max_candidates)) {
      throw ValidationError("instance too large for exhaustive enumeration");
    }
  }

  // Chunk counts per surface: counts[n] = mc[n] + extra[n], sum(extra) =
  // slack. The tie rule compares transition positions from the last surface
  // backwards and keeps the latest.
  std::vector<int> extra(n_surfaces, 0);
  std::vector<int> best_labels;
  std::vector<int> best_starts;  // first chunk index of each surface
  double best_cost = kNegInf;

  std::vector<int> labels(m_chunks);
  std::vector<int> starts(n_surfaces);

  auto evaluate = [&]() {
    int pos = 0;
    for (int n = 0; n < n_surfaces; ++n) {
      starts[n] = pos;
      const int count_n = mc.counts[n] + extra[n];
      for (int i = 0; i < count_n; ++i) labels[pos++] = n;
    }
    const double cost = labeling_logp(probs, labels);
    bool better = cost > best_cost;
    if (cost == best_cost) {
      for (int n = n_surfaces - 1; n >= 1; --n) {
        if (starts[n] != best_starts[n]) {
          better = starts[n] > best_starts[n];
          break;
        }
      }
    }
    if (better) {
      best_cost = cost;
      best_labels = labels;
      best_starts = starts;
    }
  };

  // Enumerate every way of distributing the slack.
  std::function<void(int, int)> enumerate = [&](int level, int remaining) {
    if (level == n_surfaces - 1) {
      extra[level] = remaining;
      evaluate();
      return;
    }
    for (int e = 0; e <= remaining; ++e) {
      extra[level] = e;
      enumerate(level + 1, remaining - e);
    }
    extra[level] = 0;
  };
  enumerate(0, slack);

  AlignResult result;
  result.labels = std::move(best_labels);
  result.total_logp = best_cost;
  return result;
}

}  // namespace acs
