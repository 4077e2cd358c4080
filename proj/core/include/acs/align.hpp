#pragma once

#include <cstdint>
#include <vector>

#include "acs/classify.hpp"
#include "acs/core.hpp"

namespace acs {

// Per-surface minimum chunk counts, each >= 1. An alignment over M chunks is
// feasible iff total() <= M.
struct MinChunks {
  std::vector<int> counts;

  int size() const { return static_cast<int>(counts.size()); }
  int total() const;
};

// min_chunks[n] = max(1, floor(min over annotations of surface n's duration
// / chunk_hop_s)). Annotations are validated against the track first.
MinChunks min_chunks_from_annotations(const std::vector<SegmentAnnotation>& anns,
                                      const TrackConfig& track,
                                      double chunk_hop_s);

// Same rule applied to the track's declared per-surface minimum durations.
MinChunks min_chunks_from_track(const TrackConfig& track, double chunk_hop_s);

// Min-chunk CSV: header `label,min_chunks`, one row per surface in track
// order. Loading validates labels and order against the track.
void save_min_chunks(const MinChunks& mc, const TrackConfig& track,
                     const std::string& path);
MinChunks load_min_chunks(const std::string& path, const TrackConfig& track);

enum class Step : std::uint8_t { kUnreachable, kHorizontal, kDiagonal };

// Constrained-DTW accumulated score table, N surfaces x M chunks row-major.
// Cell (n, m) holds the best total log-probability of labeling chunks 0..m
// with surfaces 0..n such that chunk m gets surface n and every surface k
// <= n received at least min_chunks[k] chunks. Cells left of the
// reachability frontier (m < cumulative min chunks through n, minus 1) are
// -infinity. steps records which branch won, for the backtrace.
struct CostMatrix {
  std::vector<double> d;
  std::vector<Step> steps;
  int surfaces = 0;
  int chunks = 0;

  double at(int surface, int chunk) const {
    return d[static_cast<size_t>(surface) * chunks + chunk];
  }
  Step step_at(int surface, int chunk) const {
    return steps[static_cast<size_t>(surface) * chunks + chunk];
  }
};

// Forward pass. Row 0 accumulates the running sum of logp[.][0]; row n >= 1
// takes the max of the horizontal step D[n][m-1] + logp[m][n] and the
// diagonal step D[n-1][m - mc[n]] + sum of logp over the mc[n] bridged
// chunks, all scored with the destination surface n. Exact ties prefer the
// diagonal branch, which places every transition as late as possible.
// Throws InfeasibleError when mc.total() > M.
CostMatrix fill_cost_matrix(const ProbMatrix& probs, const MinChunks& mc);

// Walks the recorded steps from (N-1, M-1) down to row 0 and returns the
// per-chunk surface indices. Labels are non-decreasing, cover every surface,
// and give each surface n at least mc[n] chunks.
std::vector<int> backtrace(const CostMatrix& cm, const MinChunks& mc);

// Full alignment: fill, backtrace, then boundary extraction. The boundary
// between surfaces n and n+1 is the midpoint of the center times of the last
// chunk labeled n and the first chunk labeled n+1.
Segmentation segment(const ProbMatrix& probs, const TrackConfig& track,
                     const MinChunks& mc);

// Total log-probability of a labeling, summed in chunk order. Both segment
// verification and the brute-force oracle score candidates through this one
// expression so equal labelings compare bit-equal.
double labeling_logp(const ProbMatrix& probs, const std::vector<int>& labels);

struct AlignResult {
  std::vector<int> labels;
  double total_logp = 0.0;
};

// Exhaustive enumeration of every monotone labeling satisfying the
// minimum-chunk constraints; returns the maximum-score labeling with ties
// resolved exactly like the dynamic program (latest transitions, last
// boundary compared first). Refuses instances with more than max_candidates
// feasible labelings.
AlignResult brute_force_align(const ProbMatrix& probs, const MinChunks& mc,
                              std::uint64_t max_candidates = 10'000'000);

}  // namespace acs
