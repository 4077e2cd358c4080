#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "acs/core.hpp"

namespace acs {

// Seeded generator of synthetic track runs: each surface is band-passed
// white noise around its own center frequency, so runs have known,
// learnable surface signatures and exact boundary ground truth.
struct SynthSpec {
  TrackConfig track;
  int sample_rate = 22050;
  // Per-surface (min, max) duration draw range; empty selects the defaults:
  // (max(8, track minimum), +6 s) for interior surfaces and (max(20, track
  // minimum), +10 s) for the first and last, which stand in for the
  // out-of-track lead-in and lead-out. Minima may not undercut the track's
  // declared minimum durations.
  std::vector<std::pair<double, double>> duration_range_s;
  // Per-surface band-noise centers; empty selects log-spaced defaults from
  // 200 Hz to 0.8 * Nyquist.
  std::vector<double> center_freqs_hz;
  double bandwidth_octaves = 0.5;
  double amplitude_jitter = 0.1;
  std::uint64_t seed = 0;
};

void validate(const SynthSpec& spec);

// Resolved per-surface parameters (defaults applied), exposed for tests.
std::vector<std::pair<double, double>> resolve_duration_ranges(const SynthSpec& spec);
std::vector<double> resolve_center_freqs(const SynthSpec& spec);

// One run: durations drawn uniformly per surface, segments joined with a
// 20 ms equal-power crossfade. The annotation records the exact
// pre-crossfade boundary times. Identical seeds give identical output
// (mt19937_64 seeded with spec.seed; doubles from the high 53 bits).
std::pair<AudioClip, SegmentAnnotation> generate_run(const SynthSpec& spec);

struct DatasetEntry {
  std::string wav_path;
  std::string annotation_path;
};

// Writes run_<i>.wav + run_<i>.csv per run (run i seeded with seed + i) and
// a manifest.csv of `wav_path,annotation_path` rows; paths in the manifest
// are relative to its directory. Returns the resolved entries.
std::vector<DatasetEntry> generate_dataset(const SynthSpec& spec, int runs,
                                           const std::string& out_dir);

// Reads a manifest and resolves its paths against the manifest's directory.
std::vector<DatasetEntry> load_manifest(const std::string& path);
void save_manifest(const std::vector<DatasetEntry>& entries,
                   const std::string& path);

}  // namespace acs
