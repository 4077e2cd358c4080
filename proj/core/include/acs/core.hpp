#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace acs {

// Mono waveform plus its sample rate. Samples are finite; a normalized clip
// peaks at exactly 1 unless it is all-zero.
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

enum class FeatureKind { kStft, kMel, kMfcc };

FeatureKind parse_feature_kind(const std::string& name);
std::string to_string(FeatureKind kind);

// Frame-level feature extraction parameters. hop_length defaults to
// n_fft / 2 (50% window overlap).
struct SpectrogramConfig {
  int n_fft = 4096;
  int hop_length = 2048;
  std::string window = "hann";
  FeatureKind feature = FeatureKind::kMel;
  int n_mels = 70;
  int n_mfcc = 40;
  double db_floor = -80.0;
};

void validate(const SpectrogramConfig& cfg);

// Chunk extraction parameters: chunk_size frames per chunk, chunk_hop frames
// between consecutive chunk starts.
struct ChunkConfig {
  int chunk_size = 91;
  int chunk_hop = 1;
};

void validate(const ChunkConfig& cfg);

// The fixed, ordered sequence of surface labels a run must traverse, with a
// minimum duration per surface. Surface identity is positional everywhere
// else in the library; labels exist for I/O.
struct TrackConfig {
  std::vector<std::string> surfaces;
  std::vector<double> min_duration_s;

  int surface_count() const { return static_cast<int>(surfaces.size()); }
  // Index of a label, -1 when unknown.
  int index_of(const std::string& label) const;
};

// Ground-truth segmentation of one run: contiguous labeled time spans.
struct SegmentAnnotation {
  struct Segment {
    std::string label;
    double start_s = 0.0;
    double end_s = 0.0;
  };
  std::vector<Segment> segments;

  double start_s() const { return segments.front().start_s; }
  double end_s() const { return segments.back().end_s; }
  // The N-1 internal transition timestamps.
  std::vector<double> boundaries_s() const;
};

// Pipeline output: per-chunk surface indices, the N-1 boundary timestamps,
// and the chunk center times they were derived from.
struct Segmentation {
  std::vector<int> chunk_labels;
  std::vector<double> boundaries_s;
  std::vector<double> chunk_times_s;
};

// Track config file: one `<label>,<min_duration_s>` line per surface, `#`
// comments ignored. Throws ParseError/ValidationError with line context.
TrackConfig load_track_config(const std::string& path);
TrackConfig parse_track_config(std::istream& in, const std::string& source);
void save_track_config(const TrackConfig& track, const std::string& path);
void write_track_config(const TrackConfig& track, std::ostream& out);

// Annotation CSV: header `label,start_s,end_s`, one row per segment.
SegmentAnnotation load_annotation(const std::string& path);
SegmentAnnotation parse_annotation(std::istream& in, const std::string& source);
void save_annotation(const SegmentAnnotation& ann, const std::string& path);
void write_annotation(const SegmentAnnotation& ann, std::ostream& out);

// Checks that segments tile [start, end] without gaps, each spans positive
// time, and the label sequence equals track.surfaces exactly. Returns its
// argument; throws ValidationError otherwise.
const SegmentAnnotation& validate_annotation(const SegmentAnnotation& ann,
                                             const TrackConfig& track);

// Fixed-point decimal with at least 3 fractional digits; precision grows
// until the text parses back to the exact double, so serialization
// round-trips.
std::string format_seconds(double value);

}  // namespace acs
