#pragma once

#include <optional>
#include <string>
#include <vector>

#include "acs/core.hpp"

namespace acs {

// Time-frequency features, frames x bins row-major. Values are dB for
// stft/mel and raw DCT coefficients for mfcc. Frame timing is exact:
// frame_hop_s = hop_length / sample_rate, frame_center_offset_s =
// (n_fft / 2) / sample_rate.
struct FeatureMatrix {
  std::vector<double> data;
  int frames = 0;
  int bins = 0;
  double frame_hop_s = 0.0;
  double frame_center_offset_s = 0.0;
  int sample_rate = 0;
  SpectrogramConfig config;

  double at(int frame, int bin) const {
    return data[static_cast<size_t>(frame) * bins + bin];
  }
  const double* row(int frame) const {
    return data.data() + static_cast<size_t>(frame) * bins;
  }
  double* row(int frame) {
    return data.data() + static_cast<size_t>(frame) * bins;
  }
};

// Peak normalization to [-1, 1]; an all-zero clip is returned unchanged.
AudioClip normalize(const AudioClip& clip);

// Frame count is floor((len - n_fft) / hop) + 1 with no centering or
// padding; frame f starts at sample f * hop. Each frame is the
// Hann-windowed power spectrum, optionally mel-mapped, dB-converted as
// 10*log10(power + 1e-10) and clamped at db_floor; mfcc applies an
// orthonormal DCT-II to the dB mel frame and keeps the first n_mfcc
// coefficients. Throws ValidationError when the clip is shorter than n_fft.
FeatureMatrix spectrogram(const AudioClip& clip, const SpectrogramConfig& cfg);

// Overlapping fixed-width windows over a FeatureMatrix. Chunks are views:
// the FeatureMatrix must outlive the ChunkSet.
struct ChunkSet {
  const FeatureMatrix* features = nullptr;
  std::vector<int> start_frames;
  std::vector<double> center_times_s;
  std::optional<std::vector<int>> labels;
  ChunkConfig chunk_config;

  int size() const { return static_cast<int>(start_frames.size()); }
};

// M = floor((frames - chunk_size) / chunk_hop) + 1 chunks; chunk center time
// is (start_frame + chunk_size / 2) * frame_hop_s + frame_center_offset_s.
// When an annotation is supplied (with its track, for label indices), each
// chunk is labeled by the segment whose [start_s, end_s) contains its center
// time; a center outside the annotated span is an error.
ChunkSet extract_chunks(const FeatureMatrix& fm, const ChunkConfig& cc,
                        const SegmentAnnotation* ann = nullptr,
                        const TrackConfig* track = nullptr);

// Chunk width in seconds by the hop-count convention used in reports:
// chunk_size * frame_hop_s (the trailing window tail is not counted).
double chunk_duration_s(const ChunkConfig& cc, const FeatureMatrix& fm);

// Triangular mel filterbank, n_mels x (n_fft/2 + 1) row-major. Mel scale is
// 2595*log10(1 + f/700) between 0 Hz and sample_rate/2; filters peak at 1
// (no area normalization).
std::vector<double> mel_filterbank(int n_mels, int n_fft, int sample_rate);

// Binary feature dump: magic "ACSF", u32 version=1, u32 frames, u32 bins,
// f64 frame_hop_s, f64 frame_center_offset_s, then frames*bins f32
// row-major, all little-endian.
void write_feature_dump(const std::string& path, const FeatureMatrix& fm);
FeatureMatrix read_feature_dump(const std::string& path);

}  // namespace acs
