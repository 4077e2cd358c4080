#include "acs/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "acs/errors.hpp"

namespace acs {

namespace {

constexpr double kPowerEpsilon = 1e-10;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Real-to-complex FFT executor. Plans are cached per transform size and
// created under a lock; execution uses the new-array interface on per-call
// buffers, so concurrent callers are fine. Plans are created with
// FFTW_UNALIGNED so any buffer is acceptable.
class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_.resize(n);
    out_.resize(static_cast<size_t>(n) / 2 + 1);
    static std::mutex plan_mutex;
    static std::map<int, fftw_plan>* plans = new std::map<int, fftw_plan>();
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto it = plans->find(n);
    if (it == plans->end()) {
      fftw_plan plan = fftw_plan_dft_r2c_1d(
          n, in_.data(), reinterpret_cast<fftw_complex*>(out_.data()),
          FFTW_ESTIMATE | FFTW_UNALIGNED);
      if (plan == nullptr) throw std::runtime_error("fftw plan creation failed");
      it = plans->emplace(n, plan).first;
    }
    plan_ = it->second;
  }

  // Writes |X_k|^2 for k = 0..n/2 into power.
  void power_spectrum(const double* frame, const double* window, double* power) {
    for (int i = 0; i < n_; ++i) in_[i] = frame[i] * window[i];
    fftw_execute_dft_r2c(plan_, in_.data(),
                         reinterpret_cast<fftw_complex*>(out_.data()));
    const int bins = n_ / 2 + 1;
    for (int k = 0; k < bins; ++k) {
      const double re = out_[k][0];
      const double im = out_[k][1];
      power[k] = re * re + im * im;
    }
  }

 private:
  int n_;
  std::vector<double> in_;
  struct Complex {
    double v[2];
    double operator[](int i) const { return v[i]; }
  };
  std::vector<Complex> out_;
  fftw_plan plan_ = nullptr;
};

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  }
  return w;
}

// Orthonormal DCT-II matrix, n_out x n_in row-major.
std::vector<double> dct_matrix(int n_out, int n_in) {
  std::vector<double> m(static_cast<size_t>(n_out) * n_in);
  const double scale0 = std::sqrt(1.0 / n_in);
  const double scale = std::sqrt(2.0 / n_in);
  for (int k = 0; k < n_out; ++k) {
    for (int i = 0; i < n_in; ++i) {
      m[static_cast<size_t>(k) * n_in + i] =
          (k == 0 ? scale0 : scale) *
          std::cos(std::numbers::pi * k * (2 * i + 1) / (2.0 * n_in));
    }
  }
  return m;
}

}  // namespace

AudioClip normalize(const AudioClip& clip) {
  double peak = 0.0;
  for (double x : clip.samples) peak = std::max(peak, std::fabs(x));
  AudioClip out = clip;
  if (peak > 0.0) {
    for (double& x : out.samples) x /= peak;
  }
  return out;
}

std::vector<double> mel_filterbank(int n_mels, int n_fft, int sample_rate) {
  const int bins = n_fft / 2 + 1;
  std::vector<double> weights(static_cast<size_t>(n_mels) * bins, 0.0);

  const double mel_max = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges_hz(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    edges_hz[i] = mel_to_hz(mel_max * i / (n_mels + 1));
  }

  for (int j = 0; j < n_mels; ++j) {
    const double lo = edges_hz[j];
    const double peak = edges_hz[j + 1];
    const double hi = edges_hz[j + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      double w = 0.0;
      if (f > lo && f < hi) {
        w = f <= peak ? (f - lo) / (peak - lo) : (hi - f) / (hi - peak);
      }
      weights[static_cast<size_t>(j) * bins + k] = w;
    }
  }
  return weights;
}

FeatureMatrix spectrogram(const AudioClip& clip, const SpectrogramConfig& cfg) {
  validate(cfg);
  if (clip.sample_rate <= 0) throw ValidationError("sample rate must be positive");
  const int n = static_cast<int>(clip.samples.size());
  if (n < cfg.n_fft) {
    throw ValidationError("clip has " + std::to_string(n) +
                          " samples, shorter than n_fft=" + std::to_string(cfg.n_fft));
  }

  const int frames = (n - cfg.n_fft) / cfg.hop_length + 1;
  const int fft_bins = cfg.n_fft / 2 + 1;
  int out_bins = fft_bins;
  if (cfg.feature == FeatureKind::kMel) out_bins = cfg.n_mels;
  if (cfg.feature == FeatureKind::kMfcc) out_bins = cfg.n_mfcc;

  FeatureMatrix fm;
  fm.frames = frames;
  fm.bins = out_bins;
  fm.frame_hop_s = static_cast<double>(cfg.hop_length) / clip.sample_rate;
  fm.frame_center_offset_s = static_cast<double>(cfg.n_fft / 2) / clip.sample_rate;
  fm.sample_rate = clip.sample_rate;
  fm.config = cfg;
  fm.data.resize(static_cast<size_t>(frames) * out_bins);

  const std::vector<double> window = hann_window(cfg.n_fft);
  std::vector<double> mel;
  if (cfg.feature != FeatureKind::kStft) {
    mel = mel_filterbank(cfg.n_mels, cfg.n_fft, clip.sample_rate);
  }
  std::vector<double> dct;
  if (cfg.feature == FeatureKind::kMfcc) dct = dct_matrix(cfg.n_mfcc, cfg.n_mels);

  RealFft fft(cfg.n_fft);
  std::vector<double> power(fft_bins);
  std::vector<double> mel_db(cfg.n_mels);

  auto to_db = [&](double p) {
    return std::max(10.0 * std::log10(p + kPowerEpsilon), cfg.db_floor);
  };

  for (int f = 0; f < frames; ++f) {
    const double* frame = clip.samples.data() + static_cast<size_t>(f) * cfg.hop_length;
    fft.power_spectrum(frame, window.data(), power.data());

    double* out = fm.row(f);
    switch (cfg.feature) {
      case FeatureKind::kStft:
        for (int k = 0; k < fft_bins; ++k) out[k] = to_db(power[k]);
        break;
      case FeatureKind::kMel:
        for (int j = 0; j < cfg.n_mels; ++j) {
          const double* w = mel.data() + static_cast<size_t>(j) * fft_bins;
          double acc = 0.0;
          for (int k = 0; k < fft_bins; ++k) acc += w[k] * power[k];
          out[j] = to_db(acc);
        }
        break;
      case FeatureKind::kMfcc:
        for (int j = 0; j < cfg.n_mels; ++j) {
          const double* w = mel.data() + static_cast<size_t>(j) * fft_bins;
          double acc = 0.0;
          for (int k = 0; k < fft_bins; ++k) acc += w[k] * power[k];
          mel_db[j] = to_db(acc);
        }
        for (int c = 0; c < cfg.n_mfcc; ++c) {
          const double* w = dct.data() + static_cast<size_t>(c) * cfg.n_mels;
          double acc = 0.0;
          for (int j = 0; j < cfg.n_mels; ++j) acc += w[j] * mel_db[j];
          out[c] = acc;
        }
        break;
    }
  }
  return fm;
}

double chunk_duration_s(const ChunkConfig& cc, const FeatureMatrix& fm) {
  return cc.chunk_size * fm.frame_hop_s;
}

ChunkSet extract_chunks(const FeatureMatrix& fm, const ChunkConfig& cc,
                        const SegmentAnnotation* ann, const TrackConfig* track) {
  validate(cc);
  if (fm.frames < cc.chunk_size) {
    throw ValidationError("feature matrix has " + std::to_string(fm.frames) +
                          " frames, fewer than chunk_size=" +
                          std::to_string(cc.chunk_size));
  }
  if ((ann == nullptr) != (track == nullptr)) {
    throw ValidationError("annotation and track must be supplied together");
  }

  const int m = (fm.frames - cc.chunk_size) / cc.chunk_hop + 1;
  const int half = cc.chunk_size / 2;

  ChunkSet cs;
  cs.features = &fm;
  cs.chunk_config = cc;
  cs.start_frames.resize(m);
  cs.center_times_s.resize(m);
  for (int i = 0; i < m; ++i) {
    const int start = i * cc.chunk_hop;
    cs.start_frames[i] = start;
    if (fm.sample_rate > 0) {
      // Single division of an exact integer numerator keeps consecutive
      // center times within 1 ulp of a constant step.
      const double center_sample =
          static_cast<double>(start + half) * fm.config.hop_length +
          fm.config.n_fft / 2;
      cs.center_times_s[i] = center_sample / fm.sample_rate;
    } else {
      // Dump-loaded matrices only carry the timing metadata.
      cs.center_times_s[i] =
          (start + half) * fm.frame_hop_s + fm.frame_center_offset_s;
    }
  }

  if (ann != nullptr) {
    std::vector<int> labels(m);
    size_t seg = 0;
    for (int i = 0; i < m; ++i) {
      const double t = cs.center_times_s[i];
      // Centers increase, so the containing segment only moves forward.
      while (seg < ann->segments.size() && t >= ann->segments[seg].end_s) ++seg;
      if (seg >= ann->segments.size() || t < ann->segments[seg].start_s) {
        throw ValidationError("chunk center " + format_seconds(t) +
                              " s falls outside the annotated span");
      }
      const int idx = track->index_of(ann->segments[seg].label);
      if (idx < 0) {
        throw ValidationError("annotation label '" + ann->segments[seg].label +
                              "' not in track");
      }
      labels[i] = idx;
    }
    cs.labels = std::move(labels);
  }
  return cs;
}

void write_feature_dump(const std::string& path, const FeatureMatrix& fm) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");

  auto put_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<char*>(&v), 4); };
  auto put_f64 = [&](double v) { out.write(reinterpret_cast<char*>(&v), 8); };

  out.write("ACSF", 4);
  put_u32(1);
  put_u32(static_cast<std::uint32_t>(fm.frames));
  put_u32(static_cast<std::uint32_t>(fm.bins));
  put_f64(fm.frame_hop_s);
  put_f64(fm.frame_center_offset_s);
  for (double v : fm.data) {
    float f = static_cast<float>(v);
    out.write(reinterpret_cast<char*>(&f), 4);
  }
  if (!out) throw IoError("failed writing " + path);
}

FeatureMatrix read_feature_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");

  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "ACSF", 4) != 0) {
    throw ParseError(path + ": not an ACSF feature dump");
  }
  auto get_u32 = [&]() {
    std::uint32_t v;
    if (!in.read(reinterpret_cast<char*>(&v), 4)) {
      throw ParseError(path + ": truncated header");
    }
    return v;
  };
  auto get_f64 = [&]() {
    double v;
    if (!in.read(reinterpret_cast<char*>(&v), 8)) {
      throw ParseError(path + ": truncated header");
    }
    return v;
  };

  const std::uint32_t version = get_u32();
  if (version != 1) {
    throw ParseError(path + ": unsupported version " + std::to_string(version));
  }
  FeatureMatrix fm;
  fm.frames = static_cast<int>(get_u32());
  fm.bins = static_cast<int>(get_u32());
  fm.frame_hop_s = get_f64();
  fm.frame_center_offset_s = get_f64();
  fm.data.resize(static_cast<size_t>(fm.frames) * fm.bins);
  for (double& v : fm.data) {
    float f;
    if (!in.read(reinterpret_cast<char*>(&f), 4)) {
      throw ParseError(path + ": truncated data");
    }
    v = f;
  }
  return fm;
}

}  // namespace acs
