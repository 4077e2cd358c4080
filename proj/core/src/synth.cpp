#include "acs/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "acs/errors.hpp"
#include "acs/wav.hpp"

namespace acs {

namespace {

constexpr double kCrossfadeS = 0.020;
constexpr int kFilterWarmupSamples = 1024;
constexpr double kDefaultMinDuration = 8.0;
constexpr double kDefaultDurationSpread = 6.0;
// The first and last surfaces play the out-of-track lead-in/lead-out role,
// so their defaults are generous the way real recordings are.
constexpr double kDefaultEdgeMinDuration = 20.0;
constexpr double kDefaultEdgeDurationSpread = 10.0;

// Uniform doubles in [0, 1) from the high 53 bits of mt19937_64, so draws do
// not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

// RBJ-style constant-peak band-pass biquad; bandwidth given in octaves.
struct BandPass {
  double b0, b1, b2, a1, a2;
  double z1 = 0.0, z2 = 0.0;

  BandPass(double center_hz, double bandwidth_octaves, int sample_rate) {
    const double w0 = 2.0 * std::numbers::pi * center_hz / sample_rate;
    const double sin_w0 = std::sin(w0);
    const double alpha =
        sin_w0 * std::sinh(std::numbers::ln2 / 2.0 * bandwidth_octaves * w0 / sin_w0);
    const double a0 = 1.0 + alpha;
    b0 = alpha / a0;
    b1 = 0.0;
    b2 = -alpha / a0;
    a1 = -2.0 * std::cos(w0) / a0;
    a2 = (1.0 - alpha) / a0;
  }

  double process(double x) {
    const double y = b0 * x + z1;
    z1 = b1 * x - a1 * y + z2;
    z2 = b2 * x - a2 * y;
    return y;
  }
};

}  // namespace

std::vector<std::pair<double, double>> resolve_duration_ranges(const SynthSpec& spec) {
  const int n = spec.track.surface_count();
  if (!spec.duration_range_s.empty()) return spec.duration_range_s;
  std::vector<std::pair<double, double>> ranges(n);
  for (int k = 0; k < n; ++k) {
    const bool edge = n > 1 && (k == 0 || k == n - 1);
    const double base = edge ? kDefaultEdgeMinDuration : kDefaultMinDuration;
    const double spread = edge ? kDefaultEdgeDurationSpread : kDefaultDurationSpread;
    const double lo = std::max(base, spec.track.min_duration_s[k]);
    ranges[k] = {lo, lo + spread};
  }
  return ranges;
}

std::vector<double> resolve_center_freqs(const SynthSpec& spec) {
  const int n = spec.track.surface_count();
  if (!spec.center_freqs_hz.empty()) return spec.center_freqs_hz;
  const double lo = 200.0;
  const double hi = 0.8 * spec.sample_rate / 2.0;
  std::vector<double> freqs(n);
  if (n == 1) {
    freqs[0] = std::sqrt(lo * hi);
    return freqs;
  }
  for (int k = 0; k < n; ++k) {
    freqs[k] = lo * std::pow(hi / lo, static_cast<double>(k) / (n - 1));
  }
  return freqs;
}

void validate(const SynthSpec& spec) {
  const int n = spec.track.surface_count();
  if (n < 1) throw ValidationError("track defines no surfaces");
  if (spec.sample_rate <= 0) throw ValidationError("sample rate must be positive");
  if (spec.bandwidth_octaves <= 0.0) {
    throw ValidationError("bandwidth must be positive");
  }
  if (spec.amplitude_jitter < 0.0 || spec.amplitude_jitter >= 1.0) {
    throw ValidationError("amplitude jitter must be in [0, 1)");
  }

  const auto ranges = resolve_duration_ranges(spec);
  if (static_cast<int>(ranges.size()) != n) {
    throw ValidationError("duration ranges / surface count mismatch");
  }
  for (int k = 0; k < n; ++k) {
    const auto& [lo, hi] = ranges[k];
    if (!(lo > 0.0) || hi < lo) {
      throw ValidationError("invalid duration range for surface '" +
                            spec.track.surfaces[k] + "'");
    }
    if (lo < spec.track.min_duration_s[k]) {
      throw ValidationError("duration range for surface '" +
                            spec.track.surfaces[k] +
                            "' undercuts the track minimum duration");
    }
  }

  const auto freqs = resolve_center_freqs(spec);
  if (static_cast<int>(freqs.size()) != n) {
    throw ValidationError("center frequencies / surface count mismatch");
  }
  for (double f : freqs) {
    if (!(f > 0.0) || f >= spec.sample_rate / 2.0) {
      throw ValidationError("center frequency out of (0, Nyquist)");
    }
  }
}

std::pair<AudioClip, SegmentAnnotation> generate_run(const SynthSpec& spec) {
  validate(spec);
  const int n = spec.track.surface_count();
  const int sr = spec.sample_rate;
  const auto ranges = resolve_duration_ranges(spec);
  const auto freqs = resolve_center_freqs(spec);

  Rng rng(spec.seed);

  // Draw durations first so segment boundaries are fixed before any signal
  // is generated.
  std::vector<double> durations(n);
  for (int k = 0; k < n; ++k) {
    durations[k] = rng.uniform(ranges[k].first, ranges[k].second);
  }
  std::vector<double> boundaries(n + 1, 0.0);
  for (int k = 0; k < n; ++k) boundaries[k + 1] = boundaries[k] + durations[k];

  const int total_samples = static_cast<int>(std::lround(boundaries[n] * sr));
  const int fade = std::max(2, static_cast<int>(std::lround(kCrossfadeS * sr)));

  // Each surface contributes band-passed white noise with a slow amplitude
  // wobble, generated with enough margin to cover the crossfades at both
  // ends.
  std::vector<std::vector<double>> signals(n);
  std::vector<int> offsets(n);  // sample index of each signal's first value
  for (int k = 0; k < n; ++k) {
    const int start = static_cast<int>(std::lround(boundaries[k] * sr));
    const int end = static_cast<int>(std::lround(boundaries[k + 1] * sr));
    const int lead = k > 0 ? fade / 2 : 0;
    const int tail = k + 1 < n ? fade - fade / 2 : 0;
    offsets[k] = start - lead;
    const int len = (end + tail) - offsets[k];

    BandPass filter(freqs[k], spec.bandwidth_octaves, sr);
    for (int i = 0; i < kFilterWarmupSamples; ++i) {
      filter.process(rng.uniform(-1.0, 1.0));
    }
    const double lfo_hz = rng.uniform(0.3, 1.5);
    const double lfo_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

    auto& sig = signals[k];
    sig.resize(len);
    for (int i = 0; i < len; ++i) {
      const double t = static_cast<double>(offsets[k] + i) / sr;
      const double envelope =
          1.0 + spec.amplitude_jitter *
                    std::sin(2.0 * std::numbers::pi * lfo_hz * t + lfo_phase);
      sig[i] = envelope * filter.process(rng.uniform(-1.0, 1.0));
    }
  }

  AudioClip clip;
  clip.sample_rate = sr;
  clip.samples.assign(total_samples, 0.0);
  for (int k = 0; k < n; ++k) {
    const auto& sig = signals[k];
    for (size_t i = 0; i < sig.size(); ++i) {
      const int pos = offsets[k] + static_cast<int>(i);
      if (pos < 0 || pos >= total_samples) continue;
      double gain = 1.0;
      if (k > 0) {
        const int fade_start = static_cast<int>(std::lround(boundaries[k] * sr)) - fade / 2;
        if (pos < fade_start + fade) {
          const double x = (pos - fade_start + 0.5) / fade;
          gain *= std::sin(x * std::numbers::pi / 2.0);  // fade in
        }
      }
      if (k + 1 < n) {
        const int fade_start =
            static_cast<int>(std::lround(boundaries[k + 1] * sr)) - fade / 2;
        if (pos >= fade_start) {
          const double x = (pos - fade_start + 0.5) / fade;
          gain *= std::cos(x * std::numbers::pi / 2.0);  // fade out
        }
      }
      clip.samples[pos] += gain * sig[i];
    }
  }

  // Keep headroom before 16-bit quantization.
  double peak = 0.0;
  for (double x : clip.samples) peak = std::max(peak, std::fabs(x));
  if (peak > 0.0) {
    for (double& x : clip.samples) x *= 0.9 / peak;
  }

  SegmentAnnotation ann;
  ann.segments.resize(n);
  for (int k = 0; k < n; ++k) {
    ann.segments[k] = {spec.track.surfaces[k], boundaries[k], boundaries[k + 1]};
  }
  return {std::move(clip), std::move(ann)};
}

std::vector<DatasetEntry> generate_dataset(const SynthSpec& spec, int runs,
                                           const std::string& out_dir) {
  if (runs < 0) throw ValidationError("run count must be >= 0");
  validate(spec);

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory " + out_dir + ": " + ec.message());

  std::vector<DatasetEntry> entries;
  std::vector<DatasetEntry> relative;
  for (int i = 0; i < runs; ++i) {
    SynthSpec run_spec = spec;
    run_spec.seed = spec.seed + static_cast<std::uint64_t>(i);
    auto [clip, ann] = generate_run(run_spec);

    const std::string wav_name = "run_" + std::to_string(i) + ".wav";
    const std::string ann_name = "run_" + std::to_string(i) + ".csv";
    const std::string wav_path = (fs::path(out_dir) / wav_name).string();
    const std::string ann_path = (fs::path(out_dir) / ann_name).string();
    write_wav(wav_path, clip);
    save_annotation(ann, ann_path);
    entries.push_back({wav_path, ann_path});
    relative.push_back({wav_name, ann_name});
  }
  save_manifest(relative, (fs::path(out_dir) / "manifest.csv").string());
  return entries;
}

void save_manifest(const std::vector<DatasetEntry>& entries,
                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "wav_path,annotation_path\n";
  for (const auto& e : entries) {
    out << e.wav_path << "," << e.annotation_path << "\n";
  }
  if (!out) throw IoError("failed writing " + path);
}

std::vector<DatasetEntry> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");

  const auto base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };

  std::vector<DatasetEntry> entries;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) {
      line.pop_back();
    }
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "wav_path,annotation_path") {
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": expected header 'wav_path,annotation_path'");
      }
      header_seen = true;
      continue;
    }
    auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected 'wav_path,annotation_path'");
    }
    entries.push_back({resolve(line.substr(0, comma)), resolve(line.substr(comma + 1))});
  }
  if (!header_seen) throw ParseError(path + ": missing manifest header");
  return entries;
}

}  // namespace acs
