// acs — acoustic constrained segmentation toolkit.
//
// Subcommands cover the full pipeline: synthetic dataset generation,
// min-duration estimation, centroid training, feature dumps, segmentation
// and metric evaluation. Exit codes: 0 ok, 1 I/O failure, 2 usage or
// validation error, 3 infeasible alignment.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "acs/align.hpp"
#include "acs/classify.hpp"
#include "acs/core.hpp"
#include "acs/dsp.hpp"
#include "acs/errors.hpp"
#include "acs/eval.hpp"
#include "acs/synth.hpp"
#include "acs/wav.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;

struct FeatureFlags {
  int n_fft = 4096;
  int hop_length = 0;  // 0: n_fft / 2
  std::string feature = "mel";
  int n_mels = 70;
  int n_mfcc = 0;  // 0: min(40, n_mels)
  double db_floor = -80.0;
  int chunk_size = 91;
  int chunk_hop = 1;
};

void add_feature_flags(CLI::App* cmd, FeatureFlags* flags) {
  cmd->add_option("--n-fft", flags->n_fft, "FFT size in samples")
      ->capture_default_str();
  cmd->add_option("--hop-length", flags->hop_length,
                  "Samples between frames (default n_fft/2)");
  cmd->add_option("--feature", flags->feature, "Feature kind: stft, mel or mfcc")
      ->capture_default_str();
  cmd->add_option("--n-mels", flags->n_mels, "Mel band count")
      ->capture_default_str();
  cmd->add_option("--n-mfcc", flags->n_mfcc,
                  "MFCC coefficient count (default min(40, n_mels))");
  cmd->add_option("--db-floor", flags->db_floor, "Minimum dB value")
      ->capture_default_str();
  cmd->add_option("--chunk-size", flags->chunk_size, "Frames per chunk")
      ->capture_default_str();
  cmd->add_option("--chunk-hop", flags->chunk_hop,
                  "Frame displacement between chunks")
      ->capture_default_str();
}

acs::SpectrogramConfig spectrogram_config(const FeatureFlags& flags) {
  acs::SpectrogramConfig cfg;
  cfg.n_fft = flags.n_fft;
  cfg.hop_length = flags.hop_length > 0 ? flags.hop_length : flags.n_fft / 2;
  cfg.feature = acs::parse_feature_kind(flags.feature);
  cfg.n_mels = flags.n_mels;
  cfg.n_mfcc = flags.n_mfcc > 0 ? flags.n_mfcc : std::min(40, flags.n_mels);
  cfg.db_floor = flags.db_floor;
  acs::validate(cfg);
  return cfg;
}

acs::ChunkConfig chunk_config(const FeatureFlags& flags) {
  acs::ChunkConfig cc;
  cc.chunk_size = flags.chunk_size;
  cc.chunk_hop = flags.chunk_hop;
  acs::validate(cc);
  return cc;
}

struct RunFeatures {
  std::unique_ptr<acs::FeatureMatrix> features;
  acs::ChunkSet chunks;
};

RunFeatures analyze_run(const std::string& wav_path, const FeatureFlags& flags,
                        const acs::SegmentAnnotation* ann,
                        const acs::TrackConfig* track) {
  RunFeatures out;
  const acs::AudioClip clip = acs::normalize(acs::load_wav(wav_path));
  out.features = std::make_unique<acs::FeatureMatrix>(
      acs::spectrogram(clip, spectrogram_config(flags)));
  out.chunks = acs::extract_chunks(*out.features, chunk_config(flags), ann, track);
  return out;
}

// Runs fn(i) for i in [0, count) on up to jobs threads. The first exception
// wins and is rethrown after all workers stop.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&]() {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

double chunk_hop_seconds(const FeatureFlags& flags, int sample_rate) {
  const int hop = flags.hop_length > 0 ? flags.hop_length : flags.n_fft / 2;
  return static_cast<double>(flags.chunk_hop) * hop / sample_rate;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out_dir;
  std::string surfaces_path;
  int runs = 1;
  std::uint64_t seed = 0;
  int sample_rate = 22050;
};

int cmd_synth(const SynthArgs& args) {
  acs::SynthSpec spec;
  spec.track = acs::load_track_config(args.surfaces_path);
  spec.sample_rate = args.sample_rate;
  spec.seed = args.seed;
  acs::generate_dataset(spec, args.runs, args.out_dir);
  const auto manifest = std::filesystem::path(args.out_dir) / "manifest.csv";
  std::cout << manifest.string() << "\n";
  return kExitOk;
}

struct SegmentArgs {
  std::string wav_path;
  std::string track_path;
  std::string model_path;
  std::string probs_path;
  std::string min_chunks_path;
  std::string out_path;
  bool boundaries_only = false;
  FeatureFlags features;
};

int cmd_segment(const SegmentArgs& args) {
  const acs::TrackConfig track = acs::load_track_config(args.track_path);
  const acs::AudioClip clip = acs::load_wav(args.wav_path);
  const double audio_end_s = clip.duration_s();

  acs::ProbMatrix probs;
  if (!args.model_path.empty()) {
    const acs::CentroidModel model = acs::load_model(args.model_path);
    if (model.labels != track.surfaces) {
      throw acs::ValidationError("model labels do not match the track config");
    }
    const acs::AudioClip normalized = acs::normalize(clip);
    const acs::FeatureMatrix fm =
        acs::spectrogram(normalized, spectrogram_config(args.features));
    const acs::ChunkSet cs = acs::extract_chunks(fm, chunk_config(args.features));
    probs = acs::predict(model, cs);
  } else {
    probs = acs::import_probs(args.probs_path, track);
    if (probs.chunk_times_s.empty()) {
      // No time_s column: recompute chunk timing locally.
      const acs::AudioClip normalized = acs::normalize(clip);
      const acs::FeatureMatrix fm =
          acs::spectrogram(normalized, spectrogram_config(args.features));
      const acs::ChunkSet cs = acs::extract_chunks(fm, chunk_config(args.features));
      if (cs.size() != probs.chunks) {
        throw acs::ValidationError(
            "probability rows (" + std::to_string(probs.chunks) +
            ") do not match locally computed chunks (" +
            std::to_string(cs.size()) + ")");
      }
      probs.chunk_times_s = cs.center_times_s;
    }
  }

  acs::MinChunks mc;
  if (!args.min_chunks_path.empty()) {
    mc = acs::load_min_chunks(args.min_chunks_path, track);
  } else {
    mc = acs::min_chunks_from_track(track,
                                    chunk_hop_seconds(args.features, clip.sample_rate));
  }

  const acs::Segmentation seg = acs::segment(probs, track, mc);

  std::ofstream out(args.out_path);
  if (!out) throw acs::IoError("cannot open " + args.out_path + " for writing");
  if (args.boundaries_only) {
    out << "boundary_index,time_s\n";
    for (size_t i = 0; i < seg.boundaries_s.size(); ++i) {
      out << i << "," << acs::format_seconds(seg.boundaries_s[i]) << "\n";
    }
  } else {
    acs::SegmentAnnotation ann;
    double start = 0.0;
    for (int k = 0; k < track.surface_count(); ++k) {
      const double end =
          k + 1 < track.surface_count() ? seg.boundaries_s[k] : audio_end_s;
      ann.segments.push_back({track.surfaces[k], start, end});
      start = end;
    }
    acs::write_annotation(ann, out);
  }
  if (!out) throw acs::IoError("failed writing " + args.out_path);
  return kExitOk;
}

struct MinDurationsArgs {
  std::string manifest_path;
  std::string track_path;
  std::string out_path;
  double chunk_hop_s = 2048.0 / 22050.0;
};

int cmd_min_durations(const MinDurationsArgs& args) {
  const acs::TrackConfig track = acs::load_track_config(args.track_path);
  const auto entries = acs::load_manifest(args.manifest_path);
  if (entries.empty()) {
    throw acs::ValidationError(args.manifest_path + ": manifest lists no runs");
  }
  std::vector<acs::SegmentAnnotation> anns;
  anns.reserve(entries.size());
  for (const auto& e : entries) {
    anns.push_back(acs::load_annotation(e.annotation_path));
  }
  const acs::MinChunks mc =
      acs::min_chunks_from_annotations(anns, track, args.chunk_hop_s);
  acs::save_min_chunks(mc, track, args.out_path);
  return kExitOk;
}

struct TrainArgs {
  std::string manifest_path;
  std::string track_path;
  std::string out_path;
  double temperature = 1.0;
  int jobs = 1;
  FeatureFlags features;
};

int cmd_train_centroid(const TrainArgs& args) {
  const acs::TrackConfig track = acs::load_track_config(args.track_path);
  const auto entries = acs::load_manifest(args.manifest_path);
  if (entries.empty()) {
    throw acs::ValidationError(args.manifest_path + ": manifest lists no runs");
  }

  std::vector<acs::SegmentAnnotation> anns(entries.size());
  std::vector<RunFeatures> runs(entries.size());
  parallel_for(static_cast<int>(entries.size()), args.jobs, [&](int i) {
    anns[i] = acs::load_annotation(entries[i].annotation_path);
    acs::validate_annotation(anns[i], track);
    runs[i] = analyze_run(entries[i].wav_path, args.features, &anns[i], &track);
  });

  std::vector<const acs::ChunkSet*> sets;
  sets.reserve(runs.size());
  for (const auto& r : runs) sets.push_back(&r.chunks);
  const acs::CentroidModel model =
      acs::train_centroid(sets, track, args.temperature);
  acs::save_model(model, args.out_path);
  return kExitOk;
}

struct FeaturesArgs {
  std::string wav_path;
  std::string out_path;
  FeatureFlags features;
};

int cmd_features(const FeaturesArgs& args) {
  const acs::AudioClip clip = acs::normalize(acs::load_wav(args.wav_path));
  const acs::FeatureMatrix fm =
      acs::spectrogram(clip, spectrogram_config(args.features));
  acs::write_feature_dump(args.out_path, fm);
  return kExitOk;
}

struct EvalArgs {
  std::string pred_path;
  std::string truth_path;
  std::string out_path;
  double chunk_hop_s = 2048.0 / 22050.0;
};

// Label of the segment whose [start, end) contains t; -1 outside the span.
int label_index_at(const acs::SegmentAnnotation& ann,
                   const std::vector<std::string>& order, double t) {
  for (const auto& seg : ann.segments) {
    if (t >= seg.start_s && t < seg.end_s) {
      auto it = std::find(order.begin(), order.end(), seg.label);
      return it == order.end() ? -1 : static_cast<int>(it - order.begin());
    }
  }
  return -1;
}

int cmd_eval(const EvalArgs& args) {
  const acs::SegmentAnnotation pred = acs::load_annotation(args.pred_path);
  const acs::SegmentAnnotation truth = acs::load_annotation(args.truth_path);

  std::vector<std::string> order;
  for (const auto& seg : truth.segments) order.push_back(seg.label);
  for (const auto& seg : pred.segments) {
    if (std::find(order.begin(), order.end(), seg.label) == order.end()) {
      throw acs::ValidationError("prediction label '" + seg.label +
                                 "' not present in truth");
    }
  }

  const auto pred_b = pred.boundaries_s();
  const auto truth_b = truth.boundaries_s();
  if (pred_b.size() != truth_b.size()) {
    throw acs::ValidationError("boundary count mismatch: " +
                               std::to_string(pred_b.size()) + " vs " +
                               std::to_string(truth_b.size()));
  }
  std::vector<double> errors(truth_b.size());
  for (size_t i = 0; i < errors.size(); ++i) {
    errors[i] = std::fabs(pred_b[i] - truth_b[i]);
  }
  acs::MetricsReport report = acs::metrics_from_errors(std::move(errors));

  // Chunk-level metrics: sample both label functions on a uniform grid over
  // the common time span, one point per chunk hop.
  const double span_start = std::max(pred.start_s(), truth.start_s());
  const double span_end = std::min(pred.end_s(), truth.end_s());
  std::vector<int> pred_labels;
  std::vector<int> true_labels;
  for (double t = span_start + args.chunk_hop_s / 2.0; t < span_end;
       t += args.chunk_hop_s) {
    const int p = label_index_at(pred, order, t);
    const int q = label_index_at(truth, order, t);
    if (p < 0 || q < 0) continue;
    pred_labels.push_back(p);
    true_labels.push_back(q);
  }
  if (!pred_labels.empty()) {
    const acs::ChunkMetrics cm = acs::chunk_metrics(
        pred_labels, true_labels, static_cast<int>(order.size()));
    report.chunk_accuracy = cm.accuracy;
    report.chunk_f1_macro = cm.f1_macro;
  }

  acs::save_metrics_json(report, args.out_path);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acoustic constrained segmentation toolkit"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand(
      "synth", "Generate a synthetic labeled dataset of track runs");
  synth->add_option("--out-dir", synth_args.out_dir, "Output directory")->required();
  synth->add_option("--runs", synth_args.runs, "Number of runs")->required();
  synth->add_option("--seed", synth_args.seed, "Base RNG seed")->required();
  synth->add_option("--surfaces", synth_args.surfaces_path, "Track config file")
      ->required();
  synth->add_option("--sample-rate", synth_args.sample_rate, "Sample rate in Hz")
      ->capture_default_str();

  SegmentArgs segment_args;
  CLI::App* segment = app.add_subcommand(
      "segment", "Segment one run into the track's surface sequence");
  segment->add_option("--wav", segment_args.wav_path, "Input WAV file")->required();
  segment->add_option("--track", segment_args.track_path, "Track config file")
      ->required();
  auto* model_opt =
      segment->add_option("--model", segment_args.model_path, "Centroid model file");
  auto* probs_opt = segment->add_option("--probs", segment_args.probs_path,
                                        "Imported probability CSV");
  model_opt->excludes(probs_opt);
  segment->add_option("--min-chunks", segment_args.min_chunks_path,
                      "Min-chunk CSV (default: derived from the track config)");
  segment->add_option("--out", segment_args.out_path, "Output segmentation CSV")
      ->required();
  segment->add_flag("--boundaries-only", segment_args.boundaries_only,
                    "Write boundary_index,time_s rows instead of segments");
  add_feature_flags(segment, &segment_args.features);

  MinDurationsArgs min_args;
  CLI::App* min_durations = app.add_subcommand(
      "min-durations", "Derive per-surface min chunk counts from annotations");
  min_durations->add_option("--manifest", min_args.manifest_path, "Dataset manifest")
      ->required();
  min_durations->add_option("--track", min_args.track_path, "Track config file")
      ->required();
  min_durations->add_option("--chunk-hop-s", min_args.chunk_hop_s,
                            "Chunk hop in seconds")
      ->capture_default_str();
  min_durations->add_option("--out", min_args.out_path, "Output min-chunk CSV")
      ->required();

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand(
      "train-centroid", "Train the centroid classifier on labeled runs");
  train->add_option("--manifest", train_args.manifest_path, "Dataset manifest")
      ->required();
  train->add_option("--track", train_args.track_path, "Track config file")
      ->required();
  train->add_option("--out", train_args.out_path, "Output model file")->required();
  train->add_option("--temperature", train_args.temperature, "Softmax temperature")
      ->capture_default_str();
  train->add_option("--jobs", train_args.jobs, "Parallel feature extraction jobs")
      ->capture_default_str();
  add_feature_flags(train, &train_args.features);

  FeaturesArgs features_args;
  CLI::App* features = app.add_subcommand(
      "features", "Write the feature matrix of one WAV as a binary dump");
  features->add_option("--wav", features_args.wav_path, "Input WAV file")->required();
  features->add_option("--out", features_args.out_path, "Output .acsf file")
      ->required();
  add_feature_flags(features, &features_args.features);

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand(
      "eval", "Compare a segmentation against a truth annotation");
  eval->add_option("--pred", eval_args.pred_path, "Predicted segmentation CSV")
      ->required();
  eval->add_option("--truth", eval_args.truth_path, "Truth annotation CSV")
      ->required();
  eval->add_option("--out", eval_args.out_path, "Output metrics JSON")->required();
  eval->add_option("--chunk-hop-s", eval_args.chunk_hop_s,
                   "Grid step for chunk-level metrics")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_args);
    if (segment->parsed()) {
      if (segment_args.model_path.empty() == segment_args.probs_path.empty()) {
        std::cerr << "segment: exactly one of --model/--probs is required\n";
        return kExitUsage;
      }
      return cmd_segment(segment_args);
    }
    if (min_durations->parsed()) return cmd_min_durations(min_args);
    if (train->parsed()) return cmd_train_centroid(train_args);
    if (features->parsed()) return cmd_features(features_args);
    if (eval->parsed()) return cmd_eval(eval_args);
  } catch (const acs::InfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const acs::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const acs::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const acs::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}
