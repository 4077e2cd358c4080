#include "acs/core.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "acs/errors.hpp"

namespace acs {

namespace {

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
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

double parse_double(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  if (t.empty()) throw ParseError(context + ": empty numeric field");
  errno = 0;
  char* end = nullptr;
  double value = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE) {
    throw ParseError(context + ": not a number: '" + t + "'");
  }
  return value;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

}  // namespace

FeatureKind parse_feature_kind(const std::string& name) {
  if (name == "stft") return FeatureKind::kStft;
  if (name == "mel") return FeatureKind::kMel;
  if (name == "mfcc") return FeatureKind::kMfcc;
  throw ParseError("unknown feature kind '" + name + "' (expected stft, mel or mfcc)");
}

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kStft: return "stft";
    case FeatureKind::kMel: return "mel";
    case FeatureKind::kMfcc: return "mfcc";
  }
  return "?";
}

void validate(const SpectrogramConfig& cfg) {
  if (cfg.n_fft < 2) throw ValidationError("n_fft must be >= 2");
  if (cfg.hop_length < 1) throw ValidationError("hop_length must be >= 1");
  if (cfg.n_mels < 1) throw ValidationError("n_mels must be >= 1");
  if (cfg.n_mfcc < 1 || cfg.n_mfcc > cfg.n_mels) {
    throw ValidationError("n_mfcc must be in [1, n_mels]");
  }
  if (cfg.window != "hann") {
    throw ValidationError("unsupported window '" + cfg.window + "' (only hann)");
  }
}

void validate(const ChunkConfig& cfg) {
  if (cfg.chunk_size < 1) throw ValidationError("chunk_size must be >= 1");
  if (cfg.chunk_hop < 1) throw ValidationError("chunk_hop must be >= 1");
}

int TrackConfig::index_of(const std::string& label) const {
  auto it = std::find(surfaces.begin(), surfaces.end(), label);
  if (it == surfaces.end()) return -1;
  return static_cast<int>(it - surfaces.begin());
}

std::vector<double> SegmentAnnotation::boundaries_s() const {
  std::vector<double> out;
  for (size_t i = 0; i + 1 < segments.size(); ++i) out.push_back(segments[i].end_s);
  return out;
}

TrackConfig parse_track_config(std::istream& in, const std::string& source) {
  TrackConfig track;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::string context = source + ":" + std::to_string(line_no);
    auto fields = split(stripped, ',');
    if (fields.size() != 2) {
      throw ParseError(context + ": expected '<label>,<min_duration_s>'");
    }
    const std::string label = trim(fields[0]);
    if (label.empty()) throw ParseError(context + ": empty label");
    if (!seen.insert(label).second) {
      throw ValidationError(context + ": duplicate label '" + label + "'");
    }
    double min_duration = parse_double(fields[1], context);
    if (min_duration < 0.0) {
      throw ValidationError(context + ": negative min duration for '" + label + "'");
    }
    track.surfaces.push_back(label);
    track.min_duration_s.push_back(min_duration);
  }
  if (track.surfaces.empty()) {
    throw ValidationError(source + ": track config defines no surfaces");
  }
  return track;
}

TrackConfig load_track_config(const std::string& path) {
  auto in = open_input(path);
  return parse_track_config(in, path);
}

void write_track_config(const TrackConfig& track, std::ostream& out) {
  for (size_t i = 0; i < track.surfaces.size(); ++i) {
    out << track.surfaces[i] << "," << format_seconds(track.min_duration_s[i]) << "\n";
  }
}

void save_track_config(const TrackConfig& track, const std::string& path) {
  auto out = open_output(path);
  write_track_config(track, out);
  if (!out) throw IoError("failed writing " + path);
}

SegmentAnnotation parse_annotation(std::istream& in, const std::string& source) {
  SegmentAnnotation ann;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::string context = source + ":" + std::to_string(line_no);
    if (!header_seen) {
      if (stripped != "label,start_s,end_s") {
        throw ParseError(context + ": expected header 'label,start_s,end_s'");
      }
      header_seen = true;
      continue;
    }
    auto fields = split(stripped, ',');
    if (fields.size() != 3) {
      throw ParseError(context + ": expected 3 fields, got " +
                       std::to_string(fields.size()));
    }
    SegmentAnnotation::Segment seg;
    seg.label = trim(fields[0]);
    seg.start_s = parse_double(fields[1], context);
    seg.end_s = parse_double(fields[2], context);
    if (seg.label.empty()) throw ParseError(context + ": empty label");
    ann.segments.push_back(std::move(seg));
  }
  if (!header_seen) throw ParseError(source + ": missing annotation header");
  if (ann.segments.empty()) {
    throw ValidationError(source + ": annotation contains no segments");
  }
  return ann;
}

SegmentAnnotation load_annotation(const std::string& path) {
  auto in = open_input(path);
  return parse_annotation(in, path);
}

void write_annotation(const SegmentAnnotation& ann, std::ostream& out) {
  out << "label,start_s,end_s\n";
  for (const auto& seg : ann.segments) {
    out << seg.label << "," << format_seconds(seg.start_s) << ","
        << format_seconds(seg.end_s) << "\n";
  }
}

void save_annotation(const SegmentAnnotation& ann, const std::string& path) {
  auto out = open_output(path);
  write_annotation(ann, out);
  if (!out) throw IoError("failed writing " + path);
}

const SegmentAnnotation& validate_annotation(const SegmentAnnotation& ann,
                                             const TrackConfig& track) {
  const size_t n = track.surfaces.size();
  if (ann.segments.size() != n) {
    throw ValidationError("annotation has " + std::to_string(ann.segments.size()) +
                          " segments, track defines " + std::to_string(n) +
                          " surfaces");
  }
  for (size_t i = 0; i < n; ++i) {
    const auto& seg = ann.segments[i];
    if (track.index_of(seg.label) < 0) {
      throw ValidationError("unknown label '" + seg.label + "' at segment " +
                            std::to_string(i));
    }
    if (seg.label != track.surfaces[i]) {
      throw ValidationError("label order mismatch at segment " + std::to_string(i) +
                            ": got '" + seg.label + "', expected '" +
                            track.surfaces[i] + "'");
    }
    if (!(seg.start_s < seg.end_s)) {
      throw ValidationError("segment " + std::to_string(i) + " ('" + seg.label +
                            "') has non-positive span");
    }
    if (i > 0 && ann.segments[i - 1].end_s != seg.start_s) {
      std::ostringstream msg;
      msg << "segments not contiguous between " << (i - 1) << " and " << i << " ("
          << ann.segments[i - 1].end_s << " vs " << seg.start_s << ")";
      throw ValidationError(msg.str());
    }
  }
  return ann;
}

std::string format_seconds(double value) {
  // Small magnitudes need extra fractional digits to reach 17 significant
  // ones.
  char buf[512];
  for (int precision = 3; precision <= 24; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*f", precision, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

}  // namespace acs
