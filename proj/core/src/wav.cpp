#include "acs/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "acs/errors.hpp"

namespace acs {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatIeeeFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

struct FmtInfo {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits_per_sample = 0;
};

double decode_sample(const std::uint8_t* p, const FmtInfo& fmt) {
  switch (fmt.bits_per_sample) {
    case 8:
      // 8-bit PCM is unsigned.
      return (static_cast<int>(*p) - 128) / 128.0;
    case 16: {
      std::int16_t v = static_cast<std::int16_t>(read_u16(p));
      return v / 32768.0;
    }
    case 24: {
      std::int32_t v = static_cast<std::int32_t>((static_cast<std::uint32_t>(p[0]) << 8) |
                                                 (static_cast<std::uint32_t>(p[1]) << 16) |
                                                 (static_cast<std::uint32_t>(p[2]) << 24)) >>
                       8;
      return v / 8388608.0;
    }
    case 32: {
      if (fmt.format == kFormatIeeeFloat) {
        float f;
        std::memcpy(&f, p, 4);
        return static_cast<double>(f);
      }
      std::int32_t v = static_cast<std::int32_t>(read_u32(p));
      return v / 2147483648.0;
    }
    default:
      throw ParseError("unsupported bit depth: " + std::to_string(fmt.bits_per_sample));
  }
}

}  // namespace

AudioClip load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");

  std::uint8_t header[12];
  if (!in.read(reinterpret_cast<char*>(header), 12)) {
    throw ParseError(path + ": truncated RIFF header");
  }
  if (std::memcmp(header, "RIFF", 4) != 0 || std::memcmp(header + 8, "WAVE", 4) != 0) {
    throw ParseError(path + ": not a RIFF/WAVE file");
  }

  FmtInfo fmt;
  bool fmt_seen = false;
  std::vector<std::uint8_t> data;
  bool data_seen = false;

  // Scan chunks; unknown ones are skipped.
  std::uint8_t chunk_header[8];
  while (in.read(reinterpret_cast<char*>(chunk_header), 8)) {
    const std::uint32_t chunk_size = read_u32(chunk_header + 4);
    if (std::memcmp(chunk_header, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw ParseError(path + ": fmt chunk too small");
      std::vector<std::uint8_t> buf(chunk_size);
      if (!in.read(reinterpret_cast<char*>(buf.data()), chunk_size)) {
        throw ParseError(path + ": truncated fmt chunk");
      }
      fmt.format = read_u16(buf.data());
      fmt.channels = read_u16(buf.data() + 2);
      fmt.sample_rate = read_u32(buf.data() + 4);
      fmt.bits_per_sample = read_u16(buf.data() + 14);
      if (fmt.format == kFormatExtensible && chunk_size >= 40) {
        // The real format tag lives in the sub-format GUID.
        fmt.format = read_u16(buf.data() + 24);
      }
      fmt_seen = true;
    } else if (std::memcmp(chunk_header, "data", 4) == 0) {
      data.resize(chunk_size);
      if (!in.read(reinterpret_cast<char*>(data.data()), chunk_size)) {
        throw ParseError(path + ": truncated data chunk");
      }
      data_seen = true;
    } else {
      in.seekg(chunk_size, std::ios::cur);
    }
    // Chunks are word-aligned; skip the pad byte after odd-sized ones.
    if (chunk_size & 1u) in.seekg(1, std::ios::cur);
  }

  if (!fmt_seen) throw ParseError(path + ": missing fmt chunk");
  if (!data_seen) throw ParseError(path + ": missing data chunk");
  if (fmt.format != kFormatPcm && fmt.format != kFormatIeeeFloat) {
    throw ParseError(path + ": unsupported codec (format tag " +
                     std::to_string(fmt.format) + ")");
  }
  if (fmt.format == kFormatIeeeFloat && fmt.bits_per_sample != 32) {
    throw ParseError(path + ": only 32-bit float data is supported");
  }
  if (fmt.channels == 0) throw ParseError(path + ": zero channels");
  if (fmt.sample_rate == 0) throw ParseError(path + ": zero sample rate");

  const std::size_t bytes_per_sample = fmt.bits_per_sample / 8;
  if (bytes_per_sample == 0) throw ParseError(path + ": invalid bit depth");
  const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
  const std::size_t num_frames = data.size() / frame_bytes;
  if (num_frames == 0) throw ParseError(path + ": zero-length audio");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(fmt.sample_rate);
  clip.samples.resize(num_frames);
  for (std::size_t i = 0; i < num_frames; ++i) {
    double sum = 0.0;
    for (unsigned ch = 0; ch < fmt.channels; ++ch) {
      sum += decode_sample(data.data() + i * frame_bytes + ch * bytes_per_sample, fmt);
    }
    const double v = sum / fmt.channels;
    if (!std::isfinite(v)) throw ParseError(path + ": non-finite sample");
    clip.samples[i] = v;
  }
  return clip;
}

void write_wav(const std::string& path, const AudioClip& clip) {
  if (clip.sample_rate <= 0) throw ValidationError("sample rate must be positive");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");

  const std::uint32_t data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  const std::uint32_t sr = static_cast<std::uint32_t>(clip.sample_rate);

  auto put_u16 = [&](std::uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
    out.write(b, 2);
  };
  auto put_u32 = [&](std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                 static_cast<char>((v >> 16) & 0xFF), static_cast<char>(v >> 24)};
    out.write(b, 4);
  };

  out.write("RIFF", 4);
  put_u32(36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(16);
  put_u16(kFormatPcm);
  put_u16(1);  // mono
  put_u32(sr);
  put_u32(sr * 2);  // byte rate
  put_u16(2);       // block align
  put_u16(16);
  out.write("data", 4);
  put_u32(data_bytes);

  for (double x : clip.samples) {
    const double clipped = std::clamp(x, -1.0, 1.0);
    const auto v = static_cast<std::int16_t>(std::lround(clipped * 32767.0));
    put_u16(static_cast<std::uint16_t>(v));
  }
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace acs
