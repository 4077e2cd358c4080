#pragma once

#include <string>

#include "acs/core.hpp"

namespace acs {

// Reads a RIFF/WAVE file. Accepts PCM 8/16/24/32-bit integer and 32-bit
// float data, any channel count; channels are averaged to mono and samples
// scaled to [-1, 1] by the integer full scale.
AudioClip load_wav(const std::string& path);

// Writes a mono 16-bit PCM file. Samples are clipped to [-1, 1] first.
void write_wav(const std::string& path, const AudioClip& clip);

}  // namespace acs
