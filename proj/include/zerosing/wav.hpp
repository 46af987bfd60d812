#pragma once

#include <filesystem>

#include "zerosing/dsp.hpp"

namespace zs {

/// Reads 16-bit PCM mono WAV at 22050 Hz. Any other layout is rejected
/// with category "unsupported-audio"; no resampling or downmixing happens.
AudioBuffer read_wav(const std::filesystem::path& path);

/// Writes 16-bit PCM mono little-endian. Samples are clipped to [-1, 1].
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);

}  // namespace zs
