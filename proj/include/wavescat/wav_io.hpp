#pragma once

#include <string>

#include "wavescat/signal.hpp"

namespace wavescat {

// Reads a PCM 16-bit or IEEE float 32-bit WAV file.  Multichannel input is
// downmixed by arithmetic mean; samples are normalized to [-1, 1].
Signal read_wav(const std::string& path);

// Writes a mono IEEE float 32-bit WAV file.
void write_wav(const std::string& path, const Signal& x, int sample_rate);

}  // namespace wavescat
