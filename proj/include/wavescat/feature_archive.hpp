#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wavescat/scattering.hpp"

namespace wavescat {

// On-disk tensor format: a 4-byte little-endian header length, a JSON header
// (config echo, axis sizes, per-column index map, format version), then the
// payload as little-endian float32, row-major [frame, flat_path].
struct FeatureArchive {
  std::string header_json;
  std::size_t n_frames = 0;
  std::size_t n_paths = 0;
  std::vector<float> payload;  // n_frames * n_paths

  float at(std::size_t frame, std::size_t path) const {
    return payload[frame * n_paths + path];
  }
};

FeatureArchive archive_from_output(const ScatteringOutput& out,
                                   const std::string& source_name);
void write_archive(const FeatureArchive& a, const std::string& path);
FeatureArchive read_archive(const std::string& path);

}  // namespace wavescat
