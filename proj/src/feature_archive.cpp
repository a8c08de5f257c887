#include "wavescat/feature_archive.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

namespace wavescat {

namespace {

constexpr int kFormatVersion = 1;

nlohmann::json config_json(const ScatteringConfig& cfg) {
  return {{"transform", to_string(cfg.kind)},
          {"q_factor", cfg.q_factor},
          {"t_scale", cfg.t_scale},
          {"f_octaves", cfg.f_octaves},
          {"oversampling", cfg.oversampling},
          {"transposition_invariant", cfg.transposition_invariant},
          {"log_epsilon", cfg.log_epsilon}};
}

}  // namespace

FeatureArchive archive_from_output(const ScatteringOutput& out,
                                   const std::string& source_name) {
  FeatureArchive a;
  a.n_frames = out.n_frames;

  nlohmann::json index = nlohmann::json::array();
  std::vector<const std::vector<double>*> columns;
  for (std::size_t i = 0; i < out.s1.size(); ++i) {
    columns.push_back(&out.s1[i]);
    index.push_back({{"order", 1},
                     {"lambda_index", i},
                     {"lambda", out.s1_lambdas[i]}});
  }
  for (std::size_t i = 0; i < out.s1_fr.size(); ++i) {
    columns.push_back(&out.s1_fr[i]);
    const FrPathKey& k = out.s1_fr_paths[i];
    index.push_back({{"order", 1},
                     {"lambda_index", k.lambda_index},
                     {"ell_fr", k.ell_fr == kEllLowpass
                                    ? nlohmann::json(nullptr)
                                    : nlohmann::json(k.ell_fr)}});
  }
  for (std::size_t i = 0; i < out.s2.size(); ++i) {
    columns.push_back(&out.s2[i]);
    const PathKey& k = out.s2_paths[i];
    nlohmann::json entry = {{"order", 2},
                            {"lambda_index", k.lambda_index},
                            {"mu_index", k.mu_index}};
    if (out.config.kind == TransformKind::kJoint) {
      entry["ell"] = k.ell == kEllLowpass ? nlohmann::json(nullptr)
                                          : nlohmann::json(k.ell);
      entry["spin"] = k.spin;
    }
    index.push_back(entry);
  }
  a.n_paths = columns.size();

  nlohmann::json header;
  header["format_version"] = kFormatVersion;
  header["source"] = source_name;
  header["config"] = config_json(out.config);
  header["axes"] = {{"frame", a.n_frames}, {"path", a.n_paths}};
  header["frame_step"] = out.frame_step;
  header["n_uniform"] = out.n_uniform;
  header["mu_log_freqs"] = out.mu_log_freqs;
  header["index"] = index;
  a.header_json = header.dump();

  a.payload.resize(a.n_frames * a.n_paths);
  for (std::size_t p = 0; p < a.n_paths; ++p) {
    const auto& col = *columns[p];
    for (std::size_t f = 0; f < a.n_frames; ++f)
      a.payload[f * a.n_paths + p] = static_cast<float>(col[f]);
  }
  return a;
}

void write_archive(const FeatureArchive& a, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  const uint32_t header_len = static_cast<uint32_t>(a.header_json.size());
  unsigned char b[4] = {static_cast<unsigned char>(header_len & 0xff),
                        static_cast<unsigned char>((header_len >> 8) & 0xff),
                        static_cast<unsigned char>((header_len >> 16) & 0xff),
                        static_cast<unsigned char>((header_len >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
  out.write(a.header_json.data(),
            static_cast<std::streamsize>(a.header_json.size()));
  out.write(reinterpret_cast<const char*>(a.payload.data()),
            static_cast<std::streamsize>(a.payload.size() * sizeof(float)));
  if (!out) throw IoError("short write: " + path);
}

FeatureArchive read_archive(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw MalformedFileError(path + ": missing header length");
  const uint32_t header_len = static_cast<uint32_t>(b[0]) |
                              (static_cast<uint32_t>(b[1]) << 8) |
                              (static_cast<uint32_t>(b[2]) << 16) |
                              (static_cast<uint32_t>(b[3]) << 24);
  FeatureArchive a;
  a.header_json.resize(header_len);
  in.read(a.header_json.data(), header_len);
  if (!in) throw MalformedFileError(path + ": truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(a.header_json);
  } catch (const nlohmann::json::exception&) {
    throw MalformedFileError(path + ": header is not valid JSON");
  }
  if (!header.contains("format_version"))
    throw MalformedFileError(path + ": header missing format version");
  a.n_frames = header.at("axes").at("frame").get<std::size_t>();
  a.n_paths = header.at("axes").at("path").get<std::size_t>();
  const std::size_t index_size = header.at("index").size();
  if (index_size != a.n_paths)
    throw MalformedFileError(path + ": index map does not cover the columns");

  a.payload.resize(a.n_frames * a.n_paths);
  in.read(reinterpret_cast<char*>(a.payload.data()),
          static_cast<std::streamsize>(a.payload.size() * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) !=
      a.payload.size() * sizeof(float))
    throw MalformedFileError(path + ": payload shorter than axis sizes imply");
  return a;
}

}  // namespace wavescat
