#include "wavescat/wav_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace wavescat {

namespace {

uint32_t read_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

Signal read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (data.size() < 12 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
      std::memcmp(data.data() + 8, "WAVE", 4) != 0)
    throw MalformedFileError(path + ": not a RIFF/WAVE file");

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const unsigned char* pcm = nullptr;
  std::size_t pcm_len = 0;
  bool have_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const char* id = reinterpret_cast<const char*>(data.data() + pos);
    const uint32_t chunk_len = read_u32(data.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_len > data.size())
      throw MalformedFileError(path + ": truncated chunk");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw MalformedFileError(path + ": short fmt chunk");
      format = read_u16(data.data() + body);
      channels = read_u16(data.data() + body + 2);
      rate = read_u32(data.data() + body + 4);
      bits = read_u16(data.data() + body + 14);
      if (format == 0xFFFE && chunk_len >= 40)  // extensible: subformat GUID
        format = read_u16(data.data() + body + 24);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      pcm = data.data() + body;
      pcm_len = chunk_len;
    }
    pos = body + chunk_len + (chunk_len & 1);
  }
  if (!have_fmt || pcm == nullptr)
    throw MalformedFileError(path + ": missing fmt or data chunk");
  if (channels == 0) throw MalformedFileError(path + ": zero channels");

  const bool is_pcm16 = (format == 1 && bits == 16);
  const bool is_f32 = (format == 3 && bits == 32);
  if (!is_pcm16 && !is_f32)
    throw UnsupportedFormatError(
        path + ": only PCM 16-bit and IEEE float 32-bit are supported");

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  if (pcm_len % frame_bytes != 0)
    throw MalformedFileError(path + ": data chunk not a whole number of frames");
  const std::size_t n_frames = pcm_len / frame_bytes;

  std::vector<double> mono(n_frames, 0.0);
  for (std::size_t f = 0; f < n_frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* s = pcm + f * frame_bytes + c * bytes_per_sample;
      if (is_pcm16) {
        int16_t v;
        std::memcpy(&v, s, 2);
        acc += static_cast<double>(v) / 32768.0;
      } else {
        float v;
        std::memcpy(&v, s, 4);
        acc += static_cast<double>(v);
      }
    }
    mono[f] = acc / channels;
  }
  Signal out = Signal::from_real(std::move(mono), static_cast<double>(rate));
  return out;
}

void write_wav(const std::string& path, const Signal& x, int sample_rate) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  const uint32_t n = static_cast<uint32_t>(x.size());
  const uint32_t data_len = n * 4;
  auto put_u32 = [&out](uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
  };
  auto put_u16 = [&out](uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 2);
  };
  out.write("RIFF", 4);
  put_u32(36 + data_len);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(16);
  put_u16(3);  // IEEE float
  put_u16(1);
  put_u32(static_cast<uint32_t>(sample_rate));
  put_u32(static_cast<uint32_t>(sample_rate) * 4);
  put_u16(4);
  put_u16(32);
  out.write("data", 4);
  put_u32(data_len);
  for (std::size_t i = 0; i < n; ++i) {
    const float v = static_cast<float>(x.samples[i].real());
    out.write(reinterpret_cast<const char*>(&v), 4);
  }
  if (!out) throw IoError("short write: " + path);
}

}  // namespace wavescat
