#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "chseg/common.hpp"

namespace chseg::io {

struct WavData {
  MatrixF samples;  // channels x sample_count
  int sample_rate = 0;
};

namespace detail {

template <typename T>
T read_le(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

template <typename T>
void write_le(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace detail

/// Reads a RIFF WAV file; accepts 16-bit PCM and 32-bit IEEE float.
inline WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open WAV file: " + path);

  char tag[4];
  in.read(tag, 4);
  if (std::memcmp(tag, "RIFF", 4) != 0) throw DataError("not a RIFF file: " + path);
  detail::read_le<uint32_t>(in);
  in.read(tag, 4);
  if (std::memcmp(tag, "WAVE", 4) != 0) throw DataError("not a WAVE file: " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  std::vector<char> data;
  while (in.read(tag, 4)) {
    const uint32_t size = detail::read_le<uint32_t>(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = detail::read_le<uint16_t>(in);
      channels = detail::read_le<uint16_t>(in);
      rate = detail::read_le<uint32_t>(in);
      detail::read_le<uint32_t>(in);  // byte rate
      detail::read_le<uint16_t>(in);  // block align
      bits = detail::read_le<uint16_t>(in);
      in.seekg(size > 16 ? size - 16 : 0, std::ios::cur);
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data.resize(size);
      in.read(data.data(), size);
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
    }
  }
  if (channels == 0 || rate == 0) throw DataError("WAV missing fmt chunk: " + path);
  if (data.empty()) throw DataError("WAV missing data chunk: " + path);

  WavData out;
  out.sample_rate = static_cast<int>(rate);
  Eigen::Index frames = 0;
  if (format == 1 && bits == 16) {
    frames = static_cast<Eigen::Index>(data.size() / (2 * channels));
    out.samples.resize(channels, frames);
    const auto* p = reinterpret_cast<const int16_t*>(data.data());
    for (Eigen::Index i = 0; i < frames; ++i)
      for (int c = 0; c < channels; ++c)
        out.samples(c, i) = static_cast<float>(p[i * channels + c]) / 32768.0f;
  } else if (format == 3 && bits == 32) {
    frames = static_cast<Eigen::Index>(data.size() / (4 * channels));
    out.samples.resize(channels, frames);
    const auto* p = reinterpret_cast<const float*>(data.data());
    for (Eigen::Index i = 0; i < frames; ++i)
      for (int c = 0; c < channels; ++c) out.samples(c, i) = p[i * channels + c];
  } else {
    throw DataError("unsupported WAV encoding (want PCM16 or float32): " + path);
  }
  return out;
}

enum class WavEncoding { pcm16, float32 };

inline void write_wav(const std::string& path, const MatrixF& samples, int sample_rate,
                      WavEncoding encoding = WavEncoding::float32) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write WAV file: " + path);
  const auto channels = static_cast<uint16_t>(samples.rows());
  const auto frames = samples.cols();
  const uint16_t bytes_per = encoding == WavEncoding::pcm16 ? 2 : 4;
  const uint32_t data_size = static_cast<uint32_t>(frames * channels * bytes_per);

  out.write("RIFF", 4);
  detail::write_le<uint32_t>(out, 36 + data_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  detail::write_le<uint32_t>(out, 16);
  detail::write_le<uint16_t>(out, encoding == WavEncoding::pcm16 ? 1 : 3);
  detail::write_le<uint16_t>(out, channels);
  detail::write_le<uint32_t>(out, static_cast<uint32_t>(sample_rate));
  detail::write_le<uint32_t>(out, static_cast<uint32_t>(sample_rate) * channels * bytes_per);
  detail::write_le<uint16_t>(out, static_cast<uint16_t>(channels * bytes_per));
  detail::write_le<uint16_t>(out, static_cast<uint16_t>(bytes_per * 8));
  out.write("data", 4);
  detail::write_le<uint32_t>(out, data_size);
  for (Eigen::Index i = 0; i < frames; ++i) {
    for (int c = 0; c < channels; ++c) {
      if (encoding == WavEncoding::pcm16) {
        const float v = std::clamp(samples(c, i), -1.0f, 1.0f);
        detail::write_le<int16_t>(out, static_cast<int16_t>(std::lround(v * 32767.0f)));
      } else {
        detail::write_le<float>(out, samples(c, i));
      }
    }
  }
}

}  // namespace chseg::io
