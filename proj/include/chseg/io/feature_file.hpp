#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "chseg/common.hpp"
#include "chseg/features.hpp"

namespace chseg::io {

// "SEGF": magic, u32 version=1, u32 F, u64 T, then T*F float32 little-endian
// values, one frame (row of T) at a time.

inline void write_features(const std::string& path, const MatrixF& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write feature file: " + path);
  out.write("SEGF", 4);
  const uint32_t version = 1;
  const uint32_t dim = static_cast<uint32_t>(values.rows());
  const uint64_t frames = static_cast<uint64_t>(values.cols());
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&dim), 4);
  out.write(reinterpret_cast<const char*>(&frames), 8);
  for (Eigen::Index t = 0; t < values.cols(); ++t)
    for (Eigen::Index f = 0; f < values.rows(); ++f) {
      const float v = values(f, t);
      out.write(reinterpret_cast<const char*>(&v), 4);
    }
}

inline MatrixF read_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, "SEGF", 4) != 0) throw DataError("bad feature file magic: " + path);
  uint32_t version = 0, dim = 0;
  uint64_t frames = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&dim), 4);
  in.read(reinterpret_cast<char*>(&frames), 8);
  if (version != 1) throw DataError("unsupported feature file version: " + path);
  MatrixF values(dim, frames);
  for (uint64_t t = 0; t < frames; ++t)
    for (uint32_t f = 0; f < dim; ++f) {
      float v;
      if (!in.read(reinterpret_cast<char*>(&v), 4))
        throw DataError("feature file truncated: " + path);
      values(f, static_cast<Eigen::Index>(t)) = v;
    }
  return values;
}

}  // namespace chseg::io
