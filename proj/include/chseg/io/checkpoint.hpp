#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "chseg/common.hpp"
#include "chseg/tcn.hpp"

namespace chseg::io {

// "SEGM1": magic, serialized TCNConfig, then named tensors as
// (name, rank, dims..., float32 little-endian values).

struct Checkpoint {
  TCNConfig config;
  std::vector<std::pair<std::string, MatrixF>> tensors;  // insertion order preserved

  const MatrixF* find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return &t;
    return nullptr;
  }
};

namespace detail {

inline void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}
inline uint32_t read_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
inline void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline std::string read_string(std::istream& in) {
  std::string s(read_u32(in), '\0');
  in.read(s.data(), static_cast<std::streamsize>(s.size()));
  return s;
}

}  // namespace detail

inline void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write("SEGM1", 5);
  const auto& c = ckpt.config;
  for (int v : {c.input_dim, c.bottleneck_dim, c.hidden_dim, c.kernel_size, c.num_blocks,
                c.layers_per_block, c.output_dim, static_cast<int>(c.head)})
    detail::write_u32(out, static_cast<uint32_t>(v));
  detail::write_u32(out, static_cast<uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    detail::write_string(out, name);
    const bool is_vector = t.cols() == 1;
    detail::write_u32(out, is_vector ? 1 : 2);
    detail::write_u32(out, static_cast<uint32_t>(t.rows()));
    if (!is_vector) detail::write_u32(out, static_cast<uint32_t>(t.cols()));
    for (Eigen::Index col = 0; col < t.cols(); ++col)
      for (Eigen::Index row = 0; row < t.rows(); ++row) {
        const float v = t(row, col);
        out.write(reinterpret_cast<const char*>(&v), 4);
      }
  }
}

inline Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[5];
  in.read(magic, 5);
  if (std::memcmp(magic, "SEGM1", 5) != 0) throw DataError("bad checkpoint magic: " + path);
  Checkpoint ckpt;
  auto& c = ckpt.config;
  c.input_dim = static_cast<int>(detail::read_u32(in));
  c.bottleneck_dim = static_cast<int>(detail::read_u32(in));
  c.hidden_dim = static_cast<int>(detail::read_u32(in));
  c.kernel_size = static_cast<int>(detail::read_u32(in));
  c.num_blocks = static_cast<int>(detail::read_u32(in));
  c.layers_per_block = static_cast<int>(detail::read_u32(in));
  c.output_dim = static_cast<int>(detail::read_u32(in));
  c.head = static_cast<HeadKind>(detail::read_u32(in));
  const uint32_t count = detail::read_u32(in);
  for (uint32_t i = 0; i < count; ++i) {
    const std::string name = detail::read_string(in);
    const uint32_t rank = detail::read_u32(in);
    const uint32_t rows = detail::read_u32(in);
    const uint32_t cols = rank == 2 ? detail::read_u32(in) : 1;
    MatrixF t(rows, cols);
    for (uint32_t col = 0; col < cols; ++col)
      for (uint32_t row = 0; row < rows; ++row) {
        float v;
        if (!in.read(reinterpret_cast<char*>(&v), 4))
          throw DataError("checkpoint truncated: " + path);
        t(row, col) = v;
      }
    ckpt.tensors.emplace_back(name, std::move(t));
  }
  return ckpt;
}

/// Packs model weights (and optional feature-normalization stats) for saving.
inline Checkpoint make_checkpoint(const TCNConfig& cfg, const TcnWeights<float>& weights,
                                  const MeanVarNorm* norm = nullptr) {
  Checkpoint ckpt;
  ckpt.config = cfg;
  weights.for_each_tensor([&ckpt](const std::string& name, const auto& t) {
    ckpt.tensors.emplace_back(name, MatrixF(t));
  });
  if (norm) {
    ckpt.tensors.emplace_back("norm.mean", MatrixF(norm->mean));
    ckpt.tensors.emplace_back("norm.inv_std", MatrixF(norm->inv_std));
  }
  return ckpt;
}

/// Restores weights (throws on a name/shape mismatch) and, when present,
/// normalization stats.
inline TcnWeights<float> restore_weights(const Checkpoint& ckpt, MeanVarNorm* norm = nullptr) {
  TcnWeights<float> w = TcnWeights<float>::zeros_like(ckpt.config);
  w.for_each_tensor([&ckpt](const std::string& name, auto& t) {
    const MatrixF* stored = ckpt.find(name);
    if (!stored) throw DataError("checkpoint missing tensor: " + name);
    if (stored->rows() != t.rows() || stored->cols() != t.cols())
      throw DataError("checkpoint tensor shape mismatch: " + name);
    t = *stored;
  });
  if (norm) {
    const MatrixF* mean = ckpt.find("norm.mean");
    const MatrixF* inv_std = ckpt.find("norm.inv_std");
    if (mean && inv_std) {
      norm->mean = mean->col(0);
      norm->inv_std = inv_std->col(0);
    }
  }
  return w;
}

}  // namespace chseg::io
