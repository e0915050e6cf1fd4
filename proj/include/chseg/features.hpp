#pragma once

#include <string>
#include <vector>

#include "chseg/common.hpp"

namespace chseg {

enum class FeatureKind { log_mel, mfcc, ipd, csipd, ch_doa, concat };

inline const char* feature_kind_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::log_mel: return "log_mel";
    case FeatureKind::mfcc: return "mfcc";
    case FeatureKind::ipd: return "ipd";
    case FeatureKind::csipd: return "csipd";
    case FeatureKind::ch_doa: return "ch_doa";
    case FeatureKind::concat: return "concat";
  }
  return "?";
}

/// Frame-synchronous F x T feature matrix at 100 frames/second.
struct FeatureSequence {
  MatrixF values;  // F x T
  FeatureKind kind = FeatureKind::concat;

  int dim() const { return static_cast<int>(values.rows()); }
  int frames() const { return static_cast<int>(values.cols()); }
};

/// Stacks features along the feature axis; frame counts must agree.
inline FeatureSequence concat_features(const std::vector<FeatureSequence>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_features: no parts");
  int total = 0;
  for (const auto& p : parts) {
    if (p.frames() != parts[0].frames())
      throw std::invalid_argument("concat_features: frame count mismatch");
    total += p.dim();
  }
  FeatureSequence out;
  out.kind = parts.size() == 1 ? parts[0].kind : FeatureKind::concat;
  out.values.resize(total, parts[0].frames());
  int row = 0;
  for (const auto& p : parts) {
    out.values.middleRows(row, p.dim()) = p.values;
    row += p.dim();
  }
  return out;
}

/// Per-row mean/variance normalization, fitted once on training data.
struct MeanVarNorm {
  VectorF mean;
  VectorF inv_std;

  static MeanVarNorm fit(const std::vector<const MatrixF*>& mats) {
    if (mats.empty() || mats[0]->rows() == 0)
      throw std::invalid_argument("MeanVarNorm: nothing to fit");
    const Eigen::Index dim = mats[0]->rows();
    VectorD sum = VectorD::Zero(dim), sumsq = VectorD::Zero(dim);
    double count = 0.0;
    for (const MatrixF* m : mats) {
      if (m->rows() != dim) throw std::invalid_argument("MeanVarNorm: dim mismatch");
      sum += m->cast<double>().rowwise().sum();
      sumsq += m->cast<double>().array().square().matrix().rowwise().sum();
      count += static_cast<double>(m->cols());
    }
    MeanVarNorm n;
    n.mean = (sum / count).cast<float>();
    VectorD var = sumsq / count - (sum / count).array().square().matrix();
    n.inv_std.resize(dim);
    for (Eigen::Index i = 0; i < dim; ++i)
      n.inv_std[i] = static_cast<float>(1.0 / std::sqrt(std::max(var[i], 1e-8)));
    return n;
  }

  void apply(MatrixF& values) const {
    if (values.rows() != mean.size())
      throw std::invalid_argument("MeanVarNorm: dim mismatch on apply");
    values = (values.colwise() - mean).array().colwise() * inv_std.array();
  }
};

}  // namespace chseg
