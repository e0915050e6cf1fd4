#pragma once

#include "chseg/common.hpp"
#include "chseg/geometry.hpp"

namespace chseg {

/// Synchronized per-microphone sample streams. Row m holds the m-th ACTIVE
/// microphone of `geometry` (ascending physical index).
struct MultichannelWaveform {
  MatrixF samples;  // channels x sample_count
  int sample_rate = kSampleRate;
  ArrayGeometry geometry;

  int channels() const { return static_cast<int>(samples.rows()); }
  Eigen::Index sample_count() const { return samples.cols(); }
  double duration() const { return static_cast<double>(samples.cols()) / sample_rate; }

  void validate() const {
    geometry.validate();
    if (channels() != geometry.active_count())
      throw std::invalid_argument("waveform: channel count must equal active mic count");
  }
};

}  // namespace chseg
