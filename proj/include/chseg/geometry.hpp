#pragma once

#include <vector>

#include "chseg/common.hpp"

namespace chseg {

/// Microphone layout of a (possibly partially deactivated) circular array.
/// Angles are kept for every physical microphone; `active_mask` marks which
/// ones currently deliver a signal.
struct ArrayGeometry {
  int mic_count = 0;
  double radius = 0.1;           // meters
  std::vector<double> mic_angles;  // radians, one per physical mic
  double speed_of_sound = 343.0;   // m/s
  std::vector<bool> active_mask;

  int active_count() const {
    int n = 0;
    for (bool a : active_mask) n += a ? 1 : 0;
    return n;
  }

  /// Indices of active microphones, ascending.
  std::vector<int> active_indices() const {
    std::vector<int> idx;
    for (int m = 0; m < mic_count; ++m)
      if (active_mask[m]) idx.push_back(m);
    return idx;
  }

  void validate() const {
    if (mic_count <= 0) throw std::invalid_argument("geometry: mic_count must be positive");
    if (radius <= 0.0) throw std::invalid_argument("geometry: radius must be positive");
    if (speed_of_sound <= 0.0) throw std::invalid_argument("geometry: speed of sound must be positive");
    if (static_cast<int>(mic_angles.size()) != mic_count ||
        static_cast<int>(active_mask.size()) != mic_count)
      throw std::invalid_argument("geometry: field lengths inconsistent with mic_count");
    for (int m = 0; m < mic_count; ++m) {
      if (mic_angles[m] < 0.0 || mic_angles[m] >= kTwoPi)
        throw std::invalid_argument("geometry: mic angles must lie in [0, 2pi)");
      if (m > 0 && mic_angles[m] <= mic_angles[m - 1])
        throw std::invalid_argument("geometry: mic angles must be strictly increasing");
    }
  }
};

/// Pristine uniform circular array: psi_m = (m-1) * 2pi / M, all mics active.
inline ArrayGeometry uniform_circular_array(int mic_count, double radius = 0.1,
                                            double speed_of_sound = 343.0) {
  ArrayGeometry g;
  g.mic_count = mic_count;
  g.radius = radius;
  g.speed_of_sound = speed_of_sound;
  g.mic_angles.resize(mic_count);
  for (int m = 0; m < mic_count; ++m) g.mic_angles[m] = m * kTwoPi / mic_count;
  g.active_mask.assign(mic_count, true);
  g.validate();
  return g;
}

}  // namespace chseg
