#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "chseg/acoustic.hpp"
#include "chseg/features.hpp"
#include "chseg/spatial.hpp"
#include "chseg/stft.hpp"
#include "chseg/waveform.hpp"

namespace chseg {

/// Parses a feature recipe like "mfcc+ch_doa" or "log_mel+csipd".
inline std::vector<FeatureKind> parse_recipe(const std::string& recipe) {
  std::vector<FeatureKind> kinds;
  std::stringstream ss(recipe);
  std::string item;
  while (std::getline(ss, item, '+')) {
    if (item == "log_mel" || item == "logmel") kinds.push_back(FeatureKind::log_mel);
    else if (item == "mfcc") kinds.push_back(FeatureKind::mfcc);
    else if (item == "ipd") kinds.push_back(FeatureKind::ipd);
    else if (item == "csipd") kinds.push_back(FeatureKind::csipd);
    else if (item == "ch_doa" || item == "chdoa") kinds.push_back(FeatureKind::ch_doa);
    else throw std::invalid_argument("unknown feature kind in recipe: " + item);
  }
  if (kinds.empty()) throw std::invalid_argument("empty feature recipe");
  return kinds;
}

inline int feature_dim(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::log_mel: return 80;
    case FeatureKind::mfcc: return 59;
    case FeatureKind::ipd: return 4 * kNumBins;      // 1028
    case FeatureKind::csipd: return 8 * kNumBins;    // 2056
    case FeatureKind::ch_doa: return kNumBins;       // 257
    case FeatureKind::concat: break;
  }
  throw std::invalid_argument("feature_dim: not a primitive kind");
}

inline int recipe_dim(const std::vector<FeatureKind>& kinds) {
  int total = 0;
  for (FeatureKind k : kinds) total += feature_dim(k);
  return total;
}

/// Number of leading rows occupied by acoustic features in the concatenation.
inline int acoustic_rows(const std::vector<FeatureKind>& kinds) {
  int rows = 0;
  for (FeatureKind k : kinds)
    if (k == FeatureKind::log_mel || k == FeatureKind::mfcc) rows += feature_dim(k);
  return rows;
}

/// Extracts one feature kind from a shared STFT. Acoustic kinds read the
/// lowest-index surviving microphone (channel 0 by construction).
inline FeatureSequence extract_kind(const SpectrogramTensor& spectra, FeatureKind kind) {
  switch (kind) {
    case FeatureKind::log_mel: return log_mel(spectra, 0);
    case FeatureKind::mfcc: return mfcc(spectra, 0);
    case FeatureKind::ipd: return ipd(spectra);
    case FeatureKind::csipd: return csipd(ipd(spectra));
    case FeatureKind::ch_doa: return ch_doa(spectra);
    case FeatureKind::concat: break;
  }
  throw std::invalid_argument("extract_kind: not a primitive kind");
}

/// Single analysis front-end: one STFT shared by acoustic and spatial
/// branches, so all features are frame-aligned. Acoustic kinds are listed
/// first in the output, matching `acoustic_rows`.
inline FeatureSequence extract_features(const MultichannelWaveform& wave,
                                        std::vector<FeatureKind> kinds) {
  std::stable_sort(kinds.begin(), kinds.end(), [](FeatureKind a, FeatureKind b) {
    auto is_acoustic = [](FeatureKind k) {
      return k == FeatureKind::log_mel || k == FeatureKind::mfcc;
    };
    return is_acoustic(a) && !is_acoustic(b);
  });
  const SpectrogramTensor spectra = stft(wave);
  std::vector<FeatureSequence> parts;
  parts.reserve(kinds.size());
  for (FeatureKind k : kinds) parts.push_back(extract_kind(spectra, k));
  return concat_features(parts);
}

}  // namespace chseg
