#pragma once

#include <random>

#include "chseg/common.hpp"
#include "chseg/features.hpp"
#include "chseg/stft.hpp"

namespace chseg {

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular mel filterbank, band edges equally spaced in mel from 0 to
/// sample_rate/2, each filter peak-normalized to 1.
inline MatrixD mel_filterbank(int n_mels, int n_fft = kFftSize, int sample_rate = kSampleRate) {
  const int bins = n_fft / 2 + 1;
  if (n_mels <= 0 || n_mels > bins) throw std::invalid_argument("mel_filterbank: bad n_mels");

  const double mel_max = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges_hz(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    edges_hz[i] = mel_to_hz(mel_max * i / (n_mels + 1));

  MatrixD fb = MatrixD::Zero(n_mels, bins);
  const double bin_hz = static_cast<double>(sample_rate) / n_fft;
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges_hz[m], center = edges_hz[m + 1], hi = edges_hz[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = k * bin_hz;
      if (f > lo && f < center)
        fb(m, k) = (f - lo) / (center - lo);
      else if (f >= center && f < hi)
        fb(m, k) = (hi - f) / (hi - center);
    }
  }
  return fb;
}

/// Center frequency (Hz) of each filter in the n_mels bank; used by tests.
inline std::vector<double> mel_filter_centers(int n_mels, int sample_rate = kSampleRate) {
  const double mel_max = hz_to_mel(sample_rate / 2.0);
  std::vector<double> centers(n_mels);
  for (int m = 0; m < n_mels; ++m) centers[m] = mel_to_hz(mel_max * (m + 1) / (n_mels + 1));
  return centers;
}

inline constexpr double kLogMelFloor = 1e-10;

/// 80-band log-mel of the power spectrum of one channel (default: first).
inline FeatureSequence log_mel(const SpectrogramTensor& spectra, int channel = 0) {
  if (channel < 0 || channel >= spectra.channel_count())
    throw std::invalid_argument("log_mel: bad channel");
  static const MatrixD fb80 = mel_filterbank(80);
  const MatrixC& x = spectra.channels[channel];
  MatrixD power = x.array().abs2().matrix();
  MatrixD mel = fb80 * power;
  FeatureSequence out;
  out.kind = FeatureKind::log_mel;
  out.values = (mel.array() + kLogMelFloor).log().cast<float>();
  return out;
}

/// Orthonormal DCT-II matrix, n_out x n_in.
inline MatrixD dct_matrix(int n_out, int n_in) {
  MatrixD d(n_out, n_in);
  for (int k = 0; k < n_out; ++k)
    for (int i = 0; i < n_in; ++i)
      d(k, i) = std::cos(kPi * k * (i + 0.5) / n_in) *
                std::sqrt((k == 0 ? 1.0 : 2.0) / n_in);
  return d;
}

namespace detail {

/// +/-2-frame regression deltas with edge replication.
inline MatrixD delta(const MatrixD& x) {
  const Eigen::Index t_max = x.cols();
  MatrixD d = MatrixD::Zero(x.rows(), t_max);
  auto at = [&](Eigen::Index t) { return std::clamp<Eigen::Index>(t, 0, t_max - 1); };
  for (Eigen::Index t = 0; t < t_max; ++t)
    d.col(t) = (1.0 * (x.col(at(t + 1)) - x.col(at(t - 1))) +
                2.0 * (x.col(at(t + 2)) - x.col(at(t - 2)))) / 10.0;
  return d;
}

}  // namespace detail

/// 20 MFCC from a 40-filter log-mel (c0..c19), energy coefficient c0 dropped
/// from the static part, deltas computed on all 20: [c1..c19, d, dd] = 59.
inline FeatureSequence mfcc(const SpectrogramTensor& spectra, int channel = 0) {
  if (channel < 0 || channel >= spectra.channel_count())
    throw std::invalid_argument("mfcc: bad channel");
  if (spectra.frames() < 5) throw DataError("mfcc: need at least 5 frames for deltas");
  static const MatrixD fb40 = mel_filterbank(40);
  static const MatrixD dct20 = dct_matrix(20, 40);

  const MatrixC& x = spectra.channels[channel];
  MatrixD power = x.array().abs2().matrix();
  MatrixD logmel = ((fb40 * power).array() + kLogMelFloor).log().matrix();
  MatrixD c = dct20 * logmel;  // 20 x T
  MatrixD d = detail::delta(c);
  MatrixD dd = detail::delta(d);

  FeatureSequence out;
  out.kind = FeatureKind::mfcc;
  out.values.resize(59, c.cols());
  out.values.topRows(19) = c.bottomRows(19).cast<float>();
  out.values.middleRows(19, 20) = d.cast<float>();
  out.values.bottomRows(20) = dd.cast<float>();
  return out;
}

struct MaskParams {
  int max_time_masks = 2;
  int max_time_width = 20;   // frames
  int max_feat_masks = 2;
  int max_feat_width = 10;   // rows
};

/// SpecAugment-style time/feature masking for acoustic features (training only).
inline FeatureSequence time_freq_mask(const FeatureSequence& features, std::mt19937_64& rng,
                                      const MaskParams& params = {}) {
  if (features.kind != FeatureKind::log_mel && features.kind != FeatureKind::mfcc)
    throw std::invalid_argument("time_freq_mask: acoustic features only");
  FeatureSequence out = features;
  const int f = out.dim(), t = out.frames();
  for (int i = 0; i < params.max_time_masks && params.max_time_width > 0 && t > 0; ++i) {
    const int w = std::uniform_int_distribution<int>(0, std::min(params.max_time_width, t))(rng);
    const int start = std::uniform_int_distribution<int>(0, t - w)(rng);
    out.values.middleCols(start, w).setZero();
  }
  for (int i = 0; i < params.max_feat_masks && params.max_feat_width > 0 && f > 0; ++i) {
    const int w = std::uniform_int_distribution<int>(0, std::min(params.max_feat_width, f))(rng);
    const int start = std::uniform_int_distribution<int>(0, f - w)(rng);
    out.values.middleRows(start, w).setZero();
  }
  return out;
}

}  // namespace chseg
