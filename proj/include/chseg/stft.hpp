#pragma once

#include <unsupported/Eigen/FFT>

#include <vector>

#include "chseg/common.hpp"
#include "chseg/waveform.hpp"

namespace chseg {

/// Complex STFT values X_m(f,t) for every channel, 257 bins, frame-synchronous
/// across channels by construction. Analysis-only: no synthesis path exists.
struct SpectrogramTensor {
  std::vector<MatrixC> channels;  // each bins x frames
  double bin_hz = static_cast<double>(kSampleRate) / kFftSize;  // 31.25
  double frame_hop = 0.010;
  double window_len = 0.025;
  ArrayGeometry geometry;

  int channel_count() const { return static_cast<int>(channels.size()); }
  int bins() const { return channels.empty() ? 0 : static_cast<int>(channels[0].rows()); }
  int frames() const { return channels.empty() ? 0 : static_cast<int>(channels[0].cols()); }
};

/// Periodic Hann window of the analysis length.
inline VectorD hann_window(int length) {
  VectorD w(length);
  for (int i = 0; i < length; ++i) w[i] = 0.5 - 0.5 * std::cos(kTwoPi * i / length);
  return w;
}

/// 400-sample frames, 160-sample hop, Hann window, zero-padded 512-point FFT,
/// one-sided 257-bin output. No centering: T = 1 + floor((N - 400)/160).
inline SpectrogramTensor stft(const MultichannelWaveform& wave) {
  wave.validate();
  if (wave.sample_rate != kSampleRate)
    throw DataError("stft: sample rate must be 16000 Hz");
  const Eigen::Index n = wave.sample_count();
  if (n < kWindowSamples) throw DataError("stft: fewer samples than one analysis window");

  const int frames = 1 + static_cast<int>((n - kWindowSamples) / kHopSamples);
  static const VectorD window = hann_window(kWindowSamples);

  SpectrogramTensor out;
  out.geometry = wave.geometry;
  out.channels.resize(wave.channels());

  Eigen::FFT<double> fft;
  std::vector<double> frame(kFftSize, 0.0);
  std::vector<std::complex<double>> spectrum;
  for (int ch = 0; ch < wave.channels(); ++ch) {
    MatrixC& spec = out.channels[ch];
    spec.resize(kNumBins, frames);
    for (int t = 0; t < frames; ++t) {
      const Eigen::Index off = static_cast<Eigen::Index>(t) * kHopSamples;
      for (int i = 0; i < kWindowSamples; ++i)
        frame[i] = static_cast<double>(wave.samples(ch, off + i)) * window[i];
      std::fill(frame.begin() + kWindowSamples, frame.end(), 0.0);
      fft.fwd(spectrum, frame);  // real input: kissfft returns full spectrum
      for (int k = 0; k < kNumBins; ++k) spec(k, t) = spectrum[k];
    }
  }
  return out;
}

}  // namespace chseg
