#pragma once

#include <unsupported/Eigen/FFT>

#include <complex>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "chseg/annotations.hpp"
#include "chseg/common.hpp"
#include "chseg/geometry.hpp"
#include "chseg/waveform.hpp"

namespace chseg {

enum class SignalKind { white_noise, tone, speech_like };

struct SourceSpec {
  std::string source_id;
  double azimuth = 0.0;  // radians
  SignalKind kind = SignalKind::white_noise;
  double tone_hz = 1000.0;  // used when kind == tone
  std::vector<std::pair<double, double>> active_intervals;  // [start, end) seconds
  double level_db = 0.0;
};

struct ScenarioSpec {
  std::vector<SourceSpec> sources;
  double noise_snr_db = std::numeric_limits<double>::infinity();  // inf = no noise
  double duration = 0.0;  // seconds
  uint64_t seed = 0;
  ArrayGeometry geometry;

  void validate() const {
    geometry.validate();
    if (duration <= 0.0) throw std::invalid_argument("scenario: duration must be positive");
    for (const auto& s : sources) {
      auto iv = s.active_intervals;
      std::sort(iv.begin(), iv.end());
      for (size_t i = 0; i < iv.size(); ++i) {
        if (!(iv[i].first >= 0.0 && iv[i].first < iv[i].second && iv[i].second <= duration + 1e-9))
          throw std::invalid_argument("scenario: interval outside [0, duration) for " + s.source_id);
        if (i > 0 && iv[i].first < iv[i - 1].second)
          throw std::invalid_argument("scenario: overlapping intervals for source " + s.source_id);
      }
      if (s.azimuth < 0.0 || s.azimuth >= kTwoPi)
        throw std::invalid_argument("scenario: azimuth must lie in [0, 2pi)");
    }
  }
};

namespace detail {

inline size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace detail

/// Far-field plane-wave rendering onto the ACTIVE microphones of `geometry`.
/// Channel m is the source advanced by tau_m = r*cos(azimuth - psi_m)/c,
/// applied as a frequency-domain fractional delay e^{+j*2*pi*f*tau_m}.
inline MultichannelWaveform synth_plane_wave(const ArrayGeometry& geometry, double azimuth,
                                             const VectorD& mono_signal,
                                             int sample_rate = kSampleRate) {
  geometry.validate();
  if (mono_signal.size() == 0) throw std::invalid_argument("synth_plane_wave: empty signal");
  if (!mono_signal.allFinite()) throw std::invalid_argument("synth_plane_wave: non-finite signal");
  azimuth = wrap_positive(azimuth);

  const auto n = static_cast<size_t>(mono_signal.size());
  // Pad so the circular shift from the fractional delay only wraps into zeros.
  // Max |tau| = r/c, well under 64 samples for desk-scale arrays.
  const size_t padded = detail::next_pow2(n + 64);

  std::vector<double> buf(padded, 0.0);
  for (size_t i = 0; i < n; ++i) buf[i] = mono_signal[static_cast<Eigen::Index>(i)];

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, buf);  // full two-sided spectrum, length `padded`

  const auto active = geometry.active_indices();
  MultichannelWaveform out;
  out.geometry = geometry;
  out.sample_rate = sample_rate;
  out.samples.resize(static_cast<Eigen::Index>(active.size()), static_cast<Eigen::Index>(n));

  std::vector<std::complex<double>> shifted(padded);
  std::vector<double> rendered;
  for (size_t ch = 0; ch < active.size(); ++ch) {
    const double psi = geometry.mic_angles[active[ch]];
    const double tau = geometry.radius * std::cos(azimuth - psi) / geometry.speed_of_sound;
    const size_t half = padded / 2;
    for (size_t k = 0; k <= half; ++k) {
      const double f = static_cast<double>(k) * sample_rate / padded;
      const std::complex<double> rot = std::polar(1.0, kTwoPi * f * tau);
      shifted[k] = spectrum[k] * rot;
      if (k != 0 && k != half) shifted[padded - k] = std::conj(shifted[k]);
    }
    fft.inv(rendered, shifted);
    for (size_t i = 0; i < n; ++i)
      out.samples(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(i)) =
          static_cast<float>(rendered[i]);
  }
  return out;
}

namespace detail {

inline VectorD render_source_signal(const SourceSpec& src, double duration, int sample_rate,
                                    std::mt19937_64& rng) {
  const auto n = static_cast<Eigen::Index>(std::llround(duration * sample_rate));
  VectorD sig = VectorD::Zero(n);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double gain = std::pow(10.0, src.level_db / 20.0);
  for (const auto& [t0, t1] : src.active_intervals) {
    const auto i0 = static_cast<Eigen::Index>(std::llround(t0 * sample_rate));
    const auto i1 = std::min<Eigen::Index>(n, static_cast<Eigen::Index>(std::llround(t1 * sample_rate)));
    for (Eigen::Index i = i0; i < i1; ++i) {
      double v = 0.0;
      switch (src.kind) {
        case SignalKind::white_noise:
          v = gauss(rng);
          break;
        case SignalKind::tone:
          v = std::sin(kTwoPi * src.tone_hz * static_cast<double>(i) / sample_rate);
          break;
        case SignalKind::speech_like: {
          // Amplitude-modulated noise, ~4 Hz syllabic envelope.
          const double env = 0.55 + 0.45 * std::sin(kTwoPi * 4.0 * static_cast<double>(i) / sample_rate);
          v = env * gauss(rng);
          break;
        }
      }
      sig[i] = gain * v;
    }
  }
  return sig;
}

}  // namespace detail

/// Renders a full scene: sum of per-source plane waves gated by their active
/// intervals, plus optional spatially white noise at `noise_snr_db` relative
/// to the total source power. Deterministic for a fixed seed.
inline std::pair<MultichannelWaveform, AnnotationSet> gen_scenario(const ScenarioSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);

  const auto samples = static_cast<Eigen::Index>(std::llround(spec.duration * kSampleRate));
  const int channels = spec.geometry.active_count();

  MultichannelWaveform scene;
  scene.geometry = spec.geometry;
  scene.sample_rate = kSampleRate;
  scene.samples = MatrixF::Zero(channels, samples);

  AnnotationSet ann;
  ann.recording_id = "scene";
  ann.duration = spec.duration;

  for (const auto& src : spec.sources) {
    const VectorD sig = detail::render_source_signal(src, spec.duration, kSampleRate, rng);
    const MultichannelWaveform rendered = synth_plane_wave(spec.geometry, src.azimuth, sig);
    scene.samples += rendered.samples;
    for (const auto& [t0, t1] : src.active_intervals)
      ann.entries.push_back({src.source_id, t0, t1});
  }
  ann.sort_by_start();

  if (std::isfinite(spec.noise_snr_db) && !spec.sources.empty()) {
    const double source_power = scene.samples.array().square().mean();
    if (source_power > 0.0) {
      const double noise_power = source_power / std::pow(10.0, spec.noise_snr_db / 10.0);
      const double sigma = std::sqrt(noise_power);
      std::normal_distribution<double> gauss(0.0, sigma);
      for (Eigen::Index c = 0; c < scene.samples.rows(); ++c)
        for (Eigen::Index i = 0; i < scene.samples.cols(); ++i)
          scene.samples(c, i) += static_cast<float>(gauss(rng));
    }
  }
  return {std::move(scene), std::move(ann)};
}

/// Keeps only `keep_indices` (physical microphone indices) of the waveform.
/// Surviving microphones retain their ORIGINAL angles; active_mask updated.
/// `require_ch` enforces the >=3 survivor floor for CH estimation.
inline MultichannelWaveform deactivate_channels(const MultichannelWaveform& wave,
                                                const std::vector<int>& keep_indices,
                                                bool require_ch = true) {
  wave.validate();
  if (keep_indices.empty()) throw std::invalid_argument("deactivate_channels: empty keep set");
  const auto active = wave.geometry.active_indices();
  std::vector<bool> keep(wave.geometry.mic_count, false);
  for (int k : keep_indices) {
    if (k < 0 || k >= wave.geometry.mic_count || !wave.geometry.active_mask[k])
      throw std::invalid_argument("deactivate_channels: index not an active microphone");
    keep[k] = true;
  }
  int survivors = 0;
  for (bool b : keep) survivors += b ? 1 : 0;
  if (require_ch && survivors < 3)
    throw std::invalid_argument("deactivate_channels: fewer than 3 survivors for CH estimation");

  MultichannelWaveform out;
  out.geometry = wave.geometry;
  out.sample_rate = wave.sample_rate;
  for (int m = 0; m < wave.geometry.mic_count; ++m) out.geometry.active_mask[m] = keep[m];
  out.samples.resize(survivors, wave.samples.cols());
  Eigen::Index row = 0;
  for (size_t ch = 0; ch < active.size(); ++ch)
    if (keep[active[ch]]) out.samples.row(row++) = wave.samples.row(static_cast<Eigen::Index>(ch));
  return out;
}

}  // namespace chseg
