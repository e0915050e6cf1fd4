#pragma once

#include <array>
#include <vector>

#include "chseg/bessel.hpp"
#include "chseg/common.hpp"
#include "chseg/features.hpp"
#include "chseg/stft.hpp"

namespace chseg {

/// Estimated circular-harmonic coefficients for orders n in {-1, 0, +1}.
struct ChCoefficients {
  MatrixC minus1, zero, plus1;  // each bins x frames
  ArrayGeometry geometry;

  int bins() const { return static_cast<int>(zero.rows()); }
  int frames() const { return static_cast<int>(zero.cols()); }
};

/// C~_n(f,t) = (1/M') * sum over active mics of X_m(f,t) * e^{-j n psi_m},
/// using each survivor's ORIGINAL angle under channel deactivation.
inline ChCoefficients ch_coefficients(const SpectrogramTensor& spectra) {
  const auto active = spectra.geometry.active_indices();
  if (static_cast<int>(active.size()) < 3)
    throw std::invalid_argument("ch_coefficients: need at least 3 active microphones");
  if (spectra.channel_count() != static_cast<int>(active.size()))
    throw std::invalid_argument("ch_coefficients: channel/geometry mismatch");

  ChCoefficients out;
  out.geometry = spectra.geometry;
  const double inv_m = 1.0 / static_cast<double>(active.size());
  out.minus1 = MatrixC::Zero(spectra.bins(), spectra.frames());
  out.zero = MatrixC::Zero(spectra.bins(), spectra.frames());
  out.plus1 = MatrixC::Zero(spectra.bins(), spectra.frames());
  for (size_t ch = 0; ch < active.size(); ++ch) {
    const double psi = spectra.geometry.mic_angles[active[ch]];
    const std::complex<double> e_minus = std::polar(inv_m, psi);   // e^{+j psi} / M'
    const std::complex<double> e_plus = std::polar(inv_m, -psi);   // e^{-j psi} / M'
    out.minus1 += spectra.channels[ch] * e_minus;
    out.zero += spectra.channels[ch] * inv_m;
    out.plus1 += spectra.channels[ch] * e_plus;
  }
  return out;
}

/// Omni and dipole modal beams. The dipoles sum over n = +/-1 only; the n = 0
/// term of the printed modal sum is excluded so the PIV angle recovers the
/// source azimuth exactly in the continuous limit.
struct ModalBeams {
  MatrixC b0, b1x, b1y;  // each bins x frames
  std::vector<bool> degenerate;  // per bin, kr below the usable floor
  static constexpr double theta_x = 0.0;
  static constexpr double theta_y = kPi / 2.0;
};

inline constexpr double kBesselClamp = 1e-4;   // sign-preserving divisor floor
inline constexpr double kDegenerateKr = 0.05;  // below this, first-order beams unusable

namespace detail {

inline double clamp_divisor(double j) {
  if (std::abs(j) >= kBesselClamp) return j;
  return j >= 0.0 ? kBesselClamp : -kBesselClamp;
}

}  // namespace detail

inline ModalBeams modal_beams(const ChCoefficients& coeffs,
                              const std::vector<double>& bin_frequencies) {
  const int bins = coeffs.bins();
  if (static_cast<int>(bin_frequencies.size()) != bins)
    throw std::invalid_argument("modal_beams: bin frequency count mismatch");

  ModalBeams out;
  out.b0.resize(bins, coeffs.frames());
  out.b1x.resize(bins, coeffs.frames());
  out.b1y.resize(bins, coeffs.frames());
  out.degenerate.resize(bins);

  const double r = coeffs.geometry.radius;
  const double c = coeffs.geometry.speed_of_sound;
  const std::complex<double> imag_unit(0.0, 1.0);
  for (int f = 0; f < bins; ++f) {
    const double kr = kTwoPi * bin_frequencies[f] / c * r;
    out.degenerate[f] = kr < kDegenerateKr;
    const double j0 = detail::clamp_divisor(bessel_j(0, kr));
    const double j1 = detail::clamp_divisor(bessel_j(1, kr));
    // Both dipole terms share the divisor j^n J_n(kr) = j*J_1(kr):
    //   B1x = (C_{+1} + C_{-1}) / (j J_1),  B1y = (C_{+1} - C_{-1}) / J_1.
    out.b0.row(f) = coeffs.zero.row(f) / j0;
    out.b1x.row(f) = (coeffs.plus1.row(f) + coeffs.minus1.row(f)) / (imag_unit * j1);
    out.b1y.row(f) = (coeffs.plus1.row(f) - coeffs.minus1.row(f)) / j1;
  }
  return out;
}

/// Pseudo-intensity field: [Ix; Iy] = 1/2 * Re{ B0^* [B1x; B1y] }.
struct PivField {
  MatrixD ix, iy;  // bins x frames
  std::vector<bool> degenerate;
};

inline PivField piv(const ModalBeams& beams) {
  PivField out;
  out.ix = 0.5 * (beams.b0.conjugate().array() * beams.b1x.array()).real();
  out.iy = 0.5 * (beams.b0.conjugate().array() * beams.b1y.array()).real();
  out.degenerate = beams.degenerate;
  return out;
}

inline std::vector<double> stft_bin_frequencies() {
  std::vector<double> f(kNumBins);
  for (int k = 0; k < kNumBins; ++k) f[k] = k * static_cast<double>(kSampleRate) / kFftSize;
  return f;
}

/// Per-bin DOA feature: phi^(f,t) = atan2(Iy, Ix) in (-pi, pi]. Degenerate
/// bins (kr < 0.05) and exact-zero intensity emit 0.
inline FeatureSequence ch_doa(const SpectrogramTensor& spectra) {
  const ChCoefficients coeffs = ch_coefficients(spectra);
  const ModalBeams beams = modal_beams(coeffs, stft_bin_frequencies());
  const PivField field = piv(beams);

  FeatureSequence out;
  out.kind = FeatureKind::ch_doa;
  out.values.resize(field.ix.rows(), field.ix.cols());
  for (Eigen::Index f = 0; f < field.ix.rows(); ++f) {
    if (field.degenerate[static_cast<size_t>(f)]) {
      out.values.row(f).setZero();
      continue;
    }
    for (Eigen::Index t = 0; t < field.ix.cols(); ++t) {
      const double x = field.ix(f, t), y = field.iy(f, t);
      out.values(f, t) = (x == 0.0 && y == 0.0) ? 0.0f : static_cast<float>(std::atan2(y, x));
    }
  }
  return out;
}

/// Opposed microphone pairs for an 8-mic UCA, zero-based physical indices.
inline std::vector<std::pair<int, int>> opposed_pairs_8() {
  return {{0, 4}, {1, 5}, {2, 6}, {3, 7}};
}

/// Inter-microphone phase difference per pair and bin, stacked pair-major.
inline FeatureSequence ipd(const SpectrogramTensor& spectra,
                           const std::vector<std::pair<int, int>>& pairs = opposed_pairs_8()) {
  const auto active = spectra.geometry.active_indices();
  auto channel_of = [&](int mic) {
    for (size_t ch = 0; ch < active.size(); ++ch)
      if (active[ch] == mic) return static_cast<int>(ch);
    throw std::invalid_argument("ipd: microphone " + std::to_string(mic + 1) +
                                " is inactive; pair undefined");
  };
  FeatureSequence out;
  out.kind = FeatureKind::ipd;
  out.values.resize(static_cast<Eigen::Index>(pairs.size()) * spectra.bins(), spectra.frames());
  Eigen::Index row = 0;
  for (const auto& [i, j] : pairs) {
    const MatrixC& xi = spectra.channels[channel_of(i)];
    const MatrixC& xj = spectra.channels[channel_of(j)];
    for (Eigen::Index f = 0; f < xi.rows(); ++f)
      for (Eigen::Index t = 0; t < xi.cols(); ++t)
        out.values(row + f, t) = static_cast<float>(std::arg(xi(f, t) * std::conj(xj(f, t))));
    row += xi.rows();
  }
  return out;
}

/// [cos(IPD); sin(IPD)] stacked, removing the 2*pi wrap discontinuity.
inline FeatureSequence csipd(const FeatureSequence& ipd_features) {
  if (ipd_features.kind != FeatureKind::ipd)
    throw std::invalid_argument("csipd: input must be IPD features");
  FeatureSequence out;
  out.kind = FeatureKind::csipd;
  out.values.resize(2 * ipd_features.dim(), ipd_features.frames());
  out.values.topRows(ipd_features.dim()) = ipd_features.values.array().cos();
  out.values.bottomRows(ipd_features.dim()) = ipd_features.values.array().sin();
  return out;
}

}  // namespace chseg
