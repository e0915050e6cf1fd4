#pragma once

#include <random>
#include <set>
#include <string>
#include <vector>

#include "chseg/annotations.hpp"
#include "chseg/common.hpp"
#include "chseg/waveform.hpp"

namespace chseg {

enum class Task { vad, osd, scd };

inline const char* task_name(Task t) {
  switch (t) {
    case Task::vad: return "vad";
    case Task::osd: return "osd";
    case Task::scd: return "scd";
  }
  return "?";
}

/// Frame-level training targets at 100 frames/second. Binary for vad/osd,
/// in [0,1] for scd regression curves.
struct FrameTargets {
  Task task = Task::vad;
  VectorF values;  // length T
};

/// Distinct active speakers covering each frame center t_c = (t + 0.5)/100 s.
inline std::vector<int> speaker_count(const AnnotationSet& annotations, int frames) {
  annotations.validate();
  std::vector<int> counts(frames, 0);
  for (int t = 0; t < frames; ++t) {
    const double tc = (t + 0.5) / kFrameRate;
    std::set<std::string> active;
    for (const auto& e : annotations.entries)
      if (e.start <= tc && tc < e.end) active.insert(e.speaker_id);
    counts[t] = static_cast<int>(active.size());
  }
  return counts;
}

/// The active-speaker SET per frame; shared by change-point extraction and
/// segmentation scoring.
inline std::vector<std::set<std::string>> speaker_sets(const AnnotationSet& annotations,
                                                       int frames) {
  annotations.validate();
  std::vector<std::set<std::string>> sets(frames);
  for (const auto& e : annotations.entries) {
    const int t0 = std::max(0, static_cast<int>(std::ceil(e.start * kFrameRate - 0.5)));
    for (int t = t0; t < frames; ++t) {
      const double tc = (t + 0.5) / kFrameRate;
      if (tc >= e.end) break;
      if (tc >= e.start) sets[static_cast<size_t>(t)].insert(e.speaker_id);
    }
  }
  return sets;
}

inline FrameTargets vad_targets(const AnnotationSet& annotations, int frames) {
  FrameTargets t;
  t.task = Task::vad;
  t.values.resize(frames);
  const auto counts = speaker_count(annotations, frames);
  for (int i = 0; i < frames; ++i) t.values[i] = counts[i] >= 1 ? 1.0f : 0.0f;
  return t;
}

inline FrameTargets osd_targets(const AnnotationSet& annotations, int frames) {
  FrameTargets t;
  t.task = Task::osd;
  t.values.resize(frames);
  const auto counts = speaker_count(annotations, frames);
  for (int i = 0; i < frames; ++i) t.values[i] = counts[i] >= 2 ? 1.0f : 0.0f;
  return t;
}

/// Frames where the active-speaker set changes: speaker turns, speech on/off,
/// overlap on/off. Sorted, deduplicated.
inline std::vector<int> change_points(const AnnotationSet& annotations, int frames) {
  const auto sets = speaker_sets(annotations, frames);
  std::vector<int> points;
  for (int t = 1; t < frames; ++t)
    if (sets[static_cast<size_t>(t)] != sets[static_cast<size_t>(t - 1)]) points.push_back(t);
  return points;
}

inline constexpr double kScdVarianceMin = 2.0;
inline constexpr double kScdVarianceMax = 7.0;

/// Gaussian-shaped regression targets with maxima (value 1) at change points.
/// sigma^2 ~ U[2,7] drawn once per call; overlapping curves combined by max;
/// truncated to 0 beyond 4 sigma.
inline FrameTargets scd_targets(const AnnotationSet& annotations, int frames,
                                std::mt19937_64& rng) {
  const double variance =
      std::uniform_real_distribution<double>(kScdVarianceMin, kScdVarianceMax)(rng);
  const double sigma = std::sqrt(variance);
  const auto points = change_points(annotations, frames);

  FrameTargets t;
  t.task = Task::scd;
  t.values = VectorF::Zero(frames);
  const int reach = static_cast<int>(std::floor(4.0 * sigma));
  for (int c : points) {
    for (int i = std::max(0, c - reach); i <= std::min(frames - 1, c + reach); ++i) {
      const double d = static_cast<double>(i - c);
      const float v = static_cast<float>(std::exp(-d * d / (2.0 * variance)));
      t.values[i] = std::max(t.values[i], v);
    }
  }
  return t;
}

/// A waveform crop plus its crop-local annotations, the unit the trainer
/// samples and augments.
struct TrainingExample {
  MultichannelWaveform wave;
  AnnotationSet annotations;
};

inline constexpr double kAugmentSnrMin = 0.0;
inline constexpr double kAugmentSnrMax = 10.0;

/// Mixes example B into A at a random SNR in [0, 10] dB relative to A and
/// unions the annotations. B's speakers are kept distinct from A's.
inline TrainingExample overlap_augment(const TrainingExample& a, const TrainingExample& b,
                                       std::mt19937_64& rng) {
  if (a.wave.channels() != b.wave.channels() || a.wave.sample_count() != b.wave.sample_count())
    throw std::invalid_argument("overlap_augment: shape mismatch");
  const double snr_db =
      std::uniform_real_distribution<double>(kAugmentSnrMin, kAugmentSnrMax)(rng);
  const double pa = a.wave.samples.array().square().mean();
  const double pb = b.wave.samples.array().square().mean();

  TrainingExample out = a;
  if (pb > 0.0) {
    const double gain = pa > 0.0 ? std::sqrt(pa / (pb * std::pow(10.0, snr_db / 10.0))) : 1.0;
    out.wave.samples += (b.wave.samples.array() * static_cast<float>(gain)).matrix();
    for (const auto& e : b.annotations.entries)
      out.annotations.entries.push_back({"aug#" + e.speaker_id, e.start, e.end});
    out.annotations.sort_by_start();
  }
  return out;
}

}  // namespace chseg
