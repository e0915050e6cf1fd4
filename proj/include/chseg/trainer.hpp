#pragma once

#include <optional>
#include <random>
#include <vector>

#include "chseg/eval.hpp"
#include "chseg/labeling.hpp"
#include "chseg/recipe.hpp"
#include "chseg/tcn.hpp"

namespace chseg {

/// A full scene held for training: waveform plus reference annotations.
struct SceneData {
  MultichannelWaveform wave;
  AnnotationSet annotations;
  std::string id;
};

// 200 analysis frames per training crop; the crop must span the final window.
inline constexpr int kCropFrames = 200;
inline constexpr int kCropSamples = kWindowSamples + (kCropFrames - 1) * kHopSamples;  // 32240

struct TrainOptions {
  int epochs = 20;
  int batch_size = 64;
  int crops_per_epoch = 256;
  double learning_rate = 1e-3;
  double augment_prob = 0.5;
  bool masking = true;
  int patience = 10;
  uint64_t seed = 0;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
};

struct TrainResult {
  TCNConfig config;
  TcnWeights<float> weights;  // dev-best
  MeanVarNorm norm;
  std::vector<EpochLog> log;
};

namespace train_detail {

struct Example {
  MatrixF features;  // F x kCropFrames, normalized
  VectorF targets;   // kCropFrames
};

/// Crops [t0, t0 + crop) seconds of a scene into a crop-local example.
inline TrainingExample crop_scene(const SceneData& scene, Eigen::Index offset) {
  TrainingExample ex;
  ex.wave.geometry = scene.wave.geometry;
  ex.wave.sample_rate = scene.wave.sample_rate;
  ex.wave.samples = scene.wave.samples.middleCols(offset, kCropSamples);
  const double t0 = static_cast<double>(offset) / scene.wave.sample_rate;
  const double t1 = t0 + static_cast<double>(kCropSamples) / scene.wave.sample_rate;
  ex.annotations.recording_id = scene.id;
  ex.annotations.duration = t1 - t0;
  for (const auto& e : scene.annotations.entries) {
    const double s = std::max(e.start, t0), f = std::min(e.end, t1);
    if (s < f) ex.annotations.entries.push_back({e.speaker_id, s - t0, f - t0});
  }
  return ex;
}

inline VectorF make_targets(const AnnotationSet& ann, Task task, std::mt19937_64& rng) {
  switch (task) {
    case Task::vad: return vad_targets(ann, kCropFrames).values;
    case Task::osd: return osd_targets(ann, kCropFrames).values;
    case Task::scd: return scd_targets(ann, kCropFrames, rng).values;
  }
  throw std::logic_error("make_targets: bad task");
}

/// Time/feature masking restricted to the acoustic rows of a normalized
/// concatenated feature matrix (spatial rows are never masked).
inline void mask_acoustic_rows(MatrixF& features, int acoustic_dim, std::mt19937_64& rng,
                               const MaskParams& params = {}) {
  if (acoustic_dim <= 0) return;
  const int t = static_cast<int>(features.cols());
  for (int i = 0; i < params.max_time_masks; ++i) {
    const int w = std::uniform_int_distribution<int>(0, std::min(params.max_time_width, t))(rng);
    const int start = std::uniform_int_distribution<int>(0, t - w)(rng);
    features.block(0, start, acoustic_dim, w).setZero();
  }
  for (int i = 0; i < params.max_feat_masks; ++i) {
    const int w =
        std::uniform_int_distribution<int>(0, std::min(params.max_feat_width, acoustic_dim))(rng);
    const int start = std::uniform_int_distribution<int>(0, acoustic_dim - w)(rng);
    features.middleRows(start, w).setZero();
  }
}

}  // namespace train_detail

/// Fits per-row normalization on the full features of the training scenes.
inline MeanVarNorm fit_normalization(const std::vector<SceneData>& scenes,
                                     const std::vector<FeatureKind>& recipe) {
  std::vector<MatrixF> mats;
  mats.reserve(scenes.size());
  for (const auto& s : scenes) mats.push_back(extract_features(s.wave, recipe).values);
  std::vector<const MatrixF*> ptrs;
  for (const auto& m : mats) ptrs.push_back(&m);
  return MeanVarNorm::fit(ptrs);
}

/// Trains a sequence labeler on randomly cropped ~2 s segments with overlap
/// augmentation (waveform domain) and acoustic masking. Deterministic for a
/// fixed seed. Keeps the dev-best weights; stops early after `patience`
/// epochs without dev improvement.
inline TrainResult train(const std::vector<SceneData>& scenes,
                         const std::vector<SceneData>& dev_scenes,
                         const std::vector<FeatureKind>& recipe, Task task,
                         const TrainOptions& options, TCNConfig config = {}) {
  if (scenes.empty()) throw std::invalid_argument("train: empty dataset");
  for (const auto& s : scenes)
    if (s.wave.sample_count() < kCropSamples)
      throw std::invalid_argument("train: scene shorter than one training crop");

  config.input_dim = recipe_dim(recipe);
  config.output_dim = task == Task::scd ? 1 : 2;
  config.head = task == Task::scd ? HeadKind::linear : HeadKind::class_posterior;
  config.validate();

  TrainResult result;
  result.config = config;
  result.norm = fit_normalization(scenes, recipe);

  const int acoustic_dim = acoustic_rows(recipe);
  std::mt19937_64 rng(options.seed);
  TcnWeights<float> weights = TcnWeights<float>::init(config, rng());
  TcnWeights<float> grads = TcnWeights<float>::zeros_like(config);
  AdamState<float> adam;
  adam.lr = options.learning_rate;

  auto make_example = [&](std::mt19937_64& gen) {
    std::uniform_int_distribution<size_t> pick_scene(0, scenes.size() - 1);
    auto pick_crop = [&](const SceneData& s) {
      const auto span = s.wave.sample_count() - kCropSamples;
      const auto off = span > 0
                           ? std::uniform_int_distribution<Eigen::Index>(0, span)(gen)
                           : Eigen::Index{0};
      return train_detail::crop_scene(s, off);
    };
    TrainingExample ex = pick_crop(scenes[pick_scene(gen)]);
    if (std::uniform_real_distribution<double>(0.0, 1.0)(gen) < options.augment_prob) {
      const TrainingExample other = pick_crop(scenes[pick_scene(gen)]);
      ex = overlap_augment(ex, other, gen);
    }
    train_detail::Example out;
    out.features = extract_features(ex.wave, recipe).values;
    result.norm.apply(out.features);
    if (options.masking) train_detail::mask_acoustic_rows(out.features, acoustic_dim, gen);
    out.targets = train_detail::make_targets(ex.annotations, task, gen);
    return out;
  };

  // Deterministic dev crops: tiled, no augmentation, no masking.
  std::vector<train_detail::Example> dev_examples;
  {
    std::mt19937_64 dev_rng(options.seed ^ 0x9e3779b97f4a7c15ull);
    for (const auto& s : dev_scenes) {
      for (Eigen::Index off = 0; off + kCropSamples <= s.wave.sample_count();
           off += kCropSamples) {
        const TrainingExample ex = train_detail::crop_scene(s, off);
        train_detail::Example e;
        e.features = extract_features(ex.wave, recipe).values;
        result.norm.apply(e.features);
        e.targets = train_detail::make_targets(ex.annotations, task, dev_rng);
        dev_examples.push_back(std::move(e));
      }
    }
  }

  const int batches = std::max(1, options.crops_per_epoch / options.batch_size);
  double best_dev = std::numeric_limits<double>::infinity();
  int since_best = 0;
  result.weights = weights;

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    double epoch_loss = 0.0;
    int64_t examples_seen = 0;
    for (int b = 0; b < batches; ++b) {
      grads.for_each_tensor([](const std::string&, auto& t) { t.setZero(); });
      for (int i = 0; i < options.batch_size; ++i) {
        const auto ex = make_example(rng);
        epoch_loss += tcn_backward<float>(weights, config, ex.features, ex.targets, grads);
        ++examples_seen;
      }
      const float scale = 1.0f / static_cast<float>(options.batch_size);
      grads.for_each_tensor([scale](const std::string&, auto& t) { t *= scale; });
      adam.step(weights, grads, config);
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = epoch_loss / static_cast<double>(examples_seen);
    if (!dev_examples.empty()) {
      double dev_loss = 0.0;
      for (const auto& ex : dev_examples) {
        const MatrixF pred = tcn_forward<float>(weights, config, ex.features);
        dev_loss += tcn_loss<float>(pred, ex.targets, config.head);
      }
      log.dev_loss = dev_loss / static_cast<double>(dev_examples.size());
      if (log.dev_loss < best_dev - 1e-9) {
        best_dev = log.dev_loss;
        result.weights = weights;
        since_best = 0;
      } else if (++since_best > options.patience) {
        result.log.push_back(log);
        break;
      }
    } else {
      result.weights = weights;  // no dev set: keep the latest
    }
    result.log.push_back(log);
  }
  return result;
}

}  // namespace chseg
