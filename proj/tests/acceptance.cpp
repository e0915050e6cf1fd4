// Acceptance suite: one pass/fail line per criterion, exit nonzero on any
// failure. Criteria 7 and 8 train real models end to end and dominate the
// runtime (several minutes on one core).

#include <chseg/chseg.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace chseg;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion, what.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

VectorD make_tone(double freq_hz, int samples) {
  VectorD v(samples);
  for (int n = 0; n < samples; ++n) v[n] = std::sin(kTwoPi * freq_hz * n / kSampleRate);
  return v;
}

// Energy-weighted circular mean over a frequency band; broadband estimates
// use 300-1000 Hz, below the first J0(kr) zero and the spatial-aliasing onset.
double scene_doa_estimate(const MultichannelWaveform& wave, double f_min = 300.0,
                          double f_max = 1000.0) {
  const PivField field =
      piv(modal_beams(ch_coefficients(stft(wave)), stft_bin_frequencies()));
  const auto freqs = stft_bin_frequencies();
  double sx = 0.0, sy = 0.0;
  for (Eigen::Index f = 0; f < field.ix.rows(); ++f) {
    if (field.degenerate[static_cast<size_t>(f)]) continue;
    if (freqs[static_cast<size_t>(f)] < f_min || freqs[static_cast<size_t>(f)] > f_max) continue;
    sx += field.ix.row(f).sum();
    sy += field.iy.row(f).sum();
  }
  return std::atan2(sy, sx);
}

// ---------------------------------------------------------------------------
// 1. Single-source localization accuracy and speed.
void criterion1() {
  const auto t0 = Clock::now();
  ArrayGeometry geom = uniform_circular_array(8);
  double worst = 0.0, sum = 0.0;
  int n = 0;
  for (double freq : {300.0, 500.0, 800.0, 1000.0, 1500.0}) {
    const VectorD tone = make_tone(freq, 8000);
    for (int a = 0; a < 36; ++a) {
      const double az = a * 10.0 * kPi / 180.0;
      const double est =
          scene_doa_estimate(synth_plane_wave(geom, az, tone), freq - 150.0, freq + 150.0);
      const double err = angular_distance(est, az) * 180.0 / kPi;
      worst = std::max(worst, err);
      sum += err;
      ++n;
    }
  }
  const double mae = sum / n;
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  char detail[160];
  std::snprintf(detail, sizeof(detail), "MAE %.4f deg, worst %.4f deg over %d cases in %.2f s",
                mae, worst, n, secs);
  report(1, mae <= 2.0 && secs < 5.0, "DOA mean absolute error <= 2 deg in < 5 s", detail);
}

// ---------------------------------------------------------------------------
// 2. Robustness to channel deactivation.
void criterion2() {
  ArrayGeometry geom = uniform_circular_array(8);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorD noise(16000);
  for (int i = 0; i < 16000; ++i) noise[i] = gauss(rng);

  double worst = 0.0;
  for (double az_deg : {10.0, 100.0, 190.0, 280.0}) {
    const double az = az_deg * kPi / 180.0;
    MultichannelWaveform full = synth_plane_wave(geom, az, noise);
    MultichannelWaveform sub = deactivate_channels(full, {0, 2, 4, 6});
    const double est = scene_doa_estimate(sub);
    worst = std::max(worst, angular_distance(est, az) * 180.0 / kPi);
  }

  // Opposed-pair phase features must refuse to run with broken pairs.
  bool ipd_throws = false;
  try {
    MultichannelWaveform sub =
        deactivate_channels(synth_plane_wave(geom, 0.5, noise), {0, 2, 4, 6});
    ipd(stft(sub));
  } catch (const std::invalid_argument&) {
    ipd_throws = true;
  }
  char detail[160];
  std::snprintf(detail, sizeof(detail), "worst DOA error %.3f deg with 4 survivors; ipd %s",
                worst, ipd_throws ? "rejects broken pairs" : "DID NOT THROW");
  report(2, worst <= 5.0 && ipd_throws, "DOA usable after deactivating mics {2,4,6,8}", detail);
}

// ---------------------------------------------------------------------------
// 3. Feature dimensionalities.
void criterion3() {
  ArrayGeometry geom = uniform_circular_array(8);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorD noise(16000);
  for (int i = 0; i < 16000; ++i) noise[i] = gauss(rng);
  const SpectrogramTensor s = stft(synth_plane_wave(geom, 1.0, noise));

  const int lm = log_mel(s).dim();
  const int mf = mfcc(s).dim();
  const int pd = ipd(s).dim();
  const int cs = csipd(ipd(s)).dim();
  const int dd = ch_doa(s).dim();
  const bool pass = lm == 80 && mf == 59 && pd == 1028 && cs == 2056 && dd == 257;
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "log_mel %d, mfcc %d, ipd %d, csipd %d, doa %d", lm, mf, pd, cs, dd);
  report(3, pass, "feature dims 80 / 59 / 1028 / 2056 / 257", detail);
}

// ---------------------------------------------------------------------------
// 4. Model size per feature configuration.
void criterion4() {
  const std::vector<std::pair<int, double>> targets = {
      {59, 0.26e6}, {316, 0.28e6}, {1087, 0.33e6}, {2115, 0.40e6}};
  bool pass = true;
  std::string detail;
  for (const auto& [f, target] : targets) {
    TCNConfig cfg;
    cfg.input_dim = f;
    cfg.output_dim = 2;
    const auto count = static_cast<double>(param_count(cfg));
    const double rel = std::abs(count - target) / target;
    pass = pass && rel <= 0.15;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "F=%d: %.0f (%+.1f%%) ", f, count, 100.0 * (count / target - 1.0));
    detail += buf;
  }
  report(4, pass, "parameter counts within 15% of 0.26M/0.28M/0.33M/0.40M", detail);
}

// ---------------------------------------------------------------------------
// 5. Gradient correctness for every parameter.
void criterion5() {
  int checked = 0, failed = 0;
  for (HeadKind head : {HeadKind::class_posterior, HeadKind::linear}) {
    TCNConfig cfg;
    cfg.input_dim = 4;
    cfg.bottleneck_dim = 5;
    cfg.hidden_dim = 6;
    cfg.num_blocks = 2;
    cfg.layers_per_block = 2;
    cfg.output_dim = head == HeadKind::class_posterior ? 2 : 1;
    cfg.head = head;
    TcnWeights<double> w = TcnWeights<double>::init(cfg, 55);

    const int t_len = 9;
    std::mt19937_64 rng(56);
    std::normal_distribution<double> gauss(0.0, 1.0);
    MatrixD x(4, t_len);
    for (int i = 0; i < 4; ++i)
      for (int t = 0; t < t_len; ++t) x(i, t) = gauss(rng);
    VectorD y(t_len);
    for (int t = 0; t < t_len; ++t)
      y[t] = head == HeadKind::class_posterior ? static_cast<double>(rng() & 1) : gauss(rng);

    TcnWeights<double> grads = TcnWeights<double>::zeros_like(cfg);
    tcn_backward<double>(w, cfg, x, y, grads);

    std::map<std::string, std::pair<double*, Eigen::Index>> wm, gm;
    w.for_each_tensor([&wm](const std::string& n, auto& t) { wm[n] = {t.data(), t.size()}; });
    grads.for_each_tensor([&gm](const std::string& n, auto& t) { gm[n] = {t.data(), t.size()}; });

    const double h = 1e-6;
    for (auto& [name, slot] : wm) {
      auto [data, size] = slot;
      const double* g = gm.at(name).first;
      for (Eigen::Index i = 0; i < size; ++i) {
        const double orig = data[i];
        data[i] = orig + h;
        const double lp = tcn_loss<double>(tcn_forward<double>(w, cfg, x), y, head);
        data[i] = orig - h;
        const double lm = tcn_loss<double>(tcn_forward<double>(w, cfg, x), y, head);
        data[i] = orig;
        const double fd = (lp - lm) / (2.0 * h);
        const double an = g[i];
        const double rel = std::abs(fd - an) / std::max(1e-6, std::abs(fd) + std::abs(an));
        ++checked;
        if (rel > 1e-3) ++failed;
      }
    }
  }
  char detail[120];
  std::snprintf(detail, sizeof(detail), "%d/%d parameters within 1e-3 relative tolerance",
                checked - failed, checked);
  report(5, failed == 0 && checked > 800, "analytic gradients match finite differences", detail);
}

// ---------------------------------------------------------------------------
// 6. Metric implementations against brute-force oracles.
double ap_bruteforce(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  int64_t positives = 0;
  for (int l : labels) positives += l;
  double ap = 0.0;
  for (size_t k = 0; k < order.size(); ++k) {
    if (!labels[order[k]]) continue;
    int64_t tp = 0;
    for (size_t j = 0; j <= k; ++j) tp += labels[order[j]];
    ap += (static_cast<double>(tp) / static_cast<double>(k + 1)) / positives;
  }
  return ap;
}

SegmentationScore pc_bruteforce(const std::vector<int>& change_points, const AnnotationSet& ref,
                                int frames) {
  std::vector<std::string> label(frames);
  for (int t = 0; t < frames; ++t) {
    const double tc = (t + 0.5) / 100.0;
    std::set<std::string> s;
    for (const auto& e : ref.entries)
      if (e.start <= tc && tc < e.end) s.insert(e.speaker_id);
    for (const auto& x : s) label[t] += x + "|";
  }
  std::vector<int> hyp_of(frames), ref_of(frames, 0);
  {
    int seg = 0;
    std::set<int> cps(change_points.begin(), change_points.end());
    for (int t = 0; t < frames; ++t) {
      if (t > 0 && cps.count(t)) ++seg;
      hyp_of[t] = seg;
    }
  }
  for (int t = 1; t < frames; ++t)
    ref_of[t] = ref_of[t - 1] + (label[t] != label[t - 1] ? 1 : 0);
  std::map<int, std::map<std::string, int>> hh;
  std::map<int, std::map<int, int>> rh;
  for (int t = 0; t < frames; ++t) {
    ++hh[hyp_of[t]][label[t]];
    ++rh[ref_of[t]][hyp_of[t]];
  }
  double purity = 0.0, coverage = 0.0;
  for (auto& [s, hist] : hh) {
    int best = 0;
    for (auto& [l, n] : hist) best = std::max(best, n);
    purity += best;
  }
  for (auto& [s, hist] : rh) {
    int best = 0;
    for (auto& [h, n] : hist) best = std::max(best, n);
    coverage += best;
  }
  SegmentationScore out;
  out.purity_pct = 100.0 * purity / frames;
  out.coverage_pct = 100.0 * coverage / frames;
  out.ser_pct = (out.purity_pct + out.coverage_pct) > 0
                    ? 2.0 * out.purity_pct * out.coverage_pct / (out.purity_pct + out.coverage_pct)
                    : 0.0;
  return out;
}

void criterion6() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  bool pass = true;

  // Hand-worked AP example.
  pass = pass && std::abs(average_precision({0.9, 0.8, 0.7, 0.6}, {1, 0, 1, 1}) -
                          (1.0 + 2.0 / 3.0 + 0.75) / 3.0) < 1e-12;
  int ap_ok = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 40);
    std::vector<double> scores(n);
    std::vector<int> labels(n, 0);
    for (int i = 0; i < n; ++i) {
      scores[i] = std::floor(u(rng) * 5.0) / 5.0;
      labels[i] = u(rng) < 0.4 ? 1 : 0;
    }
    if (std::accumulate(labels.begin(), labels.end(), 0) == 0) labels[rng() % n] = 1;
    if (std::abs(average_precision(scores, labels) - ap_bruteforce(scores, labels)) < 1e-12)
      ++ap_ok;
  }
  pass = pass && ap_ok == 200;

  // Hand-worked segmentation example: one-segment hypothesis over an A|B
  // recording gives purity 50, coverage 100.
  AnnotationSet ab;
  ab.duration = 2.0;
  ab.entries = {{"A", 0.0, 1.0}, {"B", 1.0, 2.0}};
  const SegmentationScore empty_hyp = purity_coverage({}, ab, 200);
  pass = pass && std::abs(empty_hyp.purity_pct - 50.0) < 1e-9 &&
         std::abs(empty_hyp.coverage_pct - 100.0) < 1e-9;

  int pc_ok = 0;
  const char* speakers[] = {"s1", "s2", "s3"};
  for (int trial = 0; trial < 200; ++trial) {
    const int frames = 20 + static_cast<int>(rng() % 180);
    AnnotationSet ref;
    ref.duration = frames / 100.0;
    for (int i = 0, n = static_cast<int>(rng() % 5); i < n; ++i) {
      double a = u(rng) * ref.duration, b = u(rng) * ref.duration;
      if (a > b) std::swap(a, b);
      if (a < b) ref.entries.push_back({speakers[rng() % 3], a, b});
    }
    std::vector<int> cps;
    for (int i = 0, n = static_cast<int>(rng() % 6); i < n; ++i)
      cps.push_back(1 + static_cast<int>(rng() % (frames - 1)));
    std::sort(cps.begin(), cps.end());
    cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
    const SegmentationScore fast = purity_coverage(cps, ref, frames);
    const SegmentationScore slow = pc_bruteforce(cps, ref, frames);
    if (std::abs(fast.purity_pct - slow.purity_pct) < 1e-9 &&
        std::abs(fast.coverage_pct - slow.coverage_pct) < 1e-9)
      ++pc_ok;
  }
  pass = pass && pc_ok == 200;

  char detail[120];
  std::snprintf(detail, sizeof(detail), "AP %d/200, purity/coverage %d/200 oracle matches",
                ap_ok, pc_ok);
  report(6, pass, "ranking and segmentation metrics match brute force", detail);
}

// ---------------------------------------------------------------------------
// Shared scene builders for the end-to-end criteria.

// Three alternating white-noise sources at 0/60/120 deg with no gaps: every
// change point is purely spatial, invisible to single-channel features.
SceneData make_scd_scene(uint64_t seed) {
  ScenarioSpec spec;
  spec.duration = 20.0;
  spec.seed = seed;
  spec.noise_snr_db = 20.0;
  spec.geometry = uniform_circular_array(8);
  const double azimuths[3] = {0.0, 60.0 * kPi / 180.0, 120.0 * kPi / 180.0};
  SourceSpec sources[3];
  for (int i = 0; i < 3; ++i) {
    sources[i].source_id = "spk" + std::to_string(i);
    sources[i].azimuth = azimuths[i];
    sources[i].kind = SignalKind::white_noise;
  }
  std::mt19937_64 rng(seed ^ 0xabcdef);
  std::uniform_real_distribution<double> turn_len(1.0, 2.5);
  double t = 0.0;
  int who = static_cast<int>(rng() % 3);
  while (t < spec.duration - 1e-9) {
    const double end = std::min(spec.duration, t + turn_len(rng));
    sources[who].active_intervals.emplace_back(t, end);
    t = end;
    who = (who + static_cast<int>(1 + rng() % 2)) % 3;  // always a new speaker
  }
  spec.sources = {sources[0], sources[1], sources[2]};

  SceneData scene;
  auto [wave, ann] = gen_scenario(spec);
  scene.wave = std::move(wave);
  scene.annotations = std::move(ann);
  scene.id = "scd" + std::to_string(seed);
  return scene;
}

// Two speech-like sources at 40/250 deg with scripted solo and overlap spans.
SceneData make_osd_scene(uint64_t seed) {
  ScenarioSpec spec;
  spec.duration = 20.0;
  spec.seed = seed;
  spec.noise_snr_db = 10.0;
  spec.geometry = uniform_circular_array(8);
  SourceSpec a, b;
  a.source_id = "spkA";
  a.azimuth = 40.0 * kPi / 180.0;
  a.kind = SignalKind::speech_like;
  b.source_id = "spkB";
  b.azimuth = 250.0 * kPi / 180.0;
  b.kind = SignalKind::speech_like;

  std::mt19937_64 rng(seed ^ 0x5eed);
  std::uniform_real_distribution<double> seg_len(0.8, 2.0);
  double t = 0.0;
  int phase = static_cast<int>(rng() % 3);
  while (t < spec.duration - 1e-9) {
    const double end = std::min(spec.duration, t + seg_len(rng));
    switch (phase % 4) {
      case 0: a.active_intervals.emplace_back(t, end); break;          // A solo
      case 1: b.active_intervals.emplace_back(t, end); break;          // B solo
      case 2:                                                          // overlap
        a.active_intervals.emplace_back(t, end);
        b.active_intervals.emplace_back(t, end);
        break;
      case 3: break;                                                   // silence
    }
    t = end;
    ++phase;
  }
  // Merge abutting intervals per source so per-source intervals stay disjoint.
  for (SourceSpec* s : {&a, &b}) {
    std::sort(s->active_intervals.begin(), s->active_intervals.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& iv : s->active_intervals) {
      if (!merged.empty() && iv.first <= merged.back().second + 1e-9)
        merged.back().second = std::max(merged.back().second, iv.second);
      else
        merged.push_back(iv);
    }
    s->active_intervals = std::move(merged);
  }
  spec.sources = {a, b};

  SceneData scene;
  auto [wave, ann] = gen_scenario(spec);
  scene.wave = std::move(wave);
  scene.annotations = std::move(ann);
  scene.id = "osd" + std::to_string(seed);
  return scene;
}

struct ScdResult {
  double ser = 0.0;
  double threshold = 0.0;
};

ScdResult run_scd_pipeline(const std::vector<SceneData>& train_scenes,
                           const std::vector<SceneData>& dev_scenes,
                           const std::vector<SceneData>& eval_scenes,
                           const std::vector<FeatureKind>& recipe) {
  TrainOptions options;
  options.epochs = 20;
  options.seed = 7;
  const TrainResult result = train(train_scenes, dev_scenes, recipe, Task::scd, options);

  auto curve_of = [&](const SceneData& s) {
    FeatureSequence f = extract_features(s.wave, recipe);
    result.norm.apply(f.values);
    return VectorF(sliding_inference(result.weights, result.config, f).values.row(0).transpose());
  };

  std::vector<VectorF> dev_curves;
  std::vector<const AnnotationSet*> dev_refs;
  for (const auto& s : dev_scenes) {
    dev_curves.push_back(curve_of(s));
    dev_refs.push_back(&s.annotations);
  }
  const ThresholdSearch search = tune_scd_threshold(dev_curves, dev_refs);

  double ser_sum = 0.0;
  for (const auto& s : eval_scenes) {
    const VectorF curve = curve_of(s);
    const auto points = peak_pick(curve, search.threshold);
    ser_sum += purity_coverage(points, s.annotations, static_cast<int>(curve.size())).ser_pct;
  }
  return {ser_sum / static_cast<double>(eval_scenes.size()), search.threshold};
}

// ---------------------------------------------------------------------------
// 7. End-to-end change detection: spatial features required, single-channel
//    features blind, on scenes whose changes are purely directional.
void criterion7() {
  const auto t0 = Clock::now();
  std::vector<SceneData> train_scenes, dev_scenes, eval_scenes;
  for (uint64_t i = 0; i < 50; ++i) train_scenes.push_back(make_scd_scene(1000 + i));
  for (uint64_t i = 0; i < 10; ++i) dev_scenes.push_back(make_scd_scene(2000 + i));
  for (uint64_t i = 0; i < 20; ++i) eval_scenes.push_back(make_scd_scene(3000 + i));

  const ScdResult with_doa =
      run_scd_pipeline(train_scenes, dev_scenes, eval_scenes, parse_recipe("mfcc+ch_doa"));
  const ScdResult without =
      run_scd_pipeline(train_scenes, dev_scenes, eval_scenes, parse_recipe("mfcc"));
  const double mins = std::chrono::duration<double>(Clock::now() - t0).count() / 60.0;

  char detail[200];
  std::snprintf(detail, sizeof(detail),
                "SER mfcc+ch_doa %.1f%% (need >= 80), mfcc-only %.1f%% (need <= 60), %.1f min",
                with_doa.ser, without.ser, mins);
  report(7, with_doa.ser >= 80.0 && without.ser <= 60.0 && mins < 30.0,
         "spatially-driven change detection end to end", detail);
}

// ---------------------------------------------------------------------------
// 8. End-to-end overlap detection with spatial features.
void criterion8() {
  std::vector<SceneData> train_scenes, dev_scenes, eval_scenes;
  for (uint64_t i = 0; i < 30; ++i) train_scenes.push_back(make_osd_scene(5000 + i));
  for (uint64_t i = 0; i < 6; ++i) dev_scenes.push_back(make_osd_scene(6000 + i));
  for (uint64_t i = 0; i < 12; ++i) eval_scenes.push_back(make_osd_scene(7000 + i));

  // Generated references must satisfy overlap <= speech frame-by-frame.
  bool invariant = true;
  for (const auto& s : eval_scenes) {
    const int frames = static_cast<int>(s.wave.sample_count() - kWindowSamples) / kHopSamples + 1;
    const VectorF v = vad_targets(s.annotations, frames).values;
    const VectorF o = osd_targets(s.annotations, frames).values;
    for (int t = 0; t < frames; ++t) invariant = invariant && o[t] <= v[t];
  }

  const auto recipe = parse_recipe("mfcc+ch_doa");
  TrainOptions options;
  options.epochs = 20;
  options.seed = 8;
  const TrainResult result = train(train_scenes, dev_scenes, recipe, Task::osd, options);

  double ap_sum = 0.0;
  int ap_n = 0;
  for (const auto& s : eval_scenes) {
    FeatureSequence f = extract_features(s.wave, recipe);
    result.norm.apply(f.values);
    const PredictionSequence pred = sliding_inference(result.weights, result.config, f);
    const VectorF ref = osd_targets(s.annotations, f.frames()).values;
    std::vector<double> scores(static_cast<size_t>(f.frames()));
    std::vector<int> labels(static_cast<size_t>(f.frames()));
    bool has_pos = false;
    for (int t = 0; t < f.frames(); ++t) {
      scores[static_cast<size_t>(t)] = pred.values(1, t);
      labels[static_cast<size_t>(t)] = ref[t] >= 0.5f ? 1 : 0;
      has_pos = has_pos || labels[static_cast<size_t>(t)];
    }
    if (!has_pos) continue;
    ap_sum += 100.0 * average_precision(scores, labels);
    ++ap_n;
  }
  const double ap = ap_sum / std::max(1, ap_n);
  char detail[160];
  std::snprintf(detail, sizeof(detail), "overlap AP %.1f%% (need >= 85) over %d scenes; osd<=vad %s",
                ap, ap_n, invariant ? "holds" : "VIOLATED");
  report(8, ap >= 85.0 && invariant, "overlap detection end to end", detail);
}

// ---------------------------------------------------------------------------
// 9. Real-corpus replication needs external audio; out of scope here.
void criterion9() {
  std::printf(
      "[SKIP] criterion 9: replication on recorded meeting corpora requires external data "
      "not shipped with this repository; all synthetic-data criteria above stand in.\n");
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  if (g_failures > 0) {
    std::printf("%d criterion(s) FAILED\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
