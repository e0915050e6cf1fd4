#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "chseg/common.hpp"
#include "chseg/labeling.hpp"
#include "chseg/tcn.hpp"

namespace chseg {

enum class WindowAggregation { mean, median, max };

/// Full-recording inference on 200-frame windows with a 50-frame hop; each
/// frame's prediction is aggregated over all windows covering it. A trailing
/// partial window is re-aligned to the recording end; recordings shorter than
/// one window use a single zero-padded window with padding discarded.
inline PredictionSequence sliding_inference(const TcnWeights<float>& weights,
                                            const TCNConfig& cfg, const FeatureSequence& features,
                                            int window = 200, int hop = 50,
                                            WindowAggregation agg = WindowAggregation::mean) {
  const int t_total = features.frames();
  PredictionSequence out;
  out.head = cfg.head;

  if (t_total <= window) {
    MatrixF padded = MatrixF::Zero(features.dim(), window);
    padded.leftCols(t_total) = features.values;
    MatrixF pred = tcn_forward<float>(weights, cfg, padded);
    out.values = pred.leftCols(t_total);
    return out;
  }

  std::vector<int> starts;
  for (int s = 0; s + window <= t_total; s += hop) starts.push_back(s);
  if (starts.back() + window < t_total) starts.push_back(t_total - window);

  std::vector<std::vector<std::vector<float>>> votes;  // [C][t] -> values
  const int c_dim = cfg.output_dim;
  votes.assign(c_dim, std::vector<std::vector<float>>(t_total));
  for (int s : starts) {
    MatrixF pred = tcn_forward<float>(weights, cfg, MatrixF(features.values.middleCols(s, window)));
    for (int c = 0; c < c_dim; ++c)
      for (int t = 0; t < window; ++t) votes[c][s + t].push_back(pred(c, t));
  }

  out.values.resize(c_dim, t_total);
  for (int c = 0; c < c_dim; ++c) {
    for (int t = 0; t < t_total; ++t) {
      auto& v = votes[c][t];
      float value = 0.0f;
      switch (agg) {
        case WindowAggregation::mean:
          value = std::accumulate(v.begin(), v.end(), 0.0f) / static_cast<float>(v.size());
          break;
        case WindowAggregation::median: {
          std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
          value = v[v.size() / 2];
          break;
        }
        case WindowAggregation::max:
          value = *std::max_element(v.begin(), v.end());
          break;
      }
      out.values(c, t) = value;
    }
  }
  return out;
}

struct DetectionMetrics {
  double fa_pct = 0.0;
  double miss_pct = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool no_reference_positives = false;
};

/// Frame-level detection errors, normalized by reference speech duration
/// (diarization convention). With no reference positives, FA is normalized by
/// total frames and the result flagged.
inline DetectionMetrics detection_metrics(const std::vector<int>& pred,
                                          const std::vector<int>& ref) {
  if (pred.size() != ref.size())
    throw std::invalid_argument("detection_metrics: length mismatch");
  int64_t tp = 0, fp = 0, fn = 0, ref_pos = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    ref_pos += ref[i];
    if (pred[i] && ref[i]) ++tp;
    else if (pred[i] && !ref[i]) ++fp;
    else if (!pred[i] && ref[i]) ++fn;
  }
  DetectionMetrics m;
  if (ref_pos == 0) {
    m.no_reference_positives = true;
    m.fa_pct = pred.empty() ? 0.0 : 100.0 * static_cast<double>(fp) / static_cast<double>(pred.size());
    m.miss_pct = 0.0;
  } else {
    m.fa_pct = 100.0 * static_cast<double>(fp) / static_cast<double>(ref_pos);
    m.miss_pct = 100.0 * static_cast<double>(fn) / static_cast<double>(ref_pos);
  }
  m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = ref_pos > 0 ? static_cast<double>(tp) / static_cast<double>(ref_pos) : 0.0;
  m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                        : 0.0;
  return m;
}

/// Average precision over the PR staircase: sort by score descending (ties by
/// original index), AP = sum over positives of (R_k - R_{k-1}) * P_k.
inline double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("average_precision: length mismatch");
  const int64_t positives = std::accumulate(labels.begin(), labels.end(), int64_t{0});
  if (positives == 0) throw std::invalid_argument("average_precision: no positive labels");

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  int64_t tp = 0;
  for (size_t k = 0; k < order.size(); ++k) {
    if (labels[order[k]]) {
      ++tp;
      const double precision = static_cast<double>(tp) / static_cast<double>(k + 1);
      ap += precision / static_cast<double>(positives);  // delta-recall = 1/positives
    }
  }
  return ap;
}

/// Local maxima at or above `threshold`, accepted greedily in descending
/// value order while suppressing candidates within `min_distance` frames.
inline std::vector<int> peak_pick(const VectorF& curve, double threshold,
                                  int min_distance = 20) {
  const int n = static_cast<int>(curve.size());
  std::vector<int> candidates;
  // Local maxima with values outside the curve treated as -inf; a plateau
  // maximum is represented by its first frame.
  for (int t = 0; t < n; ++t) {
    if (curve[t] < threshold) continue;
    if (t > 0 && curve[t] <= curve[t - 1]) continue;  // must rise into t
    int u = t;
    while (u + 1 < n && curve[u + 1] == curve[t]) ++u;
    if (u + 1 < n && curve[u + 1] > curve[t]) continue;  // still rising
    candidates.push_back(t);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](int a, int b) { return curve[a] > curve[b]; });
  std::vector<int> accepted;
  for (int c : candidates) {
    bool suppressed = false;
    for (int a : accepted)
      if (std::abs(a - c) < min_distance) { suppressed = true; break; }
    if (!suppressed) accepted.push_back(c);
  }
  std::sort(accepted.begin(), accepted.end());
  return accepted;
}

struct SegmentationScore {
  double purity_pct = 0.0;
  double coverage_pct = 0.0;
  double ser_pct = 0.0;  // harmonic mean of purity and coverage
};

/// Frame-resolution purity/coverage against reference regions labeled by
/// their active-speaker set (silence is its own label). The hypothesis
/// segmentation is the partition induced by the change points plus the
/// recording edges; an empty hypothesis is one whole-recording segment.
inline SegmentationScore purity_coverage(const std::vector<int>& hyp_change_points,
                                         const AnnotationSet& ref_annotations, int frames) {
  if (frames <= 0) throw std::invalid_argument("purity_coverage: no frames");
  const auto labels = speaker_sets(ref_annotations, frames);

  std::vector<int> bounds{0};
  for (int c : hyp_change_points)
    if (c > 0 && c < frames && c != bounds.back()) bounds.push_back(c);
  bounds.push_back(frames);

  // Reference segments: maximal runs of one label.
  std::vector<std::pair<int, int>> ref_segments;
  int run_start = 0;
  for (int t = 1; t <= frames; ++t) {
    if (t == frames || labels[static_cast<size_t>(t)] != labels[static_cast<size_t>(t - 1)]) {
      ref_segments.emplace_back(run_start, t);
      run_start = t;
    }
  }

  double purity_num = 0.0;
  for (size_t s = 0; s + 1 < bounds.size(); ++s) {
    std::map<std::set<std::string>, int> counts;
    for (int t = bounds[s]; t < bounds[s + 1]; ++t) ++counts[labels[static_cast<size_t>(t)]];
    int best = 0;
    for (const auto& [label, n] : counts) best = std::max(best, n);
    purity_num += best;
  }

  double coverage_num = 0.0;
  for (const auto& [r0, r1] : ref_segments) {
    int best = 0;
    for (size_t s = 0; s + 1 < bounds.size(); ++s) {
      const int overlap = std::min(r1, bounds[s + 1]) - std::max(r0, bounds[s]);
      best = std::max(best, overlap);
    }
    coverage_num += best;
  }

  SegmentationScore score;
  score.purity_pct = 100.0 * purity_num / frames;
  score.coverage_pct = 100.0 * coverage_num / frames;
  const double p = score.purity_pct, c = score.coverage_pct;
  score.ser_pct = (p + c) > 0.0 ? 2.0 * p * c / (p + c) : 0.0;
  return score;
}

/// 95% CI half-width under the normal approximation: 1.96 * sd / sqrt(n).
inline double confidence_interval(const std::vector<double>& per_file_values) {
  const size_t n = per_file_values.size();
  if (n < 2) return 0.0;  // degenerate, caller should warn
  const double mean = std::accumulate(per_file_values.begin(), per_file_values.end(), 0.0) /
                      static_cast<double>(n);
  double ss = 0.0;
  for (double v : per_file_values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return 1.96 * sd / std::sqrt(static_cast<double>(n));
}

struct ThresholdSearch {
  double threshold = 0.5;
  double criterion_value = 0.0;
  bool degenerate = false;
};

/// Grid search over 0.01..0.99 (step 0.01). vad minimizes FA+Miss, osd
/// maximizes F1. Ties keep the lowest threshold.
inline ThresholdSearch tune_detection_threshold(const std::vector<VectorF>& dev_scores,
                                                const std::vector<std::vector<int>>& dev_refs,
                                                Task task) {
  if (dev_scores.size() != dev_refs.size() || dev_scores.empty())
    throw std::invalid_argument("tune_threshold: bad dev set");
  bool has_pos = false, has_neg = false;
  for (const auto& r : dev_refs)
    for (int v : r) (v ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) return {0.5, 0.0, true};

  ThresholdSearch best;
  bool first = true;
  for (int i = 1; i <= 99; ++i) {
    const double th = i / 100.0;
    std::vector<int> pred, ref;
    for (size_t f = 0; f < dev_scores.size(); ++f) {
      for (Eigen::Index t = 0; t < dev_scores[f].size(); ++t)
        pred.push_back(dev_scores[f][t] >= th ? 1 : 0);
      ref.insert(ref.end(), dev_refs[f].begin(), dev_refs[f].end());
    }
    const DetectionMetrics m = detection_metrics(pred, ref);
    const double value = task == Task::vad ? -(m.fa_pct + m.miss_pct) : m.f1;
    if (first || value > best.criterion_value + 1e-12) {
      best.threshold = th;
      best.criterion_value = value;
      first = false;
    }
  }
  return best;
}

/// SCD threshold: maximize mean SER of peak-picked change points on dev.
inline ThresholdSearch tune_scd_threshold(const std::vector<VectorF>& dev_curves,
                                          const std::vector<const AnnotationSet*>& dev_refs,
                                          int min_distance = 20) {
  if (dev_curves.size() != dev_refs.size() || dev_curves.empty())
    throw std::invalid_argument("tune_scd_threshold: bad dev set");
  ThresholdSearch best;
  bool first = true;
  for (int i = 1; i <= 99; ++i) {
    const double th = i / 100.0;
    double ser_sum = 0.0;
    for (size_t f = 0; f < dev_curves.size(); ++f) {
      const int frames = static_cast<int>(dev_curves[f].size());
      const auto points = peak_pick(dev_curves[f], th, min_distance);
      ser_sum += purity_coverage(points, *dev_refs[f], frames).ser_pct;
    }
    const double value = ser_sum / static_cast<double>(dev_curves.size());
    if (first || value > best.criterion_value + 1e-12) {
      best.threshold = th;
      best.criterion_value = value;
      first = false;
    }
  }
  return best;
}

/// Per-file and aggregate metric values with 95% CI half-widths.
struct MetricsReport {
  Task task = Task::vad;
  double threshold = 0.5;
  std::vector<std::string> metric_names;
  std::map<std::string, std::vector<double>> per_file;  // metric -> values (file order)
  std::vector<std::string> file_ids;

  double aggregate(const std::string& metric) const {
    const auto& v = per_file.at(metric);
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  }
  double ci95(const std::string& metric) const { return confidence_interval(per_file.at(metric)); }
};

}  // namespace chseg
