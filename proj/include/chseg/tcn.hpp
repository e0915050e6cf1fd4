#pragma once

#include <random>
#include <string>
#include <vector>

#include "chseg/common.hpp"
#include "chseg/features.hpp"
#include "chseg/labeling.hpp"

namespace chseg {

enum class HeadKind { class_posterior, linear };

/// Temporal convolutional sequence labeler: width-1 bottleneck projection,
/// stacked blocks of dilated depthwise-separable convolutions with
/// channelwise normalization and rectified activations, residual connection
/// after each block, width-1 output projection.
struct TCNConfig {
  int input_dim = 59;       // F
  int bottleneck_dim = 64;  // B, the residual/bottleneck width
  int hidden_dim = 128;     // H, the width inside each convolutional layer
  int kernel_size = 3;
  int num_blocks = 3;
  int layers_per_block = 5;
  int output_dim = 2;  // C
  HeadKind head = HeadKind::class_posterior;

  int dilation(int layer) const { return 1 << layer; }

  /// Frames of context seen by one output frame.
  int receptive_field() const {
    int per_block = 0;
    for (int l = 0; l < layers_per_block; ++l)
      per_block += (kernel_size - 1) * dilation(l);
    return 1 + num_blocks * per_block;
  }

  void validate() const {
    if (input_dim <= 0 || bottleneck_dim <= 0 || hidden_dim <= 0 || output_dim <= 0 ||
        kernel_size <= 0 || num_blocks <= 0 || layers_per_block <= 0)
      throw std::invalid_argument("TCNConfig: all dimensions must be positive");
  }
};

inline constexpr double kNormEps = 1e-5;

template <typename Scalar>
struct TcnWeights {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Layer {
    Mat pw1_w;  // H x B
    Vec pw1_b;  // H
    Vec norm1_gain, norm1_bias;  // H
    Mat dw_w;   // H x kernel
    Vec dw_b;   // H
    Vec norm2_gain, norm2_bias;  // H
    Mat pw2_w;  // B x H
    Vec pw2_b;  // B
  };

  Mat in_w;  // B x F
  Vec in_b;  // B
  std::vector<Layer> layers;  // num_blocks * layers_per_block, block-major
  Mat out_w;  // C x B
  Vec out_b;  // C

  static TcnWeights zeros_like(const TCNConfig& cfg) {
    cfg.validate();
    TcnWeights w;
    w.in_w = Mat::Zero(cfg.bottleneck_dim, cfg.input_dim);
    w.in_b = Vec::Zero(cfg.bottleneck_dim);
    w.layers.resize(static_cast<size_t>(cfg.num_blocks) * cfg.layers_per_block);
    for (auto& l : w.layers) {
      l.pw1_w = Mat::Zero(cfg.hidden_dim, cfg.bottleneck_dim);
      l.pw1_b = Vec::Zero(cfg.hidden_dim);
      l.norm1_gain = Vec::Zero(cfg.hidden_dim);
      l.norm1_bias = Vec::Zero(cfg.hidden_dim);
      l.dw_w = Mat::Zero(cfg.hidden_dim, cfg.kernel_size);
      l.dw_b = Vec::Zero(cfg.hidden_dim);
      l.norm2_gain = Vec::Zero(cfg.hidden_dim);
      l.norm2_bias = Vec::Zero(cfg.hidden_dim);
      l.pw2_w = Mat::Zero(cfg.bottleneck_dim, cfg.hidden_dim);
      l.pw2_b = Vec::Zero(cfg.bottleneck_dim);
    }
    w.out_w = Mat::Zero(cfg.output_dim, cfg.bottleneck_dim);
    w.out_b = Vec::Zero(cfg.output_dim);
    return w;
  }

  static TcnWeights init(const TCNConfig& cfg, uint64_t seed) {
    TcnWeights w = zeros_like(cfg);
    std::mt19937_64 rng(seed);
    auto fill = [&rng](Mat& m, int fan_in) {
      const Scalar bound = static_cast<Scalar>(std::sqrt(1.0 / fan_in));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(u(rng));
    };
    fill(w.in_w, cfg.input_dim);
    for (auto& l : w.layers) {
      fill(l.pw1_w, cfg.bottleneck_dim);
      l.norm1_gain.setOnes();
      fill(l.dw_w, cfg.kernel_size);
      l.norm2_gain.setOnes();
      fill(l.pw2_w, cfg.hidden_dim);
    }
    fill(w.out_w, cfg.bottleneck_dim);
    return w;
  }

  /// Visits every trainable tensor with a stable name (checkpoint order).
  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    fn("in.w", in_w);
    fn("in.b", in_b);
    for (size_t i = 0; i < layers.size(); ++i) {
      const std::string p = "layer" + std::to_string(i) + ".";
      auto& l = layers[i];
      fn(p + "pw1.w", l.pw1_w);
      fn(p + "pw1.b", l.pw1_b);
      fn(p + "norm1.gain", l.norm1_gain);
      fn(p + "norm1.bias", l.norm1_bias);
      fn(p + "dw.w", l.dw_w);
      fn(p + "dw.b", l.dw_b);
      fn(p + "norm2.gain", l.norm2_gain);
      fn(p + "norm2.bias", l.norm2_bias);
      fn(p + "pw2.w", l.pw2_w);
      fn(p + "pw2.b", l.pw2_b);
    }
    fn("out.w", out_w);
    fn("out.b", out_b);
  }

  template <typename Fn>
  void for_each_tensor(Fn&& fn) const {
    const_cast<TcnWeights*>(this)->for_each_tensor(
        [&fn](const std::string& name, auto& t) { fn(name, std::as_const(t)); });
  }

  int64_t param_count() const {
    int64_t n = 0;
    for_each_tensor([&n](const std::string&, const auto& t) { n += t.size(); });
    return n;
  }
};

inline int64_t param_count(const TCNConfig& cfg) {
  return TcnWeights<float>::zeros_like(cfg).param_count();
}

/// Model output: class posteriors (columns sum to 1) or a raw regression curve.
struct PredictionSequence {
  MatrixF values;  // C x T
  HeadKind head = HeadKind::class_posterior;
};

namespace tcn_detail {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Per-channel over-time normalization. Returns y; fills normalized values
/// and inverse stddev for the backward pass.
template <typename Scalar>
Mat<Scalar> channel_norm(const Mat<Scalar>& z, const Vec<Scalar>& gain, const Vec<Scalar>& bias,
                         Mat<Scalar>& normalized, Vec<Scalar>& inv_std) {
  const Eigen::Index t_len = z.cols();
  normalized.resize(z.rows(), t_len);
  inv_std.resize(z.rows());
  Mat<Scalar> y(z.rows(), t_len);
  for (Eigen::Index c = 0; c < z.rows(); ++c) {
    const Scalar mu = z.row(c).mean();
    const Scalar var = (z.row(c).array() - mu).square().mean();
    const Scalar is = Scalar(1) / std::sqrt(var + static_cast<Scalar>(kNormEps));
    inv_std[c] = is;
    normalized.row(c) = (z.row(c).array() - mu) * is;
    y.row(c) = normalized.row(c).array() * gain[c] + bias[c];
  }
  return y;
}

template <typename Scalar>
void channel_norm_backward(const Mat<Scalar>& dy, const Mat<Scalar>& normalized,
                           const Vec<Scalar>& inv_std, const Vec<Scalar>& gain,
                           Mat<Scalar>& dz, Vec<Scalar>& dgain, Vec<Scalar>& dbias) {
  const Eigen::Index t_len = dy.cols();
  dz.resize(dy.rows(), t_len);
  for (Eigen::Index c = 0; c < dy.rows(); ++c) {
    dbias[c] += dy.row(c).sum();
    dgain[c] += dy.row(c).dot(normalized.row(c));
    const auto dn = (dy.row(c).array() * gain[c]).eval();
    const Scalar mean_dn = dn.mean();
    const Scalar mean_dn_nh = (dn * normalized.row(c).array()).mean();
    dz.row(c) =
        ((dn - mean_dn - normalized.row(c).array() * mean_dn_nh) * inv_std[c]).matrix();
  }
}

/// Depthwise dilated convolution with same-padding (zeros outside).
template <typename Scalar>
Mat<Scalar> depthwise_conv(const Mat<Scalar>& x, const Mat<Scalar>& w, const Vec<Scalar>& b,
                           int dilation) {
  const Eigen::Index t_len = x.cols();
  const int kernel = static_cast<int>(w.cols());
  const int center = (kernel - 1) / 2;
  Mat<Scalar> y(x.rows(), t_len);
  y.colwise() = b;
  for (int k = 0; k < kernel; ++k) {
    const Eigen::Index shift = static_cast<Eigen::Index>(k - center) * dilation;
    const Eigen::Index lo = std::max<Eigen::Index>(0, -shift);
    const Eigen::Index hi = std::min<Eigen::Index>(t_len, t_len - shift);
    if (lo >= hi) continue;
    y.middleCols(lo, hi - lo).array() +=
        x.middleCols(lo + shift, hi - lo).array().colwise() * w.col(k).array();
  }
  return y;
}

template <typename Scalar>
void depthwise_conv_backward(const Mat<Scalar>& dy, const Mat<Scalar>& x, const Mat<Scalar>& w,
                             int dilation, Mat<Scalar>& dx, Mat<Scalar>& dw, Vec<Scalar>& db) {
  const Eigen::Index t_len = x.cols();
  const int kernel = static_cast<int>(w.cols());
  const int center = (kernel - 1) / 2;
  dx.setZero(x.rows(), t_len);
  db += dy.rowwise().sum();
  for (int k = 0; k < kernel; ++k) {
    const Eigen::Index shift = static_cast<Eigen::Index>(k - center) * dilation;
    const Eigen::Index lo = std::max<Eigen::Index>(0, -shift);
    const Eigen::Index hi = std::min<Eigen::Index>(t_len, t_len - shift);
    if (lo >= hi) continue;
    dx.middleCols(lo + shift, hi - lo).array() +=
        dy.middleCols(lo, hi - lo).array().colwise() * w.col(k).array();
    dw.col(k).array() += (dy.middleCols(lo, hi - lo).array() *
                          x.middleCols(lo + shift, hi - lo).array())
                             .rowwise()
                             .sum();
  }
}

template <typename Scalar>
struct LayerCache {
  Mat<Scalar> input;          // B x T
  Mat<Scalar> norm1_nh, norm2_nh;
  Vec<Scalar> norm1_is, norm2_is;
  Mat<Scalar> act1, act2;     // post-ReLU activations (H x T)
};

template <typename Scalar>
struct ForwardCache {
  Mat<Scalar> input;                  // F x T
  std::vector<Mat<Scalar>> block_in;  // residual stream before each block
  std::vector<LayerCache<Scalar>> layers;
  Mat<Scalar> trunk_out;              // B x T, after last residual add
  Mat<Scalar> posteriors;             // C x T (softmax output when classifying)
};

}  // namespace tcn_detail

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> tcn_forward(
    const TcnWeights<Scalar>& w, const TCNConfig& cfg,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& features,
    tcn_detail::ForwardCache<Scalar>* cache = nullptr) {
  using Mat = tcn_detail::Mat<Scalar>;
  cfg.validate();
  if (features.rows() != cfg.input_dim)
    throw std::invalid_argument("tcn_forward: feature dim mismatch");
  const Eigen::Index t_len = features.cols();

  if (cache) {
    cache->input = features;
    cache->block_in.clear();
    cache->layers.assign(w.layers.size(), {});
  }

  Mat x = (w.in_w * features).colwise() + w.in_b;  // B x T
  tcn_detail::Mat<Scalar> scratch_nh;
  tcn_detail::Vec<Scalar> scratch_is;
  size_t layer_idx = 0;
  for (int b = 0; b < cfg.num_blocks; ++b) {
    if (cache) cache->block_in.push_back(x);
    Mat h = x;
    for (int l = 0; l < cfg.layers_per_block; ++l, ++layer_idx) {
      const auto& lw = w.layers[layer_idx];
      tcn_detail::LayerCache<Scalar>* lc = cache ? &cache->layers[layer_idx] : nullptr;
      if (lc) lc->input = h;

      Mat z1 = (lw.pw1_w * h).colwise() + lw.pw1_b;
      Mat n1 = tcn_detail::channel_norm<Scalar>(z1, lw.norm1_gain, lw.norm1_bias,
                                                lc ? lc->norm1_nh : scratch_nh,
                                                lc ? lc->norm1_is : scratch_is);
      Mat a1 = n1.cwiseMax(Scalar(0));
      if (lc) lc->act1 = a1;

      Mat zd = tcn_detail::depthwise_conv<Scalar>(a1, lw.dw_w, lw.dw_b, cfg.dilation(l));
      Mat n2 = tcn_detail::channel_norm<Scalar>(zd, lw.norm2_gain, lw.norm2_bias,
                                                lc ? lc->norm2_nh : scratch_nh,
                                                lc ? lc->norm2_is : scratch_is);
      Mat a2 = n2.cwiseMax(Scalar(0));
      if (lc) lc->act2 = a2;

      h = (lw.pw2_w * a2).colwise() + lw.pw2_b;
    }
    x += h;  // residual connection after each block
  }
  if (cache) cache->trunk_out = x;

  Mat logits = (w.out_w * x).colwise() + w.out_b;  // C x T
  if (cfg.head == HeadKind::class_posterior) {
    for (Eigen::Index t = 0; t < t_len; ++t) {
      const Scalar m = logits.col(t).maxCoeff();
      logits.col(t) = (logits.col(t).array() - m).exp();
      logits.col(t) /= logits.col(t).sum();
    }
    if (cache) cache->posteriors = logits;
  }
  return logits;
}

inline PredictionSequence forward(const TcnWeights<float>& weights, const TCNConfig& cfg,
                                  const FeatureSequence& features) {
  PredictionSequence p;
  p.head = cfg.head;
  p.values = tcn_forward<float>(weights, cfg, features.values);
  return p;
}

/// Mean cross-entropy of the true class (classification; targets are the
/// binary positive-class indicator) or mean squared error (regression).
template <typename Scalar>
Scalar tcn_loss(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& predictions,
                const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& targets, HeadKind head) {
  const Eigen::Index t_len = predictions.cols();
  if (targets.size() != t_len) throw std::invalid_argument("tcn_loss: length mismatch");
  Scalar loss = 0;
  if (head == HeadKind::class_posterior) {
    for (Eigen::Index t = 0; t < t_len; ++t) {
      const int cls = targets[t] >= Scalar(0.5) ? 1 : 0;
      loss -= std::log(std::max(predictions(cls, t), static_cast<Scalar>(1e-12)));
    }
  } else {
    for (Eigen::Index t = 0; t < t_len; ++t) {
      const Scalar d = predictions(0, t) - targets[t];
      loss += d * d;
    }
  }
  return loss / static_cast<Scalar>(t_len);
}

/// Exact reverse-mode gradients of tcn_loss wrt every weight tensor.
/// Gradients are ACCUMULATED into `grads` (zero it for a fresh batch).
/// Returns the loss.
template <typename Scalar>
Scalar tcn_backward(const TcnWeights<Scalar>& w, const TCNConfig& cfg,
                    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& features,
                    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& targets,
                    TcnWeights<Scalar>& grads) {
  using Mat = tcn_detail::Mat<Scalar>;
  tcn_detail::ForwardCache<Scalar> cache;
  Mat out = tcn_forward<Scalar>(w, cfg, features, &cache);
  const Scalar loss = tcn_loss<Scalar>(out, targets, cfg.head);
  const Eigen::Index t_len = features.cols();
  const Scalar inv_t = Scalar(1) / static_cast<Scalar>(t_len);

  // d loss / d logits (softmax+CE fused) or d loss / d output (MSE).
  Mat dlogits(out.rows(), t_len);
  if (cfg.head == HeadKind::class_posterior) {
    dlogits = cache.posteriors * inv_t;
    for (Eigen::Index t = 0; t < t_len; ++t) {
      const int cls = targets[t] >= Scalar(0.5) ? 1 : 0;
      dlogits(cls, t) -= inv_t;
    }
  } else {
    for (Eigen::Index t = 0; t < t_len; ++t)
      dlogits(0, t) = Scalar(2) * (out(0, t) - targets[t]) * inv_t;
  }

  grads.out_w.noalias() += dlogits * cache.trunk_out.transpose();
  grads.out_b += dlogits.rowwise().sum();
  Mat dx = w.out_w.transpose() * dlogits;  // gradient on the residual stream

  Mat dh, dz1, dzd, da1;
  for (int b = cfg.num_blocks - 1; b >= 0; --b) {
    // dx covers both the residual passthrough and the block-output path.
    dh = dx;
    for (int l = cfg.layers_per_block - 1; l >= 0; --l) {
      const size_t li = static_cast<size_t>(b) * cfg.layers_per_block + static_cast<size_t>(l);
      const auto& lw = w.layers[li];
      auto& lg = grads.layers[li];
      const auto& lc = cache.layers[li];

      // pw2
      lg.pw2_w.noalias() += dh * lc.act2.transpose();
      lg.pw2_b += dh.rowwise().sum();
      Mat da2 = lw.pw2_w.transpose() * dh;
      // relu + norm2
      da2 = (lc.act2.array() > Scalar(0)).select(da2, Scalar(0));
      tcn_detail::channel_norm_backward<Scalar>(da2, lc.norm2_nh, lc.norm2_is, lw.norm2_gain,
                                                dzd, lg.norm2_gain, lg.norm2_bias);
      // depthwise conv
      Mat dw_dx;
      tcn_detail::depthwise_conv_backward<Scalar>(dzd, lc.act1, lw.dw_w, cfg.dilation(l),
                                                  dw_dx, lg.dw_w, lg.dw_b);
      da1 = (lc.act1.array() > Scalar(0)).select(dw_dx, Scalar(0));
      // norm1 + pw1
      tcn_detail::channel_norm_backward<Scalar>(da1, lc.norm1_nh, lc.norm1_is, lw.norm1_gain,
                                                dz1, lg.norm1_gain, lg.norm1_bias);
      lg.pw1_w.noalias() += dz1 * lc.input.transpose();
      lg.pw1_b += dz1.rowwise().sum();
      dh = lw.pw1_w.transpose() * dz1;
    }
    dx += dh;  // into the previous residual stream
  }

  grads.in_w.noalias() += dx * cache.input.transpose();
  grads.in_b += dx.rowwise().sum();
  return loss;
}

/// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8, lr 1e-3).
template <typename Scalar>
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t step_count = 0;
  TcnWeights<Scalar> m, v;
  bool initialized = false;

  void step(TcnWeights<Scalar>& weights, const TcnWeights<Scalar>& grads, const TCNConfig& cfg) {
    if (!initialized) {
      m = TcnWeights<Scalar>::zeros_like(cfg);
      v = TcnWeights<Scalar>::zeros_like(cfg);
      initialized = true;
    }
    ++step_count;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));

    using Flat = std::pair<Scalar*, Eigen::Index>;
    std::vector<Flat> ws, gs, ms, vs;
    auto collect = [](TcnWeights<Scalar>& t, std::vector<Flat>& out) {
      t.for_each_tensor(
          [&out](const std::string&, auto& m) { out.emplace_back(m.data(), m.size()); });
    };
    collect(weights, ws);
    collect(const_cast<TcnWeights<Scalar>&>(grads), gs);
    collect(m, ms);
    collect(v, vs);

    using Flats = Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>>;
    for (size_t i = 0; i < ws.size(); ++i) {
      Flats g(gs[i].first, gs[i].second);
      if (!g.isFinite().all()) throw std::runtime_error("adam_step: non-finite gradient");
      Flats mm(ms[i].first, ms[i].second);
      Flats vv(vs[i].first, vs[i].second);
      Flats w(ws[i].first, ws[i].second);
      mm = mm * static_cast<Scalar>(beta1) + g * static_cast<Scalar>(1.0 - beta1);
      vv = vv * static_cast<Scalar>(beta2) + g.square() * static_cast<Scalar>(1.0 - beta2);
      w -= static_cast<Scalar>(lr) * (mm / static_cast<Scalar>(bc1)) /
           ((vv / static_cast<Scalar>(bc2)).sqrt() + static_cast<Scalar>(eps));
    }
  }
};

}  // namespace chseg
