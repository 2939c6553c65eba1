#pragma once

#include <cmath>
#include <vector>

#include "samo/numerics.hpp"
#include "samo/rng.hpp"

namespace samo {

enum class Activation { kRelu, kTanh };

/// Fully connected embedding network. Hidden layers apply the activation; the
/// final layer is affine so raw embeddings stay available for averaging.
struct EncoderParams {
  std::vector<Mat> weights;  // W_l is out x in
  std::vector<Vec> biases;
  Activation activation = Activation::kRelu;

  Eigen::Index input_dim() const { return weights.front().cols(); }
  Eigen::Index output_dim() const { return weights.back().rows(); }
  std::size_t layer_count() const { return weights.size(); }
  std::vector<Eigen::Index> dims() const;
};

/// Per-layer pre-activations and post-activation inputs from one forward call.
struct ForwardCache {
  Vec input;
  std::vector<Vec> preacts;
  std::vector<Vec> layer_inputs;  // input to layer l (= activation of l-1)
};

struct EncoderGrads {
  std::vector<Mat> dW;
  std::vector<Vec> db;
};

/// Glorot-uniform weights (U(-L, L), L = sqrt(6/(fan_in+fan_out))), zero
/// biases. dims lists every layer width, [input, hidden..., output].
EncoderParams init_params(const std::vector<Eigen::Index>& dims, Activation activation, Rng& rng);

/// Embedding of one feature vector. Pass a cache to enable backward().
Vec forward(const EncoderParams& params, const Vec& features, ForwardCache* cache = nullptr);

/// Exact reverse-mode gradients of embedding . grad_embedding w.r.t. all W, b.
EncoderGrads backward(const EncoderParams& params, const ForwardCache& cache,
                      const Vec& grad_embedding);

EncoderGrads zero_grads(const EncoderParams& params);
void accumulate(EncoderGrads& into, const EncoderGrads& term);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long t = 0;
  std::vector<Mat> mW, vW;
  std::vector<Vec> mb, vb;
};

AdamState init_adam(const EncoderParams& params);

/// Bias-corrected Adam update; increments state.t once per call.
void adam_step(EncoderParams& params, const EncoderGrads& grads, AdamState& state, double lr);

namespace detail {

/// Shared Adam tensor update, also used for the OC center and softmax head.
template <typename Tensor>
void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, long t, double lr,
                 double beta1, double beta2, double eps) {
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  param -= (lr / bc1) * (m.array() / ((v.array() / bc2).sqrt() + eps)).matrix();
}

}  // namespace detail

struct LrSchedule {
  double lr0 = 1e-4;
  double lr_min = 0.0;
  int total_epochs = 100;
};

/// lr_min + (lr0 - lr_min) * (1 + cos(pi * e / T)) / 2 for 0-based epoch e.
double cosine_lr(int epoch, const LrSchedule& schedule);

}  // namespace samo
