#include "samo/encoder.hpp"

#include <cmath>
#include <numbers>

namespace samo {

std::vector<Eigen::Index> EncoderParams::dims() const {
  std::vector<Eigen::Index> d;
  d.push_back(input_dim());
  for (const auto& w : weights) d.push_back(w.rows());
  return d;
}

EncoderParams init_params(const std::vector<Eigen::Index>& dims, Activation activation,
                          Rng& rng) {
  if (dims.size() < 2) throw ConfigError("init_params: need at least [input, output] dims");
  for (auto d : dims)
    if (d < 1) throw ConfigError("init_params: all layer dims must be >= 1");

  EncoderParams params;
  params.activation = activation;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const Eigen::Index fan_in = dims[l];
    const Eigen::Index fan_out = dims[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Mat w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < fan_out; ++r)
      for (Eigen::Index c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-limit, limit);
    params.weights.push_back(std::move(w));
    params.biases.push_back(Vec::Zero(fan_out));
  }
  return params;
}

namespace {

Vec apply_activation(const Vec& z, Activation activation) {
  switch (activation) {
    case Activation::kRelu:
      return z.cwiseMax(0.0);
    case Activation::kTanh:
      return z.array().tanh().matrix();
  }
  return z;
}

Vec activation_grad(const Vec& preact, Activation activation) {
  switch (activation) {
    case Activation::kRelu:
      return (preact.array() > 0.0).cast<double>().matrix();
    case Activation::kTanh: {
      const Vec t = preact.array().tanh().matrix();
      return (1.0 - t.array().square()).matrix();
    }
  }
  return Vec::Ones(preact.size());
}

}  // namespace

Vec forward(const EncoderParams& params, const Vec& features, ForwardCache* cache) {
  if (features.size() != params.input_dim())
    throw DimensionMismatch("forward: feature dim " + std::to_string(features.size()) +
                            " does not match encoder input dim " +
                            std::to_string(params.input_dim()));
  if (cache) {
    cache->input = features;
    cache->preacts.clear();
    cache->layer_inputs.clear();
  }

  Vec current = features;
  const std::size_t last = params.layer_count() - 1;
  for (std::size_t l = 0; l <= last; ++l) {
    if (cache) cache->layer_inputs.push_back(current);
    Vec z = params.weights[l] * current + params.biases[l];
    if (cache) cache->preacts.push_back(z);
    current = (l == last) ? std::move(z) : apply_activation(z, params.activation);
  }
  return current;
}

EncoderGrads backward(const EncoderParams& params, const ForwardCache& cache,
                      const Vec& grad_embedding) {
  if (cache.preacts.size() != params.layer_count())
    throw DimensionMismatch("backward: cache does not match encoder layer count");
  if (grad_embedding.size() != params.output_dim())
    throw DimensionMismatch("backward: grad dim does not match embedding dim");

  EncoderGrads grads = zero_grads(params);
  Vec delta = grad_embedding;  // dL/dz for the current layer (output layer is affine)
  for (std::size_t l = params.layer_count(); l-- > 0;) {
    grads.dW[l] = delta * cache.layer_inputs[l].transpose();
    grads.db[l] = delta;
    if (l > 0) {
      Vec upstream = params.weights[l].transpose() * delta;
      delta = upstream.cwiseProduct(activation_grad(cache.preacts[l - 1], params.activation));
    }
  }
  return grads;
}

EncoderGrads zero_grads(const EncoderParams& params) {
  EncoderGrads grads;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    grads.dW.push_back(Mat::Zero(params.weights[l].rows(), params.weights[l].cols()));
    grads.db.push_back(Vec::Zero(params.biases[l].size()));
  }
  return grads;
}

void accumulate(EncoderGrads& into, const EncoderGrads& term) {
  for (std::size_t l = 0; l < into.dW.size(); ++l) {
    into.dW[l] += term.dW[l];
    into.db[l] += term.db[l];
  }
}

AdamState init_adam(const EncoderParams& params) {
  AdamState state;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    state.mW.push_back(Mat::Zero(params.weights[l].rows(), params.weights[l].cols()));
    state.vW.push_back(Mat::Zero(params.weights[l].rows(), params.weights[l].cols()));
    state.mb.push_back(Vec::Zero(params.biases[l].size()));
    state.vb.push_back(Vec::Zero(params.biases[l].size()));
  }
  return state;
}

void adam_step(EncoderParams& params, const EncoderGrads& grads, AdamState& state, double lr) {
  if (grads.dW.size() != params.layer_count() || state.mW.size() != params.layer_count())
    throw DimensionMismatch("adam_step: grads/state do not match encoder layers");
  ++state.t;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    detail::adam_update(params.weights[l], grads.dW[l], state.mW[l], state.vW[l], state.t, lr,
                        state.beta1, state.beta2, state.eps);
    detail::adam_update(params.biases[l], grads.db[l], state.mb[l], state.vb[l], state.t, lr,
                        state.beta1, state.beta2, state.eps);
  }
}

double cosine_lr(int epoch, const LrSchedule& schedule) {
  const double frac = static_cast<double>(epoch) / static_cast<double>(schedule.total_epochs);
  return schedule.lr_min +
         (schedule.lr0 - schedule.lr_min) * (1.0 + std::cos(std::numbers::pi * frac)) / 2.0;
}

}  // namespace samo
