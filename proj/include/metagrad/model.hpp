#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "metagrad/rng.hpp"
#include "metagrad/tensor.hpp"

namespace metagrad {

enum class Activation : std::uint8_t { kIdentity, kTanh, kRelu };

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::kIdentity;
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  throw ValueError("unknown activation '" + s + "' (expected identity|tanh|relu)");
}

struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation act = Activation::kIdentity;
  std::vector<double> weights;  // row-major, in x out
  std::vector<double> bias;     // out
};

// Parameters of a layered fully-connected network. Layers 1..L-1 form the
// "body", layer L the "head". Also reused as a gradient carrier, since
// gradients share the layer structure.
struct LayeredParams {
  std::vector<Layer> layers;

  std::size_t layer_count() const { return layers.size(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers) n += l.weights.size() + l.bias.size();
    return n;
  }
};

struct ModelConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t output_dim = 0;
  Activation hidden_activation = Activation::kTanh;
  std::uint64_t seed = 0;
};

// Uniform [-s, s] with s = sqrt(6 / (fan_in + fan_out)); zero biases.
// Draw order (layer-major, row-major weights) is part of the format.
inline LayeredParams init_params(const ModelConfig& cfg) {
  if (cfg.input_dim == 0 || cfg.output_dim == 0)
    throw ValueError("init_params: input_dim and output_dim must be positive");
  for (std::size_t h : cfg.hidden)
    if (h == 0) throw ValueError("init_params: hidden widths must be positive");

  std::vector<std::size_t> dims;
  dims.push_back(cfg.input_dim);
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(cfg.output_dim);

  Rng rng(cfg.seed);
  LayeredParams p;
  p.layers.resize(dims.size() - 1);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer& layer = p.layers[l];
    layer.in = dims[l];
    layer.out = dims[l + 1];
    layer.act = (l + 2 == dims.size()) ? Activation::kIdentity : cfg.hidden_activation;
    const double s = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    layer.weights.resize(layer.in * layer.out);
    for (double& w : layer.weights) w = rng.uniform(-s, s);
    layer.bias.assign(layer.out, 0.0);
  }
  return p;
}

// theta_(i:j), 1-based inclusive layer slice.
inline LayeredParams slice_layers(const LayeredParams& p, std::size_t i, std::size_t j) {
  if (i < 1 || j > p.layer_count() || i > j)
    throw ValueError("slice_layers: bad range [" + std::to_string(i) + ", " +
                     std::to_string(j) + "] for " + std::to_string(p.layer_count()) +
                     " layers");
  LayeredParams out;
  out.layers.assign(p.layers.begin() + static_cast<std::ptrdiff_t>(i - 1),
                    p.layers.begin() + static_cast<std::ptrdiff_t>(j));
  return out;
}

inline LayeredParams concat_layers(const LayeredParams& a, const LayeredParams& b) {
  LayeredParams out = a;
  out.layers.insert(out.layers.end(), b.layers.begin(), b.layers.end());
  return out;
}

// Re-initializes the head for a new output width; body layers are copied
// verbatim (bit-identical).
inline LayeredParams replace_head(const LayeredParams& p, std::size_t new_output_dim,
                                  std::uint64_t seed) {
  if (p.layers.empty()) throw ValueError("replace_head: no layers");
  if (new_output_dim == 0) throw ValueError("replace_head: output width must be positive");
  LayeredParams out = p;
  Layer& head = out.layers.back();
  head.out = new_output_dim;
  head.act = Activation::kIdentity;
  const double s = std::sqrt(6.0 / static_cast<double>(head.in + new_output_dim));
  Rng rng(seed);
  head.weights.resize(head.in * new_output_dim);
  for (double& w : head.weights) w = rng.uniform(-s, s);
  head.bias.assign(new_output_dim, 0.0);
  return out;
}

enum class FreezeMode { kBodyFrozen, kAllTrainable };

// Per-layer trainability flags; true = the layer receives updates.
using LayerMask = std::vector<bool>;

inline LayerMask freeze_mask(const LayeredParams& p, FreezeMode mode) {
  if (p.layers.empty()) throw ValueError("freeze_mask: no layers");
  LayerMask mask(p.layer_count(), true);
  if (mode == FreezeMode::kBodyFrozen)
    for (std::size_t l = 0; l + 1 < mask.size(); ++l) mask[l] = false;
  return mask;
}

namespace detail {

inline void check_same_structure(const LayeredParams& a, const LayeredParams& b,
                                 const char* what) {
  if (a.layer_count() != b.layer_count())
    throw ShapeError(std::string(what) + ": layer counts differ");
  for (std::size_t l = 0; l < a.layer_count(); ++l) {
    if (a.layers[l].in != b.layers[l].in || a.layers[l].out != b.layers[l].out)
      throw ShapeError(std::string(what) + ": layer " + std::to_string(l) +
                       " dimensions differ");
  }
}

}  // namespace detail

// One plain SGD step; layers with mask[l] == false are copied bit-identically.
inline LayeredParams sgd_step(const LayeredParams& params, const LayeredParams& grads,
                              double lr, const LayerMask& mask) {
  detail::check_same_structure(params, grads, "sgd_step");
  if (mask.size() != params.layer_count())
    throw ShapeError("sgd_step: mask length " + std::to_string(mask.size()) +
                     " != layer count " + std::to_string(params.layer_count()));
  LayeredParams out = params;
  for (std::size_t l = 0; l < out.layer_count(); ++l) {
    if (!mask[l]) continue;
    Layer& layer = out.layers[l];
    const Layer& g = grads.layers[l];
    for (std::size_t i = 0; i < layer.weights.size(); ++i)
      layer.weights[i] = layer.weights[i] - lr * g.weights[i];
    for (std::size_t i = 0; i < layer.bias.size(); ++i)
      layer.bias[i] = layer.bias[i] - lr * g.bias[i];
  }
  return out;
}

// ---- parameter-space helpers (the meta-algorithms are written against
// these plus sgd_step; see metaopt.hpp for the scalar counterparts) ----

inline LayeredParams param_zero_like(const LayeredParams& p) {
  LayeredParams out = p;
  for (Layer& l : out.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  return out;
}

// acc += scale * x
inline void param_accumulate(LayeredParams& acc, const LayeredParams& x, double scale) {
  detail::check_same_structure(acc, x, "param_accumulate");
  for (std::size_t l = 0; l < acc.layer_count(); ++l) {
    for (std::size_t i = 0; i < acc.layers[l].weights.size(); ++i)
      acc.layers[l].weights[i] += scale * x.layers[l].weights[i];
    for (std::size_t i = 0; i < acc.layers[l].bias.size(); ++i)
      acc.layers[l].bias[i] += scale * x.layers[l].bias[i];
  }
}

inline LayeredParams param_difference(const LayeredParams& a, const LayeredParams& b) {
  detail::check_same_structure(a, b, "param_difference");
  LayeredParams out = a;
  for (std::size_t l = 0; l < out.layer_count(); ++l) {
    for (std::size_t i = 0; i < out.layers[l].weights.size(); ++i)
      out.layers[l].weights[i] -= b.layers[l].weights[i];
    for (std::size_t i = 0; i < out.layers[l].bias.size(); ++i)
      out.layers[l].bias[i] -= b.layers[l].bias[i];
  }
  return out;
}

// a + c * b
inline LayeredParams param_add_scaled(const LayeredParams& a, double c,
                                      const LayeredParams& b) {
  detail::check_same_structure(a, b, "param_add_scaled");
  LayeredParams out = a;
  for (std::size_t l = 0; l < out.layer_count(); ++l) {
    for (std::size_t i = 0; i < out.layers[l].weights.size(); ++i)
      out.layers[l].weights[i] += c * b.layers[l].weights[i];
    for (std::size_t i = 0; i < out.layers[l].bias.size(); ++i)
      out.layers[l].bias[i] += c * b.layers[l].bias[i];
  }
  return out;
}

inline double param_norm(const LayeredParams& p) {
  double acc = 0.0;
  for (const Layer& l : p.layers) {
    for (double v : l.weights) acc += v * v;
    for (double v : l.bias) acc += v * v;
  }
  return std::sqrt(acc);
}

inline double param_max_abs_difference(const LayeredParams& a, const LayeredParams& b) {
  detail::check_same_structure(a, b, "param_max_abs_difference");
  double worst = 0.0;
  for (std::size_t l = 0; l < a.layer_count(); ++l) {
    for (std::size_t i = 0; i < a.layers[l].weights.size(); ++i)
      worst = std::max(worst, std::abs(a.layers[l].weights[i] - b.layers[l].weights[i]));
    for (std::size_t i = 0; i < a.layers[l].bias.size(); ++i)
      worst = std::max(worst, std::abs(a.layers[l].bias[i] - b.layers[l].bias[i]));
  }
  return worst;
}

// Exact bit comparison (distinguishes -0.0 from 0.0, unlike operator==).
inline bool param_bits_equal(const LayeredParams& a, const LayeredParams& b) {
  if (a.layer_count() != b.layer_count()) return false;
  auto bits_equal = [](const std::vector<double>& x, const std::vector<double>& y) {
    return x.size() == y.size() &&
           (x.empty() || std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) == 0);
  };
  for (std::size_t l = 0; l < a.layer_count(); ++l) {
    if (a.layers[l].in != b.layers[l].in || a.layers[l].out != b.layers[l].out)
      return false;
    if (!bits_equal(a.layers[l].weights, b.layers[l].weights)) return false;
    if (!bits_equal(a.layers[l].bias, b.layers[l].bias)) return false;
  }
  return true;
}

inline bool params_finite(const LayeredParams& p) {
  for (const Layer& l : p.layers) {
    for (double v : l.weights)
      if (!std::isfinite(v)) return false;
    for (double v : l.bias)
      if (!std::isfinite(v)) return false;
  }
  return true;
}

// Flat indexing (layer-major, weights then bias within a layer); used by the
// finite-difference checker.
inline double* param_at(LayeredParams& p, std::size_t flat_index) {
  std::size_t i = flat_index;
  for (Layer& l : p.layers) {
    if (i < l.weights.size()) return &l.weights[i];
    i -= l.weights.size();
    if (i < l.bias.size()) return &l.bias[i];
    i -= l.bias.size();
  }
  throw ValueError("param_at: index " + std::to_string(flat_index) + " out of range");
}

// ---- graph construction over LayeredParams ----

// Leaf tensors created from parameters; after backward() their grads hold
// d(loss)/d(parameter).
struct ParamLeaves {
  struct Entry {
    Tensor w, b;
    Activation act = Activation::kIdentity;
    std::size_t in = 0, out = 0;
  };
  std::vector<Entry> layers;
};

inline ParamLeaves make_leaves(const LayeredParams& p) {
  ParamLeaves lv;
  lv.layers.reserve(p.layer_count());
  for (const Layer& l : p.layers) {
    ParamLeaves::Entry e;
    e.w = Tensor::leaf({l.in, l.out}, l.weights);
    e.b = Tensor::leaf({l.out}, l.bias);
    e.act = l.act;
    e.in = l.in;
    e.out = l.out;
    lv.layers.push_back(std::move(e));
  }
  return lv;
}

// Full forward pass; returns logits (m x output_dim) connected to the leaves.
inline Tensor forward(const ParamLeaves& leaves, const Tensor& batch) {
  if (leaves.layers.empty()) throw ValueError("forward: no layers");
  if (batch.rank() != 2)
    throw ShapeError("forward expects a rank-2 batch, got " + shape_string(batch.shape()));
  if (batch.shape()[1] != leaves.layers.front().in)
    throw ShapeError("forward: batch width " + std::to_string(batch.shape()[1]) +
                     " != input dim " + std::to_string(leaves.layers.front().in));
  Tensor h = batch;
  for (const auto& e : leaves.layers) {
    h = add_bias(matmul(h, e.w), e.b);
    switch (e.act) {
      case Activation::kIdentity: break;
      case Activation::kTanh: h = tanh(h); break;
      case Activation::kRelu: h = relu(h); break;
    }
  }
  return h;
}

// Convenience value-only forward (same arithmetic as the graph path).
inline std::vector<double> forward(const LayeredParams& p,
                                   const std::vector<double>& inputs, std::size_t rows) {
  if (rows == 0) throw ValueError("forward: empty batch");
  if (inputs.size() % rows != 0)
    throw ShapeError("forward: input size not divisible by row count");
  ParamLeaves lv = make_leaves(p);
  Tensor x = Tensor::leaf({rows, inputs.size() / rows}, inputs);
  return forward(lv, x).values();
}

inline void extract_grads(const ParamLeaves& leaves, LayeredParams& out) {
  if (leaves.layers.size() != out.layer_count())
    throw ShapeError("extract_grads: layer count mismatch");
  for (std::size_t l = 0; l < out.layer_count(); ++l) {
    const auto& wg = leaves.layers[l].w.grad();
    const auto& bg = leaves.layers[l].b.grad();
    if (wg.empty() || bg.empty())
      throw ValueError("extract_grads before backward()");
    out.layers[l].weights = wg;
    out.layers[l].bias = bg;
  }
}

// ---- batched evaluation ----

struct LabeledBatch {
  std::size_t dim = 0;
  std::vector<double> inputs;  // row-major, size() x dim
  std::vector<int> labels;
  std::size_t size() const { return labels.size(); }
};

struct RegressionBatch {
  std::size_t in_dim = 1;
  std::size_t out_dim = 1;
  std::vector<double> inputs;   // size() x in_dim
  std::vector<double> targets;  // size() x out_dim
  std::size_t size() const { return in_dim == 0 ? 0 : inputs.size() / in_dim; }
};

struct BatchEval {
  double loss = std::numeric_limits<double>::quiet_NaN();
  double accuracy = std::numeric_limits<double>::quiet_NaN();  // NaN for regression
  LayeredParams grads;  // empty unless requested
};

// Argmax per row; ties resolve to the lowest index.
inline double accuracy_of_logits(std::span<const double> logits, std::size_t classes,
                                 std::span<const int> labels) {
  if (classes == 0 || labels.empty()) throw ValueError("accuracy_of_logits: empty input");
  if (logits.size() != classes * labels.size())
    throw ShapeError("accuracy_of_logits: size mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < classes; ++j)
      if (logits[i * classes + j] > logits[i * classes + best]) best = j;
    if (static_cast<int>(best) == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

inline Tensor labels_tensor(std::span<const int> labels) {
  std::vector<double> v(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) v[i] = static_cast<double>(labels[i]);
  return Tensor::leaf({labels.size()}, std::move(v));
}

inline BatchEval eval_classification(const LayeredParams& p, const LabeledBatch& batch,
                                     bool want_grads) {
  if (batch.size() == 0) throw ValueError("eval_classification: empty batch");
  ParamLeaves lv = make_leaves(p);
  Tensor x = Tensor::leaf({batch.size(), batch.dim}, batch.inputs);
  Tensor logits = forward(lv, x);
  Tensor loss = softmax_cross_entropy(logits, labels_tensor(batch.labels));
  BatchEval out;
  out.loss = loss.value();
  out.accuracy = accuracy_of_logits(logits.values(), p.layers.back().out, batch.labels);
  if (want_grads) {
    backward(loss);
    out.grads = param_zero_like(p);
    extract_grads(lv, out.grads);
  }
  return out;
}

inline BatchEval eval_regression(const LayeredParams& p, const RegressionBatch& batch,
                                 bool want_grads) {
  if (batch.size() == 0) throw ValueError("eval_regression: empty batch");
  ParamLeaves lv = make_leaves(p);
  Tensor x = Tensor::leaf({batch.size(), batch.in_dim}, batch.inputs);
  Tensor pred = forward(lv, x);
  Tensor target = Tensor::leaf({batch.size(), batch.out_dim}, batch.targets);
  Tensor loss = mse_loss(pred, target);
  BatchEval out;
  out.loss = loss.value();
  if (want_grads) {
    backward(loss);
    out.grads = param_zero_like(p);
    extract_grads(lv, out.grads);
  }
  return out;
}

}  // namespace metagrad
