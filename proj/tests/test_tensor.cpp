#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "metagrad/gradcheck.hpp"
#include "metagrad/model.hpp"
#include "metagrad/tensor.hpp"

using namespace metagrad;

TEST(Primitives, matmul_zero_propagation) {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({3, 1});
  Tensor c = matmul(a, b);
  ASSERT_EQ(c.shape(), (std::vector<std::size_t>{2, 1}));
  for (double v : c.values()) EXPECT_EQ(v, 0.0);
}

TEST(Primitives, matmul_known_product) {
  Tensor a = Tensor::leaf({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::leaf({2, 2}, {5, 6, 7, 8});
  Tensor c = matmul(a, b);
  EXPECT_EQ(c.values(), (std::vector<double>{19, 22, 43, 50}));
}

TEST(Primitives, matmul_shape_mismatch_names_both_shapes) {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({4, 1});
  try {
    matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2 x 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("4 x 1"), std::string::npos) << msg;
  }
}

TEST(Primitives, relu_definition) {
  Tensor x = Tensor::leaf({3}, {-1, 0, 2});
  EXPECT_EQ(relu(x).values(), (std::vector<double>{0, 0, 2}));
}

TEST(Primitives, tanh_matches_std) {
  Tensor x = Tensor::leaf({3}, {-0.7, 0.0, 1.3});
  const Tensor y = tanh(x);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(y.values()[i], std::tanh(x.values()[i]));
}

TEST(Primitives, softmax_cross_entropy_uniform_logits) {
  Tensor logits = Tensor::leaf({1, 5}, {0, 0, 0, 0, 0});
  Tensor labels = Tensor::leaf({1}, {3});
  const Tensor loss = softmax_cross_entropy(logits, labels);
  EXPECT_NEAR(loss.value(), std::log(5.0), 1e-12);
}

TEST(Primitives, softmax_cross_entropy_label_out_of_range) {
  Tensor logits = Tensor::zeros({1, 5});
  EXPECT_THROW(softmax_cross_entropy(logits, Tensor::leaf({1}, {5})), ValueError);
  EXPECT_THROW(softmax_cross_entropy(logits, Tensor::leaf({1}, {-1})), ValueError);
  EXPECT_THROW(softmax_cross_entropy(logits, Tensor::leaf({1}, {1.5})), ValueError);
}

TEST(Primitives, mse_same_shape_required) {
  EXPECT_THROW(mse_loss(Tensor::zeros({2, 1}), Tensor::zeros({1, 2})), ShapeError);
}

TEST(Primitives, scalar_eval_requires_single_element) {
  EXPECT_THROW(scalar_eval(Tensor::zeros({2})), ShapeError);
  EXPECT_EQ(scalar_eval(Tensor::leaf({1}, {7.5})).value(), 7.5);
}

TEST(Backward, zero_loss_at_mse_minimum) {
  Tensor pred = Tensor::leaf({1}, {3});
  Tensor target = Tensor::leaf({1}, {3});
  Tensor loss = mse_loss(pred, target);
  backward(loss);
  EXPECT_EQ(pred.grad()[0], 0.0);
}

TEST(Backward, linear_map_gradient) {
  Tensor x = Tensor::leaf({1, 1}, {2});
  Tensor w = Tensor::leaf({1, 1}, {5});
  Tensor loss = scalar_eval(matmul(x, w));
  backward(loss);
  EXPECT_EQ(w.grad()[0], 2.0);
  EXPECT_EQ(x.grad()[0], 5.0);
}

TEST(Backward, non_scalar_loss_rejected) {
  Tensor x = Tensor::leaf({2}, {1, 2});
  EXPECT_THROW(backward(x), ShapeError);
}

TEST(Backward, tanh_derivative) {
  Tensor x = Tensor::leaf({1}, {0.4});
  Tensor loss = scalar_eval(tanh(x));
  backward(loss);
  const double y = std::tanh(0.4);
  EXPECT_NEAR(x.grad()[0], 1.0 - y * y, 1e-15);
}

TEST(Backward, mse_gradient_by_hand) {
  // d/dp mean((p - t)^2) = 2 (p - t) / n
  Tensor p = Tensor::leaf({2}, {1.0, 4.0});
  Tensor t = Tensor::leaf({2}, {0.0, 2.0});
  backward(mse_loss(p, t));
  EXPECT_DOUBLE_EQ(p.grad()[0], 2.0 * 1.0 / 2.0);
  EXPECT_DOUBLE_EQ(p.grad()[1], 2.0 * 2.0 / 2.0);
  EXPECT_DOUBLE_EQ(t.grad()[0], -1.0);
  EXPECT_DOUBLE_EQ(t.grad()[1], -2.0);
}

TEST(Backward, softmax_cross_entropy_gradient_by_hand) {
  // Single row, two classes, label 0: grad = (softmax - onehot) / rows.
  Tensor logits = Tensor::leaf({1, 2}, {1.0, -1.0});
  Tensor labels = Tensor::leaf({1}, {0});
  backward(softmax_cross_entropy(logits, labels));
  const double z = std::exp(1.0) + std::exp(-1.0);
  const double p0 = std::exp(1.0) / z;
  EXPECT_NEAR(logits.grad()[0], p0 - 1.0, 1e-14);
  EXPECT_NEAR(logits.grad()[1], (1.0 - p0), 1e-14);
}

TEST(Backward, matmul_shared_input_accumulates) {
  // loss = sum entries of x @ x with x = [[c]] -> c^2, d/dc = 2c.
  Tensor x = Tensor::leaf({1, 1}, {3.0});
  backward(scalar_eval(matmul(x, x)));
  EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
}

TEST(Backward, add_bias_broadcast_gradient) {
  Tensor m = Tensor::leaf({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::leaf({2}, {0.5, -0.5});
  Tensor t = Tensor::leaf({2, 2}, {0, 0, 0, 0});
  backward(mse_loss(add_bias(m, b), t));
  // d loss / d b_j = sum over rows of 2 (m + b - t) / 4
  EXPECT_NEAR(b.grad()[0], (2 * 1.5 + 2 * 3.5) / 4.0, 1e-14);
  EXPECT_NEAR(b.grad()[1], (2 * 1.5 + 2 * 3.5) / 4.0, 1e-14);
}

namespace {

// Independent finite-difference oracle used to pin reverse-mode gradients; it
// shares no code with finite_diff_check.
double loss_of_params(LayeredParams p, const LabeledBatch& batch) {
  return eval_classification(p, batch, false).loss;
}

}  // namespace

TEST(Backward, two_layer_tanh_mlp_matches_central_differences) {
  ModelConfig cfg;
  cfg.input_dim = 3;
  cfg.hidden = {4};
  cfg.output_dim = 2;
  cfg.seed = 2024;
  LayeredParams params = init_params(cfg);

  LabeledBatch batch;
  batch.dim = 3;
  Rng rng(77);
  for (int i = 0; i < 6; ++i) {
    for (int d = 0; d < 3; ++d) batch.inputs.push_back(rng.normal());
    batch.labels.push_back(static_cast<int>(rng.uniform_index(2)));
  }

  const BatchEval ev = eval_classification(params, batch, true);
  const double h = 1e-5;
  double max_rel = 0.0;
  const std::size_t n = params.parameter_count();
  for (std::size_t i = 0; i < n; ++i) {
    LayeredParams plus = params, minus = params;
    *param_at(plus, i) += h;
    *param_at(minus, i) -= h;
    const double fd = (loss_of_params(plus, batch) - loss_of_params(minus, batch)) / (2 * h);
    const double ad = *param_at(const_cast<LayeredParams&>(ev.grads), i);
    const double rel = std::abs(ad - fd) / std::max(1e-12, std::abs(ad) + std::abs(fd));
    max_rel = std::max(max_rel, rel);
  }
  EXPECT_LT(max_rel, 1e-5);
}

TEST(Backward, deterministic_given_same_inputs) {
  ModelConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden = {3};
  cfg.output_dim = 2;
  cfg.seed = 5;
  LayeredParams params = init_params(cfg);
  LabeledBatch batch;
  batch.dim = 2;
  batch.inputs = {0.3, -0.7, 1.2, 0.1};
  batch.labels = {0, 1};
  const BatchEval a = eval_classification(params, batch, true);
  const BatchEval b = eval_classification(params, batch, true);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_TRUE(param_bits_equal(a.grads, b.grads));
}

TEST(GradCheck, quadratic_is_exact_up_to_rounding) {
  // loss = mean(theta^2) over every parameter, via mse against zero targets.
  ModelConfig cfg;
  cfg.input_dim = 1;
  cfg.hidden = {};
  cfg.output_dim = 1;
  cfg.seed = 3;
  LayeredParams params = init_params(cfg);
  params.layers[0].weights[0] = 1.0;
  params.layers[0].bias[0] = 1.0;

  auto loss_fn = [](const ParamLeaves& leaves) {
    // theta maps through x=1 input: pred = w + b; compare against 0.
    Tensor x = Tensor::leaf({1, 1}, {1.0});
    Tensor target = Tensor::leaf({1, 1}, {0.0});
    return mse_loss(forward(leaves, x), target);
  };
  const GradReport rep = finite_diff_check(params, loss_fn, 1e-5);
  EXPECT_LT(rep.max_relative_error, 1e-9);
  EXPECT_EQ(rep.checked, 2u);
}

TEST(GradCheck, relu_kink_is_flagged) {
  // Pre-activation is exactly 0, so central differences straddle the kink.
  ModelConfig cfg;
  cfg.input_dim = 1;
  cfg.hidden = {1};
  cfg.output_dim = 1;
  cfg.hidden_activation = Activation::kRelu;
  cfg.seed = 1;
  LayeredParams params = init_params(cfg);
  params.layers[0].weights[0] = 0.0;  // w * x + 0 bias == 0 at the kink
  params.layers[0].bias[0] = 0.0;
  params.layers[1].weights[0] = 1.0;
  params.layers[1].bias[0] = 0.0;

  auto loss_fn = [](const ParamLeaves& leaves) {
    Tensor x = Tensor::leaf({1, 1}, {1.0});
    Tensor target = Tensor::leaf({1, 1}, {-1.0});
    return mse_loss(forward(leaves, x), target);
  };
  const GradReport rep = finite_diff_check(params, loss_fn, 1e-5);
  EXPECT_GT(rep.max_relative_error, 1e-5);
}

TEST(GradCheck, random_two_layer_mlp_under_tolerance) {
  ModelConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden = {2};
  cfg.output_dim = 2;  // 2*2+2 + 2*2+2 = 12 params; batch drives all of them
  cfg.seed = 11;
  LayeredParams params = init_params(cfg);

  LabeledBatch batch;
  batch.dim = 2;
  Rng rng(13);
  for (int i = 0; i < 5; ++i) {
    batch.inputs.push_back(rng.normal());
    batch.inputs.push_back(rng.normal());
    batch.labels.push_back(static_cast<int>(rng.uniform_index(2)));
  }
  auto loss_fn = [&](const ParamLeaves& leaves) {
    Tensor x = Tensor::leaf({batch.labels.size(), 2}, batch.inputs);
    return softmax_cross_entropy(forward(leaves, x), labels_tensor(batch.labels));
  };
  const GradReport rep = finite_diff_check(params, loss_fn, 1e-5);
  EXPECT_LT(rep.max_relative_error, 1e-5);
}

TEST(GradCheck, non_finite_loss_rejected) {
  ModelConfig cfg;
  cfg.input_dim = 1;
  cfg.hidden = {};
  cfg.output_dim = 1;
  cfg.seed = 3;
  LayeredParams params = init_params(cfg);
  auto loss_fn = [](const ParamLeaves&) {
    return Tensor::scalar(std::numeric_limits<double>::quiet_NaN());
  };
  EXPECT_THROW(finite_diff_check(params, loss_fn, 1e-5), NumericError);
}
