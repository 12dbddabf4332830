#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rebalance/dual.hpp"
#include "rebalance/errors.hpp"
#include "rebalance/matrix.hpp"
#include "rebalance/rng.hpp"

namespace rebalance {

enum class Activation {
  Elu,
  Relu,
  Selu,
  Sigmoid,
  Softmax,
  Tanh,
  HardSigmoid,
  Softplus,
  LeakyRelu,
  Linear
};

const std::vector<Activation>& activation_menu();  // the 9 tunable activations
std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct MlpSpec {
  std::vector<std::size_t> layer_widths;  // input width first, output width last
  Activation activation = Activation::Relu;
  Activation output_activation = Activation::Linear;
  bool layer_norm = false;  // hidden pre-activations only
  std::uint64_t seed = 0;

  std::size_t n_layers() const { return layer_widths.empty() ? 0 : layer_widths.size() - 1; }
  std::size_t input_width() const { return layer_widths.front(); }
  std::size_t output_width() const { return layer_widths.back(); }
};

template <class S>
struct LayerParamsT {
  Mat<S> weight;              // fan_in x fan_out
  std::vector<S> bias;        // fan_out
  std::vector<S> gain, shift; // layer-norm affine terms; empty unless layer_norm
};

template <class S>
struct MlpStateT {
  std::vector<LayerParamsT<S>> layers;
};

using LayerParams = LayerParamsT<double>;
using MlpState = MlpStateT<double>;

// Everything backward() needs: activations per layer plus the layer-norm
// intermediates. acts[0] is the input batch, acts[l+1] the output of layer l.
template <class S>
struct ForwardCacheT {
  std::vector<Mat<S>> acts;
  std::vector<Mat<S>> preact;           // z_l = acts[l] W + b
  std::vector<Mat<S>> normed;           // pre-activation after layer norm (empty slot when unused)
  std::vector<Mat<S>> xhat;             // (z - mean) * inv_std
  std::vector<std::vector<S>> inv_std;  // per row
};

using ForwardCache = ForwardCacheT<double>;

// Parameter gradients in MlpState layout, plus the gradient with respect to
// the input batch (used by the generator update and the gradient penalty).
template <class S>
struct GradientsT {
  std::vector<LayerParamsT<S>> layers;
  Mat<S> input;
};

using Gradients = GradientsT<double>;

inline constexpr double kLayerNormEpsilon = 1e-5;

void check_spec(const MlpSpec& spec);

// weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero,
// layer-norm gains one / shifts zero; deterministic per spec.seed
MlpState init_mlp(const MlpSpec& spec);

template <class S>
Mat<S> mlp_forward(const MlpStateT<S>& state, const MlpSpec& spec, const Mat<S>& batch,
                   ForwardCacheT<S>* cache);

// input_gradient_only skips the parameter-gradient products and fills the
// input slot alone
template <class S>
GradientsT<S> mlp_backward(const MlpStateT<S>& state, const MlpSpec& spec,
                           const ForwardCacheT<S>& cache, const Mat<S>& output_gradient,
                           bool input_gradient_only = false);

Matrix forward(const MlpState& state, const MlpSpec& spec, const Matrix& batch,
               ForwardCache* cache = nullptr);
Gradients backward(const MlpState& state, const MlpSpec& spec, const ForwardCache& cache,
                   const Matrix& output_gradient);

// Row i of the result holds the gradient of the scalar output for row i with
// respect to that row's input. Requires output width 1.
Matrix input_gradient(const MlpState& state, const MlpSpec& spec, const Matrix& batch);

bool all_params_finite(const MlpState& state);

// promote a double-valued state to dual numbers with zero tangents
MlpStateT<Dual> to_dual(const MlpState& state);

// ---- optimizers ------------------------------------------------------------

enum class OptimizerKind { Adadelta, Adagrad, Adam, Adamax, NAdam, RMSprop, Sgd };

const std::vector<OptimizerKind>& optimizer_menu();
std::string to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(const std::string& name);

// Per-parameter accumulators mirror the MlpState layout (flattened per
// layer). Constants are fixed: adam/adamax/nadam beta1=0.9 beta2=0.999
// eps=1e-8; rmsprop rho=0.9 eps=1e-8; adadelta rho=0.95 eps=1e-6;
// adagrad eps=1e-10.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Sgd;
  double learning_rate = 0.01;
  std::vector<std::vector<double>> acc1, acc2;
  std::uint64_t step_counter = 0;
};

OptimizerState make_optimizer(OptimizerKind kind, double learning_rate, const MlpState& shape);
void optimizer_step(OptimizerState& opt, MlpState& state, const Gradients& gradients);

}  // namespace rebalance
