#include "rebalance/nnet.hpp"

#include <algorithm>
#include <cmath>

namespace rebalance {

using std::abs;
using std::exp;
using std::log1p;
using std::sqrt;
using std::tanh;

const std::vector<Activation>& activation_menu() {
  static const std::vector<Activation> menu = {
      Activation::Elu,  Activation::Relu,        Activation::Selu,
      Activation::Sigmoid, Activation::Softmax,  Activation::Tanh,
      Activation::HardSigmoid, Activation::Softplus, Activation::LeakyRelu};
  return menu;
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Elu: return "elu";
    case Activation::Relu: return "relu";
    case Activation::Selu: return "selu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Softmax: return "softmax";
    case Activation::Tanh: return "tanh";
    case Activation::HardSigmoid: return "hard_sigmoid";
    case Activation::Softplus: return "softplus";
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::Linear: return "linear";
  }
  return "?";
}

Activation activation_from_string(const std::string& name) {
  for (Activation a : activation_menu())
    if (to_string(a) == name) return a;
  if (name == "linear") return Activation::Linear;
  if (name == "leakyRelu") return Activation::LeakyRelu;  // Table-style spelling
  throw ConfigError("unknown activation: " + name);
}

namespace {

constexpr double kEluAlpha = 1.0;
constexpr double kLeakySlope = 0.01;
constexpr double kSeluAlpha = 1.6732632423543772;
constexpr double kSeluLambda = 1.0507009873554805;

template <class S>
S stable_sigmoid(S z) {
  if (z >= S(0.0)) {
    const S e = exp(-z);
    return S(1.0) / (S(1.0) + e);
  }
  const S e = exp(z);
  return e / (S(1.0) + e);
}

template <class S>
S act_value(Activation a, S z) {
  switch (a) {
    case Activation::Elu:
      return z > S(0.0) ? z : S(kEluAlpha) * (exp(z) - S(1.0));
    case Activation::Relu:
      return z > S(0.0) ? z : S(0.0);
    case Activation::Selu:
      return z > S(0.0) ? S(kSeluLambda) * z : S(kSeluLambda * kSeluAlpha) * (exp(z) - S(1.0));
    case Activation::Sigmoid:
      return stable_sigmoid(z);
    case Activation::Tanh:
      return tanh(z);
    case Activation::HardSigmoid: {
      const S y = S(0.2) * z + S(0.5);
      return y < S(0.0) ? S(0.0) : (y > S(1.0) ? S(1.0) : y);
    }
    case Activation::Softplus:
      return (z > S(0.0) ? z : S(0.0)) + log1p(exp(-abs(z)));
    case Activation::LeakyRelu:
      return z > S(0.0) ? z : S(kLeakySlope) * z;
    case Activation::Linear:
      return z;
    case Activation::Softmax:
      break;  // handled per row
  }
  throw ConfigError("softmax is applied row-wise, not element-wise");
}

template <class S>
S act_deriv(Activation a, S z) {
  switch (a) {
    case Activation::Elu:
      return z > S(0.0) ? S(1.0) : S(kEluAlpha) * exp(z);
    case Activation::Relu:
      return z > S(0.0) ? S(1.0) : S(0.0);
    case Activation::Selu:
      return z > S(0.0) ? S(kSeluLambda) : S(kSeluLambda * kSeluAlpha) * exp(z);
    case Activation::Sigmoid: {
      const S s = stable_sigmoid(z);
      return s * (S(1.0) - s);
    }
    case Activation::Tanh: {
      const S t = tanh(z);
      return S(1.0) - t * t;
    }
    case Activation::HardSigmoid: {
      const S y = S(0.2) * z + S(0.5);
      return (y > S(0.0) && y < S(1.0)) ? S(0.2) : S(0.0);
    }
    case Activation::Softplus:
      return stable_sigmoid(z);
    case Activation::LeakyRelu:
      return z > S(0.0) ? S(1.0) : S(kLeakySlope);
    case Activation::Linear:
      return S(1.0);
    case Activation::Softmax:
      break;
  }
  throw ConfigError("softmax derivative is handled by the softmax backward path");
}

template <class S>
void softmax_rows(Mat<S>& z) {
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto row = z.row(i);
    S m = row[0];
    for (const S& v : row)
      if (v > m) m = v;
    S sum{};
    for (S& v : row) {
      v = exp(v - m);
      sum += v;
    }
    for (S& v : row) v = v / sum;
  }
}

}  // namespace

void check_spec(const MlpSpec& spec) {
  if (spec.layer_widths.size() < 2)
    throw ConfigError("MlpSpec needs an input and an output width");
  for (std::size_t w : spec.layer_widths)
    if (w < 1) throw ConfigError("MlpSpec widths must be >= 1");
}

MlpState init_mlp(const MlpSpec& spec) {
  check_spec(spec);
  MlpState state;
  Rng rng(spec.seed);
  const std::size_t L = spec.n_layers();
  state.layers.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t fan_in = spec.layer_widths[l];
    const std::size_t fan_out = spec.layer_widths[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    LayerParams& p = state.layers[l];
    p.weight = Matrix(fan_in, fan_out);
    for (double& w : p.weight.data()) w = rng.uniform(-bound, bound);
    p.bias.assign(fan_out, 0.0);
    if (spec.layer_norm && l + 1 < L) {
      p.gain.assign(fan_out, 1.0);
      p.shift.assign(fan_out, 0.0);
    }
  }
  return state;
}

template <class S>
Mat<S> mlp_forward(const MlpStateT<S>& state, const MlpSpec& spec, const Mat<S>& batch,
                   ForwardCacheT<S>* cache) {
  const std::size_t L = spec.n_layers();
  if (state.layers.size() != L) throw ConfigError("state does not match spec");
  if (batch.cols() != spec.input_width())
    throw ConfigError("forward: batch width " + std::to_string(batch.cols()) +
                      " does not match input width " + std::to_string(spec.input_width()));

  ForwardCacheT<S> local;
  ForwardCacheT<S>& c = cache ? *cache : local;
  c.acts.assign(L + 1, Mat<S>());
  c.preact.assign(L, Mat<S>());
  c.normed.assign(L, Mat<S>());
  c.xhat.assign(L, Mat<S>());
  c.inv_std.assign(L, {});
  c.acts[0] = batch;

  for (std::size_t l = 0; l < L; ++l) {
    const LayerParamsT<S>& p = state.layers[l];
    Mat<S> z = matmul(c.acts[l], p.weight);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      auto row = z.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += p.bias[j];
    }
    c.preact[l] = std::move(z);

    const bool hidden = l + 1 < L;
    const Mat<S>* pre = &c.preact[l];
    if (spec.layer_norm && hidden) {
      const Mat<S>& zc = c.preact[l];
      const std::size_t H = zc.cols();
      Mat<S> xh(zc.rows(), H), n(zc.rows(), H);
      std::vector<S> istd(zc.rows());
      for (std::size_t i = 0; i < zc.rows(); ++i) {
        S mean{};
        for (std::size_t j = 0; j < H; ++j) mean += zc(i, j);
        mean = mean / S(static_cast<double>(H));
        S var{};
        for (std::size_t j = 0; j < H; ++j) {
          const S d = zc(i, j) - mean;
          var += d * d;
        }
        var = var / S(static_cast<double>(H));
        const S is = S(1.0) / sqrt(var + S(kLayerNormEpsilon));
        istd[i] = is;
        for (std::size_t j = 0; j < H; ++j) {
          xh(i, j) = (zc(i, j) - mean) * is;
          n(i, j) = p.gain[j] * xh(i, j) + p.shift[j];
        }
      }
      c.xhat[l] = std::move(xh);
      c.inv_std[l] = std::move(istd);
      c.normed[l] = std::move(n);
      pre = &c.normed[l];
    }

    const Activation act = hidden ? spec.activation : spec.output_activation;
    Mat<S> a = *pre;
    if (act == Activation::Softmax)
      softmax_rows(a);
    else if (act != Activation::Linear)
      for (S& v : a.data()) v = act_value(act, v);
    c.acts[l + 1] = std::move(a);
  }
  return c.acts[L];
}

template <class S>
GradientsT<S> mlp_backward(const MlpStateT<S>& state, const MlpSpec& spec,
                           const ForwardCacheT<S>& cache, const Mat<S>& output_gradient,
                           bool input_gradient_only) {
  const std::size_t L = spec.n_layers();
  if (cache.acts.size() != L + 1) throw ConfigError("backward: cache does not match spec");
  if (output_gradient.rows() != cache.acts[L].rows() ||
      output_gradient.cols() != cache.acts[L].cols())
    throw ConfigError("backward: output gradient shape mismatch");

  GradientsT<S> g;
  g.layers.resize(L);
  Mat<S> grad = output_gradient;  // d objective / d acts[l+1]

  for (std::size_t l = L; l-- > 0;) {
    const LayerParamsT<S>& p = state.layers[l];
    const bool hidden = l + 1 < L;
    const Activation act = hidden ? spec.activation : spec.output_activation;
    const bool use_ln = spec.layer_norm && hidden;
    const Mat<S>& pre = use_ln ? cache.normed[l] : cache.preact[l];

    // through the activation
    Mat<S> gn(grad.rows(), grad.cols());
    if (act == Activation::Softmax) {
      const Mat<S>& s = cache.acts[l + 1];
      for (std::size_t i = 0; i < grad.rows(); ++i) {
        S dot{};
        for (std::size_t j = 0; j < grad.cols(); ++j) dot += grad(i, j) * s(i, j);
        for (std::size_t j = 0; j < grad.cols(); ++j)
          gn(i, j) = s(i, j) * (grad(i, j) - dot);
      }
    } else if (act == Activation::Linear) {
      gn = grad;
    } else {
      for (std::size_t i = 0; i < grad.rows(); ++i)
        for (std::size_t j = 0; j < grad.cols(); ++j)
          gn(i, j) = grad(i, j) * act_deriv(act, pre(i, j));
    }

    // through layer norm
    Mat<S> gz;
    if (use_ln) {
      const Mat<S>& xh = cache.xhat[l];
      const std::size_t H = gn.cols();
      LayerParamsT<S>& gl = g.layers[l];
      if (!input_gradient_only) {
        gl.gain.assign(H, S{});
        gl.shift.assign(H, S{});
      }
      gz = Mat<S>(gn.rows(), H);
      for (std::size_t i = 0; i < gn.rows(); ++i) {
        S m1{}, m2{};
        for (std::size_t j = 0; j < H; ++j) {
          if (!input_gradient_only) {
            gl.shift[j] += gn(i, j);
            gl.gain[j] += gn(i, j) * xh(i, j);
          }
          const S dxh = gn(i, j) * p.gain[j];
          m1 += dxh;
          m2 += dxh * xh(i, j);
        }
        m1 = m1 / S(static_cast<double>(H));
        m2 = m2 / S(static_cast<double>(H));
        const S is = cache.inv_std[l][i];
        for (std::size_t j = 0; j < H; ++j) {
          const S dxh = gn(i, j) * p.gain[j];
          gz(i, j) = is * (dxh - m1 - xh(i, j) * m2);
        }
      }
    } else {
      gz = std::move(gn);
    }

    if (!input_gradient_only) {
      g.layers[l].weight = matmul_tn(cache.acts[l], gz);
      g.layers[l].bias.assign(gz.cols(), S{});
      for (std::size_t i = 0; i < gz.rows(); ++i)
        for (std::size_t j = 0; j < gz.cols(); ++j) g.layers[l].bias[j] += gz(i, j);
    }

    grad = matmul_nt(gz, p.weight);
  }
  g.input = std::move(grad);
  return g;
}

Matrix forward(const MlpState& state, const MlpSpec& spec, const Matrix& batch,
               ForwardCache* cache) {
  if (!all_finite(batch)) throw DataError("forward: non-finite input batch");
  return mlp_forward(state, spec, batch, cache);
}

Gradients backward(const MlpState& state, const MlpSpec& spec, const ForwardCache& cache,
                   const Matrix& output_gradient) {
  return mlp_backward(state, spec, cache, output_gradient);
}

Matrix input_gradient(const MlpState& state, const MlpSpec& spec, const Matrix& batch) {
  if (spec.output_width() != 1)
    throw ConfigError("input_gradient requires output width 1, got " +
                      std::to_string(spec.output_width()));
  ForwardCache cache;
  forward(state, spec, batch, &cache);
  const Matrix ones(batch.rows(), 1, 1.0);
  return mlp_backward(state, spec, cache, ones, /*input_gradient_only=*/true).input;
}

bool all_params_finite(const MlpState& state) {
  for (const LayerParams& p : state.layers) {
    if (!all_finite(p.weight)) return false;
    for (const auto* vec : {&p.bias, &p.gain, &p.shift})
      for (double v : *vec)
        if (!std::isfinite(v)) return false;
  }
  return true;
}

MlpStateT<Dual> to_dual(const MlpState& state) {
  MlpStateT<Dual> out;
  out.layers.resize(state.layers.size());
  for (std::size_t l = 0; l < state.layers.size(); ++l) {
    const LayerParams& s = state.layers[l];
    LayerParamsT<Dual>& d = out.layers[l];
    d.weight = Mat<Dual>(s.weight.rows(), s.weight.cols());
    for (std::size_t i = 0; i < s.weight.data().size(); ++i)
      d.weight.data()[i] = Dual(s.weight.data()[i]);
    auto lift = [](const std::vector<double>& v) {
      std::vector<Dual> out(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) out[i] = Dual(v[i]);
      return out;
    };
    d.bias = lift(s.bias);
    d.gain = lift(s.gain);
    d.shift = lift(s.shift);
  }
  return out;
}

template Mat<double> mlp_forward<double>(const MlpStateT<double>&, const MlpSpec&,
                                         const Mat<double>&, ForwardCacheT<double>*);
template Mat<Dual> mlp_forward<Dual>(const MlpStateT<Dual>&, const MlpSpec&, const Mat<Dual>&,
                                     ForwardCacheT<Dual>*);
template GradientsT<double> mlp_backward<double>(const MlpStateT<double>&, const MlpSpec&,
                                                 const ForwardCacheT<double>&, const Mat<double>&,
                                                 bool);
template GradientsT<Dual> mlp_backward<Dual>(const MlpStateT<Dual>&, const MlpSpec&,
                                             const ForwardCacheT<Dual>&, const Mat<Dual>&, bool);

// ---- optimizers ------------------------------------------------------------

const std::vector<OptimizerKind>& optimizer_menu() {
  static const std::vector<OptimizerKind> menu = {
      OptimizerKind::Adadelta, OptimizerKind::Adagrad, OptimizerKind::Adam,
      OptimizerKind::Adamax,   OptimizerKind::NAdam,   OptimizerKind::RMSprop,
      OptimizerKind::Sgd};
  return menu;
}

std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::Adadelta: return "adadelta";
    case OptimizerKind::Adagrad: return "adagrad";
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::Adamax: return "adamax";
    case OptimizerKind::NAdam: return "nadam";
    case OptimizerKind::RMSprop: return "rmsprop";
    case OptimizerKind::Sgd: return "sgd";
  }
  return "?";
}

OptimizerKind optimizer_from_string(const std::string& name) {
  for (OptimizerKind k : optimizer_menu())
    if (to_string(k) == name) return k;
  throw ConfigError("unknown optimizer: " + name);
}

namespace {

// parameter buffers in a fixed traversal order, mirrored by gradients
std::vector<std::vector<double>*> param_buffers(MlpState& s) {
  std::vector<std::vector<double>*> out;
  for (LayerParams& p : s.layers) {
    out.push_back(&p.weight.data());
    out.push_back(&p.bias);
    out.push_back(&p.gain);
    out.push_back(&p.shift);
  }
  return out;
}

std::vector<const std::vector<double>*> grad_buffers(const Gradients& g) {
  std::vector<const std::vector<double>*> out;
  for (const LayerParams& p : g.layers) {
    out.push_back(&p.weight.data());
    out.push_back(&p.bias);
    out.push_back(&p.gain);
    out.push_back(&p.shift);
  }
  return out;
}

}  // namespace

OptimizerState make_optimizer(OptimizerKind kind, double learning_rate, const MlpState& shape) {
  if (learning_rate <= 0.0) throw ConfigError("learning rate must be positive");
  OptimizerState opt;
  opt.kind = kind;
  opt.learning_rate = learning_rate;
  for (const LayerParams& p : shape.layers) {
    for (std::size_t sz : {p.weight.data().size(), p.bias.size(), p.gain.size(), p.shift.size()}) {
      opt.acc1.emplace_back(sz, 0.0);
      opt.acc2.emplace_back(sz, 0.0);
    }
  }
  return opt;
}

void optimizer_step(OptimizerState& opt, MlpState& state, const Gradients& gradients) {
  auto params = param_buffers(state);
  auto grads = grad_buffers(gradients);
  if (params.size() != grads.size() || params.size() != opt.acc1.size())
    throw ConfigError("optimizer_step: shape mismatch");

  const double lr = opt.learning_rate;
  const std::uint64_t t = ++opt.step_counter;
  constexpr double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;
  constexpr double rms_rho = 0.9, rms_eps = 1e-8;
  constexpr double ada_rho = 0.95, ada_eps = 1e-6;
  constexpr double adagrad_eps = 1e-10;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));

  for (std::size_t n = 0; n < params.size(); ++n) {
    std::vector<double>& p = *params[n];
    const std::vector<double>& g = *grads[n];
    if (p.empty()) continue;
    if (p.size() != g.size()) throw ConfigError("optimizer_step: gradient shape mismatch");
    std::vector<double>& a1 = opt.acc1[n];
    std::vector<double>& a2 = opt.acc2[n];

    switch (opt.kind) {
      case OptimizerKind::Sgd:
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
        break;
      case OptimizerKind::Adam:
        for (std::size_t i = 0; i < p.size(); ++i) {
          a1[i] = b1 * a1[i] + (1 - b1) * g[i];
          a2[i] = b2 * a2[i] + (1 - b2) * g[i] * g[i];
          p[i] -= lr * (a1[i] / bc1) / (std::sqrt(a2[i] / bc2) + adam_eps);
        }
        break;
      case OptimizerKind::Adamax:
        for (std::size_t i = 0; i < p.size(); ++i) {
          a1[i] = b1 * a1[i] + (1 - b1) * g[i];
          a2[i] = std::max(b2 * a2[i], std::abs(g[i]));
          p[i] -= (lr / bc1) * a1[i] / (a2[i] + adam_eps);
        }
        break;
      case OptimizerKind::NAdam:
        for (std::size_t i = 0; i < p.size(); ++i) {
          a1[i] = b1 * a1[i] + (1 - b1) * g[i];
          a2[i] = b2 * a2[i] + (1 - b2) * g[i] * g[i];
          const double mh = a1[i] / bc1;
          const double vh = a2[i] / bc2;
          p[i] -= lr * (b1 * mh + (1 - b1) * g[i] / bc1) / (std::sqrt(vh) + adam_eps);
        }
        break;
      case OptimizerKind::RMSprop:
        for (std::size_t i = 0; i < p.size(); ++i) {
          a2[i] = rms_rho * a2[i] + (1 - rms_rho) * g[i] * g[i];
          p[i] -= lr * g[i] / (std::sqrt(a2[i]) + rms_eps);
        }
        break;
      case OptimizerKind::Adagrad:
        for (std::size_t i = 0; i < p.size(); ++i) {
          a2[i] += g[i] * g[i];
          p[i] -= lr * g[i] / (std::sqrt(a2[i]) + adagrad_eps);
        }
        break;
      case OptimizerKind::Adadelta:
        for (std::size_t i = 0; i < p.size(); ++i) {
          a2[i] = ada_rho * a2[i] + (1 - ada_rho) * g[i] * g[i];
          const double step = std::sqrt((a1[i] + ada_eps) / (a2[i] + ada_eps)) * g[i];
          a1[i] = ada_rho * a1[i] + (1 - ada_rho) * step * step;
          p[i] -= lr * step;
        }
        break;
    }
  }
}

}  // namespace rebalance
