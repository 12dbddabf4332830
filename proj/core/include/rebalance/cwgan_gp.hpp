#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rebalance/dataset.hpp"
#include "rebalance/nnet.hpp"

namespace rebalance {

// One point in the hyperparameter search space: batch size, learning rates,
// optimizers, activations, epoch count and layer-norm switches for both
// networks.
struct GanHyperParams {
  std::size_t batch_size = 64;
  double lr_generator = 0.001;
  double lr_discriminator = 0.001;
  OptimizerKind optimizer_generator = OptimizerKind::Adam;
  OptimizerKind optimizer_discriminator = OptimizerKind::Adam;
  Activation activation_generator = Activation::Relu;
  Activation activation_discriminator = Activation::Relu;
  std::size_t epochs = 10;
  bool layer_norm_generator = false;
  bool layer_norm_discriminator = false;
};

const std::vector<std::size_t>& batch_size_menu();    // 16, 32, 64, 128
const std::vector<double>& learning_rate_menu();      // 0.0005 ... 0.1
void check_hyper_params(const GanHyperParams& hp);    // menu membership
std::string describe(const GanHyperParams& hp);

struct GanModelDefaults {
  std::vector<std::size_t> hidden_widths = {128, 64, 32};
  std::size_t latent_dim = 0;  // 0 = max(8, feature count)
  double lambda_gp = 10.0;
  std::size_t n_critic = 5;
};

// Generator maps (latent + one-hot label) to a feature vector in [0,1]^d
// (sigmoid output regardless of the tuned hidden activation); the critic
// maps (features + one-hot label) to an unbounded score.
struct GanModel {
  MlpSpec generator_spec, critic_spec;
  MlpState generator, critic;
  std::size_t latent_dim = 8;
  std::size_t n_features = 0;
  double lambda_gp = 10.0;
  std::size_t n_critic = 5;
};

GanModel make_gan_model(std::size_t n_features, const GanHyperParams& hp,
                        const GanModelDefaults& defaults, std::uint64_t seed);

// Non-finite loss during training. A legal trial outcome under wide
// hyperparameter ranges; Dazzle scores it as worst loss instead of aborting.
class GanDivergence : public std::runtime_error {
 public:
  GanDivergence(std::size_t epoch, std::size_t batch, const std::string& what)
      : std::runtime_error(what), epoch(epoch), batch(batch) {}
  std::size_t epoch, batch;
};

struct GanTrainReport {
  std::vector<double> critic_loss;        // one entry per (epoch, batch)
  std::vector<double> generator_loss;
  std::vector<double> penalty_grad_norm;  // mean ||grad|| over penalty batches
  double wall_time_seconds = 0.0;
};

// lambda * mean over interpolates of (||grad_x D(x_hat, y)||_2 - 1)^2, with
// x_hat = eps*real + (1-eps)*fake, eps ~ U[0,1] per row (seeded). The norm
// runs over the feature coordinates; the label block is held fixed.
double gradient_penalty(const GanModel& model, const Matrix& real_batch, const Matrix& fake_batch,
                        const std::vector<int>& labels, std::uint64_t seed);

// the per-row interpolation coefficients gradient_penalty derives from
// (seed, row pair content); exposed so tests can rebuild the interpolates
std::vector<double> penalty_epsilons(const Matrix& real_batch, const Matrix& fake_batch,
                                     const std::vector<int>& labels, std::uint64_t seed);

// Parameter gradients of the gradient-penalty term with respect to the
// critic. Exact: the backward pass runs in dual-number arithmetic with the
// input tangents set to the penalty's sensitivity to the input gradient,
// which yields the required mixed second derivative.
Gradients gradient_penalty_gradients(const GanModel& model, const Matrix& real_batch,
                                     const Matrix& fake_batch, const std::vector<int>& labels,
                                     std::uint64_t seed);

// mean D(fake) - mean D(real) + gradient_penalty
double critic_loss(const GanModel& model, const Matrix& real_batch, const Matrix& fake_batch,
                   const std::vector<int>& labels, std::uint64_t seed);

// -mean D(G(z, y), y)
double generator_loss(const GanModel& model, const Matrix& latent_batch,
                      const std::vector<int>& labels);

// Alternating updates: per minibatch, n_critic critic steps then one
// generator step; conditioning labels for generator updates are drawn from
// the empirical training label distribution. Deterministic per seed.
std::pair<GanModel, GanTrainReport> train_cwgan_gp(const Dataset& scaled_train,
                                                   const GanHyperParams& hp,
                                                   const GanModelDefaults& defaults,
                                                   std::uint64_t seed);

// z ~ N(0,1), label fixed to minority; generator output clipped to [0,1]
// then inverse-scaled to feature units
Matrix generate_minority(const GanModel& model, std::size_t count, const MinMaxScaler& scaler,
                         std::uint64_t seed);

// Scale, train, synthesize (majority - minority) minority rows, append to
// the original training set.
Dataset oversample_with_gan(const Dataset& train, const GanHyperParams& hp, std::uint64_t seed,
                            const GanModelDefaults& defaults = {});

// versioned JSON artifact holding the generator and the scaler needed to
// sample in feature units
void save_generator(const GanModel& model, const MinMaxScaler& scaler,
                    const std::vector<std::string>& feature_names, const std::string& path);
struct LoadedGenerator {
  GanModel model;  // generator side only; critic left empty
  MinMaxScaler scaler;
  std::vector<std::string> feature_names;
};
LoadedGenerator load_generator(const std::string& path);

}  // namespace rebalance
