#include "rebalance/cwgan_gp.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "rebalance/errors.hpp"
#include "rebalance/rng.hpp"

namespace rebalance {

const std::vector<std::size_t>& batch_size_menu() {
  static const std::vector<std::size_t> menu = {16, 32, 64, 128};
  return menu;
}

const std::vector<double>& learning_rate_menu() {
  static const std::vector<double> menu = {0.0005, 0.001, 0.005, 0.01, 0.05, 0.1};
  return menu;
}

void check_hyper_params(const GanHyperParams& hp) {
  auto in = [](const auto& menu, const auto& v) {
    return std::find(menu.begin(), menu.end(), v) != menu.end();
  };
  if (!in(batch_size_menu(), hp.batch_size)) throw ConfigError("batch size outside menu");
  if (!in(learning_rate_menu(), hp.lr_generator) || !in(learning_rate_menu(), hp.lr_discriminator))
    throw ConfigError("learning rate outside menu");
  if (hp.activation_generator == Activation::Linear ||
      hp.activation_discriminator == Activation::Linear)
    throw ConfigError("linear is not in the tunable activation menu");
  if (hp.epochs < 5 || hp.epochs > 20) throw ConfigError("epochs outside quniform(5,20,1)");
}

std::string describe(const GanHyperParams& hp) {
  return "batch=" + std::to_string(hp.batch_size) + " lrG=" + std::to_string(hp.lr_generator) +
         " lrD=" + std::to_string(hp.lr_discriminator) + " optG=" +
         to_string(hp.optimizer_generator) + " optD=" + to_string(hp.optimizer_discriminator) +
         " actG=" + to_string(hp.activation_generator) + " actD=" +
         to_string(hp.activation_discriminator) + " epochs=" + std::to_string(hp.epochs) +
         " lnG=" + std::to_string(hp.layer_norm_generator) +
         " lnD=" + std::to_string(hp.layer_norm_discriminator);
}

GanModel make_gan_model(std::size_t n_features, const GanHyperParams& hp,
                        const GanModelDefaults& defaults, std::uint64_t seed) {
  if (n_features == 0) throw ConfigError("make_gan_model: need at least one feature");
  GanModel m;
  m.n_features = n_features;
  m.latent_dim = defaults.latent_dim ? defaults.latent_dim : std::max<std::size_t>(8, n_features);
  m.lambda_gp = defaults.lambda_gp;
  m.n_critic = defaults.n_critic;

  m.generator_spec.layer_widths = {m.latent_dim + 2};
  for (std::size_t w : defaults.hidden_widths) m.generator_spec.layer_widths.push_back(w);
  m.generator_spec.layer_widths.push_back(n_features);
  m.generator_spec.activation = hp.activation_generator;
  m.generator_spec.output_activation = Activation::Sigmoid;  // keeps samples in [0,1]
  m.generator_spec.layer_norm = hp.layer_norm_generator;
  m.generator_spec.seed = hash64(seed, "generator");

  m.critic_spec.layer_widths = {n_features + 2};
  for (std::size_t w : defaults.hidden_widths) m.critic_spec.layer_widths.push_back(w);
  m.critic_spec.layer_widths.push_back(1);
  m.critic_spec.activation = hp.activation_discriminator;
  m.critic_spec.output_activation = Activation::Linear;
  m.critic_spec.layer_norm = hp.layer_norm_discriminator;
  m.critic_spec.seed = hash64(seed, "critic");

  m.generator = init_mlp(m.generator_spec);
  m.critic = init_mlp(m.critic_spec);
  return m;
}

namespace {

// features + one-hot label: label 0 -> (1,0), label 1 -> (0,1)
Matrix with_labels(const Matrix& x, const std::vector<int>& labels) {
  if (x.rows() != labels.size()) throw ConfigError("label count does not match batch rows");
  Matrix out(x.rows(), x.cols() + 2);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(i, j);
    out(i, x.cols() + (labels[i] == 1 ? 1 : 0)) = 1.0;
  }
  return out;
}

double mean_scores(const Matrix& scores) {
  double acc = 0.0;
  for (double v : scores.data()) acc += v;
  return scores.rows() ? acc / static_cast<double>(scores.rows()) : 0.0;
}

struct PenaltyParts {
  double value = 0.0;      // lambda-scaled mean squared norm deviation
  double mean_norm = 0.0;  // mean gradient norm over the batch
  Matrix interpolates;     // feature part only
  std::vector<double> norms;
  Matrix input_grad;       // feature slice of the critic input gradient
};

// The interpolation coefficient for a row is seeded by the row pair's
// content, not its position, so permuting paired rows leaves the penalty
// value unchanged.
double row_epsilon(std::uint64_t seed, std::span<const double> real_row,
                   std::span<const double> fake_row, int label) {
  SeedHasher h(seed);
  for (double v : real_row) h.mix(std::bit_cast<std::uint64_t>(v));
  for (double v : fake_row) h.mix(std::bit_cast<std::uint64_t>(v));
  h.mix(static_cast<std::uint64_t>(label));
  Rng rng(h.finish());
  return rng.uniform();
}

PenaltyParts penalty_parts(const GanModel& model, const Matrix& real, const Matrix& fake,
                           const std::vector<int>& labels, std::uint64_t seed) {
  if (real.rows() != fake.rows() || real.cols() != fake.cols())
    throw ConfigError("gradient_penalty: real/fake batch shapes differ");
  if (real.cols() != model.n_features)
    throw ConfigError("gradient_penalty: batch width does not match feature count");

  PenaltyParts out;
  const std::size_t B = real.rows(), d = real.cols();
  out.interpolates = Matrix(B, d);
  for (std::size_t i = 0; i < B; ++i) {
    const double eps = row_epsilon(seed, real.row(i), fake.row(i), labels[i]);
    for (std::size_t j = 0; j < d; ++j)
      out.interpolates(i, j) = eps * real(i, j) + (1.0 - eps) * fake(i, j);
  }

  const Matrix grad =
      input_gradient(model.critic, model.critic_spec, with_labels(out.interpolates, labels));
  out.input_grad = Matrix(B, d);
  out.norms.resize(B);
  double value = 0.0, norm_sum = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      out.input_grad(i, j) = grad(i, j);
      sq += grad(i, j) * grad(i, j);
    }
    out.norms[i] = std::sqrt(sq);
    norm_sum += out.norms[i];
    const double dev = out.norms[i] - 1.0;
    value += dev * dev;
  }
  out.value = model.lambda_gp * value / static_cast<double>(B);
  out.mean_norm = norm_sum / static_cast<double>(B);
  return out;
}

Mat<Dual> dual_batch(const Matrix& values, const Matrix& tangents) {
  Mat<Dual> out(values.rows(), values.cols());
  for (std::size_t i = 0; i < values.data().size(); ++i)
    out.data()[i] = Dual(values.data()[i], tangents.data()[i]);
  return out;
}

// Parameter gradients of the penalty term. The penalty is a function of the
// critic's input gradient, so its parameter derivative is the mixed second
// derivative d^2 D / (d theta, d x) contracted with the penalty's
// sensitivity to the input gradient. Running the ordinary backward pass in
// dual arithmetic, with the input tangent set to that sensitivity, yields it
// exactly: the tangent component of each dual parameter gradient.
Gradients penalty_param_gradients(const GanModel& model, const PenaltyParts& parts,
                                  const std::vector<int>& labels) {
  const std::size_t B = parts.interpolates.rows(), d = parts.interpolates.cols();

  Matrix tangents(B, d + 2);  // label block fixed: zero tangent
  const double lambda = model.lambda_gp;
  for (std::size_t i = 0; i < B; ++i) {
    const double n = parts.norms[i];
    const double coeff = n < 1e-12 ? 0.0 : 2.0 * lambda * (n - 1.0) / (static_cast<double>(B) * n);
    for (std::size_t j = 0; j < d; ++j) tangents(i, j) = coeff * parts.input_grad(i, j);
  }

  const MlpStateT<Dual> critic = to_dual(model.critic);
  const Mat<Dual> input = dual_batch(with_labels(parts.interpolates, labels), tangents);
  ForwardCacheT<Dual> cache;
  mlp_forward(critic, model.critic_spec, input, &cache);
  const Mat<Dual> ones(B, 1, Dual(1.0, 0.0));
  const GradientsT<Dual> dual_grads = mlp_backward(critic, model.critic_spec, cache, ones);

  Gradients out;
  out.layers.resize(dual_grads.layers.size());
  for (std::size_t l = 0; l < dual_grads.layers.size(); ++l) {
    const LayerParamsT<Dual>& src = dual_grads.layers[l];
    LayerParams& dst = out.layers[l];
    dst.weight = Matrix(src.weight.rows(), src.weight.cols());
    for (std::size_t i = 0; i < src.weight.data().size(); ++i)
      dst.weight.data()[i] = src.weight.data()[i].t;
    auto tangent_of = [](const std::vector<Dual>& v) {
      std::vector<double> out(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].t;
      return out;
    };
    dst.bias = tangent_of(src.bias);
    dst.gain = tangent_of(src.gain);
    dst.shift = tangent_of(src.shift);
  }
  return out;
}

void accumulate(Gradients& into, const Gradients& other) {
  for (std::size_t l = 0; l < into.layers.size(); ++l) {
    LayerParams& a = into.layers[l];
    const LayerParams& b = other.layers[l];
    for (std::size_t i = 0; i < a.weight.data().size(); ++i)
      a.weight.data()[i] += b.weight.data()[i];
    for (std::size_t i = 0; i < a.bias.size(); ++i) a.bias[i] += b.bias[i];
    for (std::size_t i = 0; i < a.gain.size(); ++i) a.gain[i] += b.gain[i];
    for (std::size_t i = 0; i < a.shift.size(); ++i) a.shift[i] += b.shift[i];
  }
}

Matrix sample_latent(Rng& rng, std::size_t rows, std::size_t latent_dim) {
  Matrix z(rows, latent_dim);
  for (double& v : z.data()) v = rng.normal();
  return z;
}

}  // namespace

double gradient_penalty(const GanModel& model, const Matrix& real_batch, const Matrix& fake_batch,
                        const std::vector<int>& labels, std::uint64_t seed) {
  return penalty_parts(model, real_batch, fake_batch, labels, seed).value;
}

std::vector<double> penalty_epsilons(const Matrix& real_batch, const Matrix& fake_batch,
                                     const std::vector<int>& labels, std::uint64_t seed) {
  std::vector<double> out(real_batch.rows());
  for (std::size_t i = 0; i < real_batch.rows(); ++i)
    out[i] = row_epsilon(seed, real_batch.row(i), fake_batch.row(i), labels[i]);
  return out;
}

Gradients gradient_penalty_gradients(const GanModel& model, const Matrix& real_batch,
                                     const Matrix& fake_batch, const std::vector<int>& labels,
                                     std::uint64_t seed) {
  const PenaltyParts parts = penalty_parts(model, real_batch, fake_batch, labels, seed);
  return penalty_param_gradients(model, parts, labels);
}

double critic_loss(const GanModel& model, const Matrix& real_batch, const Matrix& fake_batch,
                   const std::vector<int>& labels, std::uint64_t seed) {
  const Matrix fake_scores = forward(model.critic, model.critic_spec, with_labels(fake_batch, labels));
  const Matrix real_scores = forward(model.critic, model.critic_spec, with_labels(real_batch, labels));
  return mean_scores(fake_scores) - mean_scores(real_scores) +
         gradient_penalty(model, real_batch, fake_batch, labels, seed);
}

double generator_loss(const GanModel& model, const Matrix& latent_batch,
                      const std::vector<int>& labels) {
  if (latent_batch.cols() != model.latent_dim)
    throw ConfigError("generator_loss: latent width does not match latent_dim");
  const Matrix fake =
      forward(model.generator, model.generator_spec, with_labels(latent_batch, labels));
  const Matrix scores = forward(model.critic, model.critic_spec, with_labels(fake, labels));
  return -mean_scores(scores);
}

std::pair<GanModel, GanTrainReport> train_cwgan_gp(const Dataset& scaled_train,
                                                   const GanHyperParams& hp,
                                                   const GanModelDefaults& defaults,
                                                   std::uint64_t seed) {
  validate(scaled_train, /*require_both_classes=*/true);
  for (double v : scaled_train.features.data())
    if (v < -1e-9 || v > 1.0 + 1e-9)
      throw DataError("train_cwgan_gp: features must be scaled to [0,1]");
  const std::size_t n = scaled_train.rows();
  if (hp.batch_size > n) throw ConfigError("train_cwgan_gp: batch size exceeds row count");

  const auto t0 = std::chrono::steady_clock::now();
  GanModel model = make_gan_model(scaled_train.cols(), hp, defaults, hash64(seed, "init"));
  GanTrainReport report;

  OptimizerState opt_critic =
      make_optimizer(hp.optimizer_discriminator, hp.lr_discriminator, model.critic);
  OptimizerState opt_gen = make_optimizer(hp.optimizer_generator, hp.lr_generator, model.generator);

  const double minority_fraction =
      static_cast<double>(scaled_train.minority_count()) / static_cast<double>(n);
  const std::size_t B = hp.batch_size;
  const std::size_t batches_per_epoch = std::max<std::size_t>(1, n / B);
  Rng rng(hash64(seed, "train"));

  auto draw_real = [&](Matrix& x, std::vector<int>& y) {
    x = Matrix(B, scaled_train.cols());
    y.resize(B);
    for (std::size_t i = 0; i < B; ++i) {
      const std::size_t pick = rng.below(n);
      const auto row = scaled_train.features.row(pick);
      std::copy(row.begin(), row.end(), x.row(i).begin());
      y[i] = scaled_train.labels[pick];
    }
  };

  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    for (std::size_t batch = 0; batch < batches_per_epoch; ++batch) {
      double critic_loss_sum = 0.0;
      double penalty_norm_sum = 0.0;

      for (std::size_t step = 0; step < model.n_critic; ++step) {
        Matrix real_x;
        std::vector<int> y;
        draw_real(real_x, y);

        const Matrix z = sample_latent(rng, B, model.latent_dim);
        const Matrix fake =
            forward(model.generator, model.generator_spec, with_labels(z, y));

        // Wasserstein part: d/dtheta [mean D(fake) - mean D(real)]
        Matrix stacked(0, model.n_features + 2);
        const Matrix fake_in = with_labels(fake, y);
        const Matrix real_in = with_labels(real_x, y);
        for (std::size_t i = 0; i < B; ++i) stacked.append_row(fake_in.row(i));
        for (std::size_t i = 0; i < B; ++i) stacked.append_row(real_in.row(i));
        ForwardCache cache;
        const Matrix scores = forward(model.critic, model.critic_spec, stacked, &cache);
        Matrix seed_grad(2 * B, 1);
        const double invB = 1.0 / static_cast<double>(B);
        for (std::size_t i = 0; i < B; ++i) seed_grad(i, 0) = invB;
        for (std::size_t i = 0; i < B; ++i) seed_grad(B + i, 0) = -invB;
        Gradients grads = backward(model.critic, model.critic_spec, cache, seed_grad);

        PenaltyParts parts = penalty_parts(model, real_x, fake, y, rng.next_u64());
        accumulate(grads, penalty_param_gradients(model, parts, y));

        double fake_mean = 0.0, real_mean = 0.0;
        for (std::size_t i = 0; i < B; ++i) {
          fake_mean += scores(i, 0);
          real_mean += scores(B + i, 0);
        }
        const double loss = (fake_mean - real_mean) * invB + parts.value;
        if (!std::isfinite(loss))
          throw GanDivergence(epoch, batch,
                              "non-finite critic loss at epoch " + std::to_string(epoch) +
                                  ", batch " + std::to_string(batch) + " [" + describe(hp) + "]");
        critic_loss_sum += loss;
        penalty_norm_sum += parts.mean_norm;

        optimizer_step(opt_critic, model.critic, grads);
      }

      // generator step, labels drawn from the empirical class distribution
      std::vector<int> y(B);
      for (std::size_t i = 0; i < B; ++i) y[i] = rng.uniform() < minority_fraction ? 1 : 0;
      const Matrix z = sample_latent(rng, B, model.latent_dim);
      ForwardCache gen_cache;
      const Matrix fake =
          forward(model.generator, model.generator_spec, with_labels(z, y), &gen_cache);
      ForwardCache critic_cache;
      const Matrix scores =
          forward(model.critic, model.critic_spec, with_labels(fake, y), &critic_cache);

      const Matrix minus(B, 1, -1.0 / static_cast<double>(B));
      const Gradients critic_grads =
          backward(model.critic, model.critic_spec, critic_cache, minus);
      Matrix to_gen(B, model.n_features);
      for (std::size_t i = 0; i < B; ++i)
        for (std::size_t j = 0; j < model.n_features; ++j)
          to_gen(i, j) = critic_grads.input(i, j);
      const Gradients gen_grads =
          backward(model.generator, model.generator_spec, gen_cache, to_gen);

      const double gen_loss = -mean_scores(scores);
      if (!std::isfinite(gen_loss))
        throw GanDivergence(epoch, batch,
                            "non-finite generator loss at epoch " + std::to_string(epoch) +
                                ", batch " + std::to_string(batch) + " [" + describe(hp) + "]");
      optimizer_step(opt_gen, model.generator, gen_grads);

      report.critic_loss.push_back(critic_loss_sum / static_cast<double>(model.n_critic));
      report.generator_loss.push_back(gen_loss);
      report.penalty_grad_norm.push_back(penalty_norm_sum / static_cast<double>(model.n_critic));
    }
  }

  if (!all_params_finite(model.generator) || !all_params_finite(model.critic))
    throw GanDivergence(hp.epochs, 0, "non-finite parameters after training [" + describe(hp) + "]");

  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(model), std::move(report)};
}

Matrix generate_minority(const GanModel& model, std::size_t count, const MinMaxScaler& scaler,
                         std::uint64_t seed) {
  Matrix out(0, model.n_features);
  if (count == 0) return out;
  Rng rng(seed);
  const Matrix z = sample_latent(rng, count, model.latent_dim);
  const std::vector<int> labels(count, 1);
  Matrix fake = forward(model.generator, model.generator_spec, with_labels(z, labels));
  for (double& v : fake.data()) v = std::clamp(v, 0.0, 1.0);

  Dataset tmp;
  tmp.features = std::move(fake);
  tmp.labels = labels;
  return apply_scaler(scaler, tmp, ScaleDirection::Inverse).features;
}

Dataset oversample_with_gan(const Dataset& train, const GanHyperParams& hp, std::uint64_t seed,
                            const GanModelDefaults& defaults) {
  validate(train, /*require_both_classes=*/true);
  const std::size_t minority = train.minority_count();
  const std::size_t majority = train.majority_count();
  Dataset out = train;
  if (minority >= majority) return out;

  const MinMaxScaler scaler = fit_minmax(train);
  const Dataset scaled = apply_scaler(scaler, train, ScaleDirection::Forward);
  auto [model, report] = train_cwgan_gp(scaled, hp, defaults, hash64(seed, "gan"));
  const Matrix rows = generate_minority(model, majority - minority, scaler, hash64(seed, "sample"));
  for (std::size_t i = 0; i < rows.rows(); ++i) out.append(rows.row(i), 1);
  return out;
}

// ---- serialization ---------------------------------------------------------

namespace {
constexpr int kGeneratorSchemaVersion = 1;

nlohmann::json spec_to_json(const MlpSpec& spec) {
  return {{"layer_widths", spec.layer_widths},
          {"activation", to_string(spec.activation)},
          {"output_activation", to_string(spec.output_activation)},
          {"layer_norm", spec.layer_norm},
          {"seed", spec.seed}};
}

MlpSpec spec_from_json(const nlohmann::json& j) {
  MlpSpec spec;
  spec.layer_widths = j.at("layer_widths").get<std::vector<std::size_t>>();
  spec.activation = activation_from_string(j.at("activation").get<std::string>());
  spec.output_activation = activation_from_string(j.at("output_activation").get<std::string>());
  spec.layer_norm = j.at("layer_norm").get<bool>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  return spec;
}

nlohmann::json state_to_json(const MlpState& state) {
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerParams& p : state.layers) {
    layers.push_back({{"rows", p.weight.rows()},
                      {"cols", p.weight.cols()},
                      {"weight", p.weight.data()},
                      {"bias", p.bias},
                      {"gain", p.gain},
                      {"shift", p.shift}});
  }
  return layers;
}

MlpState state_from_json(const nlohmann::json& j) {
  MlpState state;
  for (const auto& lj : j) {
    LayerParams p;
    p.weight = Matrix(lj.at("rows").get<std::size_t>(), lj.at("cols").get<std::size_t>());
    p.weight.data() = lj.at("weight").get<std::vector<double>>();
    p.bias = lj.at("bias").get<std::vector<double>>();
    p.gain = lj.at("gain").get<std::vector<double>>();
    p.shift = lj.at("shift").get<std::vector<double>>();
    state.layers.push_back(std::move(p));
  }
  return state;
}
}  // namespace

void save_generator(const GanModel& model, const MinMaxScaler& scaler,
                    const std::vector<std::string>& feature_names, const std::string& path) {
  nlohmann::json j = {{"schema_version", kGeneratorSchemaVersion},
                      {"latent_dim", model.latent_dim},
                      {"n_features", model.n_features},
                      {"generator_spec", spec_to_json(model.generator_spec)},
                      {"generator", state_to_json(model.generator)},
                      {"scaler_min", scaler.minimum},
                      {"scaler_max", scaler.maximum},
                      {"feature_names", feature_names}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write generator artifact: " + path);
  out << j.dump(2) << '\n';
}

LoadedGenerator load_generator(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open generator artifact: " + path);
  nlohmann::json j;
  in >> j;
  if (j.at("schema_version").get<int>() != kGeneratorSchemaVersion)
    throw DataError("unsupported generator schema version");
  LoadedGenerator out;
  out.model.latent_dim = j.at("latent_dim").get<std::size_t>();
  out.model.n_features = j.at("n_features").get<std::size_t>();
  out.model.generator_spec = spec_from_json(j.at("generator_spec"));
  out.model.generator = state_from_json(j.at("generator"));
  out.scaler.minimum = j.at("scaler_min").get<std::vector<double>>();
  out.scaler.maximum = j.at("scaler_max").get<std::vector<double>>();
  out.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  return out;
}

}  // namespace rebalance
