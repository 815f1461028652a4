#pragma once

// Small classifier on manifold-valued grids and its trainer.
//
//   conv1 -> tReLU -> normalization -> conv2 -> distance readout -> affine head
//
// The readout lists, per sample, the distance of every conv2 output cell and
// of the manifold origin to the Frechet mean of those points. Manifold
// parameters (kernel weights, normalization bias and log-scales) are trained
// by SPSA; the head is refit by gradient descent on softmax cross-entropy
// after every epoch.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "manifoldnorm/config.hpp"
#include "manifoldnorm/dataset.hpp"
#include "manifoldnorm/error.hpp"
#include "manifoldnorm/keyvalue.hpp"
#include "manifoldnorm/layers.hpp"
#include "manifoldnorm/normalization.hpp"

namespace manifoldnorm {

/// Affine map on standardized features: logits = W ((f - mean) / scale) + b.
struct Head {
  Matrix weight;  // classes x features
  Vector bias;
  Vector feat_mean;
  Vector feat_scale;
};

struct Model {
  ExperimentConfig config;
  ConvKernel conv1;
  ConvKernel conv2;
  std::optional<NormState> norm;
  std::vector<double> bias_params;  // slot-major
  std::vector<double> log_scales;   // slot-major
  Head head;

  std::size_t slots() const { return norm ? norm->slots.size() : 0; }
  std::size_t bias_width() const {
    return static_cast<std::size_t>(bias_param_count(config.manifold, config.algorithm));
  }
  std::size_t scale_width() const {
    return config.algorithm == NormAlgorithm::LieGroup ? 1
                                                       : static_cast<std::size_t>(config.manifold.intrinsic_dim());
  }
};

inline GridDims conv2_output_dims(const ExperimentConfig& c, std::size_t samples) {
  ConvKernel k1 = ConvKernel::uniform(c.conv1.window, c.conv1.stride, c.data.channels, c.conv1.channels);
  ConvKernel k2 = ConvKernel::uniform(c.conv2.window, c.conv2.stride, c.conv1.channels, c.conv2.channels);
  return k2.output_dims(k1.output_dims(c.input_dims(samples)));
}

inline std::size_t feature_count(const ExperimentConfig& c) { return conv2_output_dims(c, 1).total() + 1; }

/// Rebuilds each slot's bias and scale from the unconstrained parameters.
inline void sync_norm_params(Model& model) {
  if (!model.norm) return;
  const std::size_t bw = model.bias_width();
  const std::size_t sw = model.scale_width();
  const ManifoldId& m = model.config.manifold;
  for (std::size_t s = 0; s < model.norm->slots.size(); ++s) {
    NormSlot& slot = model.norm->slots[s];
    const std::span<const double> bias(model.bias_params.data() + s * bw, bw);
    const std::span<const double> logs(model.log_scales.data() + s * sw, sw);
    if (model.config.algorithm == NormAlgorithm::LieGroup) {
      slot.lie_bias = lie_bias_from_params(m, bias);
      slot.scale = std::exp(logs[0]);
    } else {
      slot.bias = homog_bias_from_params(m, bias);
      for (std::size_t i = 0; i < sw; ++i) slot.scale_diag(static_cast<Eigen::Index>(i)) = std::exp(logs[i]);
    }
  }
}

/// Identity manifold parameters (uniform kernel weights, S = I, g = e,
/// running means at the origin) and a zero head.
inline Model init_model(const ExperimentConfig& config) {
  validate_config(config);
  Model m;
  m.config = config;
  m.conv1 = ConvKernel::uniform(config.conv1.window, config.conv1.stride, config.data.channels, config.conv1.channels);
  m.conv2 = ConvKernel::uniform(config.conv2.window, config.conv2.stride, config.conv1.channels, config.conv2.channels);
  if (config.has_norm()) {
    const std::size_t slots = config.norm_mode().slot_count(config.conv1.channels);
    m.norm = NormState::identity(config.manifold, config.algorithm, slots, config.train.momentum);
    m.norm->schedule = config.train.schedule;
    m.bias_params.assign(slots * m.bias_width(), 0.0);
    m.log_scales.assign(slots * m.scale_width(), 0.0);
    sync_norm_params(m);
  }
  const auto f = static_cast<Eigen::Index>(feature_count(config));
  const auto k = static_cast<Eigen::Index>(config.data.classes);
  m.head = {Matrix::Zero(k, f), Vector::Zero(k), Vector::Zero(f), Vector::Ones(f)};
  return m;
}

/// Box on the normalization parameters: scales within exp(+-2.5), bias
/// generators within +-2 per entry. Keeps eigenvalues of SPD features far
/// from under/overflow.
inline constexpr double kLogScaleLimit = 2.5;
inline constexpr double kBiasLimit = 2.0;

/// Trainable manifold-side parameters, flattened: conv1, conv2, bias, log-scale.
inline std::vector<double> manifold_params(const Model& m) {
  std::vector<double> p = m.conv1.raw_weights;
  p.insert(p.end(), m.conv2.raw_weights.begin(), m.conv2.raw_weights.end());
  p.insert(p.end(), m.bias_params.begin(), m.bias_params.end());
  p.insert(p.end(), m.log_scales.begin(), m.log_scales.end());
  return p;
}

inline void set_manifold_params(Model& m, std::span<const double> p) {
  const std::size_t total =
      m.conv1.raw_weights.size() + m.conv2.raw_weights.size() + m.bias_params.size() + m.log_scales.size();
  if (p.size() != total) detail::fail_validation("set_manifold_params: wrong parameter count");
  auto it = p.begin();
  for (auto* v : {&m.conv1.raw_weights, &m.conv2.raw_weights, &m.bias_params, &m.log_scales}) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(v->size()), v->begin());
    it += static_cast<std::ptrdiff_t>(v->size());
  }
  for (double& l : m.log_scales) l = std::clamp(l, -kLogScaleLimit, kLogScaleLimit);
  for (double& b : m.bias_params) b = std::clamp(b, -kBiasLimit, kBiasLimit);
  sync_norm_params(m);
}

inline std::size_t param_count(const Model& m) {
  return manifold_params(m).size() + static_cast<std::size_t>(m.head.weight.size() + m.head.bias.size());
}

enum class Phase { Train, Eval };

/// Per-sample readout features (samples x features). In the training phase
/// the normalization uses batch statistics and, if `state_out` is given,
/// stores the advanced running means there. In the evaluation phase Batch
/// mode centres at the running mean; per-sample modes centre each set at its
/// own mean, as their training step does.
inline Matrix forward_features(const Model& model, const FeatureGrid& batch, Phase phase,
                               NormState* state_out = nullptr) {
  FeatureGrid x = trelu(manifold_conv(batch, model.conv1));
  if (model.norm) {
    const NormMode mode = model.config.norm_mode();
    const bool lie = model.config.algorithm == NormAlgorithm::LieGroup;
    if (phase == Phase::Train) {
      NormResult r = lie ? lie_norm_train(x, *model.norm, mode) : homog_norm_train(x, *model.norm, mode);
      x = std::move(r.output);
      if (state_out) *state_out = std::move(r.state);
    } else {
      NormOptions opts;
      opts.center = mode.per_sample() ? CenterSource::SetMean : CenterSource::RunningMean;
      x = lie ? lie_norm_infer(x, *model.norm, mode, opts) : homog_norm_infer(x, *model.norm, mode, opts);
    }
  }
  x = manifold_conv(x, model.conv2);
  const GridDims d = x.dims();
  const std::size_t per = d.total() / d.n;
  Matrix out(static_cast<Eigen::Index>(d.n), static_cast<Eigen::Index>(per + 1));
  std::vector<ManifoldPoint> pts;
  for (std::size_t in = 0; in < d.n; ++in) {
    pts = x.sample(in).cells();
    pts.push_back(origin_point(x.manifold()));
    const Vector f = manifold_fc(pts);
    out.row(static_cast<Eigen::Index>(in)) = f.transpose();
  }
  return out;
}

struct Scores {
  double loss = 0.0;
  double accuracy = 0.0;
};

namespace model_detail {

inline Matrix standardize(const Head& h, const Matrix& features) {
  return ((features.rowwise() - h.feat_mean.transpose()).array().rowwise() / h.feat_scale.transpose().array())
      .matrix();
}

/// Row-wise softmax probabilities.
inline Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double top = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - top).exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

inline Matrix logits(const Head& h, const Matrix& features) {
  return (standardize(h, features) * h.weight.transpose()).rowwise() + h.bias.transpose();
}

}  // namespace model_detail

/// Mean cross-entropy and accuracy. Ties go to the lowest class index.
inline Scores score(const Head& head, const Matrix& features, std::span<const std::uint32_t> labels) {
  const Matrix z = model_detail::logits(head, features);
  Scores s;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double top = z.row(i).maxCoeff();
    const double lse = top + std::log((z.row(i).array() - top).exp().sum());
    const auto y = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)]);
    s.loss += lse - z(i, y);
    Eigen::Index arg = 0;
    z.row(i).maxCoeff(&arg);
    if (arg == y) ++correct;
  }
  s.loss /= static_cast<double>(z.rows());
  s.accuracy = static_cast<double>(correct) / static_cast<double>(z.rows());
  return s;
}

/// Per-feature mean and (floored) standard deviation of `features`.
inline void set_standardization(Head& head, const Matrix& features) {
  head.feat_mean = features.colwise().mean().transpose();
  const Matrix centred = features.rowwise() - head.feat_mean.transpose();
  head.feat_scale =
      (centred.array().square().colwise().sum() / static_cast<double>(features.rows())).sqrt().transpose();
  for (Eigen::Index j = 0; j < head.feat_scale.size(); ++j) head.feat_scale(j) = std::max(head.feat_scale(j), 1e-8);
}

/// Recomputes the standardization and runs full-batch gradient descent on
/// L2-regularized cross-entropy, warm-started from the current weights.
inline void fit_head(Head& head, const Matrix& features, std::span<const std::uint32_t> labels,
                     const TrainSpec& spec) {
  const Eigen::Index n = features.rows();
  set_standardization(head, features);
  const Matrix x = model_detail::standardize(head, features);
  Matrix onehot = Matrix::Zero(n, head.weight.rows());
  for (Eigen::Index i = 0; i < n; ++i) onehot(i, static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)])) = 1.0;
  for (std::size_t step = 0; step < spec.head_steps; ++step) {
    const Matrix p = model_detail::softmax_rows((x * head.weight.transpose()).rowwise() + head.bias.transpose());
    const Matrix err = (p - onehot) / static_cast<double>(n);
    head.weight -= spec.head_lr * (err.transpose() * x + spec.head_l2 * head.weight);
    head.bias -= spec.head_lr * err.colwise().sum().transpose();
  }
  if (!head.weight.allFinite() || !head.bias.allFinite()) detail::fail_numerical("fit_head: diverged");
}

struct EpochRecord {
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double seconds = 0.0;
  std::size_t skipped_steps = 0;
  bool restored = false;  // epoch ended outside the valid region and was rolled back
};

struct TrainResult {
  Model model;
  std::vector<EpochRecord> epochs;
  Scores final_train;
};

/// Labels of the listed samples.
inline std::vector<std::uint32_t> labels_of(const Dataset& d, const std::vector<std::size_t>& idx) {
  std::vector<std::uint32_t> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(d.labels[i]);
  return out;
}

inline TrainResult train_model(const ExperimentConfig& config, const Dataset& data) {
  check_dataset(data);
  if (data.samples.manifold() != config.manifold) detail::fail_validation("train_model: dataset manifold mismatch");
  if (data.num_classes != config.data.classes) detail::fail_validation("train_model: class count mismatch");
  {
    GridDims want = config.input_dims(data.samples.dims().n);
    if (!(want == data.samples.dims())) {
      detail::fail_validation("train_model: dataset dims " + data.samples.dims().str() + " do not match config " +
                              want.str());
    }
  }
  const auto train_idx = data.indices(false);
  if (train_idx.empty()) detail::fail_validation("train_model: no training samples");
  const FeatureGrid train_grid = select_samples(data.samples, train_idx);
  const auto train_labels = labels_of(data, train_idx);

  TrainResult result{init_model(config), {}, {}};
  Model& model = result.model;
  const TrainSpec& t = config.train;
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  auto refit = [&] {
    const Matrix f = forward_features(model, train_grid, Phase::Eval);
    fit_head(model.head, f, train_labels, t);
    const Scores s = score(model.head, f, train_labels);
    if (!std::isfinite(s.loss)) detail::fail_numerical("train_model: training loss is not finite");
    return s;
  };

  // The SPSA objective standardizes features with the minibatch's own
  // statistics, so a perturbation that rescales every feature is judged by
  // how it changes class separation, not by how it shifts the frozen head.
  auto batch_loss = [&](const Model& m, const FeatureGrid& g, std::span<const std::uint32_t> y) {
    const Matrix f = forward_features(m, g, Phase::Train);
    Head h = m.head;
    set_standardization(h, f);
    return score(h, f, y).loss;
  };

  Scores best_scores{std::numeric_limits<double>::infinity(), 0.0};
  if (t.epochs > 0) best_scores = refit();
  Model best = model;
  std::vector<std::size_t> order(train_idx.size());
  std::size_t k = 0;
  for (std::size_t epoch = 0; epoch < t.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochRecord rec;
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < order.size(); b += t.batch_size) {
      const std::size_t e = std::min(order.size(), b + t.batch_size);
      std::vector<std::size_t> pick(order.begin() + static_cast<std::ptrdiff_t>(b),
                                    order.begin() + static_cast<std::ptrdiff_t>(e));
      const FeatureGrid g = select_samples(train_grid, pick);
      std::vector<std::uint32_t> y;
      for (std::size_t i : pick) y.push_back(train_labels[i]);

      const double ak = t.spsa_a / std::pow(static_cast<double>(k) + 1.0 + t.spsa_big_a, t.spsa_alpha);
      const double ck = t.spsa_c / std::pow(static_cast<double>(k) + 1.0, t.spsa_gamma);
      ++k;
      const std::vector<double> theta = manifold_params(model);
      std::vector<double> delta(theta.size());
      std::bernoulli_distribution coin(0.5);
      for (double& d : delta) d = coin(rng) ? 1.0 : -1.0;
      std::vector<double> plus = theta, minus = theta;
      for (std::size_t i = 0; i < theta.size(); ++i) {
        plus[i] += ck * delta[i];
        minus[i] -= ck * delta[i];
      }
      Model probe = model;
      double lp = 0.0, lm = 0.0;
      bool ok = true;
      try {
        set_manifold_params(probe, plus);
        lp = batch_loss(probe, g, y);
        set_manifold_params(probe, minus);
        lm = batch_loss(probe, g, y);
      } catch (const NumericalError&) {
        ok = false;
      }
      ok = ok && std::isfinite(lp) && std::isfinite(lm);
      if (ok) {
        std::vector<double> next = theta;
        const double diff = (lp - lm) / (2.0 * ck);
        for (std::size_t i = 0; i < theta.size(); ++i) {
          next[i] -= std::clamp(ak * diff / delta[i], -t.max_step, t.max_step);
        }
        probe = model;
        set_manifold_params(probe, next);
        try {
          // The clean pass validates the step, blocks it if the minibatch loss
          // rises above the perturbed average, and advances the running means.
          NormState advanced;
          const Matrix f = forward_features(probe, g, Phase::Train, &advanced);
          Head h = probe.head;
          set_standardization(h, f);
          if (score(h, f, y).loss <= 0.5 * (lp + lm) + t.block_tol) {
            if (probe.norm) probe.norm = std::move(advanced);
            model = std::move(probe);
          } else {
            ok = false;
          }
        } catch (const NumericalError&) {
          ok = false;
        }
      }
      if (!ok) {
        ++rec.skipped_steps;
        if (model.norm) {
          NormState advanced;
          forward_features(model, g, Phase::Train, &advanced);
          model.norm = std::move(advanced);
        }
      }
    }
    Scores s;
    try {
      s = refit();
    } catch (const NumericalError&) {
      // parameters left the region where every training sample is valid
      model = best;
      s = best_scores;
      rec.restored = true;
    }
    if (s.loss < best_scores.loss) {
      best = model;
      best_scores = s;
    }
    rec.train_loss = s.loss;
    rec.train_accuracy = s.accuracy;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.epochs.push_back(rec);
  }
  // keep the epoch with the lowest training loss
  model = std::move(best);
  result.final_train = score(model.head, forward_features(model, train_grid, Phase::Eval), train_labels);
  return result;
}

/// Scores the listed samples with frozen parameters and running means.
inline Scores evaluate(const Model& model, const Dataset& data, const std::vector<std::size_t>& idx) {
  check_dataset(data);
  if (data.samples.manifold() != model.config.manifold) detail::fail_validation("evaluate: manifold mismatch");
  if (data.num_classes != model.config.data.classes) detail::fail_validation("evaluate: class count mismatch");
  GridDims one = data.samples.dims();
  one.n = 1;
  if (!(one == model.config.input_dims(1))) detail::fail_validation("evaluate: sample dims do not match the model");
  if (idx.empty()) detail::fail_validation("evaluate: no samples selected");
  const auto y = labels_of(data, idx);
  return score(model.head, forward_features(model, select_samples(data.samples, idx), Phase::Eval), y);
}

// Saved models are key = value text: the config under "config.", then the
// parameters and running means.

inline KeyValue model_to_kv(const Model& m) {
  KeyValue kv;
  const KeyValue cfg = config_to_kv(m.config);
  for (const auto& [k, v] : cfg.entries()) kv.set("config." + k, v);
  auto vec = [](const auto& v) { return join_doubles(std::vector<double>(v.data(), v.data() + v.size())); };
  kv.set("conv1.raw", join_doubles(m.conv1.raw_weights));
  kv.set("conv2.raw", join_doubles(m.conv2.raw_weights));
  if (m.norm) {
    kv.set("norm.bias", join_doubles(m.bias_params));
    kv.set("norm.log_scale", join_doubles(m.log_scales));
    for (std::size_t s = 0; s < m.norm->slots.size(); ++s) {
      const NormSlot& slot = m.norm->slots[s];
      const Matrix rm = slot.running_mean.data.transpose();  // row-major order
      kv.set("norm.slot" + std::to_string(s) + ".running_mean", vec(rm));
      kv.set("norm.slot" + std::to_string(s) + ".steps", std::to_string(slot.steps_seen));
    }
  }
  const Matrix wt = m.head.weight.transpose();
  kv.set("head.weight", vec(wt));
  kv.set("head.bias", vec(m.head.bias));
  kv.set("head.mean", vec(m.head.feat_mean));
  kv.set("head.scale", vec(m.head.feat_scale));
  return kv;
}

inline Model model_from_kv(const KeyValue& kv) {
  KeyValue cfg;
  for (const auto& [k, v] : kv.entries())
    if (k.rfind("config.", 0) == 0) cfg.set(k.substr(7), v);
  Model m = init_model(parse_config(cfg));
  auto load = [&](const std::string& key, std::size_t expect) {
    auto v = parse_doubles(kv.get(key), key);
    if (v.size() != expect) throw FormatError("model: " + key + " has " + std::to_string(v.size()) + " values, expected " + std::to_string(expect));
    for (double x : v)
      if (!std::isfinite(x)) throw FormatError("model: " + key + " has a non-finite value");
    return v;
  };
  m.conv1.raw_weights = load("conv1.raw", m.conv1.raw_weights.size());
  m.conv2.raw_weights = load("conv2.raw", m.conv2.raw_weights.size());
  if (m.norm) {
    m.bias_params = load("norm.bias", m.bias_params.size());
    m.log_scales = load("norm.log_scale", m.log_scales.size());
    const ManifoldId& mf = m.config.manifold;
    for (std::size_t s = 0; s < m.norm->slots.size(); ++s) {
      const std::string key = "norm.slot" + std::to_string(s);
      const auto rm = load(key + ".running_mean", static_cast<std::size_t>(mf.ambient_size()));
      Matrix a(mf.ambient_rows(), mf.ambient_cols());
      for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = rm[static_cast<std::size_t>(i * a.cols() + j)];
      m.norm->slots[s].running_mean = make_point(mf, a);
      m.norm->slots[s].steps_seen = static_cast<std::uint64_t>(parse_int(kv.get(key + ".steps"), key));
    }
    sync_norm_params(m);
  }
  const auto rows = m.head.weight.rows();
  const auto cols = m.head.weight.cols();
  const auto w = load("head.weight", static_cast<std::size_t>(rows * cols));
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m.head.weight(i, j) = w[static_cast<std::size_t>(i * cols + j)];
  auto into = [&](const std::string& key, Vector& v) {
    const auto d = load(key, static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = d[static_cast<std::size_t>(i)];
  };
  into("head.bias", m.head.bias);
  into("head.mean", m.head.feat_mean);
  into("head.scale", m.head.feat_scale);
  return m;
}

}  // namespace manifoldnorm
