#pragma once

// Experiment configuration. Every field has a default, so a config file only
// lists what it changes. See configs/ for annotated examples.

#include <array>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>

#include "manifoldnorm/error.hpp"
#include "manifoldnorm/keyvalue.hpp"
#include "manifoldnorm/manifold.hpp"
#include "manifoldnorm/normalization.hpp"

namespace manifoldnorm {

struct ConvSpec {
  std::array<std::size_t, 3> window{2, 2, 1};
  std::array<std::size_t, 3> stride{1, 1, 1};
  std::size_t channels = 4;
};

struct DatasetSpec {
  std::size_t classes = 2;
  std::size_t train_per_class = 100;
  std::size_t test_per_class = 50;
  std::array<std::size_t, 3> spatial{4, 4, 1};
  std::size_t channels = 4;
  double delta = 2.0;  // pairwise geodesic distance of class means
  double sigma = 0.3;
  /// Share of the variance carried by the per-sample offset; the rest is
  /// independent per cell.
  double offset_fraction = 0.5;
};

struct TrainSpec {
  std::size_t epochs = 16;
  std::size_t batch_size = 20;
  // SPSA gain sequences a_k = a / (k + 1 + A)^alpha, c_k = c / (k + 1)^gamma
  double spsa_a = 10.0;
  double spsa_c = 0.2;
  double spsa_big_a = 10.0;
  double spsa_alpha = 0.602;
  double spsa_gamma = 0.101;
  double max_step = 0.3;  // per-coordinate clip of one SPSA update
  /// A step is rejected when the minibatch loss after it exceeds the mean
  /// of the two perturbed losses by more than this.
  double block_tol = 0.0;
  double head_lr = 0.5;
  std::size_t head_steps = 300;
  double head_l2 = 1e-3;
  double momentum = 0.1;
  MomentumSchedule schedule = MomentumSchedule::Fixed;
};

enum class NormChoice { None, Batch, Layer, Instance, Group };

struct ExperimentConfig {
  ManifoldId manifold = ManifoldId::spd_affine(3);
  NormChoice norm = NormChoice::Group;
  std::size_t group_size = 2;
  NormAlgorithm algorithm = NormAlgorithm::Homogeneous;
  ConvSpec conv1{{2, 2, 1}, {1, 1, 1}, 4};
  ConvSpec conv2{{2, 2, 1}, {1, 1, 1}, 2};
  DatasetSpec data;
  TrainSpec train;
  Tolerances tol;
  std::uint64_t seed = 1;

  bool has_norm() const { return norm != NormChoice::None; }

  NormMode norm_mode() const {
    switch (norm) {
      case NormChoice::Batch:
        return NormMode::batch();
      case NormChoice::Layer:
        return NormMode::layer();
      case NormChoice::Instance:
        return NormMode::instance();
      case NormChoice::Group:
        return NormMode::group(group_size);
      case NormChoice::None:
        break;
    }
    detail::fail_validation("norm_mode: no normalization configured");
  }

  GridDims input_dims(std::size_t samples) const {
    return {data.spatial[0], data.spatial[1], data.spatial[2], samples, data.channels};
  }
};

inline const char* norm_choice_name(NormChoice n) {
  switch (n) {
    case NormChoice::None:
      return "none";
    case NormChoice::Batch:
      return "batch";
    case NormChoice::Layer:
      return "layer";
    case NormChoice::Instance:
      return "instance";
    case NormChoice::Group:
      return "group";
  }
  return "none";
}

inline NormChoice parse_norm_choice(const std::string& s) {
  if (s == "none") return NormChoice::None;
  if (s == "batch") return NormChoice::Batch;
  if (s == "layer") return NormChoice::Layer;
  if (s == "instance") return NormChoice::Instance;
  if (s == "group") return NormChoice::Group;
  throw ValidationError("unknown norm '" + s + "' (none|batch|layer|instance|group)");
}

inline ManifoldKind parse_manifold_kind(const std::string& s) {
  for (auto k : {ManifoldKind::SpdAffine, ManifoldKind::SpdLogEuclidean, ManifoldKind::Sphere,
                 ManifoldKind::SpecialOrthogonal}) {
    if (s == ManifoldId::kind_name(k)) return k;
  }
  throw ValidationError("unknown manifold '" + s + "'");
}

/// Rejects inconsistent settings; called after parsing and before any run.
inline void validate_config(const ExperimentConfig& c) {
  if (c.algorithm == NormAlgorithm::LieGroup && !c.manifold.is_lie_group()) {
    detail::fail_validation("config: algorithm=lie needs a Lie-group manifold, got " + c.manifold.name());
  }
  if (c.norm == NormChoice::Group && (c.group_size == 0 || c.conv1.channels % c.group_size != 0)) {
    detail::fail_validation("config: group_size must divide conv1.channels");
  }
  if (c.data.classes < 2) detail::fail_validation("config: data.classes must be >= 2");
  if (c.data.train_per_class == 0) detail::fail_validation("config: data.train_per_class must be >= 1");
  if (!(c.data.delta > 0.0)) detail::fail_validation("config: data.delta must be positive");
  if (!(c.data.sigma > 0.0)) detail::fail_validation("config: data.sigma must be positive");
  if (!(c.data.offset_fraction >= 0.0 && c.data.offset_fraction <= 1.0)) {
    detail::fail_validation("config: data.offset_fraction must lie in [0, 1]");
  }
  if (c.data.channels == 0 || c.conv1.channels == 0 || c.conv2.channels == 0) {
    detail::fail_validation("config: channel counts must be positive");
  }
  for (const ConvSpec* cs : {&c.conv1, &c.conv2}) {
    for (int a = 0; a < 3; ++a) {
      if (cs->window[a] == 0 || cs->stride[a] == 0) detail::fail_validation("config: window/stride must be positive");
    }
  }
  std::array<std::size_t, 3> d = c.data.spatial;
  for (const ConvSpec* cs : {&c.conv1, &c.conv2}) {
    for (int a = 0; a < 3; ++a) {
      if (cs->window[a] > d[a]) detail::fail_validation("config: convolution window larger than its input");
      d[a] = (d[a] - cs->window[a]) / cs->stride[a] + 1;
    }
  }
  if (c.train.batch_size == 0) detail::fail_validation("config: train.batch_size must be >= 1");
  if (!(c.train.momentum >= 0.0 && c.train.momentum <= 1.0)) {
    detail::fail_validation("config: train.momentum must lie in [0, 1]");
  }
  if (!(c.train.spsa_c > 0.0) || !(c.train.spsa_a >= 0.0) || !(c.train.max_step > 0.0)) {
    detail::fail_validation("config: SPSA gains must be positive");
  }
}

namespace config_detail {

inline std::array<std::size_t, 3> parse_triple(const std::string& text, const std::string& key) {
  const auto items = split_list(text);
  if (items.size() != 3) throw ValidationError("config: " + key + " needs three comma-separated integers");
  std::array<std::size_t, 3> out{};
  for (int i = 0; i < 3; ++i) {
    const auto v = parse_int(items[static_cast<std::size_t>(i)], key);
    if (v < 0) throw ValidationError("config: " + key + " must be nonnegative");
    out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(v);
  }
  return out;
}

inline std::string triple_str(const std::array<std::size_t, 3>& t) {
  return std::to_string(t[0]) + "," + std::to_string(t[1]) + "," + std::to_string(t[2]);
}

inline std::size_t parse_count(const std::string& text, const std::string& key) {
  const auto v = parse_int(text, key);
  if (v < 0) throw ValidationError("config: " + key + " must be nonnegative");
  return static_cast<std::size_t>(v);
}

}  // namespace config_detail

/// Canonical text form; parse_config(config_to_kv(c)) == c.
inline KeyValue config_to_kv(const ExperimentConfig& c, bool include_seed = true) {
  using config_detail::triple_str;
  KeyValue kv;
  kv.set("manifold", ManifoldId::kind_name(c.manifold.kind()));
  kv.set("n", std::to_string(c.manifold.n()));
  kv.set("norm", norm_choice_name(c.norm));
  kv.set("group_size", std::to_string(c.group_size));
  kv.set("algorithm", c.algorithm == NormAlgorithm::LieGroup ? "lie" : "homogeneous");
  kv.set("conv1.window", triple_str(c.conv1.window));
  kv.set("conv1.stride", triple_str(c.conv1.stride));
  kv.set("conv1.channels", std::to_string(c.conv1.channels));
  kv.set("conv2.window", triple_str(c.conv2.window));
  kv.set("conv2.stride", triple_str(c.conv2.stride));
  kv.set("conv2.channels", std::to_string(c.conv2.channels));
  kv.set("data.classes", std::to_string(c.data.classes));
  kv.set("data.train_per_class", std::to_string(c.data.train_per_class));
  kv.set("data.test_per_class", std::to_string(c.data.test_per_class));
  kv.set("data.spatial", triple_str(c.data.spatial));
  kv.set("data.channels", std::to_string(c.data.channels));
  kv.set("data.delta", format_double(c.data.delta));
  kv.set("data.sigma", format_double(c.data.sigma));
  kv.set("data.offset_fraction", format_double(c.data.offset_fraction));
  kv.set("train.epochs", std::to_string(c.train.epochs));
  kv.set("train.batch_size", std::to_string(c.train.batch_size));
  kv.set("train.spsa_a", format_double(c.train.spsa_a));
  kv.set("train.spsa_c", format_double(c.train.spsa_c));
  kv.set("train.spsa_big_a", format_double(c.train.spsa_big_a));
  kv.set("train.spsa_alpha", format_double(c.train.spsa_alpha));
  kv.set("train.spsa_gamma", format_double(c.train.spsa_gamma));
  kv.set("train.max_step", format_double(c.train.max_step));
  kv.set("train.block_tol", format_double(c.train.block_tol));
  kv.set("train.head_lr", format_double(c.train.head_lr));
  kv.set("train.head_steps", std::to_string(c.train.head_steps));
  kv.set("train.head_l2", format_double(c.train.head_l2));
  kv.set("train.momentum", format_double(c.train.momentum));
  kv.set("train.schedule", c.train.schedule == MomentumSchedule::Counting ? "counting" : "fixed");
  kv.set("tol.symmetry", format_double(c.tol.symmetry));
  kv.set("tol.min_eigenvalue", format_double(c.tol.min_eigenvalue));
  kv.set("tol.unit_norm", format_double(c.tol.unit_norm));
  kv.set("tol.orthogonality", format_double(c.tol.orthogonality));
  kv.set("tol.antipodal", format_double(c.tol.antipodal));
  kv.set("tol.tangent", format_double(c.tol.tangent));
  kv.set("tol.invertibility", format_double(c.tol.invertibility));
  if (include_seed) kv.set("seed", std::to_string(c.seed));
  return kv;
}

/// Applies every key of `kv` on top of `base`; unknown keys are errors.
inline ExperimentConfig parse_config(const KeyValue& kv, ExperimentConfig base = {}) {
  using namespace config_detail;
  ExperimentConfig c = base;
  ManifoldKind kind = c.manifold.kind();
  int n = c.manifold.n();
  for (const auto& [key, value] : kv.entries()) {
    auto num = [&] { return parse_double(value, key); };
    auto count = [&] { return parse_count(value, key); };
    if (key == "manifold") kind = parse_manifold_kind(value);
    else if (key == "n") n = static_cast<int>(parse_int(value, key));
    else if (key == "norm") c.norm = parse_norm_choice(value);
    else if (key == "group_size") c.group_size = count();
    else if (key == "algorithm") {
      if (value == "homogeneous") c.algorithm = NormAlgorithm::Homogeneous;
      else if (value == "lie") c.algorithm = NormAlgorithm::LieGroup;
      else throw ValidationError("config: algorithm must be homogeneous or lie");
    }
    else if (key == "conv1.window") c.conv1.window = parse_triple(value, key);
    else if (key == "conv1.stride") c.conv1.stride = parse_triple(value, key);
    else if (key == "conv1.channels") c.conv1.channels = count();
    else if (key == "conv2.window") c.conv2.window = parse_triple(value, key);
    else if (key == "conv2.stride") c.conv2.stride = parse_triple(value, key);
    else if (key == "conv2.channels") c.conv2.channels = count();
    else if (key == "data.classes") c.data.classes = count();
    else if (key == "data.train_per_class") c.data.train_per_class = count();
    else if (key == "data.test_per_class") c.data.test_per_class = count();
    else if (key == "data.spatial") c.data.spatial = parse_triple(value, key);
    else if (key == "data.channels") c.data.channels = count();
    else if (key == "data.delta") c.data.delta = num();
    else if (key == "data.sigma") c.data.sigma = num();
    else if (key == "data.offset_fraction") c.data.offset_fraction = num();
    else if (key == "train.epochs") c.train.epochs = count();
    else if (key == "train.batch_size") c.train.batch_size = count();
    else if (key == "train.spsa_a") c.train.spsa_a = num();
    else if (key == "train.spsa_c") c.train.spsa_c = num();
    else if (key == "train.spsa_big_a") c.train.spsa_big_a = num();
    else if (key == "train.spsa_alpha") c.train.spsa_alpha = num();
    else if (key == "train.spsa_gamma") c.train.spsa_gamma = num();
    else if (key == "train.max_step") c.train.max_step = num();
    else if (key == "train.block_tol") c.train.block_tol = num();
    else if (key == "train.head_lr") c.train.head_lr = num();
    else if (key == "train.head_steps") c.train.head_steps = count();
    else if (key == "train.head_l2") c.train.head_l2 = num();
    else if (key == "train.momentum") c.train.momentum = num();
    else if (key == "train.schedule") {
      if (value == "fixed") c.train.schedule = MomentumSchedule::Fixed;
      else if (value == "counting") c.train.schedule = MomentumSchedule::Counting;
      else throw ValidationError("config: train.schedule must be fixed or counting");
    }
    else if (key == "tol.symmetry") c.tol.symmetry = num();
    else if (key == "tol.min_eigenvalue") c.tol.min_eigenvalue = num();
    else if (key == "tol.unit_norm") c.tol.unit_norm = num();
    else if (key == "tol.orthogonality") c.tol.orthogonality = num();
    else if (key == "tol.antipodal") c.tol.antipodal = num();
    else if (key == "tol.tangent") c.tol.tangent = num();
    else if (key == "tol.invertibility") c.tol.invertibility = num();
    else if (key == "seed") {
      const auto s = parse_int(value, key);
      if (s < 0) throw ValidationError("config: seed must be nonnegative");
      c.seed = static_cast<std::uint64_t>(s);
    }
    else throw ValidationError("config: unknown key '" + key + "'");
  }
  c.manifold = ManifoldId(kind, n);
  validate_config(c);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) { return parse_config(KeyValue::load(path)); }

/// Hash of everything except the seed, so runs of one setup share it.
inline std::string config_hash(const ExperimentConfig& c) { return hex64(fnv1a(config_to_kv(c, false).str())); }

/// MANIFOLDNORM_SEED, when set, replaces the configured seed.
inline void apply_seed_override(ExperimentConfig& c) {
  if (const char* env = std::getenv("MANIFOLDNORM_SEED"); env && *env) {
    const auto s = parse_int(env, "MANIFOLDNORM_SEED");
    if (s < 0) throw ValidationError("MANIFOLDNORM_SEED must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  }
}

}  // namespace manifoldnorm
