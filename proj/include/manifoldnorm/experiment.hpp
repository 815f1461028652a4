#pragma once

// generate -> train -> evaluate -> report, plus the norm sweep.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "manifoldnorm/config.hpp"
#include "manifoldnorm/dataset.hpp"
#include "manifoldnorm/keyvalue.hpp"
#include "manifoldnorm/model.hpp"

namespace manifoldnorm {

struct Report {
  std::string variant;
  std::string manifold;
  std::string norm;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::size_t param_count = 0;
  std::size_t epochs = 0;
  std::size_t train_samples = 0;
  std::size_t test_samples = 0;
  double train_accuracy = 0.0;
  double train_loss = 0.0;
  double test_accuracy = 0.0;
  double test_loss = 0.0;
  std::vector<double> loss_curve;      // training loss after each epoch
  std::vector<double> accuracy_curve;  // training accuracy after each epoch
  std::size_t skipped_steps = 0;
  double seconds_per_epoch = 0.0;      // wall time; not part of the metrics
};

inline std::string variant_name(const ExperimentConfig& c) {
  std::string v = std::string("manifoldnet-") + norm_choice_name(c.norm);
  if (c.has_norm() && c.algorithm == NormAlgorithm::LieGroup) v += "-lie";
  return v;
}

/// Everything but the wall time, in a fixed order.
inline KeyValue report_metrics(const Report& r) {
  KeyValue kv;
  kv.set("variant", r.variant);
  kv.set("manifold", r.manifold);
  kv.set("norm", r.norm);
  kv.set("seed", std::to_string(r.seed));
  kv.set("config_hash", r.config_hash);
  kv.set("param_count", std::to_string(r.param_count));
  kv.set("epochs", std::to_string(r.epochs));
  kv.set("train_samples", std::to_string(r.train_samples));
  kv.set("test_samples", std::to_string(r.test_samples));
  kv.set("train_accuracy", format_double(r.train_accuracy));
  kv.set("train_loss", format_double(r.train_loss));
  kv.set("test_accuracy", format_double(r.test_accuracy));
  kv.set("test_loss", format_double(r.test_loss));
  kv.set("loss_curve", join_doubles(r.loss_curve));
  kv.set("accuracy_curve", join_doubles(r.accuracy_curve));
  kv.set("skipped_steps", std::to_string(r.skipped_steps));
  return kv;
}

inline KeyValue report_to_kv(const Report& r) {
  KeyValue kv = report_metrics(r);
  kv.set("seconds_per_epoch", format_double(r.seconds_per_epoch));
  return kv;
}

inline bool same_metrics(const Report& a, const Report& b) {
  return report_metrics(a).str() == report_metrics(b).str();
}

inline std::string table_header() { return "variant\tmanifold\tseed\tparams\tsec_per_epoch\ttest_accuracy"; }

inline std::string table_row(const Report& r) {
  char t[32];
  std::snprintf(t, sizeof t, "%.3f", r.seconds_per_epoch);
  char a[32];
  std::snprintf(a, sizeof a, "%.4f", r.test_accuracy);
  return r.variant + "\t" + r.manifold + "\t" + std::to_string(r.seed) + "\t" + std::to_string(r.param_count) +
         "\t" + t + "\t" + a;
}

/// Report for a model on a dataset: scores on both splits, no training data.
inline Report evaluate_report(const Model& model, const Dataset& data) {
  Report r;
  r.variant = variant_name(model.config);
  r.manifold = model.config.manifold.name();
  r.norm = norm_choice_name(model.config.norm);
  r.seed = model.config.seed;
  r.config_hash = config_hash(model.config);
  r.param_count = param_count(model);
  const auto train_idx = data.indices(false);
  const auto test_idx = data.indices(true);
  r.train_samples = train_idx.size();
  r.test_samples = test_idx.size();
  if (!train_idx.empty()) {
    const Scores s = evaluate(model, data, train_idx);
    r.train_accuracy = s.accuracy;
    r.train_loss = s.loss;
  }
  if (!test_idx.empty()) {
    const Scores s = evaluate(model, data, test_idx);
    r.test_accuracy = s.accuracy;
    r.test_loss = s.loss;
  }
  return r;
}

struct RunOutput {
  Model model;
  Report report;
};

/// Trains on the dataset's training split and scores the held-out split.
inline RunOutput run_on_dataset(const ExperimentConfig& config, const Dataset& data) {
  TrainResult tr = train_model(config, data);
  Report r = evaluate_report(tr.model, data);
  r.epochs = tr.epochs.size();
  double total = 0.0;
  for (const auto& e : tr.epochs) {
    r.loss_curve.push_back(e.train_loss);
    r.accuracy_curve.push_back(e.train_accuracy);
    r.skipped_steps += e.skipped_steps;
    total += e.seconds;
  }
  r.seconds_per_epoch = tr.epochs.empty() ? 0.0 : total / static_cast<double>(tr.epochs.size());
  return {std::move(tr.model), std::move(r)};
}

inline RunOutput run_experiment(const ExperimentConfig& config) {
  return run_on_dataset(config, generate_synthetic(config, config.seed));
}

/// Writes model.txt, report.txt and results.tsv into `dir`.
inline void write_run(const std::string& dir, const RunOutput& run) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path d(dir);
  model_to_kv(run.model).save((d / "model.txt").string());
  report_to_kv(run.report).save((d / "report.txt").string());
  std::ofstream tsv(d / "results.tsv");
  tsv << table_header() << "\n" << table_row(run.report) << "\n";
  if (!tsv) throw ValidationError("write failed: " + (d / "results.tsv").string());
}

inline Model load_model(const std::string& dir) {
  return model_from_kv(KeyValue::load((std::filesystem::path(dir) / "model.txt").string()));
}

/// One run per norm choice on a shared dataset.
inline std::vector<Report> sweep_norms(const ExperimentConfig& base, const std::vector<NormChoice>& norms) {
  const Dataset data = generate_synthetic(base, base.seed);
  std::vector<Report> out;
  for (NormChoice n : norms) {
    ExperimentConfig c = base;
    c.norm = n;
    validate_config(c);
    out.push_back(run_on_dataset(c, data).report);
  }
  return out;
}

}  // namespace manifoldnorm
