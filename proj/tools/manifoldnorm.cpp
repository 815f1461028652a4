// Command-line front end: gen, train, eval, sweep, selftest.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "manifoldnorm/manifoldnorm.hpp"

namespace mn = manifoldnorm;

namespace {

mn::ExperimentConfig config_from(const std::string& path) {
  mn::ExperimentConfig c = mn::load_config(path);
  mn::apply_seed_override(c);
  mn::validate_config(c);
  return c;
}

std::vector<mn::NormChoice> parse_vary(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || mn::kv_detail::trim(spec.substr(0, eq)) != "norm")
    throw mn::ValidationError("--vary expects norm=<list>, got '" + spec + "'");
  std::vector<mn::NormChoice> out;
  for (const auto& item : mn::split_list(spec.substr(eq + 1))) out.push_back(mn::parse_norm_choice(mn::kv_detail::trim(item)));
  if (out.empty()) throw mn::ValidationError("--vary: empty norm list");
  return out;
}

int cmd_gen(const std::string& config, const std::string& out) {
  const mn::ExperimentConfig c = config_from(config);
  const mn::Dataset d = mn::generate_synthetic(c, c.seed);
  mn::write_dataset(out, d);
  std::cout << "wrote " << d.labels.size() << " samples to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& config, const std::string& data, const std::string& out) {
  const mn::ExperimentConfig c = config_from(config);
  const mn::Dataset d = mn::read_dataset(data);
  const mn::RunOutput run = mn::run_on_dataset(c, d);
  mn::write_run(out, run);
  std::cout << mn::table_header() << "\n" << mn::table_row(run.report) << "\n";
  return 0;
}

int cmd_eval(const std::string& model_dir, const std::string& data) {
  const mn::Model model = mn::load_model(model_dir);
  const mn::Dataset d = mn::read_dataset(data);
  std::cout << mn::report_metrics(mn::evaluate_report(model, d)).str();
  return 0;
}

int cmd_sweep(const std::string& config, const std::string& vary, const std::string& out) {
  const mn::ExperimentConfig c = config_from(config);
  const auto reports = mn::sweep_norms(c, parse_vary(vary));
  std::ostringstream table;
  table << mn::table_header() << "\n";
  for (const auto& r : reports) table << mn::table_row(r) << "\n";
  std::cout << table.str();
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    std::ofstream f(std::filesystem::path(out) / "results.tsv");
    f << table.str();
    if (!f) throw mn::ValidationError("write failed: " + out);
  }
  return 0;
}

int cmd_selftest(std::uint64_t seed, bool quiet) {
  bool ok = true;
  for (const auto& s : mn::run_selftest(seed)) {
    mn::print_suite(std::cout, s, !quiet);
    ok = ok && s.passed();
  }
  std::cout << (ok ? "selftest passed" : "selftest FAILED") << "\n";
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Riemannian normalization experiments on manifold-valued grids"};
  app.require_subcommand(1);

  std::string config, data, out, model_dir, vary;
  std::uint64_t seed = 20240601;
  bool quiet = false;

  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--config", config, "config file")->required();
  gen->add_option("--out", out, "dataset file")->required();

  auto* train = app.add_subcommand("train", "train a model and write model.txt, report.txt, results.tsv");
  train->add_option("--config", config, "config file")->required();
  train->add_option("--data", data, "dataset file")->required();
  train->add_option("--out", out, "output directory")->required();

  auto* eval = app.add_subcommand("eval", "score a trained model on a dataset");
  eval->add_option("--model", model_dir, "directory written by train")->required();
  eval->add_option("--data", data, "dataset file")->required();

  auto* sweep = app.add_subcommand("sweep", "train one model per norm choice on a shared dataset");
  sweep->add_option("--config", config, "config file")->required();
  sweep->add_option("--vary", vary, "norm=<comma list>")->required();
  sweep->add_option("--out", out, "directory for results.tsv");

  auto* selftest = app.add_subcommand("selftest", "run the property suite");
  selftest->add_option("--seed", seed, "suite seed");
  selftest->add_flag("--quiet", quiet, "suite summaries only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*gen) return cmd_gen(config, out);
    if (*train) return cmd_train(config, data, out);
    if (*eval) return cmd_eval(model_dir, data);
    if (*sweep) return cmd_sweep(config, vary, out);
    if (*selftest) return cmd_selftest(seed, quiet);
  } catch (const mn::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const mn::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
