#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vcd/commands.hpp"
#include "vcd/pipeline.hpp"

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string corpus_dir;
  std::string output_dir;
  int threads = 0;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config_path, "YAML configuration file")->check(CLI::ExistingFile);
  app->add_option("--set", c.overrides, "Override a config key: dotted.key=value (repeatable)");
  app->add_option("--corpus", c.corpus_dir, "Corpus directory (overrides corpus_dir)");
  app->add_option("--out", c.output_dir, "Output directory (overrides output_dir)");
  app->add_option("--threads", c.threads, "Worker threads (overrides VCD_THREADS)")->check(CLI::PositiveNumber);
}

vcd::pipeline::PipelineConfig resolve(const Common& c) {
  if (c.threads > 0) setenv("VCD_THREADS", std::to_string(c.threads).c_str(), 1);
  std::vector<std::string> overrides = c.overrides;
  if (!c.corpus_dir.empty()) overrides.push_back("corpus_dir=" + c.corpus_dir);
  if (!c.output_dir.empty()) overrides.push_back("output_dir=" + c.output_dir);
  std::optional<std::filesystem::path> path;
  if (!c.config_path.empty()) path = c.config_path;
  return vcd::pipeline::load_config(path, overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vcd: video copy detection with edit gating and scene splitting"};
  app.require_subcommand(1);

  Common common;
  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic corpus with ground truth and a gate model");
  auto* describe = app.add_subcommand("describe", "Gate, split and embed corpus videos into descriptor files");
  auto* search = app.add_subcommand("search", "Normalized search over descriptor files, writes candidates.csv");
  auto* evaluate = app.add_subcommand("evaluate", "Micro-average precision of a candidate list");
  auto* ablate = app.add_subcommand("ablate", "Basic / +FSD / +VED ablation on a synthetic corpus");
  auto* losscheck = app.add_subcommand("losscheck", "Finite-difference check of the training losses");
  for (auto* sub : {gen, describe, search, evaluate, ablate}) add_common(sub, common);

  std::string candidates;
  std::string truth;
  evaluate->add_option("--candidates", candidates, "Candidate CSV (default <out>/candidates.csv)");
  evaluate->add_option("--ground-truth", truth, "Ground truth CSV (default <corpus>/ground_truth.csv)");

  vcd::pipeline::LossCheckOptions loss_opts;
  std::string loss_report;
  losscheck->add_option("--tau", loss_opts.tau, "InfoNCE temperature");
  losscheck->add_option("--lambda", loss_opts.lambda, "KoLeo weight");
  losscheck->add_option("--batches", loss_opts.batches, "Random batches to check");
  losscheck->add_option("--seed", loss_opts.seed, "Master seed");
  losscheck->add_option("--steps", loss_opts.train_steps, "Toy trainer steps");
  losscheck->add_option("--lr", loss_opts.learning_rate, "Toy trainer learning rate");
  losscheck->add_option("--report", loss_report, "Also write the JSON report here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*losscheck) {
      std::optional<std::filesystem::path> report;
      if (!loss_report.empty()) report = loss_report;
      return vcd::commands::losscheck(loss_opts, report, std::cout);
    }
    const auto config = resolve(common);
    if (*gen) return vcd::commands::gen_corpus(config, std::cout);
    if (*describe) return vcd::commands::describe(config, std::cout);
    if (*search) return vcd::commands::search(config, std::cout);
    if (*ablate) return vcd::commands::ablate(config, std::cout);
    if (*evaluate) {
      std::optional<std::filesystem::path> c;
      std::optional<std::filesystem::path> t;
      if (!candidates.empty()) c = candidates;
      if (!truth.empty()) t = truth;
      return vcd::commands::evaluate(config, c, t, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
