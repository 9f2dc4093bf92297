#include "vcd/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "vcd/descriptor_io.hpp"
#include "vcd/evaluation.hpp"

namespace vcd::commands {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path resolve(const pipeline::PipelineConfig& config, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : fs::path(config.corpus_dir) / path;
}

std::string layouts_to_jsonl(const std::vector<pipeline::LayoutRecord>& layouts) {
  std::string out;
  for (const auto& l : layouts) {
    json j = {{"video_id", l.video_id},
              {"kind", scene::to_string(l.layout.kind)},
              {"x", l.layout.x},
              {"y", l.layout.y},
              {"confidence", l.layout.confidence}};
    out += j.dump() + "\n";
  }
  return out;
}

std::string errors_to_jsonl(const std::vector<pipeline::ErrorRecord>& errors) {
  std::string out;
  for (const auto& e : errors) {
    out += json({{"video_id", e.video_id}, {"stage", e.stage}, {"message", e.message}}).dump() + "\n";
  }
  return out;
}

pipeline::RunManifest start_manifest(const std::string& command, const pipeline::PipelineConfig& config) {
  pipeline::RunManifest m;
  m.command = command;
  m.config = pipeline::to_json(config);
  return m;
}

void record_output(pipeline::RunManifest& m, const fs::path& p) { m.outputs[p.string()] = pipeline::sha256_file(p); }
void record_input(pipeline::RunManifest& m, const fs::path& p) { m.inputs[p.string()] = pipeline::sha256_file(p); }

}  // namespace

int gen_corpus(const pipeline::PipelineConfig& config, std::ostream& log) {
  auto manifest = start_manifest("gen-corpus", config);
  auto t0 = Clock::now();
  const auto corpus = eval::generate_corpus(config.corpus);
  manifest.timings_ms["generate"] = ms_since(t0);
  const fs::path dir(config.corpus_dir);
  t0 = Clock::now();
  pipeline::write_corpus(dir, corpus);
  manifest.timings_ms["write"] = ms_since(t0);

  t0 = Clock::now();
  const auto report = pipeline::train_synthetic_gate(config.corpus, config);
  gate::save_model(dir / "gate_model.json", report.model);
  manifest.timings_ms["train_gate"] = ms_since(t0);

  record_output(manifest, dir / "manifest.json");
  record_output(manifest, dir / "ground_truth.csv");
  record_output(manifest, dir / "gate_model.json");
  fs::create_directories(config.output_dir);
  pipeline::write_run_manifest(fs::path(config.output_dir) / "run_manifest_gen-corpus.json", manifest);
  log << "corpus: " << corpus.videos.size() << " videos, " << corpus.truth.pairs.size()
      << " ground-truth pairs -> " << dir.string() << "\n"
      << "gate: held-out accuracy " << report.heldout_accuracy << ", AUC " << report.heldout_auc << "\n";
  return 0;
}

int describe(const pipeline::PipelineConfig& config, std::ostream& log) {
  pipeline::validate(config);
  auto manifest = start_manifest("describe", config);
  const fs::path dir(config.corpus_dir);
  const fs::path out(config.output_dir);
  fs::create_directories(out);

  auto t0 = Clock::now();
  const auto entries = pipeline::read_manifest(dir);
  record_input(manifest, dir / "manifest.json");
  std::vector<Video> videos;
  std::vector<pipeline::ErrorRecord> load_errors;
  std::vector<eval::Role> roles;
  for (const auto& e : entries) {
    try {
      videos.push_back(pipeline::load_video(dir, e));
      roles.push_back(e.role);
      if (!e.file.empty()) record_input(manifest, dir / e.file);
    } catch (const std::exception& ex) {
      load_errors.push_back({e.id, "load", ex.what()});
    }
  }
  pipeline::DescribeInputs inputs;
  for (std::size_t i = 0; i < videos.size(); ++i) {
    switch (roles[i]) {
      case eval::Role::Reference: inputs.references.push_back(&videos[i]); break;
      case eval::Role::Background: inputs.background.push_back(&videos[i]); break;
      default: inputs.queries.push_back(&videos[i]); break;
    }
  }
  manifest.timings_ms["load"] = ms_since(t0);

  std::optional<gate::GateModel> model;
  std::optional<std::map<std::string, double>> external;
  if (config.gate.enabled) {
    if (!config.gate.external_scores_path.empty()) {
      const auto p = resolve(config, config.gate.external_scores_path);
      external = gate::load_external_scores(p);
      record_input(manifest, p);
    } else {
      const auto p = resolve(config, config.gate.model_path.empty() ? "gate_model.json" : config.gate.model_path);
      model = gate::load_model(p);
      record_input(manifest, p);
    }
  }

  t0 = Clock::now();
  auto result = pipeline::describe(inputs, config,
                                   {model ? &*model : nullptr, external ? &*external : nullptr});
  manifest.timings_ms["describe"] = ms_since(t0);
  result.errors.insert(result.errors.begin(), load_errors.begin(), load_errors.end());

  write_descriptors(out / kReferenceFile, result.references);
  write_descriptors(out / kQueryFile, result.queries);
  write_descriptors(out / kBackgroundFile, result.background);
  write_text(out / kDecisionFile, gate::decisions_to_jsonl(result.decisions));
  write_text(out / kLayoutFile, layouts_to_jsonl(result.layouts));
  write_text(out / kErrorFile, errors_to_jsonl(result.errors));
  for (const char* f : {kReferenceFile, kQueryFile, kBackgroundFile, kDecisionFile, kLayoutFile, kErrorFile}) {
    record_output(manifest, out / f);
  }
  manifest.error_count = result.errors.size();
  pipeline::write_run_manifest(out / "run_manifest_describe.json", manifest);

  std::size_t unedited = 0;
  for (const auto& d : result.decisions) unedited += d.verdict == gate::Verdict::Unedited ? 1 : 0;
  log << "describe: " << result.references.records.size() << " reference, " << result.queries.records.size()
      << " query, " << result.background.records.size() << " background descriptors; " << unedited
      << " queries gated unedited; " << result.errors.size() << " errors\n";
  return result.errors.empty() ? 0 : 2;
}

int search(const pipeline::PipelineConfig& config, std::ostream& log) {
  pipeline::validate(config);
  auto manifest = start_manifest("search", config);
  const fs::path out(config.output_dir);
  auto t0 = Clock::now();
  const auto refs = read_descriptors(out / kReferenceFile);
  const auto queries = read_descriptors(out / kQueryFile);
  record_input(manifest, out / kReferenceFile);
  record_input(manifest, out / kQueryFile);
  std::optional<DescriptorSet> background;
  if (fs::exists(out / kBackgroundFile)) {
    background = read_descriptors(out / kBackgroundFile);
    record_input(manifest, out / kBackgroundFile);
  }
  std::vector<gate::GateDecision> decisions;
  if (fs::exists(out / kDecisionFile)) {
    decisions = gate::decisions_from_jsonl(read_text(out / kDecisionFile));
    record_input(manifest, out / kDecisionFile);
  }
  manifest.timings_ms["load"] = ms_since(t0);
  t0 = Clock::now();
  const auto pairs =
      pipeline::search(refs, queries, background ? &*background : nullptr, decisions, config);
  manifest.timings_ms["search"] = ms_since(t0);
  retrieval::write_candidates(out / kCandidateFile, pairs);
  record_output(manifest, out / kCandidateFile);
  pipeline::write_run_manifest(out / "run_manifest_search.json", manifest);
  log << "search: " << pairs.size() << " candidate pairs -> " << (out / kCandidateFile).string() << "\n";
  return 0;
}

int evaluate(const pipeline::PipelineConfig& config, const std::optional<fs::path>& candidates,
             const std::optional<fs::path>& truth, std::ostream& log) {
  const fs::path out(config.output_dir);
  const fs::path cpath = candidates.value_or(out / kCandidateFile);
  const fs::path tpath = truth.value_or(fs::path(config.corpus_dir) / "ground_truth.csv");
  auto manifest = start_manifest("evaluate", config);
  auto t0 = Clock::now();
  const auto pairs = retrieval::read_candidates(cpath);
  const auto gt = eval::read_truth(tpath);
  record_input(manifest, cpath);
  record_input(manifest, tpath);
  const double uap = eval::micro_ap(pairs, gt);
  std::size_t covered = 0;
  for (const auto& p : pairs) covered += gt.pairs.contains({p.query_id, p.reference_id}) ? 1 : 0;
  const json report = {{"micro_ap", uap},
                       {"candidates", pairs.size()},
                       {"ground_truth_pairs", gt.pairs.size()},
                       {"covered_positives", covered},
                       {"candidates_file", cpath.string()},
                       {"ground_truth_file", tpath.string()}};
  fs::create_directories(out);
  write_text(out / "evaluation.json", report.dump(2) + "\n");
  manifest.timings_ms["evaluate"] = ms_since(t0);
  record_output(manifest, out / "evaluation.json");
  pipeline::write_run_manifest(out / "run_manifest_evaluate.json", manifest);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", uap);
  log << "uAP " << buf << " (" << covered << "/" << gt.pairs.size() << " positives retrieved)\n";
  return 0;
}

int ablate(const pipeline::PipelineConfig& config, std::ostream& log) {
  pipeline::validate(config);
  auto manifest = start_manifest("ablate", config);
  auto t0 = Clock::now();
  const auto corpus = eval::generate_corpus(config.corpus);
  const auto trained = pipeline::train_synthetic_gate(config.corpus, config);
  const auto report = pipeline::run_ablation(corpus, trained.model, config);
  const double seconds = ms_since(t0) / 1000.0;
  json j = pipeline::to_json(report);
  j["gate_heldout_auc"] = pipeline::gate_auc(corpus, trained.model, config);
  j["seconds"] = seconds;
  j["config"] = pipeline::to_json(config);
  fs::create_directories(config.output_dir);
  const fs::path out = fs::path(config.output_dir) / "ablation.json";
  write_text(out, j.dump(2) + "\n");
  manifest.timings_ms["ablate"] = seconds * 1000.0;
  record_output(manifest, out);
  pipeline::write_run_manifest(fs::path(config.output_dir) / "run_manifest_ablate.json", manifest);
  char buf[160];
  log << "Method            uAP\n";
  std::snprintf(buf, sizeof(buf), "Basic model       %.4f\n+ FSD             %.4f\n+ VED             %.4f\n",
                report.basic, report.fsd, report.ved);
  log << buf;
  return 0;
}

int losscheck(const pipeline::LossCheckOptions& options, const std::optional<fs::path>& report_path,
              std::ostream& out) {
  const auto report = pipeline::run_losscheck(options);
  out << report.json.dump(2) << "\n";
  if (report_path) write_text(*report_path, report.json.dump(2) + "\n");
  if (!report.passed) {
    out << "losscheck FAILED: worst component " << report.json["worst_component"].get<std::string>() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace vcd::commands
