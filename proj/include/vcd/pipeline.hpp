#pragma once

// End-to-end orchestration: describe (gate, split, embed), search, evaluate.
//
// Configuration is a YAML tree; `key.path=value` overrides are applied on top
// and always win. Unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vcd/descriptor_io.hpp"
#include "vcd/edit_gate.hpp"
#include "vcd/evaluation.hpp"
#include "vcd/retrieval.hpp"
#include "vcd/scene_split.hpp"

namespace vcd::pipeline {

struct GateParams {
  bool enabled = true;
  double alpha = gate::kDefaultAlpha;
  double epsilon = kDefaultEpsilon;
  std::uint64_t seed = 0;
  std::string model_path;             // relative paths resolve against corpus_dir
  std::string external_scores_path;   // JSON lines {video_id, score}; wins over the model
};

struct PipelineConfig {
  double sampling_fps = 1.0;
  std::string embedder = "reference";
  GateParams gate;
  bool split_enabled = true;
  scene::SplitterConfig splitter;
  retrieval::NormalizationConfig normalization;
  int top_k = 20;
  std::string corpus_dir = "corpus";
  std::string output_dir = "out";
  eval::CorpusConfig corpus;
};

void validate(const PipelineConfig& config);

nlohmann::json to_json(const PipelineConfig& config);
PipelineConfig config_from_json(const nlohmann::json& j);

// YAML text -> config. Overrides are "dotted.key=value" strings.
PipelineConfig parse_config(const std::string& yaml_text, const std::vector<std::string>& overrides = {});
PipelineConfig load_config(const std::optional<std::filesystem::path>& path,
                           const std::vector<std::string>& overrides = {});

struct GateSource {
  const gate::GateModel* model = nullptr;
  const std::map<std::string, double>* external_scores = nullptr;
};

struct LayoutRecord {
  std::string video_id;
  scene::SceneLayout layout;
};

struct ErrorRecord {
  std::string video_id;
  std::string stage;
  std::string message;
};

struct DescribeOutput {
  DescriptorSet references;
  DescriptorSet queries;
  DescriptorSet background;
  std::vector<gate::GateDecision> decisions;
  std::vector<LayoutRecord> layouts;
  std::vector<ErrorRecord> errors;
};

struct DescribeInputs {
  std::vector<const Video*> references;
  std::vector<const Video*> queries;
  std::vector<const Video*> background;
};

// References and background are embedded per sampled frame. Queries pass the
// gate when enabled (Unedited: one substitute record) and are otherwise split
// into scene tracks before embedding. Per-video failures become ErrorRecords.
DescribeOutput describe(const DescribeInputs& inputs, const PipelineConfig& config, const GateSource& gate);

std::vector<retrieval::CandidatePair> search(const DescriptorSet& references, const DescriptorSet& queries,
                                             const DescriptorSet* background,
                                             const std::vector<gate::GateDecision>& decisions,
                                             const PipelineConfig& config);

// Logistic gate trained on a separately seeded synthetic corpus drawn with the
// same generator settings as `corpus` (edited: positive and stacked queries;
// unedited: distractors and references).
gate::TrainReport train_synthetic_gate(const eval::CorpusConfig& corpus, const PipelineConfig& config);

std::vector<gate::LabeledFeatures> gate_examples(const eval::Corpus& corpus, const PipelineConfig& config,
                                                 bool include_references);

// Held-out AUC of the model on the query videos of `corpus`.
double gate_auc(const eval::Corpus& corpus, const gate::GateModel& model, const PipelineConfig& config);

struct AblationReport {
  double basic = 0.0;
  double fsd = 0.0;
  double ved = 0.0;
};

nlohmann::json to_json(const AblationReport& report);

// Three runs over the same corpus: neither switch, +split, +split+gate.
AblationReport run_ablation(const eval::Corpus& corpus, const gate::GateModel& model,
                            const PipelineConfig& config);

std::vector<retrieval::CandidatePair> run_corpus(const eval::Corpus& corpus, const gate::GateModel* model,
                                                 PipelineConfig config, bool split, bool gated);

// --- on-disk corpus ---------------------------------------------------------

struct ManifestEntry {
  std::string id;
  eval::Role role = eval::Role::Reference;
  std::uint64_t seed = 0;
  std::string file;        // VCDV container, relative to the corpus dir
  std::string frames_dir;  // alternatively a netpbm directory
  double fps = 0.0;
  std::vector<std::string> sources;
};

// Writes videos/, manifest.json, ground_truth.csv.
void write_corpus(const std::filesystem::path& dir, const eval::Corpus& corpus);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir);
Video load_video(const std::filesystem::path& dir, const ManifestEntry& entry);

// --- run manifests ------------------------------------------------------------

std::string sha256_hex(const std::vector<std::uint8_t>& bytes);
std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::map<std::string, std::string> inputs;   // path -> sha256
  std::map<std::string, std::string> outputs;  // path -> sha256
  std::map<std::string, double> timings_ms;
  std::size_t error_count = 0;

  // Hash of command, config and input digests; independent of timings.
  std::string content_hash() const;
  nlohmann::json to_json() const;
};

void write_run_manifest(const std::filesystem::path& path, const RunManifest& manifest);

// --- loss self-check -----------------------------------------------------------

struct LossCheckOptions {
  double tau = 0.05;
  double lambda = 1.0;
  int batches = 100;
  std::uint64_t seed = 0;
  double tolerance = 1e-5;
  int train_steps = 200;
  double learning_rate = 0.01;
};

struct LossCheckReport {
  nlohmann::json json;
  bool passed = false;
};

// Throws std::invalid_argument for invalid tau/lambda before running anything.
LossCheckReport run_losscheck(const LossCheckOptions& options);

}  // namespace vcd::pipeline
