#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vcd/frame.hpp"
#include "vcd/scene_split.hpp"

namespace vcd::gate {

inline constexpr std::size_t kFeatureCount = 5;
inline constexpr double kDefaultAlpha = 0.1;

// gradient energy, border uniformity, temporal variance, seam persistence, fill ratio
using FeatureVector = std::array<double, kFeatureCount>;

struct RawFeatures {
  FeatureVector values{};
  bool single_frame = false;  // temporal variance forced to 0
};

struct FeatureNormalization {
  FeatureVector mean{};
  FeatureVector scale{1.0, 1.0, 1.0, 1.0, 1.0};
};

struct GateModel {
  FeatureVector weights{};
  double bias = 0.0;
  FeatureNormalization normalization;
  std::string trained_on;
};

enum class Verdict { Edited, Unedited };

struct GateDecision {
  std::string video_id;
  Verdict verdict = Verdict::Edited;
  double score = 0.0;
  double threshold_used = kDefaultAlpha;
};

struct GateResult {
  GateDecision decision;
  std::optional<std::vector<double>> substitute;  // set iff verdict is Unedited
};

RawFeatures raw_video_features(const std::vector<const Frame*>& frames,
                               const scene::FramePeaks& peaks,
                               const scene::SplitterConfig& config = {});

FeatureVector normalize_features(const FeatureVector& raw, const FeatureNormalization& norm);

// Derives peaks itself and z-scores with the model's constants.
FeatureVector video_features(const std::vector<const Frame*>& frames, const GateModel& model,
                             const scene::SplitterConfig& config = {});

double logistic(double x);

// logistic(weights . features + bias)
double edit_score(const FeatureVector& features, const GateModel& model);
double edit_score(const std::vector<double>& features, const GateModel& model);

// score >= alpha is Edited. Unedited videos receive one epsilon-norm
// descriptor seeded from (seed, video_id).
GateResult decide(const std::string& video_id, double score, double alpha, int dimension,
                  double epsilon, std::uint64_t seed);

GateResult gate(const std::string& video_id, const std::vector<const Frame*>& frames,
                const GateModel& model, double alpha, int dimension, double epsilon,
                std::uint64_t seed, const scene::SplitterConfig& config = {});

struct LabeledFeatures {
  FeatureVector raw{};
  bool edited = false;
};

struct TrainOptions {
  std::uint64_t seed = 0;
  double holdout_fraction = 0.2;
  int iterations = 2000;
  double learning_rate = 0.5;
  double l2 = 1e-4;
  std::string corpus_id = "synthetic";
};

struct TrainReport {
  GateModel model;
  double train_accuracy = 0.0;
  double heldout_accuracy = 0.0;
  double heldout_auc = 0.0;
  std::size_t train_count = 0;
  std::size_t heldout_count = 0;
};

// Logistic regression by full-batch gradient descent on cross-entropy.
// Requires >= 20 examples per class.
TrainReport train_gate(const std::vector<LabeledFeatures>& examples, const TrainOptions& options = {});

// Rank-based AUC (ties count one half).
double roc_auc(const std::vector<double>& scores, const std::vector<bool>& labels);

std::string to_string(Verdict v);

void save_model(const std::filesystem::path& path, const GateModel& model);
GateModel load_model(const std::filesystem::path& path);

// JSON lines {video_id, score, verdict}.
std::string decisions_to_jsonl(const std::vector<GateDecision>& decisions);
std::vector<GateDecision> decisions_from_jsonl(const std::string& text);
std::map<std::string, double> load_external_scores(const std::filesystem::path& path);

}  // namespace vcd::gate
