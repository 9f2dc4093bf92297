#include "vcd/edit_gate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "vcd/descriptor.hpp"
#include "vcd/rng.hpp"

namespace vcd::gate {
namespace {

using nlohmann::json;

constexpr double kFillThreshold = 1e-4;
constexpr int kBorderWidth = 2;

double gradient_energy(const Frame& f) {
  double s = 0.0;
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      const double gx = 0.5 * (double{f.clamped(x + 1, y)} - f.clamped(x - 1, y));
      const double gy = 0.5 * (double{f.clamped(x, y + 1)} - f.clamped(x, y - 1));
      s += std::sqrt(gx * gx + gy * gy);
    }
  }
  return s / f.pixels.size();
}

struct Moments {
  double sum = 0.0;
  double sq = 0.0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    sq += v * v;
    ++n;
  }
  double stddev() const {
    if (n == 0) return 0.0;
    const double m = sum / n;
    return std::sqrt(std::max(0.0, sq / n - m * m));
  }
};

// Interior spread minus the spread of the flattest border strip (top, bottom,
// left or right): a letterbox or flat fill on any side pushes it up.
double border_uniformity(const Frame& f) {
  Moments strips[4];
  Moments interior;
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      const double v = f.at(x, y);
      const bool top = y < kBorderWidth;
      const bool bottom = y >= f.height - kBorderWidth;
      const bool left = x < kBorderWidth;
      const bool right = x >= f.width - kBorderWidth;
      if (top) strips[0].add(v);
      if (bottom) strips[1].add(v);
      if (left) strips[2].add(v);
      if (right) strips[3].add(v);
      if (!(top || bottom || left || right)) interior.add(v);
    }
  }
  double flattest = strips[0].stddev();
  for (const auto& s : strips) flattest = std::min(flattest, s.stddev());
  return interior.stddev() - flattest;
}

double fill_ratio(const Frame& f) {
  std::size_t filled = 0;
  for (const float p : f.pixels) filled += p > kFillThreshold ? 1 : 0;
  return static_cast<double>(filled) / f.pixels.size();
}

double mean_intensity(const Frame& f) {
  return std::accumulate(f.pixels.begin(), f.pixels.end(), 0.0) / f.pixels.size();
}

std::string verdict_name(Verdict v) { return v == Verdict::Edited ? "edited" : "unedited"; }

Verdict parse_verdict(const std::string& s) {
  if (s == "edited") return Verdict::Edited;
  if (s == "unedited") return Verdict::Unedited;
  throw std::runtime_error("unknown verdict '" + s + "'");
}

FeatureVector array_from_json(const json& j) {
  FeatureVector out{};
  if (!j.is_array() || j.size() != kFeatureCount) {
    throw std::runtime_error("gate model: expected an array of " + std::to_string(kFeatureCount));
  }
  for (std::size_t i = 0; i < kFeatureCount; ++i) out[i] = j.at(i).get<double>();
  return out;
}

}  // namespace

RawFeatures raw_video_features(const std::vector<const Frame*>& frames,
                               const scene::FramePeaks& peaks,
                               const scene::SplitterConfig& config) {
  if (frames.empty()) throw std::invalid_argument("video_features: no frames");
  RawFeatures out;
  Moments temporal;
  double grad = 0.0;
  double border = 0.0;
  double fill = 0.0;
  for (const Frame* f : frames) {
    grad += gradient_energy(*f);
    border += border_uniformity(*f);
    fill += fill_ratio(*f);
    temporal.add(mean_intensity(*f));
  }
  const double n = static_cast<double>(frames.size());
  out.values[0] = grad / n;
  out.values[1] = border / n;
  out.values[2] = temporal.stddev() * temporal.stddev();
  out.values[3] = std::max(scene::peak_persistence(peaks.vertical, config),
                           scene::peak_persistence(peaks.horizontal, config));
  out.values[4] = fill / n;
  if (frames.size() == 1) {
    out.single_frame = true;
    out.values[2] = 0.0;
  }
  return out;
}

FeatureVector normalize_features(const FeatureVector& raw, const FeatureNormalization& norm) {
  FeatureVector out{};
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    out[i] = (raw[i] - norm.mean[i]) / norm.scale[i];
  }
  return out;
}

FeatureVector video_features(const std::vector<const Frame*>& frames, const GateModel& model,
                             const scene::SplitterConfig& config) {
  const auto peaks = scene::collect_peaks(frames, config);
  return normalize_features(raw_video_features(frames, peaks, config).values, model.normalization);
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double edit_score(const FeatureVector& features, const GateModel& model) {
  double z = model.bias;
  for (std::size_t i = 0; i < kFeatureCount; ++i) z += model.weights[i] * features[i];
  return logistic(z);
}

double edit_score(const std::vector<double>& features, const GateModel& model) {
  if (features.size() != kFeatureCount) {
    throw std::invalid_argument("edit_score: expected " + std::to_string(kFeatureCount) +
                                " features, got " + std::to_string(features.size()));
  }
  FeatureVector f{};
  std::copy(features.begin(), features.end(), f.begin());
  return edit_score(f, model);
}

GateResult decide(const std::string& video_id, double score, double alpha, int dimension,
                  double epsilon, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
  GateResult out;
  out.decision = {video_id, score >= alpha ? Verdict::Edited : Verdict::Unedited, score, alpha};
  if (out.decision.verdict == Verdict::Unedited) {
    out.substitute = random_small_descriptor(dimension, epsilon, derive_seed(seed, video_id));
  }
  return out;
}

GateResult gate(const std::string& video_id, const std::vector<const Frame*>& frames,
                const GateModel& model, double alpha, int dimension, double epsilon,
                std::uint64_t seed, const scene::SplitterConfig& config) {
  const double score = edit_score(video_features(frames, model, config), model);
  return decide(video_id, score, alpha, dimension, epsilon, seed);
}

double roc_auc(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("roc_auc: size mismatch");
  double pos = 0.0;
  double neg = 0.0;
  double wins = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    pos += 1.0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  for (const bool l : labels) neg += l ? 0.0 : 1.0;
  if (pos == 0.0 || neg == 0.0) throw std::invalid_argument("roc_auc: need both classes");
  return wins / (pos * neg);
}

TrainReport train_gate(const std::vector<LabeledFeatures>& examples, const TrainOptions& options) {
  std::size_t edited = 0;
  for (const auto& e : examples) edited += e.edited ? 1 : 0;
  const std::size_t unedited = examples.size() - edited;
  if (edited == 0 || unedited == 0) throw std::invalid_argument("train_gate: single-class corpus");
  if (edited < 20 || unedited < 20) {
    throw std::invalid_argument("train_gate: need at least 20 examples per class");
  }

  // Stratified deterministic split.
  Rng rng(options.seed);
  std::vector<std::size_t> pos_idx;
  std::vector<std::size_t> neg_idx;
  for (std::size_t i = 0; i < examples.size(); ++i) (examples[i].edited ? pos_idx : neg_idx).push_back(i);
  std::shuffle(pos_idx.begin(), pos_idx.end(), rng);
  std::shuffle(neg_idx.begin(), neg_idx.end(), rng);
  std::vector<std::size_t> train;
  std::vector<std::size_t> held;
  for (const auto* group : {&pos_idx, &neg_idx}) {
    const auto n_held = static_cast<std::size_t>(std::round(options.holdout_fraction * group->size()));
    for (std::size_t k = 0; k < group->size(); ++k) (k < n_held ? held : train).push_back((*group)[k]);
  }
  std::sort(train.begin(), train.end());
  std::sort(held.begin(), held.end());

  GateModel model;
  model.trained_on = options.corpus_id;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    Moments m;
    for (const std::size_t i : train) m.add(examples[i].raw[f]);
    model.normalization.mean[f] = m.sum / m.n;
    const double sd = m.stddev();
    model.normalization.scale[f] = sd > 1e-12 ? sd : 1.0;
  }
  std::vector<FeatureVector> z(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    z[i] = normalize_features(examples[i].raw, model.normalization);
  }

  const double n = static_cast<double>(train.size());
  for (int it = 0; it < options.iterations; ++it) {
    FeatureVector gw{};
    double gb = 0.0;
    for (const std::size_t i : train) {
      const double err = edit_score(z[i], model) - (examples[i].edited ? 1.0 : 0.0);
      for (std::size_t f = 0; f < kFeatureCount; ++f) gw[f] += err * z[i][f];
      gb += err;
    }
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      model.weights[f] -= options.learning_rate * (gw[f] / n + options.l2 * model.weights[f]);
    }
    model.bias -= options.learning_rate * gb / n;
  }

  auto accuracy = [&](const std::vector<std::size_t>& idx) {
    if (idx.empty()) return 0.0;
    std::size_t ok = 0;
    for (const std::size_t i : idx) ok += (edit_score(z[i], model) >= 0.5) == examples[i].edited ? 1 : 0;
    return static_cast<double>(ok) / idx.size();
  };
  TrainReport report;
  report.train_accuracy = accuracy(train);
  report.heldout_accuracy = accuracy(held);
  report.train_count = train.size();
  report.heldout_count = held.size();
  std::vector<double> scores;
  std::vector<bool> labels;
  for (const std::size_t i : held) {
    scores.push_back(edit_score(z[i], model));
    labels.push_back(examples[i].edited);
  }
  bool both = std::find(labels.begin(), labels.end(), true) != labels.end() &&
              std::find(labels.begin(), labels.end(), false) != labels.end();
  report.heldout_auc = both ? roc_auc(scores, labels) : 0.0;
  report.model = std::move(model);
  return report;
}

std::string to_string(Verdict v) { return verdict_name(v); }

void save_model(const std::filesystem::path& path, const GateModel& model) {
  json j;
  j["weights"] = model.weights;
  j["bias"] = model.bias;
  j["feature_mean"] = model.normalization.mean;
  j["feature_scale"] = model.normalization.scale;
  j["trained_on"] = model.trained_on;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

GateModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open gate model " + path.string());
  const json j = json::parse(in);
  GateModel m;
  m.weights = array_from_json(j.at("weights"));
  m.bias = j.at("bias").get<double>();
  m.normalization.mean = array_from_json(j.at("feature_mean"));
  m.normalization.scale = array_from_json(j.at("feature_scale"));
  m.trained_on = j.value("trained_on", "");
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (!std::isfinite(m.weights[i]) || !std::isfinite(m.normalization.mean[i]) ||
        !(std::isfinite(m.normalization.scale[i]) && m.normalization.scale[i] > 0.0)) {
      throw std::runtime_error("gate model has non-finite parameters");
    }
  }
  if (!std::isfinite(m.bias)) throw std::runtime_error("gate model has non-finite bias");
  return m;
}

std::string decisions_to_jsonl(const std::vector<GateDecision>& decisions) {
  std::string out;
  for (const auto& d : decisions) {
    json j;
    j["video_id"] = d.video_id;
    j["score"] = d.score;
    j["verdict"] = verdict_name(d.verdict);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<GateDecision> decisions_from_jsonl(const std::string& text) {
  std::vector<GateDecision> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      GateDecision d;
      d.video_id = j.at("video_id").get<std::string>();
      d.score = j.at("score").get<double>();
      if (j.contains("verdict")) d.verdict = parse_verdict(j.at("verdict").get<std::string>());
      out.push_back(std::move(d));
    } catch (const std::exception& e) {
      throw std::runtime_error("gate decisions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::map<std::string, double> load_external_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open external scores " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  std::map<std::string, double> out;
  for (const auto& d : decisions_from_jsonl(ss.str())) {
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw std::runtime_error("external score for '" + d.video_id + "' outside [0,1]");
    }
    out[d.video_id] = d.score;
  }
  return out;
}

}  // namespace vcd::gate
