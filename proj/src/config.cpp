#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>

#include <yaml-cpp/yaml.h>

#include "vcd/pipeline.hpp"

namespace vcd::pipeline {
namespace {

using nlohmann::json;

json scalar_to_json(const std::string& s) {
  static const std::regex int_re(R"([-+]?[0-9]+)");
  static const std::regex float_re(R"([-+]?([0-9]+\.?[0-9]*|\.[0-9]+)([eE][-+]?[0-9]+)?)");
  if (s == "true" || s == "True") return true;
  if (s == "false" || s == "False") return false;
  if (std::regex_match(s, int_re)) {
    try {
      if (s[0] == '-') return std::stoll(s);
      return std::stoull(s[0] == '+' ? s.substr(1) : s);
    } catch (const std::out_of_range&) {
    }
  }
  if (std::regex_match(s, float_re)) return std::stod(s);
  return s;
}

json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined: return nullptr;
    case YAML::NodeType::Scalar: return scalar_to_json(node.Scalar());
    case YAML::NodeType::Sequence: {
      json arr = json::array();
      for (const auto& child : node) arr.push_back(yaml_to_json(child));
      return arr;
    }
    case YAML::NodeType::Map: {
      json obj = json::object();
      for (const auto& kv : node) obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return obj;
    }
  }
  return nullptr;
}

// Overlays patch onto base; every patch key must already exist in base.
void merge_checked(json& base, const json& patch, const std::string& path) {
  if (patch.is_null()) return;
  if (!patch.is_object()) throw std::invalid_argument("config: '" + path + "' must be a mapping");
  for (const auto& [key, value] : patch.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw std::invalid_argument("config: unknown key '" + here + "'");
    if (base[key].is_object()) {
      merge_checked(base[key], value, here);
    } else {
      if (value.is_object()) throw std::invalid_argument("config: '" + here + "' must be a scalar");
      base[key] = value;
    }
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config: '" + path + key + "' has the wrong type");
  }
}

}  // namespace

json to_json(const PipelineConfig& c) {
  const auto& cc = c.corpus;
  return {
      {"sampling_fps", c.sampling_fps},
      {"embedder", c.embedder},
      {"top_k", c.top_k},
      {"corpus_dir", c.corpus_dir},
      {"output_dir", c.output_dir},
      {"gate",
       {{"enabled", c.gate.enabled},
        {"alpha", c.gate.alpha},
        {"epsilon", c.gate.epsilon},
        {"seed", c.gate.seed},
        {"model", c.gate.model_path},
        {"external_scores", c.gate.external_scores_path}}},
      {"splitter",
       {{"enabled", c.split_enabled},
        {"min_scene_fraction", c.splitter.min_scene_fraction},
        {"persistence_fraction", c.splitter.persistence_fraction},
        {"strength_min", c.splitter.strength_min},
        {"cluster_radius_px", c.splitter.cluster_radius_px}}},
      {"normalization",
       {{"beta", c.normalization.beta},
        {"k_background", c.normalization.k_background},
        {"negative_bias", c.normalization.negative_bias}}},
      {"corpus",
       {{"references", cc.references},
        {"positives", cc.positives},
        {"distractors", cc.distractors},
        {"stacked", cc.stacked},
        {"background", cc.background},
        {"width", cc.width},
        {"height", cc.height},
        {"fps", cc.fps},
        {"reference_duration_s", cc.reference_duration_s},
        {"query_duration_s", cc.query_duration_s},
        {"distractor_duration_s", cc.distractor_duration_s},
        {"four_scene_probability", cc.four_scene_probability},
        {"split_min_fraction", cc.split_min_fraction},
        {"split_max_fraction", cc.split_max_fraction},
        {"seed", cc.seed},
        {"edits",
         {{"blur_min", cc.edits.blur_min},
          {"blur_max", cc.edits.blur_max},
          {"crop_min", cc.edits.crop_min},
          {"crop_max", cc.edits.crop_max},
          {"rotation_deg", cc.edits.rotation_deg},
          {"brightness", cc.edits.brightness}}}}},
  };
}

PipelineConfig config_from_json(const json& patch) {
  json j = to_json(PipelineConfig{});
  merge_checked(j, patch, "");
  PipelineConfig c;
  c.sampling_fps = get<double>(j, "sampling_fps", "");
  c.embedder = get<std::string>(j, "embedder", "");
  c.top_k = get<int>(j, "top_k", "");
  c.corpus_dir = get<std::string>(j, "corpus_dir", "");
  c.output_dir = get<std::string>(j, "output_dir", "");
  const json& g = j["gate"];
  c.gate.enabled = get<bool>(g, "enabled", "gate.");
  c.gate.alpha = get<double>(g, "alpha", "gate.");
  c.gate.epsilon = get<double>(g, "epsilon", "gate.");
  c.gate.seed = get<std::uint64_t>(g, "seed", "gate.");
  c.gate.model_path = get<std::string>(g, "model", "gate.");
  c.gate.external_scores_path = get<std::string>(g, "external_scores", "gate.");
  const json& s = j["splitter"];
  c.split_enabled = get<bool>(s, "enabled", "splitter.");
  c.splitter.min_scene_fraction = get<double>(s, "min_scene_fraction", "splitter.");
  c.splitter.persistence_fraction = get<double>(s, "persistence_fraction", "splitter.");
  c.splitter.strength_min = get<double>(s, "strength_min", "splitter.");
  c.splitter.cluster_radius_px = get<int>(s, "cluster_radius_px", "splitter.");
  const json& n = j["normalization"];
  c.normalization.beta = get<double>(n, "beta", "normalization.");
  c.normalization.k_background = get<int>(n, "k_background", "normalization.");
  c.normalization.negative_bias = get<double>(n, "negative_bias", "normalization.");
  const json& k = j["corpus"];
  auto& cc = c.corpus;
  cc.references = get<int>(k, "references", "corpus.");
  cc.positives = get<int>(k, "positives", "corpus.");
  cc.distractors = get<int>(k, "distractors", "corpus.");
  cc.stacked = get<int>(k, "stacked", "corpus.");
  cc.background = get<int>(k, "background", "corpus.");
  cc.width = get<int>(k, "width", "corpus.");
  cc.height = get<int>(k, "height", "corpus.");
  cc.fps = get<double>(k, "fps", "corpus.");
  cc.reference_duration_s = get<double>(k, "reference_duration_s", "corpus.");
  cc.query_duration_s = get<double>(k, "query_duration_s", "corpus.");
  cc.distractor_duration_s = get<double>(k, "distractor_duration_s", "corpus.");
  cc.four_scene_probability = get<double>(k, "four_scene_probability", "corpus.");
  cc.split_min_fraction = get<double>(k, "split_min_fraction", "corpus.");
  cc.split_max_fraction = get<double>(k, "split_max_fraction", "corpus.");
  cc.seed = get<std::uint64_t>(k, "seed", "corpus.");
  const json& e = k["edits"];
  cc.edits.blur_min = get<int>(e, "blur_min", "corpus.edits.");
  cc.edits.blur_max = get<int>(e, "blur_max", "corpus.edits.");
  cc.edits.crop_min = get<double>(e, "crop_min", "corpus.edits.");
  cc.edits.crop_max = get<double>(e, "crop_max", "corpus.edits.");
  cc.edits.rotation_deg = get<double>(e, "rotation_deg", "corpus.edits.");
  cc.edits.brightness = get<double>(e, "brightness", "corpus.edits.");
  validate(c);
  return c;
}

PipelineConfig parse_config(const std::string& yaml_text, const std::vector<std::string>& overrides) {
  json tree = json::object();
  if (!yaml_text.empty()) {
    try {
      tree = yaml_to_json(YAML::Load(yaml_text));
    } catch (const YAML::Exception& e) {
      throw std::invalid_argument(std::string("config: ") + e.what());
    }
    if (tree.is_null()) tree = json::object();
  }
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::invalid_argument("override '" + ov + "' is not key=value");
    }
    json* node = &tree;
    std::stringstream path(ov.substr(0, eq));
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(path, part, '.')) parts.push_back(part);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      if (!node->contains(parts[i]) || !(*node)[parts[i]].is_object()) (*node)[parts[i]] = json::object();
      node = &(*node)[parts[i]];
    }
    (*node)[parts.back()] = scalar_to_json(ov.substr(eq + 1));
  }
  return config_from_json(tree);
}

PipelineConfig load_config(const std::optional<std::filesystem::path>& path,
                           const std::vector<std::string>& overrides) {
  std::string text;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw std::runtime_error("cannot open config " + path->string());
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  return parse_config(text, overrides);
}

void validate(const PipelineConfig& c) {
  if (!(c.sampling_fps > 0.0)) throw std::invalid_argument("sampling_fps must be positive");
  if (c.top_k < 1) throw std::invalid_argument("top_k must be >= 1");
  if (!(c.gate.alpha > 0.0 && c.gate.alpha < 1.0)) throw std::invalid_argument("gate.alpha must lie in (0,1)");
  if (!(c.gate.epsilon > 0.0)) throw std::invalid_argument("gate.epsilon must be positive");
  if (!(c.splitter.min_scene_fraction > 0.0 && c.splitter.min_scene_fraction < 0.5)) {
    throw std::invalid_argument("splitter.min_scene_fraction must lie in (0,0.5)");
  }
  if (!(c.splitter.persistence_fraction > 0.0 && c.splitter.persistence_fraction <= 1.0)) {
    throw std::invalid_argument("splitter.persistence_fraction must lie in (0,1]");
  }
  if (!(c.splitter.strength_min >= 0.0)) throw std::invalid_argument("splitter.strength_min must be >= 0");
  if (c.splitter.cluster_radius_px < 0) throw std::invalid_argument("splitter.cluster_radius_px must be >= 0");
  retrieval::validate(c.normalization);
  eval::validate(c.corpus);
  make_embedder(c.embedder);
}

}  // namespace vcd::pipeline
