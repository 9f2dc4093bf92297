#pragma once

// Synthetic video corpus with ground truth, and the micro-averaged AP metric.

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vcd/frame.hpp"
#include "vcd/retrieval.hpp"
#include "vcd/scene_split.hpp"

namespace vcd::eval {

// Procedural texture: three octaves of value noise drifting over time plus a
// moving sinusoidal overlay.
struct TextureParams {
  std::uint64_t seed = 0;
  double octave_weights[3] = {1.0, 0.5, 0.35};
  double cell_fraction[3] = {0.5, 0.18, 0.05};  // lattice cell / frame width
  double octave_angle[3] = {0.0, 0.0, 0.0};     // lattice rotation, radians
  double contrast = 0.8;
  double drift_x = 1.0;  // px / s
  double drift_y = 0.0;
  double overlay_amplitude = 0.1;
  double overlay_angle = 0.0;
  double overlay_frequency = 1.0;  // cycles per frame width
  double overlay_speed = 0.1;      // cycles / s
};

TextureParams random_texture(std::uint64_t seed, bool high_texture = false);
Frame render_texture(const TextureParams& params, int width, int height, double time_s);

struct EditChainConfig {
  int blur_min = 1;
  int blur_max = 3;
  double crop_min = 0.70;  // kept area fraction
  double crop_max = 0.95;
  double rotation_deg = 10.0;
  double brightness = 0.2;
};

struct EditParams {
  double crop = 1.0;
  double crop_x = 0.0;  // offset fraction of the slack
  double crop_y = 0.0;
  double brightness = 0.0;
  int blur = 0;
  double rotation = 0.0;
};

EditParams random_edit(std::uint64_t seed, const EditChainConfig& config);
// crop+zoom, brightness, blur, then rotation with zero fill.
Frame apply_edit(const Frame& frame, const EditParams& edit);

enum class Role { Reference, Positive, Stacked, Distractor, Background };

std::string to_string(Role role);
Role role_from_string(const std::string& s);

struct CorpusConfig {
  int references = 200;
  int positives = 60;
  int distractors = 40;
  int stacked = 30;
  int background = 200;
  int width = 64;
  int height = 64;
  double fps = 2.0;
  double reference_duration_s = 8.0;
  double query_duration_s = 5.0;
  double distractor_duration_s = 8.0;
  EditChainConfig edits;
  double four_scene_probability = 0.5;
  double split_min_fraction = 0.3;
  double split_max_fraction = 0.7;
  std::uint64_t seed = 0;
};

void validate(const CorpusConfig& config);

struct CorpusVideo {
  Video video;
  Role role = Role::Reference;
  std::uint64_t seed = 0;
  std::vector<std::string> sources;  // reference ids copied into this query
  scene::SceneLayout layout;         // ground-truth composition
};

using PairSet = std::set<std::pair<std::string, std::string>>;

struct GroundTruth {
  PairSet pairs;
};

struct Corpus {
  CorpusConfig config;
  std::vector<CorpusVideo> videos;
  GroundTruth truth;

  std::vector<const Video*> videos_with_role(Role role) const;
  std::vector<const Video*> queries() const;  // Positive, Stacked, Distractor in corpus order
};

Corpus generate_corpus(const CorpusConfig& config);

// Videos used by the splitter accuracy checks.
struct StackedSample {
  Video video;
  scene::SceneLayout truth;
};
StackedSample make_stacked_video(std::uint64_t seed, const CorpusConfig& config);
Video make_single_scene_video(std::uint64_t seed, const CorpusConfig& config, bool high_texture);

// Sum over ranked true pairs of precision at their rank, over |truth|.
// Ties are broken by (query_id, ref_id) ascending. Throws on empty truth or
// duplicate (query, ref) rows.
double micro_ap(std::vector<retrieval::CandidatePair> pairs, const GroundTruth& truth);

std::string truth_to_csv(const GroundTruth& truth);
GroundTruth truth_from_csv(const std::string& text);
void write_truth(const std::filesystem::path& path, const GroundTruth& truth);
GroundTruth read_truth(const std::filesystem::path& path);

}  // namespace vcd::eval
