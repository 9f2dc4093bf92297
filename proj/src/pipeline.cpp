#include "vcd/pipeline.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "vcd/parallel.hpp"
#include "vcd/rng.hpp"

namespace vcd::pipeline {
namespace {

struct VideoResult {
  std::vector<FrameDescriptor> records;
  std::optional<gate::GateDecision> decision;
  std::optional<LayoutRecord> layout;
  std::optional<ErrorRecord> error;
};

std::vector<const Frame*> frame_pointers(const std::vector<SampledFrame>& sampled) {
  std::vector<const Frame*> out;
  out.reserve(sampled.size());
  for (const auto& s : sampled) out.push_back(s.frame);
  return out;
}

FrameDescriptor make_record(const std::string& id, double t, const std::vector<double>& v) {
  return {id, static_cast<float>(t), to_float(v)};
}

VideoResult describe_plain(const Video& video, const PipelineConfig& config, const FrameEmbedder& embedder) {
  VideoResult out;
  for (const auto& s : sample_frames(video, config.sampling_fps)) {
    out.records.push_back(make_record(video.id, s.timestamp_s, embedder.embed(*s.frame)));
  }
  if (out.records.empty()) throw std::runtime_error("no frames sampled");
  return out;
}

VideoResult describe_query(const Video& video, const PipelineConfig& config, const GateSource& source,
                           const FrameEmbedder& embedder) {
  VideoResult out;
  const auto sampled = sample_frames(video, config.sampling_fps);
  if (sampled.empty()) throw std::runtime_error("no frames sampled");
  const auto frames = frame_pointers(sampled);
  const int dim = embedder.spec().dimension;

  std::optional<scene::FramePeaks> peaks;
  auto get_peaks = [&]() -> const scene::FramePeaks& {
    if (!peaks) peaks = scene::collect_peaks(frames, config.splitter);
    return *peaks;
  };

  if (config.gate.enabled) {
    double score = 0.0;
    if (source.external_scores != nullptr) {
      const auto it = source.external_scores->find(video.id);
      if (it == source.external_scores->end()) throw std::runtime_error("no external edit score");
      score = it->second;
    } else if (source.model != nullptr) {
      const auto raw = gate::raw_video_features(frames, get_peaks(), config.splitter);
      score = gate::edit_score(gate::normalize_features(raw.values, source.model->normalization), *source.model);
    } else {
      throw std::runtime_error("gate enabled without a model or external scores");
    }
    auto result = gate::decide(video.id, score, config.gate.alpha, dim, config.gate.epsilon, config.gate.seed);
    out.decision = result.decision;
    if (result.substitute) {
      out.records.push_back(make_record(video.id, 0.0, *result.substitute));
      return out;
    }
  }

  scene::SceneLayout layout;
  if (config.split_enabled) {
    layout = scene::layout_from_peaks(get_peaks(), config.splitter);
    out.layout = LayoutRecord{video.id, layout};
  }
  for (const auto& track : scene::split_video(video.id, frames, layout)) {
    for (std::size_t i = 0; i < track.frames.size(); ++i) {
      out.records.push_back(make_record(video.id, sampled[i].timestamp_s, embedder.embed(track.frames[i])));
    }
  }
  return out;
}

template <typename Fn>
std::vector<VideoResult> run_videos(const std::vector<const Video*>& videos, const std::string& stage, Fn&& fn) {
  std::vector<VideoResult> results(videos.size());
  parallel_for(videos.size(), [&](std::size_t i) {
    try {
      results[i] = fn(*videos[i]);
    } catch (const std::exception& e) {
      results[i] = VideoResult{};
      results[i].error = ErrorRecord{videos[i]->id, stage, e.what()};
    }
  });
  return results;
}

void collect(std::vector<VideoResult>& results, DescriptorSet& set, DescribeOutput& out) {
  for (auto& r : results) {
    if (r.error) {
      out.errors.push_back(*r.error);
      continue;
    }
    for (auto& rec : r.records) set.records.push_back(std::move(rec));
    if (r.decision) out.decisions.push_back(*r.decision);
    if (r.layout) out.layouts.push_back(*r.layout);
  }
}

}  // namespace

DescribeOutput describe(const DescribeInputs& inputs, const PipelineConfig& config, const GateSource& gate) {
  validate(config);
  const auto embedder = make_embedder(config.embedder);
  const auto dim = static_cast<std::uint32_t>(embedder->spec().dimension);
  DescribeOutput out;
  out.references.dimension = dim;
  out.queries.dimension = dim;
  out.background.dimension = dim;

  auto plain = [&](const Video& v) { return describe_plain(v, config, *embedder); };
  auto refs = run_videos(inputs.references, "describe-reference", plain);
  collect(refs, out.references, out);
  auto bg = run_videos(inputs.background, "describe-background", plain);
  collect(bg, out.background, out);
  auto queries = run_videos(inputs.queries, "describe-query",
                            [&](const Video& v) { return describe_query(v, config, gate, *embedder); });
  collect(queries, out.queries, out);
  return out;
}

std::vector<retrieval::CandidatePair> search(const DescriptorSet& references, const DescriptorSet& queries,
                                             const DescriptorSet* background,
                                             const std::vector<gate::GateDecision>& decisions,
                                             const PipelineConfig& config) {
  validate(config);
  if (references.records.empty()) throw std::invalid_argument("search: no reference descriptors");
  if (queries.dimension != references.dimension) {
    throw std::invalid_argument("search: query and reference descriptor dimensions differ");
  }
  const auto index = retrieval::DescriptorIndex::build(references.records, true);
  std::optional<retrieval::DescriptorIndex> bg_index;
  if (config.normalization.beta > 0.0) {
    if (background == nullptr || background->records.empty()) {
      throw std::invalid_argument("search: beta > 0 requires a background descriptor set");
    }
    bg_index = retrieval::DescriptorIndex::build(background->records, false);
  }
  std::set<std::string> unedited;
  for (const auto& d : decisions) {
    if (d.verdict == gate::Verdict::Unedited) unedited.insert(d.video_id);
  }
  const auto augmented = retrieval::augment_queries(queries.records, unedited,
                                                    bg_index ? &*bg_index : nullptr, config.normalization);
  return retrieval::search_and_aggregate(augmented, index, config.top_k);
}

std::vector<gate::LabeledFeatures> gate_examples(const eval::Corpus& corpus, const PipelineConfig& config,
                                                 bool include_references) {
  std::vector<const eval::CorpusVideo*> videos;
  for (const auto& v : corpus.videos) {
    const bool query = v.role == eval::Role::Positive || v.role == eval::Role::Stacked ||
                       v.role == eval::Role::Distractor;
    if (query || (include_references && v.role == eval::Role::Reference)) videos.push_back(&v);
  }
  std::vector<gate::LabeledFeatures> out(videos.size());
  parallel_for(videos.size(), [&](std::size_t i) {
    const auto frames = frame_pointers(sample_frames(videos[i]->video, config.sampling_fps));
    const auto peaks = scene::collect_peaks(frames, config.splitter);
    out[i].raw = gate::raw_video_features(frames, peaks, config.splitter).values;
    out[i].edited = videos[i]->role == eval::Role::Positive || videos[i]->role == eval::Role::Stacked;
  });
  return out;
}

gate::TrainReport train_synthetic_gate(const eval::CorpusConfig& corpus, const PipelineConfig& config) {
  eval::CorpusConfig train = corpus;
  train.references = 40;
  train.positives = 60;
  train.stacked = 30;
  train.distractors = 60;
  train.background = 0;
  train.seed = derive_seed(corpus.seed, std::string_view("gate-train"));
  const auto examples = gate_examples(eval::generate_corpus(train), config, true);
  gate::TrainOptions options;
  options.seed = config.gate.seed;
  options.corpus_id = "synthetic-gate-train:" + std::to_string(train.seed);
  return gate::train_gate(examples, options);
}

double gate_auc(const eval::Corpus& corpus, const gate::GateModel& model, const PipelineConfig& config) {
  const auto examples = gate_examples(corpus, config, false);
  std::vector<double> scores;
  std::vector<bool> labels;
  for (const auto& e : examples) {
    scores.push_back(gate::edit_score(gate::normalize_features(e.raw, model.normalization), model));
    labels.push_back(e.edited);
  }
  return gate::roc_auc(scores, labels);
}

std::vector<retrieval::CandidatePair> run_corpus(const eval::Corpus& corpus, const gate::GateModel* model,
                                                 PipelineConfig config, bool split, bool gated) {
  config.split_enabled = split;
  config.gate.enabled = gated;
  DescribeInputs inputs{corpus.videos_with_role(eval::Role::Reference), corpus.queries(),
                        corpus.videos_with_role(eval::Role::Background)};
  const auto described = describe(inputs, config, GateSource{model, nullptr});
  if (!described.errors.empty()) {
    const auto& e = described.errors.front();
    throw std::runtime_error("pipeline failed on '" + e.video_id + "' (" + e.stage + "): " + e.message);
  }
  return search(described.references, described.queries, &described.background, described.decisions, config);
}

nlohmann::json to_json(const AblationReport& r) {
  return {{"basic", r.basic}, {"basic+fsd", r.fsd}, {"basic+fsd+ved", r.ved}};
}

AblationReport run_ablation(const eval::Corpus& corpus, const gate::GateModel& model,
                            const PipelineConfig& config) {
  AblationReport r;
  r.basic = eval::micro_ap(run_corpus(corpus, &model, config, false, false), corpus.truth);
  r.fsd = eval::micro_ap(run_corpus(corpus, &model, config, true, false), corpus.truth);
  r.ved = eval::micro_ap(run_corpus(corpus, &model, config, true, true), corpus.truth);
  return r;
}

}  // namespace vcd::pipeline
