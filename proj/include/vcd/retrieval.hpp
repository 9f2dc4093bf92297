#pragma once

// Exact flat search over frame descriptors with score normalization against a
// background set. Query vectors carry one extra bias coordinate and reference
// rows a trailing 1, so the augmented inner product is cos(q, r) + bias.

#include <cstddef>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vcd/descriptor.hpp"
#include "vcd/edit_gate.hpp"

namespace vcd::retrieval {

struct NormalizationConfig {
  double beta = 1.2;
  int k_background = 10;
  double negative_bias = -1.0;
};

void validate(const NormalizationConfig& config);

struct Hit {
  std::size_t row = 0;
  double score = 0.0;
};

enum class Metric { Dot, Cosine };

class DescriptorIndex {
 public:
  // augmented: each row gets a trailing coordinate of exactly 1.
  static DescriptorIndex build(std::span<const FrameDescriptor> descriptors, bool augmented);

  std::size_t size() const { return ids_.size(); }
  std::size_t dimension() const { return dimension_; }
  bool augmented() const { return augmented_; }
  const std::string& video_id(std::size_t row) const { return ids_[row]; }
  float timestamp(std::size_t row) const { return timestamps_[row]; }
  std::span<const float> row(std::size_t r) const { return {data_.data() + r * dimension_, dimension_}; }

  double score(std::span<const double> query, std::size_t row, Metric metric = Metric::Dot) const;

  // Top-k by score descending; ties by (video_id, timestamp) ascending.
  std::vector<Hit> search(std::span<const double> query, std::size_t k,
                          Metric metric = Metric::Dot) const;

  // True when row a sorts before row b among equal scores.
  bool tie_before(std::size_t a, std::size_t b) const { return order_[a] < order_[b]; }

 private:
  std::size_t dimension_ = 0;
  bool augmented_ = false;
  std::vector<float> data_;
  std::vector<double> norms_;
  std::vector<std::string> ids_;
  std::vector<float> timestamps_;
  std::vector<std::size_t> order_;
};

// -beta * mean cosine to the k_background nearest background descriptors.
double background_bias(std::span<const double> query, const DescriptorIndex& background,
                       const NormalizationConfig& config);

std::vector<double> augment(std::span<const double> query, double bias);
std::vector<double> augment_reference(std::span<const double> reference);
double augmented_dot(std::span<const double> a, std::span<const double> b);

// [epsilon-norm substitute, negative_bias]. Throws for Edited payloads.
std::vector<double> replace_bias_unedited(const gate::GateResult& payload,
                                          const NormalizationConfig& config);

struct AugmentedQuery {
  std::string video_id;
  std::vector<double> vector;
};

struct CandidatePair {
  std::string query_id;
  std::string reference_id;
  double score = 0.0;

  bool operator==(const CandidatePair&) const = default;
};

// Descending score, then (query_id, reference_id) ascending.
void sort_candidates(std::vector<CandidatePair>& pairs);

// Per query frame: exact top_k over the augmented index; frame hits collapse to
// one pair per (query video, reference video) holding the maximum score.
std::vector<CandidatePair> search_and_aggregate(std::span<const AugmentedQuery> queries,
                                                const DescriptorIndex& index, int top_k);

// Augments every query record: Unedited video ids get the substituted negative
// bias, the rest the background bias (0 when beta == 0). background may be null
// only when beta == 0.
std::vector<AugmentedQuery> augment_queries(std::span<const FrameDescriptor> queries,
                                            const std::set<std::string>& unedited_ids,
                                            const DescriptorIndex* background,
                                            const NormalizationConfig& config);

std::string candidates_to_csv(const std::vector<CandidatePair>& pairs);
std::vector<CandidatePair> candidates_from_csv(const std::string& text);
void write_candidates(const std::filesystem::path& path, const std::vector<CandidatePair>& pairs);
std::vector<CandidatePair> read_candidates(const std::filesystem::path& path);

}  // namespace vcd::retrieval
