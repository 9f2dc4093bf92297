#include "vcd/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "vcd/parallel.hpp"

namespace vcd::retrieval {

void validate(const NormalizationConfig& config) {
  if (!(config.beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
  if (config.k_background < 1) throw std::invalid_argument("k_background must be >= 1");
  if (!(config.negative_bias < 0.0)) throw std::invalid_argument("negative_bias must be < 0");
}

DescriptorIndex DescriptorIndex::build(std::span<const FrameDescriptor> descriptors, bool augmented) {
  if (descriptors.empty()) throw std::invalid_argument("build_index: no descriptors");
  const std::size_t raw_dim = descriptors.front().vector.size();
  if (raw_dim == 0) throw std::invalid_argument("build_index: zero-dimensional descriptors");
  DescriptorIndex index;
  index.augmented_ = augmented;
  index.dimension_ = raw_dim + (augmented ? 1 : 0);
  index.data_.reserve(descriptors.size() * index.dimension_);
  for (const auto& d : descriptors) {
    if (d.vector.size() != raw_dim) {
      throw std::invalid_argument("build_index: descriptor of '" + d.video_id + "' has dimension " +
                                  std::to_string(d.vector.size()) + ", expected " +
                                  std::to_string(raw_dim));
    }
    index.data_.insert(index.data_.end(), d.vector.begin(), d.vector.end());
    if (augmented) index.data_.push_back(1.0F);
    double n = 0.0;
    for (const float v : d.vector) n += static_cast<double>(v) * v;
    index.norms_.push_back(std::sqrt(n));
    index.ids_.push_back(d.video_id);
    index.timestamps_.push_back(d.timestamp_s);
  }
  std::vector<std::size_t> perm(descriptors.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    if (index.ids_[a] != index.ids_[b]) return index.ids_[a] < index.ids_[b];
    return index.timestamps_[a] < index.timestamps_[b];
  });
  index.order_.resize(perm.size());
  for (std::size_t rank = 0; rank < perm.size(); ++rank) index.order_[perm[rank]] = rank;
  return index;
}

double DescriptorIndex::score(std::span<const double> query, std::size_t r, Metric metric) const {
  const float* row = data_.data() + r * dimension_;
  if (metric == Metric::Dot) {
    double s = 0.0;
    for (std::size_t i = 0; i < dimension_; ++i) s += query[i] * row[i];
    return s;
  }
  // Cosine ignores the augmentation coordinate.
  const std::size_t d = dimension_ - (augmented_ ? 1 : 0);
  double s = 0.0;
  double qn = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    s += query[i] * row[i];
    qn += query[i] * query[i];
  }
  const double denom = std::sqrt(qn) * norms_[r];
  if (denom == 0.0) throw std::invalid_argument("cosine search with a zero vector");
  return std::clamp(s / denom, -1.0, 1.0);
}

std::vector<Hit> DescriptorIndex::search(std::span<const double> query, std::size_t k,
                                         Metric metric) const {
  const std::size_t expected = metric == Metric::Cosine && augmented_ ? dimension_ - 1 : dimension_;
  if (query.size() != dimension_ && query.size() != expected) {
    throw std::invalid_argument("search: query dimension " + std::to_string(query.size()) +
                                " does not match index dimension " + std::to_string(dimension_));
  }
  if (metric == Metric::Dot && query.size() != dimension_) {
    throw std::invalid_argument("search: dot query must match index dimension");
  }
  if (k == 0) throw std::invalid_argument("search: k must be >= 1");
  // "better" == higher score, then earlier tie order.
  auto better = [this](const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    return order_[a.row] < order_[b.row];
  };
  // Max-heap on "worse", so top() is the weakest kept hit.
  std::priority_queue<Hit, std::vector<Hit>, decltype(better)> heap(better);
  for (std::size_t r = 0; r < size(); ++r) {
    const Hit h{r, score(query, r, metric)};
    if (heap.size() < k) {
      heap.push(h);
    } else if (better(h, heap.top())) {
      heap.pop();
      heap.push(h);
    }
  }
  std::vector<Hit> out(heap.size());
  for (std::size_t i = out.size(); i > 0; --i) {
    out[i - 1] = heap.top();
    heap.pop();
  }
  return out;
}

double background_bias(std::span<const double> query, const DescriptorIndex& background,
                       const NormalizationConfig& config) {
  if (background.size() == 0) throw std::invalid_argument("background set is empty");
  if (config.beta == 0.0) return 0.0;
  if (static_cast<std::size_t>(config.k_background) > background.size()) {
    throw std::invalid_argument("k_background exceeds background size");
  }
  const auto hits = background.search(query, static_cast<std::size_t>(config.k_background), Metric::Cosine);
  double mean = 0.0;
  for (const auto& h : hits) mean += h.score;
  mean /= static_cast<double>(hits.size());
  return -config.beta * mean;
}

std::vector<double> augment(std::span<const double> query, double bias) {
  std::vector<double> out(query.begin(), query.end());
  out.push_back(bias);
  return out;
}

std::vector<double> augment_reference(std::span<const double> reference) {
  return augment(reference, 1.0);
}

double augmented_dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("augmented_dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < a.size(); ++i) s += a[i] * b[i];
  return s + a.back() * b.back();
}

std::vector<double> replace_bias_unedited(const gate::GateResult& payload,
                                          const NormalizationConfig& config) {
  if (payload.decision.verdict != gate::Verdict::Unedited || !payload.substitute) {
    throw std::invalid_argument("replace_bias_unedited: payload for '" + payload.decision.video_id +
                                "' is not Unedited");
  }
  validate(config);
  return augment(*payload.substitute, config.negative_bias);
}

void sort_candidates(std::vector<CandidatePair>& pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const CandidatePair& a, const CandidatePair& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.query_id != b.query_id) return a.query_id < b.query_id;
    return a.reference_id < b.reference_id;
  });
}

std::vector<CandidatePair> search_and_aggregate(std::span<const AugmentedQuery> queries,
                                                const DescriptorIndex& index, int top_k) {
  if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
  if (!index.augmented()) throw std::invalid_argument("search_and_aggregate needs an augmented index");
  std::vector<std::vector<Hit>> hits(queries.size());
  parallel_for(queries.size(), [&](std::size_t i) {
    hits[i] = index.search(queries[i].vector, static_cast<std::size_t>(top_k));
  });
  std::map<std::pair<std::string, std::string>, double> best;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (const auto& h : hits[i]) {
      const auto key = std::make_pair(queries[i].video_id, index.video_id(h.row));
      const auto it = best.find(key);
      if (it == best.end()) best.emplace(key, h.score);
      else it->second = std::max(it->second, h.score);
    }
  }
  std::vector<CandidatePair> out;
  out.reserve(best.size());
  for (const auto& [key, score] : best) out.push_back({key.first, key.second, score});
  sort_candidates(out);
  return out;
}

std::vector<AugmentedQuery> augment_queries(std::span<const FrameDescriptor> queries,
                                            const std::set<std::string>& unedited_ids,
                                            const DescriptorIndex* background,
                                            const NormalizationConfig& config) {
  validate(config);
  if (config.beta > 0.0 && background == nullptr) {
    throw std::invalid_argument("beta > 0 requires a background set");
  }
  std::vector<AugmentedQuery> out(queries.size());
  parallel_for(queries.size(), [&](std::size_t i) {
    const auto& q = queries[i];
    const std::vector<double> v = to_double(q.vector);
    double bias = 0.0;
    if (unedited_ids.contains(q.video_id)) {
      bias = config.negative_bias;
    } else if (config.beta > 0.0) {
      bias = background_bias(v, *background, config);
    }
    out[i] = {q.video_id, augment(v, bias)};
  });
  return out;
}

std::string candidates_to_csv(const std::vector<CandidatePair>& pairs) {
  std::string out = "query_id,ref_id,score\n";
  char buf[64];
  for (const auto& p : pairs) {
    std::snprintf(buf, sizeof(buf), "%.6f", p.score);
    out += p.query_id;
    out += ',';
    out += p.reference_id;
    out += ',';
    out += buf;
    out += '\n';
  }
  return out;
}

std::vector<CandidatePair> candidates_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::vector<CandidatePair> out;
  auto fail = [&](const std::string& why) {
    throw std::runtime_error("candidate CSV line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "query_id,ref_id,score") fail("expected header 'query_id,ref_id,score'");
      continue;
    }
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) fail("expected 3 fields");
    CandidatePair p{line.substr(0, c1), line.substr(c1 + 1, c2 - c1 - 1), 0.0};
    if (p.query_id.empty() || p.reference_id.empty()) fail("empty id");
    const std::string score = line.substr(c2 + 1);
    char* end = nullptr;
    p.score = std::strtod(score.c_str(), &end);
    if (score.empty() || end != score.c_str() + score.size() || !std::isfinite(p.score)) {
      fail("bad score '" + score + "'");
    }
    out.push_back(std::move(p));
  }
  if (line_no == 0) throw std::runtime_error("candidate CSV is empty (missing header)");
  return out;
}

void write_candidates(const std::filesystem::path& path, const std::vector<CandidatePair>& pairs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << candidates_to_csv(pairs);
}

std::vector<CandidatePair> read_candidates(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return candidates_from_csv(ss.str());
}

}  // namespace vcd::retrieval
