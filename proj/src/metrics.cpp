#include <fstream>
#include <sstream>
#include <stdexcept>

#include "vcd/evaluation.hpp"

namespace vcd::eval {

double micro_ap(std::vector<retrieval::CandidatePair> pairs, const GroundTruth& truth) {
  if (truth.pairs.empty()) throw std::invalid_argument("micro_ap: empty ground truth");
  retrieval::sort_candidates(pairs);
  PairSet seen;
  double precision_sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < pairs.size(); ++rank) {
    auto key = std::make_pair(pairs[rank].query_id, pairs[rank].reference_id);
    if (!seen.insert(key).second) {
      throw std::invalid_argument("micro_ap: duplicate pair (" + key.first + ", " + key.second + ")");
    }
    if (truth.pairs.contains(key)) {
      ++hits;
      precision_sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return precision_sum / static_cast<double>(truth.pairs.size());
}

std::string truth_to_csv(const GroundTruth& truth) {
  std::string out = "query_id,ref_id\n";
  for (const auto& [q, r] : truth.pairs) out += q + "," + r + "\n";
  return out;
}

GroundTruth truth_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  GroundTruth gt;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "query_id,ref_id") {
        throw std::runtime_error("ground truth line 1: expected header 'query_id,ref_id'");
      }
      continue;
    }
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 == line.size() ||
        line.find(',', comma + 1) != std::string::npos) {
      throw std::runtime_error("ground truth line " + std::to_string(line_no) + ": expected 2 fields");
    }
    gt.pairs.emplace(line.substr(0, comma), line.substr(comma + 1));
  }
  if (line_no == 0) throw std::runtime_error("ground truth CSV is empty (missing header)");
  return gt;
}

void write_truth(const std::filesystem::path& path, const GroundTruth& truth) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << truth_to_csv(truth);
}

GroundTruth read_truth(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return truth_from_csv(ss.str());
}

}  // namespace vcd::eval
