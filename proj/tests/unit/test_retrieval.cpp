#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <tuple>

#include "vcd/descriptor.hpp"
#include "vcd/retrieval.hpp"

using namespace vcd;
using namespace vcd::retrieval;

namespace {

std::vector<FrameDescriptor> random_descriptors(std::size_t n, std::size_t d, std::uint64_t seed,
                                                int videos) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> vid(0, videos - 1);
  std::vector<FrameDescriptor> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(d);
    for (double& x : v) x = g(rng);
    out.push_back({"R" + std::to_string(vid(rng)), static_cast<float>(i % 8) + 0.5F, to_float(l2_normalize(v))});
  }
  return out;
}

std::vector<double> random_unit(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(d);
  for (double& x : v) x = g(rng);
  return l2_normalize(v);
}

struct Scored {
  double score;
  std::string id;
  float t;
  std::size_t row;
};

// Scores every row, then sorts by (score desc, id asc, timestamp asc).
std::vector<Scored> full_scan(const std::vector<FrameDescriptor>& rows, const std::vector<double>& q,
                              bool augmented) {
  std::vector<Scored> all;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows[r].vector.size(); ++i) s += q[i] * static_cast<double>(rows[r].vector[i]);
    if (augmented) s += q.back() * 1.0;
    all.push_back({s, rows[r].video_id, rows[r].timestamp_s, r});
  }
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.id != b.id) return a.id < b.id;
    if (a.t != b.t) return a.t < b.t;
    return a.row < b.row;
  });
  return all;
}

}  // namespace

TEST_CASE("singleton index returns its row") {
  const std::vector<FrameDescriptor> one = {{"A", 0.5F, {0.6F, 0.8F}}};
  const auto idx = DescriptorIndex::build(one, false);
  const auto hits = idx.search(std::vector<double>{1, 0}, 1);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].row == 0);
  CHECK(idx.search(std::vector<double>{1, 0}, 5).size() == 1);
}

TEST_CASE("duplicate descriptors tie-break by id then timestamp") {
  const std::vector<FrameDescriptor> rows = {
      {"B", 0.5F, {1.0F, 0.0F}}, {"A", 1.5F, {1.0F, 0.0F}}, {"A", 0.5F, {1.0F, 0.0F}}, {"C", 0.5F, {0.0F, 1.0F}}};
  const auto idx = DescriptorIndex::build(rows, false);
  const auto hits = idx.search(std::vector<double>{1, 0}, 3);
  REQUIRE(hits.size() == 3);
  CHECK(hits[0].row == 2);
  CHECK(hits[1].row == 1);
  CHECK(hits[2].row == 0);
  CHECK(hits[0].score == hits[2].score);
}

TEST_CASE("build and search errors") {
  CHECK_THROWS(DescriptorIndex::build(std::vector<FrameDescriptor>{}, false));
  const std::vector<FrameDescriptor> ragged = {{"A", 0.0F, {1.0F, 0.0F}}, {"bad-video", 0.0F, {1.0F}}};
  try {
    DescriptorIndex::build(ragged, false);
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("bad-video") != std::string::npos);
  }
  const auto idx = DescriptorIndex::build(std::vector<FrameDescriptor>{{"A", 0.0F, {1.0F, 0.0F}}}, true);
  CHECK(idx.dimension() == 3);
  CHECK(idx.row(0).back() == 1.0F);
  CHECK_THROWS(idx.search(std::vector<double>{1, 0, 0, 0}, 1));
  CHECK_THROWS(idx.search(std::vector<double>{1, 0, 0}, 0));
}

TEST_CASE("index search equals a full scan on 10k descriptors") {
  const auto rows = random_descriptors(10000, 32, 1, 400);
  for (bool augmented : {false, true}) {
    const auto idx = DescriptorIndex::build(rows, augmented);
    std::mt19937_64 rng(2);
    for (int t = 0; t < 25; ++t) {
      auto q = random_unit(rng, 32);
      if (augmented) q.push_back(-0.3);
      const auto hits = idx.search(q, 20);
      const auto oracle = full_scan(rows, q, augmented);
      REQUIRE(hits.size() == 20);
      for (std::size_t i = 0; i < 20; ++i) {
        CHECK(hits[i].row == oracle[i].row);
        CHECK(hits[i].score == oracle[i].score);
      }
    }
  }

  // Quantised descriptors force many exact ties.
  auto tied = random_descriptors(10000, 4, 3, 50);
  for (auto& d : tied) {
    for (float& x : d.vector) x = std::round(x * 2.0F) / 2.0F;
    if (std::all_of(d.vector.begin(), d.vector.end(), [](float x) { return x == 0.0F; })) d.vector[0] = 1.0F;
  }
  const auto idx = DescriptorIndex::build(tied, false);
  const std::vector<double> q = {0.5, 0.5, 0.5, 0.5};
  const auto hits = idx.search(q, 20);
  const auto oracle = full_scan(tied, q, false);
  for (std::size_t i = 0; i < 20; ++i) CHECK(hits[i].row == oracle[i].row);
}

TEST_CASE("background bias") {
  const auto bg_rows = random_descriptors(300, 16, 4, 30);
  const auto bg = DescriptorIndex::build(bg_rows, false);
  std::mt19937_64 rng(5);
  const auto q = random_unit(rng, 16);
  CHECK(background_bias(q, bg, {0.0, 10, -1.0}) == 0.0);

  std::vector<double> same = to_double(bg_rows[17].vector);
  CHECK(std::abs(background_bias(same, bg, {1.2, 1, -1.0}) + 1.2) < 1e-6);

  for (int t = 0; t < 20; ++t) {
    const auto qq = random_unit(rng, 16);
    std::vector<double> cos;
    for (const auto& r : bg_rows) {
      const auto rv = to_double(r.vector);
      double d = 0, n = 0;
      for (std::size_t i = 0; i < 16; ++i) {
        d += qq[i] * rv[i];
        n += rv[i] * rv[i];
      }
      cos.push_back(d / std::sqrt(n));
    }
    std::sort(cos.rbegin(), cos.rend());
    const double oracle = -1.2 * (cos[0] + cos[1] + cos[2]) / 3.0;
    CHECK(std::abs(background_bias(qq, bg, {1.2, 3, -1.0}) - oracle) < 1e-9);
  }

  CHECK_THROWS(background_bias(q, bg, {1.2, 301, -1.0}));
  const auto tiny = DescriptorIndex::build(std::vector<FrameDescriptor>{bg_rows[0]}, false);
  CHECK_THROWS(background_bias(q, tiny, {1.2, 2, -1.0}));
}

TEST_CASE("augmentation identities") {
  const std::vector<double> q = {0.8, 0.0};
  const std::vector<double> r = {1.0, 0.0};
  CHECK(std::abs(augmented_dot(augment(q, -0.6), augment_reference(r)) - 0.2) < 1e-12);
  CHECK(augmented_dot(augment(q, 0.0), augment_reference(r)) == 0.8);
  CHECK(augment_reference(r).back() == 1.0);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> a(9), b(9);
    for (double& x : a) x = u(rng);
    for (double& x : b) x = u(rng);
    const double bias = u(rng);
    double raw = 0.0;
    for (int i = 0; i < 9; ++i) raw += a[i] * b[i];
    CHECK(std::abs(augmented_dot(augment(a, bias), augment_reference(b)) - (raw + bias)) < 1e-12);
  }
  CHECK_THROWS(augmented_dot(std::vector<double>{1, 2}, std::vector<double>{1}));
}

TEST_CASE("negative bias substitution") {
  NormalizationConfig cfg;
  const auto unedited = gate::decide("u", 0.01, 0.1, 32, 1e-3, 3);
  const auto v = replace_bias_unedited(unedited, cfg);
  REQUIRE(v.size() == 33);
  CHECK(v.back() == -1.0);

  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    const auto r = augment_reference(random_unit(rng, 32));
    const double s = augmented_dot(v, r);
    CHECK(s < 0.0);
    CHECK(s <= -1.0 + 1e-3);
  }
  const auto half = replace_bias_unedited(unedited, {1.2, 10, -0.5});
  for (int t = 0; t < 200; ++t) {
    const double s = augmented_dot(half, augment_reference(random_unit(rng, 32)));
    CHECK(s >= -0.501);
    CHECK(s <= -0.499);
  }

  const auto edited = gate::decide("e", 0.5, 0.1, 32, 1e-3, 3);
  CHECK_THROWS(replace_bias_unedited(edited, cfg));
  CHECK_THROWS(replace_bias_unedited(unedited, {1.2, 10, 0.0}));
  CHECK_THROWS(validate({-0.1, 10, -1.0}));
  CHECK_THROWS(validate({1.2, 0, -1.0}));
}

TEST_CASE("exact copy ranks first with score 1") {
  const auto rows = random_descriptors(200, 32, 8, 20);
  const auto idx = DescriptorIndex::build(rows, true);
  std::vector<AugmentedQuery> qs;
  for (const auto& r : rows) {
    if (r.video_id == "R3") qs.push_back({"Q", augment(to_double(r.vector), 0.0)});
  }
  REQUIRE_FALSE(qs.empty());
  const auto pairs = search_and_aggregate(qs, idx, 5);
  REQUIRE_FALSE(pairs.empty());
  CHECK(pairs[0].reference_id == "R3");
  CHECK(std::abs(pairs[0].score - 1.0) < 1e-6);
}

TEST_CASE("stacked query matches both sources") {
  const auto rows = random_descriptors(400, 32, 9, 40);
  const auto idx = DescriptorIndex::build(rows, true);
  std::vector<AugmentedQuery> qs;
  for (const auto& r : rows) {
    if (r.video_id == "R1" || r.video_id == "R2") qs.push_back({"S", augment(to_double(r.vector), 0.0)});
  }
  const auto pairs = search_and_aggregate(qs, idx, 1);
  std::set<std::string> refs;
  for (const auto& p : pairs) refs.insert(p.reference_id);
  CHECK(refs.count("R1") == 1);
  CHECK(refs.count("R2") == 1);
}

TEST_CASE("aggregation equals an exhaustive frame-pair oracle") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const auto rows = random_descriptors(300, 8, 20 + trial, 40);
    const auto idx = DescriptorIndex::build(rows, true);
    std::vector<AugmentedQuery> qs;
    std::uniform_real_distribution<double> bias(-0.5, 0.0);
    for (int q = 0; q < 12; ++q) {
      for (int f = 0; f < 4; ++f) qs.push_back({"Q" + std::to_string(q % 5), augment(random_unit(rng, 8), bias(rng))});
    }
    for (int k : {3, 1000}) {
      std::map<std::pair<std::string, std::string>, double> best;
      for (const auto& q : qs) {
        const auto ranked = full_scan(rows, q.vector, true);
        for (std::size_t i = 0; i < std::min<std::size_t>(k, ranked.size()); ++i) {
          const auto key = std::make_pair(q.video_id, ranked[i].id);
          const auto it = best.find(key);
          if (it == best.end() || it->second < ranked[i].score) best[key] = ranked[i].score;
        }
      }
      std::vector<CandidatePair> oracle;
      for (const auto& [key, s] : best) oracle.push_back({key.first, key.second, s});
      std::sort(oracle.begin(), oracle.end(), [](const CandidatePair& a, const CandidatePair& b) {
        return std::tie(b.score, a.query_id, a.reference_id) < std::tie(a.score, b.query_id, b.reference_id);
      });
      CHECK(search_and_aggregate(qs, idx, k) == oracle);
    }
  }
  const auto idx = DescriptorIndex::build(random_descriptors(10, 4, 1, 3), true);
  CHECK_THROWS(search_and_aggregate(std::vector<AugmentedQuery>{}, idx, 0));
  const auto plain = DescriptorIndex::build(random_descriptors(10, 4, 1, 3), false);
  CHECK_THROWS(search_and_aggregate(std::vector<AugmentedQuery>{}, plain, 5));
}

TEST_CASE("a constant bias shift leaves each query's ranking unchanged") {
  const auto rows = random_descriptors(500, 16, 11, 60);
  const auto idx = DescriptorIndex::build(rows, true);
  std::mt19937_64 rng(12);
  for (int t = 0; t < 20; ++t) {
    const auto q = random_unit(rng, 16);
    const auto a = idx.search(augment(q, 0.0), 20);
    const auto b = idx.search(augment(q, -0.75), 20);
    for (std::size_t i = 0; i < 20; ++i) {
      CHECK(a[i].row == b[i].row);
      CHECK(std::abs((a[i].score - 0.75) - b[i].score) < 1e-12);
    }
  }
}

TEST_CASE("augment_queries applies the right bias") {
  const auto bg_rows = random_descriptors(100, 8, 13, 10);
  const auto bg = DescriptorIndex::build(bg_rows, false);
  const auto q_rows = random_descriptors(6, 8, 14, 1);
  std::vector<FrameDescriptor> queries = q_rows;
  queries[0].video_id = "U";
  const NormalizationConfig cfg;
  const auto aq = augment_queries(queries, {"U"}, &bg, cfg);
  REQUIRE(aq.size() == 6);
  CHECK(aq[0].vector.back() == -1.0);
  for (std::size_t i = 1; i < 6; ++i) {
    CHECK(aq[i].vector.back() == background_bias(to_double(queries[i].vector), bg, cfg));
  }
  const auto unbiased = augment_queries(queries, {}, nullptr, {0.0, 10, -1.0});
  for (const auto& a : unbiased) CHECK(a.vector.back() == 0.0);
  CHECK_THROWS(augment_queries(queries, {}, nullptr, cfg));
}

TEST_CASE("candidate CSV round-trip and errors") {
  std::vector<CandidatePair> pairs = {{"Q1", "R1", 0.9}, {"Q1", "R2", -0.999}, {"Q2", "R1", 0.25}};
  const auto csv = candidates_to_csv(pairs);
  CHECK(csv.rfind("query_id,ref_id,score\n", 0) == 0);
  CHECK(csv.find("Q1,R2,-0.999000\n") != std::string::npos);
  CHECK(candidates_from_csv(csv) == pairs);
  CHECK(candidates_from_csv("query_id,ref_id,score\n").empty());

  auto line_of = [](const std::string& text) {
    try {
      candidates_from_csv(text);
    } catch (const std::runtime_error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(line_of("query_id,ref_id,score\nQ,R,0.5\nQ,R\n").find("line 3") != std::string::npos);
  CHECK(line_of("query_id,ref_id,score\nQ,R,abc\n").find("line 2") != std::string::npos);
  CHECK(line_of("q,r,s\n").find("line 1") != std::string::npos);
  CHECK(line_of("query_id,ref_id,score\nQ,R,1,2\n").find("line 2") != std::string::npos);
  CHECK_FALSE(line_of("").empty());
}
