#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "vcd/descriptor.hpp"
#include "vcd/descriptor_io.hpp"
#include "vcd/frame.hpp"

using namespace vcd;

namespace {

// Per-pixel oracle: every pixel finds its block by scanning the block edges,
// gradients use explicit min/max border replication.
std::vector<double> naive_embed(const Frame& f) {
  auto block_of = [](int p, int n) {
    int b = 0;
    while (b < 3 && p >= (b + 1) * n / 4) ++b;
    return b;
  };
  auto px = [&](int x, int y) {
    x = std::min(std::max(x, 0), f.width - 1);
    y = std::min(std::max(y, 0), f.height - 1);
    return static_cast<double>(f.pixels[static_cast<std::size_t>(y * f.width + x)]);
  };
  double sum_i[16] = {};
  double sum_g[16] = {};
  double count[16] = {};
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      const int b = block_of(y, f.height) * 4 + block_of(x, f.width);
      const double gx = (px(x + 1, y) - px(x - 1, y)) / 2.0;
      const double gy = (px(x, y + 1) - px(x, y - 1)) / 2.0;
      sum_i[b] += px(x, y);
      sum_g[b] += std::hypot(gx, gy);
      count[b] += 1.0;
    }
  }
  std::vector<double> v(32);
  double n2 = 0.0;
  for (int b = 0; b < 16; ++b) {
    v[b] = sum_i[b] / count[b];
    v[16 + b] = sum_g[b] / count[b];
  }
  for (double x : v) n2 += x * x;
  if (std::sqrt(n2) <= 1e-12) {
    std::vector<double> e(32, 0.0);
    e[0] = 1.0;
    return e;
  }
  for (double& x : v) x /= std::sqrt(n2);
  return v;
}

Frame random_frame(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<float> u(0.0F, 1.0F);
  Frame f(w, h);
  for (auto& p : f.pixels) p = u(rng);
  return f;
}

}  // namespace

TEST_CASE("l2_normalize examples") {
  const auto a = l2_normalize(std::vector<double>{3, 4});
  CHECK(a[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(a[1] == doctest::Approx(0.8).epsilon(1e-12));
  const auto z = l2_normalize(std::vector<double>{0, 0});
  CHECK(z == std::vector<double>{1, 0});
  const auto s = l2_normalize(std::vector<double>{1, 1, 1, 1});
  for (double x : s) CHECK(x == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("cosine examples and errors") {
  CHECK(cosine(std::vector<double>{1, 0}, std::vector<double>{1, 0}) == 1.0);
  CHECK(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
  CHECK(std::abs(cosine(std::vector<double>{1, 1}, std::vector<double>{1, 0}) - 0.70710678) < 1e-8);
  CHECK_THROWS(cosine(std::vector<double>{1, 0}, std::vector<double>{1, 0, 0}));
  CHECK_THROWS(cosine(std::vector<double>{0, 0}, std::vector<double>{1, 0}));
}

TEST_CASE("reference_embed: zero and uniform frames") {
  const auto zero = reference_embed(Frame(64, 64, 0.0F));
  CHECK(zero[0] == 1.0);
  for (std::size_t i = 1; i < zero.size(); ++i) CHECK(zero[i] == 0.0);

  const auto ones = reference_embed(Frame(64, 64, 1.0F));
  for (int i = 0; i < 16; ++i) CHECK(ones[i] == doctest::Approx(0.25).epsilon(1e-12));
  for (int i = 16; i < 32; ++i) CHECK(ones[i] == 0.0);
}

TEST_CASE("reference_embed: step edge touches only the middle block columns") {
  Frame f(64, 64, 0.0F);
  for (int y = 0; y < 64; ++y) {
    for (int x = 32; x < 64; ++x) f.at(x, y) = 1.0F;
  }
  const auto v = reference_embed(f);
  const auto oracle = naive_embed(f);
  for (int i = 0; i < 32; ++i) CHECK(std::abs(v[i] - oracle[i]) < 1e-9);
  for (int by = 0; by < 4; ++by) {
    for (int bx = 0; bx < 4; ++bx) {
      const double g = v[16 + by * 4 + bx];
      if (bx == 1 || bx == 2) {
        CHECK(g > 0.0);
      } else {
        CHECK(g == 0.0);
      }
    }
  }
}

TEST_CASE("reference_embed matches the per-pixel oracle on random frames") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> size(4, 41);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Frame f = random_frame(rng, size(rng), size(rng));
    const auto v = reference_embed(f);
    const auto o = naive_embed(f);
    for (int i = 0; i < 32; ++i) worst = std::max(worst, std::abs(v[i] - o[i]));
    CHECK(std::abs(l2_norm(v) - 1.0) < 1e-6);
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("reference_embed rejects tiny frames and is bit-stable on copies") {
  CHECK_THROWS_AS(reference_embed(Frame(3, 10)), std::invalid_argument);
  CHECK_THROWS_AS(reference_embed(Frame(10, 3)), std::invalid_argument);
  std::mt19937_64 rng(5);
  const Frame f = random_frame(rng, 37, 29);
  const Frame copy = f;
  CHECK(reference_embed(f) == reference_embed(copy));
}

TEST_CASE("random_small_descriptor contract") {
  const auto a = random_small_descriptor(32, 1e-3, 7);
  const auto b = random_small_descriptor(32, 1e-3, 7);
  CHECK(a == b);
  CHECK(std::abs(l2_norm(a) - 1e-3) < 1e-9);
  CHECK_THROWS(random_small_descriptor(32, 0.0, 1));
  CHECK_THROWS(random_small_descriptor(32, -1.0, 1));

  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto r = l2_normalize(std::vector<double>{
        std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng),
        std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng)});
    const auto v = random_small_descriptor(4, 1e-3, 100 + t);
    CHECK(std::abs(dot(v, r)) <= 1e-3);
  }

  for (int d : {2, 3, 8, 32, 257}) {
    for (double eps : {1e-9, 1e-3, 0.5, 10.0}) {
      for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
        CHECK(std::abs(l2_norm(random_small_descriptor(d, eps, seed)) - eps) < 1e-9);
      }
    }
  }

  std::vector<double> mean(32, 0.0);
  for (int s = 0; s < 1000; ++s) {
    const auto v = random_small_descriptor(32, 1e-3, 5000 + s);
    for (int i = 0; i < 32; ++i) mean[i] += v[i] / 1000.0;
  }
  CHECK(l2_norm(mean) < 0.2 * 1e-3);
}

TEST_CASE("frame sampling is mid-interval at 1 fps") {
  Video v;
  v.fps = 2.0;
  for (int i = 0; i < 10; ++i) v.frames.emplace_back(4, 4, static_cast<float>(i) / 10.0F);
  const auto s = sample_frames(v, 1.0);
  REQUIRE(s.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(s[i].timestamp_s == doctest::Approx(i + 0.5));
    CHECK(s[i].frame == &v.frames[static_cast<std::size_t>(2 * i + 1)]);
  }
}

TEST_CASE("rgb ingestion uses Rec.601 luma") {
  const std::vector<float> rgb = {1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 1};
  const Frame f = frame_from_rgb(2, 2, rgb);
  CHECK(f.at(0, 0) == doctest::Approx(0.299));
  CHECK(f.at(1, 0) == doctest::Approx(0.587));
  CHECK(f.at(0, 1) == doctest::Approx(0.114));
  CHECK(f.at(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("descriptor files round-trip bit-exactly") {
  DescriptorSet empty{32, {}};
  CHECK(decode_descriptors(encode_descriptors(empty)) == empty);

  DescriptorSet one{3, {{"Q00001", 0.5F, {0.1F, -0.0F, 3.4028235e38F}}}};
  const auto bytes = encode_descriptors(one);
  CHECK(bytes.size() == 4 + 4 + 4 + 2 + 6 + 4 + 3 * 4);
  CHECK(bytes[0] == 'V');
  CHECK(bytes[3] == '1');
  const auto back = decode_descriptors(bytes);
  CHECK(back == one);
  CHECK(encode_descriptors(back) == bytes);
  CHECK(std::signbit(back.records[0].vector[1]));

  std::mt19937_64 rng(2);
  DescriptorSet many{8, {}};
  for (int i = 0; i < 200; ++i) {
    FrameDescriptor d{"vid-" + std::to_string(i % 17), static_cast<float>(i) * 0.5F, {}};
    for (int k = 0; k < 8; ++k) d.vector.push_back(std::uniform_real_distribution<float>(-1, 1)(rng));
    many.records.push_back(d);
  }
  const auto dir = std::filesystem::temp_directory_path() / "vcd_test_descriptor_io";
  std::filesystem::create_directories(dir);
  write_descriptors(dir / "many.vcd", many);
  CHECK(read_descriptors(dir / "many.vcd") == many);
  CHECK(read_file_bytes(dir / "many.vcd") == encode_descriptors(many));
  std::filesystem::remove_all(dir);
}

TEST_CASE("descriptor decoding rejects damaged input") {
  DescriptorSet one{2, {{"a", 1.0F, {1.0F, 2.0F}}}};
  auto bytes = encode_descriptors(one);
  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS(decode_descriptors(truncated));
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS(decode_descriptors(trailing));
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS(decode_descriptors(magic));
  DescriptorSet mismatch{3, {{"a", 1.0F, {1.0F, 2.0F}}}};
  CHECK_THROWS(encode_descriptors(mismatch));
}
