#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vcd/frame.hpp"

namespace vcd {

inline constexpr int kReferenceDimension = 32;
inline constexpr double kDefaultEpsilon = 1e-3;

struct FrameDescriptor {
  std::string video_id;
  float timestamp_s = 0.0F;
  std::vector<float> vector;

  bool operator==(const FrameDescriptor&) const = default;
};

struct EmbedderSpec {
  std::string name;
  int dimension = 0;
  bool deterministic = true;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

// Unit vector; falls back to e1 when the norm is <= 1e-12.
std::vector<double> l2_normalize(std::span<const double> v);

// Clamped to [-1,1]. Throws on dimension mismatch or a zero vector.
double cosine(std::span<const double> a, std::span<const double> b);

// Seeded isotropic direction scaled to norm epsilon.
std::vector<double> random_small_descriptor(int dimension, double epsilon, std::uint64_t seed);

// 4x4 block means of intensity followed by 4x4 block means of central-difference
// gradient magnitude, L2-normalized. Requires width and height >= 4.
std::vector<double> reference_embed(const Frame& frame);

class FrameEmbedder {
 public:
  virtual ~FrameEmbedder() = default;
  virtual EmbedderSpec spec() const = 0;
  virtual std::vector<double> embed(const Frame& frame) const = 0;
};

class ReferenceEmbedder final : public FrameEmbedder {
 public:
  EmbedderSpec spec() const override { return {"reference", kReferenceDimension, true}; }
  std::vector<double> embed(const Frame& frame) const override { return reference_embed(frame); }
};

// Looks an embedder up by spec name. Only "reference" ships.
std::unique_ptr<FrameEmbedder> make_embedder(const std::string& name);

std::vector<float> to_float(std::span<const double> v);
std::vector<double> to_double(std::span<const float> v);

}  // namespace vcd
