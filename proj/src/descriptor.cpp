#include "vcd/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "vcd/rng.hpp"

namespace vcd {

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (const double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<double> l2_normalize(std::span<const double> v) {
  std::vector<double> out(v.size(), 0.0);
  const double n = l2_norm(v);
  if (n <= 1e-12) {
    if (!out.empty()) out[0] = 1.0;
    return out;
  }
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine: zero vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

std::vector<double> random_small_descriptor(int dimension, double epsilon, std::uint64_t seed) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (dimension < 2) throw std::invalid_argument("dimension must be >= 2");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(dimension));
  double n = 0.0;
  while (n < 1e-6) {
    for (double& x : v) x = normal(rng);
    n = l2_norm(v);
  }
  for (double& x : v) x *= epsilon / n;
  return v;
}

std::vector<double> reference_embed(const Frame& frame) {
  if (frame.width < 4 || frame.height < 4) {
    throw std::invalid_argument("reference_embed: frame must be at least 4x4, got " +
                                std::to_string(frame.width) + "x" +
                                std::to_string(frame.height));
  }
  validate_frame(frame);
  const int w = frame.width;
  const int h = frame.height;
  std::vector<double> out(kReferenceDimension, 0.0);
  for (int by = 0; by < 4; ++by) {
    const int y0 = by * h / 4;
    const int y1 = (by + 1) * h / 4;
    for (int bx = 0; bx < 4; ++bx) {
      const int x0 = bx * w / 4;
      const int x1 = (bx + 1) * w / 4;
      double intensity = 0.0;
      double gradient = 0.0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          intensity += frame.at(x, y);
          const double gx = 0.5 * (double{frame.clamped(x + 1, y)} - frame.clamped(x - 1, y));
          const double gy = 0.5 * (double{frame.clamped(x, y + 1)} - frame.clamped(x, y - 1));
          gradient += std::sqrt(gx * gx + gy * gy);
        }
      }
      const double area = static_cast<double>(x1 - x0) * (y1 - y0);
      out[by * 4 + bx] = intensity / area;
      out[16 + by * 4 + bx] = gradient / area;
    }
  }
  return l2_normalize(out);
}

std::unique_ptr<FrameEmbedder> make_embedder(const std::string& name) {
  if (name == "reference") return std::make_unique<ReferenceEmbedder>();
  throw std::invalid_argument("unknown embedder '" + name + "'");
}

std::vector<float> to_float(std::span<const double> v) {
  return {v.begin(), v.end()};
}

std::vector<double> to_double(std::span<const float> v) {
  return {v.begin(), v.end()};
}

}  // namespace vcd
