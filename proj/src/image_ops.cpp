#include "vcd/image_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vcd::image {
namespace {

double bilinear(const Frame& f, double x, double y) {
  // x, y in pixel-centre coordinates.
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const int ix = static_cast<int>(fx);
  const int iy = static_cast<int>(fy);
  const double ax = x - fx;
  const double ay = y - fy;
  const double top = (1.0 - ax) * f.clamped(ix, iy) + ax * f.clamped(ix + 1, iy);
  const double bottom = (1.0 - ax) * f.clamped(ix, iy + 1) + ax * f.clamped(ix + 1, iy + 1);
  return (1.0 - ay) * top + ay * bottom;
}

}  // namespace

Frame resample(const Frame& src, double x0, double y0, double w, double h, int out_w, int out_h) {
  if (out_w <= 0 || out_h <= 0 || !(w > 0.0) || !(h > 0.0)) {
    throw std::invalid_argument("resample: bad geometry");
  }
  const int sx = std::max(1, static_cast<int>(std::ceil(w / out_w)));
  const int sy = std::max(1, static_cast<int>(std::ceil(h / out_h)));
  Frame out(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      double acc = 0.0;
      for (int j = 0; j < sy; ++j) {
        for (int i = 0; i < sx; ++i) {
          const double u = x0 + (x + (i + 0.5) / sx) * w / out_w - 0.5;
          const double v = y0 + (y + (j + 0.5) / sy) * h / out_h - 0.5;
          acc += bilinear(src, u, v);
        }
      }
      out.at(x, y) = static_cast<float>(std::clamp(acc / (sx * sy), 0.0, 1.0));
    }
  }
  return out;
}

Frame box_blur(const Frame& src, int radius) {
  if (radius <= 0) return src;
  const int n = 2 * radius + 1;
  Frame tmp(src.width, src.height);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      double s = 0.0;
      for (int k = -radius; k <= radius; ++k) s += src.clamped(x + k, y);
      tmp.at(x, y) = static_cast<float>(s / n);
    }
  }
  Frame out(src.width, src.height);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      double s = 0.0;
      for (int k = -radius; k <= radius; ++k) s += tmp.clamped(x, y + k);
      out.at(x, y) = static_cast<float>(s / n);
    }
  }
  return out;
}

Frame rotate(const Frame& src, double degrees) {
  const double rad = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  const double cx = 0.5 * (src.width - 1);
  const double cy = 0.5 * (src.height - 1);
  Frame out(src.width, src.height, 0.0F);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const double u = c * dx + s * dy + cx;
      const double v = -s * dx + c * dy + cy;
      if (u < -0.5 || v < -0.5 || u > src.width - 0.5 || v > src.height - 0.5) continue;
      out.at(x, y) = static_cast<float>(std::clamp(bilinear(src, u, v), 0.0, 1.0));
    }
  }
  return out;
}

Frame adjust_brightness(const Frame& src, double delta) {
  Frame out = src;
  for (float& p : out.pixels) p = static_cast<float>(std::clamp(p + delta, 0.0, 1.0));
  return out;
}

void paste(Frame& dst, const Frame& tile, int x0, int y0) {
  if (x0 < 0 || y0 < 0 || x0 + tile.width > dst.width || y0 + tile.height > dst.height) {
    throw std::invalid_argument("paste: tile outside destination");
  }
  for (int y = 0; y < tile.height; ++y) {
    for (int x = 0; x < tile.width; ++x) dst.at(x0 + x, y0 + y) = tile.at(x, y);
  }
}

}  // namespace vcd::image
