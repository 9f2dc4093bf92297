#include "vcd/frame.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace vcd {

Frame::Frame(int w, int h, float fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(std::max(w, 0)) * std::max(h, 0), fill) {}

float Frame::clamped(int x, int y) const {
  x = std::clamp(x, 0, width - 1);
  y = std::clamp(y, 0, height - 1);
  return at(x, y);
}

void validate_frame(const Frame& frame) {
  if (frame.width <= 0 || frame.height <= 0) {
    throw std::invalid_argument("frame dimensions must be positive");
  }
  if (frame.pixels.size() != static_cast<std::size_t>(frame.width) * frame.height) {
    throw std::invalid_argument("frame pixel count " + std::to_string(frame.pixels.size()) +
                                " != " + std::to_string(frame.width) + "x" +
                                std::to_string(frame.height));
  }
  for (const float p : frame.pixels) {
    if (!(p >= 0.0F && p <= 1.0F)) {
      throw std::invalid_argument("frame intensity outside [0,1]");
    }
  }
}

Frame frame_from_rgb(int width, int height, std::span<const float> rgb) {
  if (width <= 0 || height <= 0 ||
      rgb.size() != static_cast<std::size_t>(width) * height * 3) {
    throw std::invalid_argument("rgb buffer does not match frame geometry");
  }
  Frame out(width, height);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const double luma = 0.299 * rgb[3 * i] + 0.587 * rgb[3 * i + 1] + 0.114 * rgb[3 * i + 2];
    out.pixels[i] = static_cast<float>(std::clamp(luma, 0.0, 1.0));
  }
  return out;
}

Frame crop(const Frame& frame, int x0, int y0, int width, int height) {
  if (x0 < 0 || y0 < 0 || width <= 0 || height <= 0 || x0 + width > frame.width ||
      y0 + height > frame.height) {
    throw std::invalid_argument("crop rectangle outside frame");
  }
  Frame out(width, height);
  for (int y = 0; y < height; ++y) {
    std::copy_n(frame.pixels.begin() + static_cast<std::ptrdiff_t>(y0 + y) * frame.width + x0,
                width, out.pixels.begin() + static_cast<std::ptrdiff_t>(y) * width);
  }
  return out;
}

std::vector<SampledFrame> sample_frames(const Video& video, double rate_fps) {
  if (!(rate_fps > 0.0) || !(video.fps > 0.0)) {
    throw std::invalid_argument("sampling and native frame rates must be positive");
  }
  std::vector<SampledFrame> out;
  const double duration = video.duration_s();
  for (int i = 0;; ++i) {
    const double t = (i + 0.5) / rate_fps;
    if (t >= duration) break;
    const auto index = static_cast<std::size_t>(std::floor(t * video.fps));
    if (index >= video.frames.size()) break;
    out.push_back({t, &video.frames[index]});
  }
  return out;
}

}  // namespace vcd
