#pragma once

#include <span>
#include <string>
#include <vector>

namespace vcd {

// Row-major grayscale frame, intensities in [0,1].
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  Frame() = default;
  Frame(int w, int h, float fill = 0.0F);

  float at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  float& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

  // Border-replicated access.
  float clamped(int x, int y) const;

  bool operator==(const Frame&) const = default;
};

// Throws std::invalid_argument when the pixel count or intensity range is wrong.
void validate_frame(const Frame& frame);

// Interleaved RGB in [0,1] to luma with Rec.601 weights.
Frame frame_from_rgb(int width, int height, std::span<const float> rgb);

Frame crop(const Frame& frame, int x0, int y0, int width, int height);

struct Video {
  std::string id;
  double fps = 2.0;
  std::vector<Frame> frames;

  double duration_s() const { return frames.empty() ? 0.0 : frames.size() / fps; }
};

struct SampledFrame {
  double timestamp_s;
  const Frame* frame;
};

// Mid-interval sampling: t = 0.5/rate, 1.5/rate, ... while t < duration.
std::vector<SampledFrame> sample_frames(const Video& video, double rate_fps = 1.0);

}  // namespace vcd
