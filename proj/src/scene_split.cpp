#include "vcd/scene_split.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vcd::scene {
namespace {

int axis_length(const Frame& f, Axis axis) { return axis == Axis::Vertical ? f.width : f.height; }

// Mean |I(p+1) - I(p-1)| across the seam line at offset p, for every interior p.
std::vector<double> central_difference_means(const Frame& f, Axis axis) {
  const int len = axis_length(f, axis);
  const int span = axis == Axis::Vertical ? f.height : f.width;
  std::vector<double> out(static_cast<std::size_t>(len), 0.0);
  for (int p = 1; p + 1 < len; ++p) {
    double s = 0.0;
    for (int q = 0; q < span; ++q) {
      const double a = axis == Axis::Vertical ? f.at(p + 1, q) : f.at(q, p + 1);
      const double b = axis == Axis::Vertical ? f.at(p - 1, q) : f.at(q, p - 1);
      s += std::abs(a - b);
    }
    out[p] = s / span;
  }
  return out;
}

double one_sided_mean(const Frame& f, Axis axis, int p) {
  const int span = axis == Axis::Vertical ? f.height : f.width;
  double s = 0.0;
  for (int q = 0; q < span; ++q) {
    const double a = axis == Axis::Vertical ? f.at(p, q) : f.at(q, p);
    const double b = axis == Axis::Vertical ? f.at(p - 1, q) : f.at(q, p - 1);
    s += std::abs(a - b);
  }
  return s / span;
}

std::vector<const Frame*> pointers(const std::vector<Frame>& frames) {
  std::vector<const Frame*> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(&f);
  return out;
}

struct Cluster {
  std::vector<int> positions;
};

Cluster best_cluster(const std::vector<BoundaryCandidate>& peaks, const SplitterConfig& config) {
  std::vector<int> qualified;
  for (const auto& p : peaks) {
    if (p.strength >= config.strength_min) qualified.push_back(p.position);
  }
  std::sort(qualified.begin(), qualified.end());
  Cluster best;
  for (const int centre : qualified) {
    Cluster c;
    for (const int q : qualified) {
      if (std::abs(q - centre) <= config.cluster_radius_px) c.positions.push_back(q);
    }
    if (c.positions.size() > best.positions.size()) best = std::move(c);
  }
  return best;
}

}  // namespace

int min_scene_px(int dimension, const SplitterConfig& config) {
  return std::max(1, static_cast<int>(std::floor(config.min_scene_fraction * dimension)));
}

std::vector<double> boundary_profile(const Frame& frame, Axis axis, const SplitterConfig& config) {
  const int len = axis_length(frame, axis);
  const int margin = min_scene_px(len, config);
  if (len < 3 || len <= 2 * margin) {
    throw std::invalid_argument("frame too small for seam profiling: " + std::to_string(len) +
                                " px along the probed axis");
  }
  const auto diff = central_difference_means(frame, axis);
  // Gradient along the axis is half the central difference.
  double gradient = 0.0;
  for (int p = 1; p + 1 < len; ++p) gradient += 0.5 * diff[p];
  gradient /= (len - 2);
  std::vector<double> profile(static_cast<std::size_t>(len - 2 * margin));
  for (std::size_t i = 0; i < profile.size(); ++i) {
    profile[i] = diff[margin + i] / (gradient + 1e-6);
  }
  return profile;
}

BoundaryCandidate frame_peak(const Frame& frame, Axis axis, const SplitterConfig& config) {
  const auto profile = boundary_profile(frame, axis, config);
  const int len = axis_length(frame, axis);
  const int margin = min_scene_px(len, config);
  const auto it = std::max_element(profile.begin(), profile.end());
  const int p = margin + static_cast<int>(it - profile.begin());
  BoundaryCandidate out{axis, p, *it};
  // The central difference at p straddles two seams: (p-1|p) and (p|p+1).
  if (one_sided_mean(frame, axis, p + 1) > one_sided_mean(frame, axis, p)) {
    out.position = std::min(p + 1, len - margin);
  }
  return out;
}

std::optional<StableBoundary> temporal_vote(const std::vector<BoundaryCandidate>& peaks,
                                            const SplitterConfig& config) {
  if (peaks.empty()) return std::nullopt;
  Cluster c = best_cluster(peaks, config);
  if (c.positions.empty()) return std::nullopt;
  const double persistence = static_cast<double>(c.positions.size()) / peaks.size();
  if (persistence < config.persistence_fraction) return std::nullopt;
  // positions are sorted; lower median for even counts.
  const int median = c.positions[(c.positions.size() - 1) / 2];
  return StableBoundary{median, persistence};
}

double peak_persistence(const std::vector<BoundaryCandidate>& peaks, const SplitterConfig& config) {
  if (peaks.empty()) return 0.0;
  return static_cast<double>(best_cluster(peaks, config).positions.size()) / peaks.size();
}

FramePeaks collect_peaks(const std::vector<const Frame*>& frames, const SplitterConfig& config) {
  FramePeaks out;
  for (const Frame* f : frames) {
    out.vertical.push_back(frame_peak(*f, Axis::Vertical, config));
    out.horizontal.push_back(frame_peak(*f, Axis::Horizontal, config));
  }
  return out;
}

SceneLayout layout_from_peaks(const FramePeaks& peaks, const SplitterConfig& config) {
  const auto vx = temporal_vote(peaks.vertical, config);
  const auto hy = temporal_vote(peaks.horizontal, config);
  SceneLayout out;
  if (vx && hy) {
    out = {LayoutKind::Grid, vx->position, hy->position, 0.5 * (vx->persistence + hy->persistence)};
  } else if (vx) {
    out = {LayoutKind::VSplit, vx->position, -1, vx->persistence};
  } else if (hy) {
    out = {LayoutKind::HSplit, -1, hy->position, hy->persistence};
  }
  return out;
}

SceneLayout detect_layout(const std::vector<const Frame*>& frames, const SplitterConfig& config) {
  if (frames.empty()) return {};
  return layout_from_peaks(collect_peaks(frames, config), config);
}

SceneLayout detect_layout(const std::vector<Frame>& frames, const SplitterConfig& config) {
  return detect_layout(pointers(frames), config);
}

std::vector<SceneTrack> split_video(const std::string& video_id,
                                    const std::vector<const Frame*>& frames,
                                    const SceneLayout& layout) {
  if (frames.empty()) return {};
  const int w = frames.front()->width;
  const int h = frames.front()->height;
  for (const Frame* f : frames) {
    if (f->width != w || f->height != h) {
      throw std::invalid_argument("split_video: frames of '" + video_id + "' differ in geometry");
    }
  }
  const bool splits_x = layout.kind == LayoutKind::VSplit || layout.kind == LayoutKind::Grid;
  const bool splits_y = layout.kind == LayoutKind::HSplit || layout.kind == LayoutKind::Grid;
  if (splits_x && (layout.x <= 0 || layout.x >= w)) {
    throw std::invalid_argument("split_video: x = " + std::to_string(layout.x) +
                                " outside frame width " + std::to_string(w));
  }
  if (splits_y && (layout.y <= 0 || layout.y >= h)) {
    throw std::invalid_argument("split_video: y = " + std::to_string(layout.y) +
                                " outside frame height " + std::to_string(h));
  }
  std::vector<std::pair<int, int>> cols = {{0, w}};
  std::vector<std::pair<int, int>> rows = {{0, h}};
  if (splits_x) cols = {{0, layout.x}, {layout.x, w - layout.x}};
  if (splits_y) rows = {{0, layout.y}, {layout.y, h - layout.y}};

  std::vector<SceneTrack> tracks;
  for (const auto& [y0, rh] : rows) {
    for (const auto& [x0, cw] : cols) {
      SceneTrack t;
      t.parent_video_id = video_id;
      t.scene_index = static_cast<int>(tracks.size());
      t.x0 = x0;
      t.y0 = y0;
      t.width = cw;
      t.height = rh;
      t.frames.reserve(frames.size());
      for (const Frame* f : frames) t.frames.push_back(crop(*f, x0, y0, cw, rh));
      tracks.push_back(std::move(t));
    }
  }
  return tracks;
}

std::vector<SceneTrack> split_video(const std::string& video_id, const std::vector<Frame>& frames,
                                    const SceneLayout& layout) {
  return split_video(video_id, pointers(frames), layout);
}

std::string to_string(LayoutKind kind) {
  switch (kind) {
    case LayoutKind::Single: return "single";
    case LayoutKind::VSplit: return "vsplit";
    case LayoutKind::HSplit: return "hsplit";
    case LayoutKind::Grid: return "grid";
  }
  return "single";
}

}  // namespace vcd::scene
