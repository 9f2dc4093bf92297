#pragma once

// Detection of frames that stack 2 or 4 scenes along axis-aligned seams.
//
// Each frame yields a contrast profile per axis: the mean absolute central
// difference across a candidate seam divided by the frame's mean difference
// along the same axis. The per-frame peaks are then voted over time; a seam
// survives only when it recurs at (nearly) the same offset in enough frames.

#include <optional>
#include <string>
#include <vector>

#include "vcd/frame.hpp"

namespace vcd::scene {

enum class Axis { Vertical, Horizontal };  // Vertical: seam at column x

struct SplitterConfig {
  double min_scene_fraction = 0.16;
  double persistence_fraction = 0.6;
  double strength_min = 4.0;
  int cluster_radius_px = 2;
};

struct BoundaryCandidate {
  Axis axis = Axis::Vertical;
  int position = 0;      // first pixel of the second scene
  double strength = 0.0;
};

struct StableBoundary {
  int position = 0;
  double persistence = 0.0;
};

enum class LayoutKind { Single, VSplit, HSplit, Grid };

struct SceneLayout {
  LayoutKind kind = LayoutKind::Single;
  int x = -1;
  int y = -1;
  double confidence = 1.0;

  bool operator==(const SceneLayout&) const = default;
};

struct SceneTrack {
  std::string parent_video_id;
  int scene_index = 0;
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
  std::vector<Frame> frames;
};

int min_scene_px(int dimension, const SplitterConfig& config);

// strength[i] belongs to candidate offset min_scene_px + i. Throws when the
// frame is smaller than 2 * min_scene_px (and 3 px) along the axis.
std::vector<double> boundary_profile(const Frame& frame, Axis axis, const SplitterConfig& config);

// Strongest seam of one frame, with the offset refined to the sharper of the
// two one-sided differences around the central-difference argmax.
BoundaryCandidate frame_peak(const Frame& frame, Axis axis, const SplitterConfig& config);

// Emits the seam whose +-cluster_radius cluster of qualifying per-frame peaks
// reaches persistence_fraction of all frames. Position is the cluster median.
std::optional<StableBoundary> temporal_vote(const std::vector<BoundaryCandidate>& peaks,
                                            const SplitterConfig& config);

// Fraction of frames in the largest qualifying cluster; 0 when none qualify.
double peak_persistence(const std::vector<BoundaryCandidate>& peaks, const SplitterConfig& config);

struct FramePeaks {
  std::vector<BoundaryCandidate> vertical;
  std::vector<BoundaryCandidate> horizontal;
};

FramePeaks collect_peaks(const std::vector<const Frame*>& frames, const SplitterConfig& config);

SceneLayout layout_from_peaks(const FramePeaks& peaks, const SplitterConfig& config);

SceneLayout detect_layout(const std::vector<const Frame*>& frames,
                          const SplitterConfig& config = {});
SceneLayout detect_layout(const std::vector<Frame>& frames, const SplitterConfig& config = {});

// Crops every frame into per-scene tracks (row-major for Grid).
std::vector<SceneTrack> split_video(const std::string& video_id,
                                    const std::vector<const Frame*>& frames,
                                    const SceneLayout& layout);
std::vector<SceneTrack> split_video(const std::string& video_id, const std::vector<Frame>& frames,
                                    const SceneLayout& layout);

std::string to_string(LayoutKind kind);

}  // namespace vcd::scene
