#pragma once

// Raw video container, little-endian:
//   "VCDV" | u32 width | u32 height | f32 fps | u32 frames | u16 id_len, id | frames x W x H f32
// plus a netpbm (PGM/PPM) frame-directory reader for external footage.

#include <filesystem>

#include "vcd/frame.hpp"

namespace vcd {

void write_video(const std::filesystem::path& path, const Video& video);
Video read_video(const std::filesystem::path& path);

// Reads *.pgm / *.ppm (binary P5/P6, maxval <= 255) in lexicographic order.
// Color frames are converted to luma.
Video read_netpbm_directory(const std::filesystem::path& dir, const std::string& id, double fps);

Frame read_netpbm(const std::filesystem::path& path);

}  // namespace vcd
