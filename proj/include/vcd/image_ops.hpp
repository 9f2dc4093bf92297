#pragma once

#include "vcd/frame.hpp"

namespace vcd::image {

// Samples the source rectangle [x0, x0+w) x [y0, y0+h) onto an out_w x out_h
// grid with bilinear interpolation, supersampling when shrinking.
Frame resample(const Frame& src, double x0, double y0, double w, double h, int out_w, int out_h);

Frame box_blur(const Frame& src, int radius);

// Rotation about the frame centre; uncovered pixels become 0.
Frame rotate(const Frame& src, double degrees);

Frame adjust_brightness(const Frame& src, double delta);

// Copies tile into dst at (x0, y0).
void paste(Frame& dst, const Frame& tile, int x0, int y0);

}  // namespace vcd::image
