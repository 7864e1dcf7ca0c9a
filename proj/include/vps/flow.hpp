#pragma once

#include <string>
#include <vector>

#include "vps/mask.hpp"

namespace vps {

// Dense forward optical flow, row-major, (u, v) interleaved. The vector at
// pixel (x, y) points to its position in the next frame: (x + u, y + v).
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> vectors;  // 2 * width * height floats

  float u_at(int x, int y) const {
    return vectors[2 * (static_cast<std::size_t>(y) * width + x)];
  }
  float v_at(int x, int y) const {
    return vectors[2 * (static_cast<std::size_t>(y) * width + x) + 1];
  }
  void set(int x, int y, float u, float v) {
    std::size_t base = 2 * (static_cast<std::size_t>(y) * width + x);
    vectors[base] = u;
    vectors[base + 1] = v;
  }
};

// Middlebury .flo: float32 magic 202021.25 ("PIEH"), int32 width, int32
// height, then interleaved float32 (u, v) row-major, all little-endian.
FlowField read_flo(const std::string& path);
void write_flo(const FlowField& field, const std::string& path);

// Pushes every set pixel along its flow vector, rounding half away from
// zero; targets outside the frame are dropped. Duplicate targets collapse
// into one set pixel. Throws DimensionMismatch if geometries differ.
InstanceMask warp_mask(const InstanceMask& mask, const FlowField& flow);

}  // namespace vps
