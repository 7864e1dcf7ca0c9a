#include "vps/flow.hpp"

#include <cmath>
#include <cstdint>

#include "io_util.hpp"

namespace vps {
namespace {

constexpr float kFloMagic = 202021.25f;  // spells "PIEH" on disk
constexpr std::int32_t kMaxFloSide = 99999;

}  // namespace

FlowField read_flo(const std::string& path) {
  std::ifstream in = io::open_input(path);
  float magic = io::read_f32(in, "magic");
  if (magic != kFloMagic) {
    throw BadMagic(path + ": not a .flo file");
  }
  std::int32_t width = io::read_i32(in, "width");
  std::int32_t height = io::read_i32(in, "height");
  if (width < 1 || height < 1 || width > kMaxFloSide || height > kMaxFloSide) {
    throw DimensionOverflow(path + ": implausible dimensions " +
                            std::to_string(width) + "x" +
                            std::to_string(height));
  }

  FlowField field;
  field.width = width;
  field.height = height;
  field.vectors.resize(2 * static_cast<std::size_t>(width) * height);
  for (float& v : field.vectors) {
    v = io::read_f32(in, "flow component");
    if (!std::isfinite(v)) {
      throw MalformedFile(path + ": non-finite flow component");
    }
  }
  return field;
}

void write_flo(const FlowField& field, const std::string& path) {
  std::ofstream out = io::open_output(path);
  io::write_f32(out, kFloMagic);
  io::write_i32(out, field.width);
  io::write_i32(out, field.height);
  for (float v : field.vectors) {
    io::write_f32(out, v);
  }
  if (!out) {
    throw IoError("short write to " + path);
  }
}

InstanceMask warp_mask(const InstanceMask& mask, const FlowField& flow) {
  if (mask.width != flow.width || mask.height != flow.height) {
    throw DimensionMismatch("mask and flow field geometry differ");
  }
  InstanceMask warped;
  warped.width = mask.width;
  warped.height = mask.height;
  warped.class_id = mask.class_id;
  warped.instance_id = mask.instance_id;
  warped.bits.assign(mask.bits.size(), 0);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.test(x, y)) {
        continue;
      }
      long tx = std::lround(static_cast<double>(x) + flow.u_at(x, y));
      long ty = std::lround(static_cast<double>(y) + flow.v_at(x, y));
      if (tx < 0 || ty < 0 || tx >= mask.width || ty >= mask.height) {
        continue;
      }
      std::uint8_t& cell =
          warped.bits[static_cast<std::size_t>(ty) * mask.width + tx];
      if (cell == 0) {
        cell = 1;
        ++warped.area;
      }
    }
  }
  return warped;
}

}  // namespace vps
