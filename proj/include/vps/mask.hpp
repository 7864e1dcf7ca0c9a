#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "vps/errors.hpp"

namespace vps {

// Per-pixel label packed as (class_id << 16) | instance_id.
using PixelLabel = std::uint32_t;

constexpr PixelLabel make_label(std::uint16_t class_id, std::uint16_t instance_id) {
  return (static_cast<PixelLabel>(class_id) << 16) | instance_id;
}

constexpr std::uint16_t label_class(PixelLabel label) {
  return static_cast<std::uint16_t>(label >> 16);
}

constexpr std::uint16_t label_instance(PixelLabel label) {
  return static_cast<std::uint16_t>(label & 0xffffu);
}

struct Category {
  std::uint16_t class_id = 0;
  bool is_thing = false;
  std::string name;
};

// (class id, instance id) key for one segment of one frame.
// Stuff segments always carry instance id 0. For thing classes instance id 0
// is the void sentinel and never names a real segment.
struct SegmentId {
  std::uint16_t class_id = 0;
  std::uint16_t instance_id = 0;

  friend bool operator==(const SegmentId&, const SegmentId&) = default;
  friend auto operator<=>(const SegmentId&, const SegmentId&) = default;
};

// Dense panoptic labeling of one frame, row-major.
struct SegmentationMap {
  int width = 0;
  int height = 0;
  std::vector<PixelLabel> labels;
  std::vector<Category> categories;

  PixelLabel at(int x, int y) const {
    return labels[static_cast<std::size_t>(y) * width + x];
  }
  PixelLabel& at(int x, int y) {
    return labels[static_cast<std::size_t>(y) * width + x];
  }

  // Throws UnknownClassId if the class is not listed in categories.
  bool is_thing_class(std::uint16_t class_id) const;
};

// Binary occupancy mask of a single segment, same frame geometry as its map.
struct InstanceMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // row-major, 0 or 1
  std::uint16_t class_id = 0;
  std::uint16_t instance_id = 0;
  int area = 0;

  SegmentId id() const { return {class_id, instance_id}; }
  bool test(int x, int y) const {
    return bits[static_cast<std::size_t>(y) * width + x] != 0;
  }
};

// Inclusive pixel rectangle.
struct BoundingBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  int width() const { return x_max - x_min + 1; }
  int height() const { return y_max - y_min + 1; }
};

// Fixed-size crop produced by crop_scale_pad. The rescaled box occupies
// the top-left occupied_height x occupied_width corner; the rest is zero
// padding. center_anchor moves the occupied block to the center instead.
struct RoiMask {
  int height = 0;
  int width = 0;
  std::vector<float> values;  // row-major, each 0 or 1

  float at(int x, int y) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }
};

// One mask per segment: things per (class, instance), stuff merged per class,
// void pixels skipped. Sorted by (class_id, instance_id).
std::vector<InstanceMask> extract_instances(const SegmentationMap& map);

// The thing-class subset of extract_instances, same order.
std::vector<InstanceMask> extract_things(const SegmentationMap& map);

// Tight axis-aligned box around the set pixels. Throws EmptyMask.
BoundingBox bounding_box(const InstanceMask& mask);

// Crops the mask to its bounding box and rescales it into a roi_height x
// roi_width window, preserving aspect ratio, nearest-neighbor sampling.
// The scale factor is min over both axes, so one axis fills its extent and
// the other leaves zero padding. Throws EmptyMask.
RoiMask crop_scale_pad(const InstanceMask& mask, int roi_height, int roi_width,
                       bool center_anchor = false);

// Binary segmentation map format: magic "VPSG", u32 version, u32 width,
// u32 height, u32 category count, categories (u16 class id, u8 thing flag,
// u8 name length, name bytes), then width*height packed u32 labels,
// row-major. All integers little-endian.
SegmentationMap read_segmap(const std::string& path);
void write_segmap(const SegmentationMap& map, const std::string& path);

}  // namespace vps
