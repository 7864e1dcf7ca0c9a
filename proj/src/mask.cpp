#include "vps/mask.hpp"

#include <cstdint>
#include <map>

#include "io_util.hpp"

namespace vps {
namespace {

constexpr std::uint8_t kSegmapMagic[4] = {0x56, 0x50, 0x53, 0x47};  // "VPSG"
constexpr std::uint32_t kSegmapVersion = 1;
constexpr std::uint32_t kMaxSide = 1 << 15;
constexpr std::uint64_t kMaxPixels = 100'000'000;

const Category* find_category(const std::vector<Category>& categories,
                              std::uint16_t class_id) {
  for (const Category& c : categories) {
    if (c.class_id == class_id) {
      return &c;
    }
  }
  return nullptr;
}

}  // namespace

bool SegmentationMap::is_thing_class(std::uint16_t class_id) const {
  const Category* c = find_category(categories, class_id);
  if (c == nullptr) {
    throw UnknownClassId("class id " + std::to_string(class_id) +
                         " not listed in categories");
  }
  return c->is_thing;
}

std::vector<InstanceMask> extract_instances(const SegmentationMap& map) {
  // Keyed by the packed label, so iteration order is (class_id, instance_id)
  // ascending. Stuff pixels are merged under instance id 0; void pixels
  // (thing class, instance 0) belong to no segment.
  std::map<PixelLabel, InstanceMask> segments;
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      PixelLabel label = map.at(x, y);
      std::uint16_t class_id = label_class(label);
      std::uint16_t instance_id = label_instance(label);
      bool thing = map.is_thing_class(class_id);
      if (thing && instance_id == 0) {
        continue;
      }
      PixelLabel key = thing ? label : make_label(class_id, 0);
      auto [it, inserted] = segments.try_emplace(key);
      InstanceMask& mask = it->second;
      if (inserted) {
        mask.width = map.width;
        mask.height = map.height;
        mask.bits.assign(static_cast<std::size_t>(map.width) * map.height, 0);
        mask.class_id = class_id;
        mask.instance_id = thing ? instance_id : 0;
      }
      mask.bits[static_cast<std::size_t>(y) * map.width + x] = 1;
      ++mask.area;
    }
  }

  std::vector<InstanceMask> out;
  out.reserve(segments.size());
  for (auto& [key, mask] : segments) {
    out.push_back(std::move(mask));
  }
  return out;
}

std::vector<InstanceMask> extract_things(const SegmentationMap& map) {
  std::vector<InstanceMask> all = extract_instances(map);
  std::vector<InstanceMask> things;
  for (InstanceMask& m : all) {
    if (map.is_thing_class(m.class_id)) {
      things.push_back(std::move(m));
    }
  }
  return things;
}

BoundingBox bounding_box(const InstanceMask& mask) {
  BoundingBox box{mask.width, mask.height, -1, -1};
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.test(x, y)) {
        continue;
      }
      box.x_min = std::min(box.x_min, x);
      box.y_min = std::min(box.y_min, y);
      box.x_max = std::max(box.x_max, x);
      box.y_max = std::max(box.y_max, y);
    }
  }
  if (box.x_max < 0) {
    throw EmptyMask("bounding_box of a mask with no set pixels");
  }
  return box;
}

RoiMask crop_scale_pad(const InstanceMask& mask, int roi_height, int roi_width,
                       bool center_anchor) {
  if (roi_height < 1 || roi_width < 1) {
    throw ShapeMismatch("crop target must be at least 1x1");
  }
  BoundingBox box = bounding_box(mask);
  std::int64_t box_h = box.height();
  std::int64_t box_w = box.width();

  // The occupied extents are computed in exact integer arithmetic: the
  // binding axis (smaller scale factor) fills its target extent, the other
  // gets floor(extent * scale), never below one pixel. A height tie binds
  // the height.
  std::int64_t occ_h;
  std::int64_t occ_w;
  if (static_cast<std::int64_t>(roi_height) * box_w <=
      static_cast<std::int64_t>(roi_width) * box_h) {
    occ_h = roi_height;
    occ_w = std::max<std::int64_t>(1, box_w * roi_height / box_h);
  } else {
    occ_w = roi_width;
    occ_h = std::max<std::int64_t>(1, box_h * roi_width / box_w);
  }

  int off_y = center_anchor ? static_cast<int>((roi_height - occ_h) / 2) : 0;
  int off_x = center_anchor ? static_cast<int>((roi_width - occ_w) / 2) : 0;

  RoiMask roi;
  roi.height = roi_height;
  roi.width = roi_width;
  roi.values.assign(static_cast<std::size_t>(roi_height) * roi_width, 0.0f);
  for (std::int64_t r = 0; r < occ_h; ++r) {
    // Nearest-neighbor sample at the destination pixel center.
    int src_y = box.y_min + static_cast<int>((2 * r + 1) * box_h / (2 * occ_h));
    for (std::int64_t c = 0; c < occ_w; ++c) {
      int src_x =
          box.x_min + static_cast<int>((2 * c + 1) * box_w / (2 * occ_w));
      if (mask.test(src_x, src_y)) {
        roi.values[static_cast<std::size_t>(off_y + r) * roi_width + off_x +
                   c] = 1.0f;
      }
    }
  }
  return roi;
}

SegmentationMap read_segmap(const std::string& path) {
  std::ifstream in = io::open_input(path);
  for (std::uint8_t expected : kSegmapMagic) {
    if (io::read_u8(in, "magic") != expected) {
      throw BadMagic(path + ": not a segmentation map file");
    }
  }
  std::uint32_t version = io::read_u32(in, "version");
  if (version != kSegmapVersion) {
    throw UnsupportedVersion(path + ": unsupported version " +
                             std::to_string(version));
  }

  SegmentationMap map;
  std::uint32_t width = io::read_u32(in, "width");
  std::uint32_t height = io::read_u32(in, "height");
  if (width < 1 || height < 1 || width > kMaxSide || height > kMaxSide ||
      static_cast<std::uint64_t>(width) * height > kMaxPixels) {
    throw DimensionOverflow(path + ": implausible dimensions " +
                            std::to_string(width) + "x" +
                            std::to_string(height));
  }
  map.width = static_cast<int>(width);
  map.height = static_cast<int>(height);

  std::uint32_t n_categories = io::read_u32(in, "category count");
  if (n_categories > 0xffff) {
    throw DimensionOverflow(path + ": implausible category count");
  }
  map.categories.reserve(n_categories);
  for (std::uint32_t i = 0; i < n_categories; ++i) {
    Category c;
    c.class_id = io::read_u16(in, "category class id");
    c.is_thing = io::read_u8(in, "category thing flag") != 0;
    std::uint8_t name_len = io::read_u8(in, "category name length");
    c.name.resize(name_len);
    for (std::uint8_t k = 0; k < name_len; ++k) {
      c.name[k] = static_cast<char>(io::read_u8(in, "category name"));
    }
    if (find_category(map.categories, c.class_id) != nullptr) {
      throw MalformedFile(path + ": duplicate category " +
                          std::to_string(c.class_id));
    }
    map.categories.push_back(std::move(c));
  }

  map.labels.resize(static_cast<std::size_t>(map.width) * map.height);
  for (PixelLabel& label : map.labels) {
    label = io::read_u32(in, "pixel label");
    std::uint16_t class_id = label_class(label);
    if (!map.is_thing_class(class_id) && label_instance(label) != 0) {
      throw MalformedFile(path + ": stuff pixel with nonzero instance id");
    }
  }
  return map;
}

void write_segmap(const SegmentationMap& map, const std::string& path) {
  std::ofstream out = io::open_output(path);
  for (std::uint8_t b : kSegmapMagic) {
    io::write_u8(out, b);
  }
  io::write_u32(out, kSegmapVersion);
  io::write_u32(out, static_cast<std::uint32_t>(map.width));
  io::write_u32(out, static_cast<std::uint32_t>(map.height));
  io::write_u32(out, static_cast<std::uint32_t>(map.categories.size()));
  for (const Category& c : map.categories) {
    if (c.name.size() > 255) {
      throw Error("category name longer than 255 bytes");
    }
    io::write_u16(out, c.class_id);
    io::write_u8(out, c.is_thing ? 1 : 0);
    io::write_u8(out, static_cast<std::uint8_t>(c.name.size()));
    out.write(c.name.data(), static_cast<std::streamsize>(c.name.size()));
  }
  for (PixelLabel label : map.labels) {
    io::write_u32(out, label);
  }
  if (!out) {
    throw IoError("short write to " + path);
  }
}

}  // namespace vps
