#pragma once

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "vps/mask.hpp"

namespace vpstest {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("vpstest_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

inline vps::SegmentationMap make_map(int width, int height,
                                     std::vector<vps::Category> categories,
                                     vps::PixelLabel fill) {
  vps::SegmentationMap map;
  map.width = width;
  map.height = height;
  map.categories = std::move(categories);
  map.labels.assign(static_cast<std::size_t>(width) * height, fill);
  return map;
}

inline void fill_rect(vps::SegmentationMap& map, int x0, int y0, int x1,
                      int y1, vps::PixelLabel label) {
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      map.at(x, y) = label;
    }
  }
}

inline vps::InstanceMask make_mask(int width, int height,
                                   const std::vector<std::pair<int, int>>& pixels,
                                   std::uint16_t class_id = 2,
                                   std::uint16_t instance_id = 1) {
  vps::InstanceMask mask;
  mask.width = width;
  mask.height = height;
  mask.class_id = class_id;
  mask.instance_id = instance_id;
  mask.bits.assign(static_cast<std::size_t>(width) * height, 0);
  for (auto [x, y] : pixels) {
    auto& cell = mask.bits[static_cast<std::size_t>(y) * width + x];
    if (cell == 0) {
      cell = 1;
      ++mask.area;
    }
  }
  return mask;
}

inline vps::InstanceMask random_mask(std::mt19937_64& eng, int width,
                                     int height, double density,
                                     std::uint16_t class_id = 2,
                                     std::uint16_t instance_id = 1) {
  vps::InstanceMask mask;
  mask.width = width;
  mask.height = height;
  mask.class_id = class_id;
  mask.instance_id = instance_id;
  mask.bits.assign(static_cast<std::size_t>(width) * height, 0);
  std::uint64_t threshold =
      static_cast<std::uint64_t>(density * 18446744073709551615.0);
  for (auto& cell : mask.bits) {
    if (eng() < threshold) {
      cell = 1;
      ++mask.area;
    }
  }
  return mask;
}

// Overwrites one byte of a file, for corruption tests.
inline void patch_byte(const std::string& path, long offset,
                       unsigned char value) {
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(offset);
  f.put(static_cast<char>(value));
}

// Copies the first n bytes to a new file, for truncation tests.
inline void truncate_copy(const std::string& src, const std::string& dst,
                          long n) {
  std::ifstream in(src, std::ios::binary);
  std::ofstream out(dst, std::ios::binary);
  std::vector<char> buf(static_cast<std::size_t>(n));
  in.read(buf.data(), n);
  out.write(buf.data(), in.gcount());
}

}  // namespace vpstest
