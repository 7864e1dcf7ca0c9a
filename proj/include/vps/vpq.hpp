#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vps/mask.hpp"

namespace vps {

// One segment traced through a window of consecutive frames. Stuff tubes
// carry instance id 0; frames where the segment is absent hold an empty
// bitmap. Void pixels belong to no tube.
struct Tube {
  std::uint16_t class_id = 0;
  std::uint16_t instance_id = 0;
  int width = 0;
  int height = 0;
  std::vector<std::vector<std::uint8_t>> masks;  // one bitmap per frame
  long long area = 0;                            // set bits over all frames
};

// Tubes of frames [start, start + length), sorted by (class, instance).
std::vector<Tube> build_tubes(const std::vector<SegmentationMap>& frames,
                              std::size_t start, std::size_t length);

// Volume IoU: intersection and union summed over the window frames.
double tube_iou(const Tube& a, const Tube& b);

struct ClassStats {
  bool is_thing = false;
  bool present = false;  // appeared in prediction or truth in some window
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  double iou_sum = 0.0;
};

struct WindowScores {
  int window_length = 0;
  double vpq = 0.0;
  double vpq_things = 0.0;
  double vpq_stuff = 0.0;
  std::map<std::uint16_t, ClassStats> per_class;
};

// Slides a window of window_length frames over the sequence, matches
// prediction tubes to truth tubes of the same class at IoU > 0.5 (such a
// match is unique; violations raise an internal error) and scores each
// class as sum(IoU) / (TP + FP/2 + FN/2), averaged over classes that
// appear at all, scaled to percent. Classes absent from every window are
// excluded; if a subset (things or stuff) is empty its score is 0.
WindowScores vpq_window(const std::vector<SegmentationMap>& pred,
                        const std::vector<SegmentationMap>& gt,
                        int window_length);

struct VpqReport {
  std::vector<WindowScores> windows;
  double vpq = 0.0;         // means over the window lengths
  double vpq_things = 0.0;
  double vpq_stuff = 0.0;
};

VpqReport vpq_report(const std::vector<SegmentationMap>& pred,
                     const std::vector<SegmentationMap>& gt,
                     const std::vector<int>& window_lengths = {1, 2, 3, 4});

// Fixed-width text table, one row per window length plus the mean row.
std::string format_report_table(const VpqReport& report);

}  // namespace vps
