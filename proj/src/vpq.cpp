#include "vps/vpq.hpp"

#include <cstdio>
#include <set>

namespace vps {
namespace {

// Normalized tube key for a pixel. Stuff folds to instance id 0; void
// pixels are flagged invalid and belong to no tube.
struct PixelKey {
  bool valid = false;
  PixelLabel key = 0;
};

PixelKey tube_key(const SegmentationMap& map, PixelLabel label) {
  std::uint16_t class_id = label_class(label);
  if (map.is_thing_class(class_id)) {
    std::uint16_t instance = label_instance(label);
    if (instance == 0) {
      return {};  // void
    }
    return {true, label};
  }
  return {true, make_label(class_id, 0)};
}

void check_sequences(const std::vector<SegmentationMap>& pred,
                     const std::vector<SegmentationMap>& gt) {
  if (pred.size() != gt.size()) {
    throw LengthMismatch("prediction and truth differ in frame count");
  }
  for (std::size_t f = 0; f < pred.size(); ++f) {
    if (pred[f].width != gt[f].width || pred[f].height != gt[f].height) {
      throw DimensionMismatch("prediction and truth geometry differ");
    }
  }
}

void merge_class_info(const std::vector<SegmentationMap>& frames,
                      std::map<std::uint16_t, bool>& is_thing) {
  for (const SegmentationMap& map : frames) {
    for (const Category& c : map.categories) {
      auto [it, inserted] = is_thing.try_emplace(c.class_id, c.is_thing);
      if (!inserted && it->second != c.is_thing) {
        throw Error("class " + std::to_string(c.class_id) +
                    " is both thing and stuff");
      }
    }
  }
}

double subset_mean(const std::map<std::uint16_t, ClassStats>& per_class,
                   int which) {
  // which: 0 = all, 1 = things, 2 = stuff.
  double sum = 0.0;
  int n = 0;
  for (const auto& [class_id, stats] : per_class) {
    if (!stats.present) {
      continue;
    }
    if (which == 1 && !stats.is_thing) {
      continue;
    }
    if (which == 2 && stats.is_thing) {
      continue;
    }
    double denom = static_cast<double>(stats.tp) +
                   0.5 * static_cast<double>(stats.fp + stats.fn);
    sum += stats.iou_sum / denom;
    ++n;
  }
  return n == 0 ? 0.0 : 100.0 * sum / n;
}

}  // namespace

std::vector<Tube> build_tubes(const std::vector<SegmentationMap>& frames,
                              std::size_t start, std::size_t length) {
  if (start + length > frames.size()) {
    throw LengthMismatch("tube window exceeds the sequence");
  }
  std::map<PixelLabel, Tube> tubes;
  for (std::size_t f = 0; f < length; ++f) {
    const SegmentationMap& map = frames[start + f];
    std::size_t n = map.labels.size();
    for (std::size_t i = 0; i < n; ++i) {
      PixelKey key = tube_key(map, map.labels[i]);
      if (!key.valid) {
        continue;
      }
      auto [it, inserted] = tubes.try_emplace(key.key);
      Tube& tube = it->second;
      if (inserted) {
        tube.class_id = label_class(key.key);
        tube.instance_id = label_instance(key.key);
        tube.width = map.width;
        tube.height = map.height;
        tube.masks.assign(length, {});
      }
      if (tube.masks[f].empty()) {
        tube.masks[f].assign(n, 0);
      }
      tube.masks[f][i] = 1;
      ++tube.area;
    }
  }
  std::vector<Tube> out;
  out.reserve(tubes.size());
  for (auto& [key, tube] : tubes) {
    out.push_back(std::move(tube));
  }
  return out;
}

double tube_iou(const Tube& a, const Tube& b) {
  if (a.width != b.width || a.height != b.height) {
    throw DimensionMismatch("tubes come from different geometries");
  }
  if (a.masks.size() != b.masks.size()) {
    throw LengthMismatch("tubes span different window lengths");
  }
  long long inter = 0;
  for (std::size_t f = 0; f < a.masks.size(); ++f) {
    if (a.masks[f].empty() || b.masks[f].empty()) {
      continue;
    }
    for (std::size_t i = 0; i < a.masks[f].size(); ++i) {
      inter += a.masks[f][i] & b.masks[f][i];
    }
  }
  long long uni = a.area + b.area - inter;
  if (uni == 0) {
    return 0.0;
  }
  return static_cast<double>(inter) / static_cast<double>(uni);
}

WindowScores vpq_window(const std::vector<SegmentationMap>& pred,
                        const std::vector<SegmentationMap>& gt,
                        int window_length) {
  if (window_length < 1) {
    throw Error("window length must be at least 1");
  }
  check_sequences(pred, gt);

  std::map<std::uint16_t, bool> class_is_thing;
  merge_class_info(gt, class_is_thing);
  merge_class_info(pred, class_is_thing);

  WindowScores scores;
  scores.window_length = window_length;
  for (const auto& [class_id, thing] : class_is_thing) {
    scores.per_class[class_id].is_thing = thing;
  }

  std::size_t frames = pred.size();
  std::size_t length = static_cast<std::size_t>(window_length);
  std::size_t n_starts = frames >= length ? frames - length + 1 : 0;
  for (std::size_t start = 0; start < n_starts; ++start) {
    // Tube volumes and pairwise intersections in one pass over the window.
    std::map<PixelLabel, long long> gt_area;
    std::map<PixelLabel, long long> pred_area;
    std::map<std::uint64_t, long long> inter;
    for (std::size_t f = start; f < start + length; ++f) {
      std::size_t n = gt[f].labels.size();
      for (std::size_t i = 0; i < n; ++i) {
        PixelKey g = tube_key(gt[f], gt[f].labels[i]);
        PixelKey p = tube_key(pred[f], pred[f].labels[i]);
        if (g.valid) {
          ++gt_area[g.key];
        }
        if (p.valid) {
          ++pred_area[p.key];
        }
        if (g.valid && p.valid) {
          ++inter[(static_cast<std::uint64_t>(g.key) << 32) | p.key];
        }
      }
    }

    // Truth tubes in (class, instance) order; candidate intersections for
    // one truth tube are contiguous in the combined key.
    std::set<PixelLabel> matched_pred;
    std::set<PixelLabel> matched_gt;
    auto it = inter.begin();
    for (const auto& [gl, garea] : gt_area) {
      std::uint16_t class_id = label_class(gl);
      while (it != inter.end() && (it->first >> 32) < gl) {
        ++it;
      }
      int hits = 0;
      for (auto probe = it; probe != inter.end() && (probe->first >> 32) == gl;
           ++probe) {
        PixelLabel pl = static_cast<PixelLabel>(probe->first & 0xffffffffu);
        if (label_class(pl) != class_id) {
          continue;
        }
        long long overlap = probe->second;
        double iou = static_cast<double>(overlap) /
                     static_cast<double>(garea + pred_area[pl] - overlap);
        if (iou > 0.5) {
          if (++hits > 1 || matched_pred.contains(pl)) {
            throw Error("tube matched more than once at IoU > 0.5");
          }
          matched_pred.insert(pl);
          matched_gt.insert(gl);
          ClassStats& cs = scores.per_class[class_id];
          ++cs.tp;
          cs.iou_sum += iou;
        }
      }
    }
    for (const auto& [gl, garea] : gt_area) {
      ClassStats& cs = scores.per_class[label_class(gl)];
      cs.present = true;
      if (!matched_gt.contains(gl)) {
        ++cs.fn;
      }
    }
    for (const auto& [pl, parea] : pred_area) {
      ClassStats& cs = scores.per_class[label_class(pl)];
      cs.present = true;
      if (!matched_pred.contains(pl)) {
        ++cs.fp;
      }
    }
  }

  scores.vpq = subset_mean(scores.per_class, 0);
  scores.vpq_things = subset_mean(scores.per_class, 1);
  scores.vpq_stuff = subset_mean(scores.per_class, 2);
  return scores;
}

VpqReport vpq_report(const std::vector<SegmentationMap>& pred,
                     const std::vector<SegmentationMap>& gt,
                     const std::vector<int>& window_lengths) {
  if (window_lengths.empty()) {
    throw Error("need at least one window length");
  }
  VpqReport report;
  for (int length : window_lengths) {
    report.windows.push_back(vpq_window(pred, gt, length));
  }
  for (const WindowScores& w : report.windows) {
    report.vpq += w.vpq;
    report.vpq_things += w.vpq_things;
    report.vpq_stuff += w.vpq_stuff;
  }
  double n = static_cast<double>(report.windows.size());
  report.vpq /= n;
  report.vpq_things /= n;
  report.vpq_stuff /= n;
  return report;
}

std::string format_report_table(const VpqReport& report) {
  // Window length L corresponds to a span of k = 5 * (L - 1) frames in the
  // usual every-5th-frame annotation scheme.
  std::string out =
      "window      all      things   stuff    (k = 5 * (L - 1))\n";
  char line[128];
  for (const WindowScores& w : report.windows) {
    std::snprintf(line, sizeof(line),
                  "L=%-2d k=%-3d %-8.2f %-8.2f %-8.2f\n", w.window_length,
                  5 * (w.window_length - 1), w.vpq, w.vpq_things, w.vpq_stuff);
    out += line;
  }
  std::snprintf(line, sizeof(line), "mean        %-8.2f %-8.2f %-8.2f\n",
                report.vpq, report.vpq_things, report.vpq_stuff);
  out += line;
  return out;
}

}  // namespace vps
