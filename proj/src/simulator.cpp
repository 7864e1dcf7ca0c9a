#include "vps/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace vps {
namespace {

constexpr std::uint64_t kFrameSalt = 0x9e3779b97f4a7c15ull;

bool visible_at(const ObjectSpec& obj, int frame) {
  if (obj.visibility.empty()) {
    return true;
  }
  for (auto [first, last] : obj.visibility) {
    if (frame >= first && frame <= last) {
      return true;
    }
  }
  return false;
}

struct Placement {
  double cx, cy, hw, hh;  // center and half extents at one frame
};

Placement place(const ObjectSpec& obj, int frame) {
  double s = std::pow(obj.scale_per_frame, frame);
  return {obj.center_x + obj.vel_x * frame, obj.center_y + obj.vel_y * frame,
          obj.width * s / 2.0, obj.height * s / 2.0};
}

bool covers(const ObjectSpec& obj, const Placement& p, double px, double py) {
  double dx = px - p.cx;
  double dy = py - p.cy;
  if (obj.shape == ShapeKind::rect) {
    return std::fabs(dx) < p.hw && std::fabs(dy) < p.hh;
  }
  double nx = dx / p.hw;
  double ny = dy / p.hh;
  return nx * nx + ny * ny < 1.0;
}

void validate_spec(const SceneSpec& spec) {
  if (spec.width < 1 || spec.height < 1 || spec.n_frames < 1) {
    throw Error("scene needs positive geometry and frame count");
  }
  if (spec.stuff_classes.empty()) {
    throw Error("scene needs at least one stuff class");
  }
  std::set<std::uint16_t> stuff(spec.stuff_classes.begin(),
                                spec.stuff_classes.end());
  if (stuff.size() != spec.stuff_classes.size()) {
    throw Error("duplicate stuff class");
  }
  if (spec.objects.size() > 0xfffe) {
    throw Error("too many objects for 16-bit ids");
  }
  for (const ObjectSpec& obj : spec.objects) {
    if (stuff.contains(obj.class_id)) {
      throw Error("class " + std::to_string(obj.class_id) +
                  " used as both thing and stuff");
    }
    if (obj.width <= 0.0 || obj.height <= 0.0) {
      throw SpecOutOfBounds("object with non-positive size");
    }
    Placement p = place(obj, 0);
    if (p.cx - p.hw < 0.0 || p.cx + p.hw > spec.width || p.cy - p.hh < 0.0 ||
        p.cy + p.hh > spec.height) {
      throw SpecOutOfBounds("object starts outside the frame");
    }
    for (auto [first, last] : obj.visibility) {
      if (first > last || first < 0 || last >= spec.n_frames) {
        throw SpecOutOfBounds("visibility interval outside the sequence");
      }
    }
  }
}

std::vector<Category> scene_categories(const SceneSpec& spec) {
  std::vector<Category> categories;
  for (std::uint16_t id : spec.stuff_classes) {
    categories.push_back({id, false, "stuff_" + std::to_string(id)});
  }
  std::set<std::uint16_t> seen;
  for (const ObjectSpec& obj : spec.objects) {
    if (seen.insert(obj.class_id).second) {
      categories.push_back(
          {obj.class_id, true, "thing_" + std::to_string(obj.class_id)});
    }
  }
  std::sort(categories.begin(), categories.end(),
            [](const Category& a, const Category& b) {
              return a.class_id < b.class_id;
            });
  return categories;
}

}  // namespace

SceneOutput generate(const SceneSpec& spec) {
  validate_spec(spec);
  std::vector<Category> categories = scene_categories(spec);

  SceneOutput out;
  out.frames.reserve(spec.n_frames);
  out.gt_frames.reserve(spec.n_frames);
  out.gt_ids.resize(spec.n_frames);

  std::size_t n_pixels =
      static_cast<std::size_t>(spec.width) * spec.height;
  std::vector<int> paint_order(spec.objects.size());
  std::iota(paint_order.begin(), paint_order.end(), 0);
  std::stable_sort(paint_order.begin(), paint_order.end(),
                   [&spec](int a, int b) {
                     return spec.objects[a].z_order < spec.objects[b].z_order;
                   });

  for (int f = 0; f < spec.n_frames; ++f) {
    std::vector<int> owner(n_pixels, -1);
    FlowField flow;
    flow.width = spec.width;
    flow.height = spec.height;
    flow.vectors.assign(2 * n_pixels, 0.0f);

    // Back-to-front painting; the topmost object owns the pixel and its
    // velocity defines the exact forward flow there.
    for (int idx : paint_order) {
      const ObjectSpec& obj = spec.objects[idx];
      if (!visible_at(obj, f)) {
        continue;
      }
      Placement p = place(obj, f);
      int x0 = std::max(0, static_cast<int>(std::floor(p.cx - p.hw - 1.0)));
      int x1 = std::min(spec.width - 1,
                        static_cast<int>(std::ceil(p.cx + p.hw + 1.0)));
      int y0 = std::max(0, static_cast<int>(std::floor(p.cy - p.hh - 1.0)));
      int y1 = std::min(spec.height - 1,
                        static_cast<int>(std::ceil(p.cy + p.hh + 1.0)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          if (!covers(obj, p, x + 0.5, y + 0.5)) {
            continue;
          }
          std::size_t i = static_cast<std::size_t>(y) * spec.width + x;
          owner[i] = idx;
          flow.vectors[2 * i] = static_cast<float>(obj.vel_x);
          flow.vectors[2 * i + 1] = static_cast<float>(obj.vel_y);
        }
      }
    }

    // Scrambled per-frame ids for the visible objects; the ground truth
    // keeps object index + 1 as the persistent id.
    std::vector<int> on_screen;
    {
      std::set<int> seen;
      for (int idx : owner) {
        if (idx >= 0) {
          seen.insert(idx);
        }
      }
      on_screen.assign(seen.begin(), seen.end());
    }
    std::vector<std::uint16_t> frame_id(spec.objects.size(), 0);
    {
      std::vector<std::uint16_t> ids(on_screen.size());
      std::iota(ids.begin(), ids.end(), std::uint16_t{1});
      std::mt19937_64 eng(spec.seed + kFrameSalt * (static_cast<std::uint64_t>(f) + 1));
      for (std::size_t i = ids.size(); i > 1; --i) {
        std::swap(ids[i - 1], ids[eng() % i]);
      }
      for (std::size_t k = 0; k < on_screen.size(); ++k) {
        frame_id[on_screen[k]] = ids[k];
        out.gt_ids[f][ids[k]] =
            static_cast<std::uint16_t>(on_screen[k] + 1);
      }
    }

    SegmentationMap frame;
    frame.width = spec.width;
    frame.height = spec.height;
    frame.categories = categories;
    frame.labels.resize(n_pixels);
    SegmentationMap gt_frame = frame;
    std::size_t bands = spec.stuff_classes.size();
    for (int y = 0; y < spec.height; ++y) {
      std::uint16_t band_class =
          spec.stuff_classes[static_cast<std::size_t>(y) * bands /
                             spec.height];
      for (int x = 0; x < spec.width; ++x) {
        std::size_t i = static_cast<std::size_t>(y) * spec.width + x;
        int idx = owner[i];
        if (idx < 0) {
          frame.labels[i] = make_label(band_class, 0);
          gt_frame.labels[i] = frame.labels[i];
        } else {
          std::uint16_t cls = spec.objects[idx].class_id;
          frame.labels[i] = make_label(cls, frame_id[idx]);
          gt_frame.labels[i] =
              make_label(cls, static_cast<std::uint16_t>(idx + 1));
        }
      }
    }
    out.frames.push_back(std::move(frame));
    out.gt_frames.push_back(std::move(gt_frame));
    if (f + 1 < spec.n_frames) {
      out.flows.push_back(std::move(flow));
    }
  }
  return out;
}

SceneSpec preset(const std::string& name, std::uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  auto rect = [](std::uint16_t cls, double cx, double cy, double w, double h,
                 double vx, double vy, int z) {
    ObjectSpec o;
    o.shape = ShapeKind::rect;
    o.class_id = cls;
    o.center_x = cx;
    o.center_y = cy;
    o.width = w;
    o.height = h;
    o.vel_x = vx;
    o.vel_y = vy;
    o.z_order = z;
    return o;
  };
  auto ellipse = [&rect](std::uint16_t cls, double cx, double cy, double w,
                         double h, double vx, double vy, int z) {
    ObjectSpec o = rect(cls, cx, cy, w, h, vx, vy, z);
    o.shape = ShapeKind::ellipse;
    return o;
  };

  if (name == "occlusion_reappear") {
    spec.width = 96;
    spec.height = 64;
    spec.n_frames = 10;
    spec.stuff_classes = {1};
    spec.objects.push_back(rect(10, 20, 32, 10, 10, 2, 0, 1));
    ObjectSpec b = rect(10, 72, 18, 12, 12, 0, 0, 0);
    b.visibility = {{0, 2}, {4, 9}};  // hidden exactly at frame 3
    spec.objects.push_back(b);
    spec.objects.push_back(ellipse(11, 40, 50, 14, 8, 1, -1, 2));
  } else if (name == "lookalike_pair") {
    spec.width = 96;
    spec.height = 64;
    spec.n_frames = 12;
    spec.stuff_classes = {1};
    // Identical twins: silhouettes give no cue, only position does.
    spec.objects.push_back(rect(10, 20, 20, 12, 12, 2, 0, 0));
    spec.objects.push_back(rect(10, 20, 44, 12, 12, 2, 0, 1));
  } else if (name == "small_fast") {
    spec.width = 96;
    spec.height = 64;
    spec.n_frames = 10;
    spec.stuff_classes = {1};
    spec.objects.push_back(rect(20, 12, 12, 4, 4, 7, 0, 0));
    spec.objects.push_back(ellipse(20, 12, 32, 6, 4, 6, 1, 1));
    spec.objects.push_back(rect(20, 12, 52, 4, 6, 8, 0, 2));
  } else if (name == "deformation") {
    spec.width = 96;
    spec.height = 64;
    spec.n_frames = 10;
    spec.stuff_classes = {1};
    ObjectSpec d1 = ellipse(30, 30, 32, 10, 16, 2, 0, 0);
    d1.scale_per_frame = 1.06;
    spec.objects.push_back(d1);
    ObjectSpec d2 = rect(30, 74, 14, 14, 6, -1, 1, 1);
    d2.scale_per_frame = 0.95;
    spec.objects.push_back(d2);
  } else if (name == "crowd") {
    spec.width = 128;
    spec.height = 80;
    spec.n_frames = 10;
    spec.stuff_classes = {1, 2};
    spec.objects.push_back(rect(40, 16, 16, 10, 10, 2, 0, 0));
    spec.objects.push_back(rect(40, 16, 40, 10, 10, 2, 1, 1));
    spec.objects.push_back(ellipse(40, 16, 66, 12, 8, 2, 0, 0));
    spec.objects.push_back(ellipse(41, 64, 16, 8, 12, -1, 1, 2));
    spec.objects.push_back(rect(41, 64, 44, 12, 12, 0, 0, 0));
    spec.objects.push_back(rect(41, 64, 66, 8, 8, -2, 0, 1));
    spec.objects.push_back(ellipse(42, 104, 16, 10, 10, -2, 1, 0));
    spec.objects.push_back(rect(42, 104, 58, 14, 10, -2, -1, 3));
  } else {
    throw Error("unknown preset: " + name);
  }
  return spec;
}

std::vector<std::string> preset_names() {
  return {"occlusion_reappear", "lookalike_pair", "small_fast", "deformation",
          "crowd"};
}

SceneSpec distinct_shapes_spec(std::uint64_t seed, int n_objects, int n_frames,
                               int width, int height) {
  if (n_objects < 1 || n_objects > 8) {
    throw Error("distinct shapes scene supports 1 to 8 objects");
  }
  if (n_frames < 2) {
    throw Error("need at least two frames for matching pairs");
  }
  SceneSpec spec;
  spec.width = width;
  spec.height = height;
  spec.n_frames = n_frames;
  spec.seed = seed;
  spec.stuff_classes = {1};

  std::mt19937_64 eng(seed * 2 + 1);
  auto unit = [&eng]() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; };

  int cols = n_objects > 1 ? 2 : 1;
  int rows = (n_objects + cols - 1) / cols;
  double cell_w = static_cast<double>(width) / cols;
  double cell_h = static_cast<double>(height) / rows;

  std::vector<double> aspects = {0.45, 0.7, 1.0, 1.45, 2.1, 0.55, 1.8, 1.2};
  for (std::size_t i = aspects.size(); i > 1; --i) {
    std::swap(aspects[i - 1], aspects[eng() % i]);
  }

  for (int k = 0; k < n_objects; ++k) {
    ObjectSpec o;
    o.shape = k % 2 == 0 ? ShapeKind::rect : ShapeKind::ellipse;
    o.class_id = 10;
    o.z_order = k;
    double aspect = aspects[k];
    double base = std::min(cell_w, cell_h) * (0.40 + 0.12 * unit());
    o.width = base * std::sqrt(aspect);
    o.height = base / std::sqrt(aspect);

    double cell_x = (k % cols) * cell_w;
    double cell_y = (k / cols) * cell_h;
    o.center_x = cell_x + cell_w / 2.0;
    o.center_y = cell_y + cell_h / 2.0;

    // Integer velocity that keeps the object inside its own cell for the
    // whole clip, so no two training objects ever overlap.
    for (int attempt = 0; attempt < 20; ++attempt) {
      double vx = static_cast<double>(static_cast<int>(eng() % 5)) - 2.0;
      double vy = static_cast<double>(static_cast<int>(eng() % 5)) - 2.0;
      double span = static_cast<double>(n_frames - 1);
      double x_lo = o.center_x + std::min(0.0, vx * span) - o.width / 2.0;
      double x_hi = o.center_x + std::max(0.0, vx * span) + o.width / 2.0;
      double y_lo = o.center_y + std::min(0.0, vy * span) - o.height / 2.0;
      double y_hi = o.center_y + std::max(0.0, vy * span) + o.height / 2.0;
      if (x_lo >= cell_x && x_hi <= cell_x + cell_w && y_lo >= cell_y &&
          y_hi <= cell_y + cell_h) {
        o.vel_x = vx;
        o.vel_y = vy;
        break;
      }
    }
    spec.objects.push_back(o);
  }
  return spec;
}

std::vector<TrainExample> matching_examples(const SceneOutput& scene,
                                            int roi_height, int roi_width,
                                            bool center_anchor) {
  std::vector<TrainExample> examples;
  for (std::size_t f = 0; f + 1 < scene.frames.size(); ++f) {
    std::vector<InstanceMask> prev = extract_things(scene.frames[f]);
    std::vector<InstanceMask> cur = extract_things(scene.frames[f + 1]);
    TrainExample ex;
    std::vector<std::uint16_t> prev_track(prev.size());
    for (std::size_t i = 0; i < prev.size(); ++i) {
      prev_track[i] = scene.gt_ids[f].at(prev[i].instance_id);
      ex.prev.push_back(
          crop_scale_pad(prev[i], roi_height, roi_width, center_anchor));
    }
    for (std::size_t j = 0; j < cur.size(); ++j) {
      std::uint16_t track = scene.gt_ids[f + 1].at(cur[j].instance_id);
      ex.cur.push_back(
          crop_scale_pad(cur[j], roi_height, roi_width, center_anchor));
      for (std::size_t i = 0; i < prev.size(); ++i) {
        if (prev_track[i] == track) {
          ex.sup.pairs.push_back({i, j});
        }
      }
    }
    if (!ex.sup.pairs.empty()) {
      examples.push_back(std::move(ex));
    }
  }
  return examples;
}

void add_flow_noise(FlowField& field, double sigma, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  auto unit = [&eng]() {
    return (static_cast<double>(eng() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  };
  // Box-Muller, one draw per component.
  for (float& v : field.vectors) {
    double u1 = unit();
    double u2 = unit();
    double z = std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    v += static_cast<float>(sigma * z);
  }
}

int count_id_switches(const TrackedVideo& video,
                      const std::vector<std::map<std::uint16_t, std::uint16_t>>& gt_ids) {
  if (video.records.size() != gt_ids.size()) {
    throw LengthMismatch("tracker output and truth differ in frame count");
  }
  std::map<std::uint16_t, std::vector<std::uint16_t>> history;
  for (std::size_t f = 0; f < video.records.size(); ++f) {
    for (const InstanceRecord& rec : video.records[f]) {
      auto it = gt_ids[f].find(rec.input_id.instance_id);
      if (it == gt_ids[f].end()) {
        throw IdMisalignment("tracked instance missing from ground truth");
      }
      history[it->second].push_back(rec.track_id);
    }
  }
  int switches = 0;
  for (const auto& [track, ids] : history) {
    for (std::size_t i = 1; i < ids.size(); ++i) {
      switches += ids[i] != ids[i - 1] ? 1 : 0;
    }
  }
  return switches;
}

}  // namespace vps
