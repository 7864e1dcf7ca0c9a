#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "test_support.hpp"
#include "vps/simulator.hpp"
#include "vps/vpq.hpp"

using namespace vps;
using vpstest::make_map;

namespace {

const std::vector<Category> kCats = {{1, false, "bg"},
                                     {2, true, "obj"},
                                     {3, true, "rare"}};

// One-frame-at-a-time segment quality, written against the metric's
// published definition: match same-class segments at IoU > 0.5, score each
// class as sum(IoU) / (TP + FP/2 + FN/2). Used as an independent oracle
// for the window length 1 path.
struct PqAcc {
  bool thing = false;
  bool present = false;
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  double iou_sum = 0.0;
};

std::map<std::uint16_t, PqAcc> pq_accumulate(
    const std::vector<SegmentationMap>& pred,
    const std::vector<SegmentationMap>& gt) {
  std::map<std::uint16_t, PqAcc> acc;
  for (const SegmentationMap& m : gt) {
    for (const Category& c : m.categories) {
      acc[c.class_id].thing = c.is_thing;
    }
  }
  for (const SegmentationMap& m : pred) {
    for (const Category& c : m.categories) {
      acc[c.class_id].thing = c.is_thing;
    }
  }
  auto normalize = [](const SegmentationMap& m,
                      PixelLabel l) -> std::pair<bool, PixelLabel> {
    std::uint16_t cls = label_class(l);
    if (!m.is_thing_class(cls)) {
      return {true, make_label(cls, 0)};
    }
    if (label_instance(l) == 0) {
      return {false, 0};  // void
    }
    return {true, l};
  };
  for (std::size_t f = 0; f < gt.size(); ++f) {
    std::map<PixelLabel, long long> ga;
    std::map<PixelLabel, long long> pa;
    std::map<std::pair<PixelLabel, PixelLabel>, long long> overlap;
    for (std::size_t i = 0; i < gt[f].labels.size(); ++i) {
      auto [gok, gl] = normalize(gt[f], gt[f].labels[i]);
      auto [pok, pl] = normalize(pred[f], pred[f].labels[i]);
      if (gok) {
        ++ga[gl];
      }
      if (pok) {
        ++pa[pl];
      }
      if (gok && pok) {
        ++overlap[{gl, pl}];
      }
    }
    std::set<PixelLabel> used_gt;
    std::set<PixelLabel> used_pred;
    for (const auto& [gl, garea] : ga) {
      for (const auto& [key, inter] : overlap) {
        if (key.first != gl || label_class(key.second) != label_class(gl)) {
          continue;
        }
        double iou = static_cast<double>(inter) /
                     static_cast<double>(garea + pa[key.second] - inter);
        if (iou > 0.5) {
          PqAcc& a = acc[label_class(gl)];
          ++a.tp;
          a.iou_sum += iou;
          used_gt.insert(gl);
          used_pred.insert(key.second);
        }
      }
    }
    for (const auto& [gl, garea] : ga) {
      PqAcc& a = acc[label_class(gl)];
      a.present = true;
      if (!used_gt.contains(gl)) {
        ++a.fn;
      }
    }
    for (const auto& [pl, parea] : pa) {
      PqAcc& a = acc[label_class(pl)];
      a.present = true;
      if (!used_pred.contains(pl)) {
        ++a.fp;
      }
    }
  }
  return acc;
}

double pq_mean(const std::map<std::uint16_t, PqAcc>& acc, int which) {
  double sum = 0.0;
  int n = 0;
  for (const auto& [cls, a] : acc) {
    if (!a.present || (which == 1 && !a.thing) || (which == 2 && a.thing)) {
      continue;
    }
    sum += a.iou_sum / (static_cast<double>(a.tp) +
                        0.5 * static_cast<double>(a.fp + a.fn));
    ++n;
  }
  return n == 0 ? 0.0 : 100.0 * sum / n;
}

SegmentationMap random_map(std::mt19937_64& eng, int width, int height) {
  static const PixelLabel palette[6] = {
      make_label(1, 0), make_label(2, 0), make_label(2, 1),
      make_label(2, 2), make_label(2, 3), make_label(3, 1)};
  SegmentationMap map = make_map(width, height, kCats, 0);
  for (PixelLabel& l : map.labels) {
    l = palette[eng() % 6];
  }
  return map;
}

// Six frames, one 4-pixel object whose predicted id flips from 1 to 7 at
// frame 3 while the truth keeps id 1 throughout.
struct SwitchScene {
  std::vector<SegmentationMap> pred;
  std::vector<SegmentationMap> gt;

  SwitchScene() {
    for (int f = 0; f < 6; ++f) {
      SegmentationMap g = make_map(8, 6, {{2, true, "obj"}}, make_label(2, 0));
      vpstest::fill_rect(g, 1, 1, 2, 2, make_label(2, 1));
      gt.push_back(g);
      SegmentationMap p = g;
      if (f >= 3) {
        for (PixelLabel& l : p.labels) {
          if (l == make_label(2, 1)) {
            l = make_label(2, 7);
          }
        }
      }
      pred.push_back(p);
    }
  }
};

}  // namespace

TEST_CASE("build_tubes groups pixels by class and instance") {
  std::vector<SegmentationMap> frames;
  for (int f = 0; f < 3; ++f) {
    SegmentationMap m = make_map(6, 4, kCats, make_label(2, 0));
    vpstest::fill_rect(m, 0, 3, 5, 3, make_label(1, 0));
    if (f < 2) {
      vpstest::fill_rect(m, 0, 0, 1, 1, make_label(2, 1));
    }
    if (f == 2) {
      vpstest::fill_rect(m, 3, 0, 4, 0, make_label(2, 2));
    }
    frames.push_back(std::move(m));
  }

  std::vector<Tube> tubes = build_tubes(frames, 0, 3);
  REQUIRE(tubes.size() == 3);

  CHECK(tubes[0].class_id == 1);
  CHECK(tubes[0].instance_id == 0);
  CHECK(tubes[0].area == 18);
  CHECK(tubes[0].width == 6);
  CHECK(tubes[0].height == 4);
  REQUIRE(tubes[0].masks.size() == 3);
  CHECK(tubes[0].masks[0].size() == 24);

  CHECK(tubes[1].class_id == 2);
  CHECK(tubes[1].instance_id == 1);
  CHECK(tubes[1].area == 8);
  CHECK_FALSE(tubes[1].masks[0].empty());
  CHECK_FALSE(tubes[1].masks[1].empty());
  CHECK(tubes[1].masks[2].empty());  // absent frame

  CHECK(tubes[2].class_id == 2);
  CHECK(tubes[2].instance_id == 2);
  CHECK(tubes[2].area == 2);
  CHECK(tubes[2].masks[0].empty());
  CHECK(tubes[2].masks[1].empty());

  std::vector<Tube> tail = build_tubes(frames, 1, 2);
  REQUIRE(tail.size() == 3);
  CHECK(tail[1].area == 4);
  CHECK(tail[1].masks[1].empty());

  CHECK_THROWS_AS(build_tubes(frames, 2, 2), LengthMismatch);
}

TEST_CASE("tube_iou sums intersection and union over the window") {
  // Truth: 8 pixels per frame for two frames. Prediction: 16 pixels all in
  // the first frame, 4 of them overlapping. Volume IoU is 4 / 28.
  std::vector<SegmentationMap> gt;
  std::vector<SegmentationMap> pred;
  for (int f = 0; f < 2; ++f) {
    SegmentationMap g = make_map(16, 4, kCats, make_label(2, 0));
    vpstest::fill_rect(g, 0, f == 0 ? 0 : 2, 7, f == 0 ? 0 : 2,
                       make_label(2, 1));
    gt.push_back(std::move(g));
    SegmentationMap p = make_map(16, 4, kCats, make_label(2, 0));
    if (f == 0) {
      vpstest::fill_rect(p, 4, 0, 7, 0, make_label(2, 1));
      vpstest::fill_rect(p, 0, 1, 11, 1, make_label(2, 1));
    }
    pred.push_back(std::move(p));
  }
  Tube a = build_tubes(gt, 0, 2)[0];
  std::vector<Tube> pt = build_tubes(pred, 0, 2);
  REQUIRE(pt.size() == 1);
  CHECK(a.area == 16);
  CHECK(pt[0].area == 16);
  CHECK(tube_iou(a, pt[0]) == 4.0 / 28.0);
  CHECK(tube_iou(a, pt[0]) == tube_iou(pt[0], a));
  CHECK(tube_iou(a, a) == 1.0);

  Tube empty_a{2, 1, 16, 4, {{}, {}}, 0};
  Tube empty_b{2, 2, 16, 4, {{}, {}}, 0};
  CHECK(tube_iou(empty_a, empty_b) == 0.0);

  Tube other_geom{2, 1, 8, 4, {{}, {}}, 0};
  CHECK_THROWS_AS(tube_iou(a, other_geom), DimensionMismatch);
  Tube other_span{2, 1, 16, 4, {{}}, 0};
  CHECK_THROWS_AS(tube_iou(a, other_span), LengthMismatch);
}

TEST_CASE("window score of one equals the per-frame oracle") {
  std::mt19937_64 eng(404);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<SegmentationMap> gt;
    std::vector<SegmentationMap> pred;
    for (int f = 0; f < 3; ++f) {
      gt.push_back(random_map(eng, 6, 5));
      pred.push_back(random_map(eng, 6, 5));
    }
    WindowScores w = vpq_window(pred, gt, 1);
    std::map<std::uint16_t, PqAcc> acc = pq_accumulate(pred, gt);
    CHECK(w.vpq == pq_mean(acc, 0));
    CHECK(w.vpq_things == pq_mean(acc, 1));
    CHECK(w.vpq_stuff == pq_mean(acc, 2));
  }
}

TEST_CASE("perfect predictions score one hundred at every window length") {
  SceneOutput scene = generate(preset("crowd", 11));
  for (int length : {1, 2, 3, 4}) {
    WindowScores w = vpq_window(scene.gt_frames, scene.gt_frames, length);
    CHECK(w.vpq == 100.0);
    CHECK(w.vpq_things == 100.0);
    CHECK(w.vpq_stuff == 100.0);
  }
  // Per-frame id scrambling is invisible to the single-frame window.
  WindowScores w = vpq_window(scene.frames, scene.gt_frames, 1);
  CHECK(w.vpq == 100.0);
}

TEST_CASE("an evenly split segment scores zero") {
  SegmentationMap g = make_map(8, 2, {{2, true, "obj"}}, make_label(2, 0));
  vpstest::fill_rect(g, 0, 0, 7, 0, make_label(2, 1));
  SegmentationMap p = make_map(8, 2, {{2, true, "obj"}}, make_label(2, 0));
  vpstest::fill_rect(p, 0, 0, 3, 0, make_label(2, 1));
  vpstest::fill_rect(p, 4, 0, 7, 0, make_label(2, 2));

  WindowScores w = vpq_window({p}, {g}, 1);
  CHECK(w.vpq == 0.0);
  CHECK(w.vpq_things == 0.0);
  CHECK(w.vpq_stuff == 0.0);  // no stuff classes at all
  const ClassStats& cs = w.per_class.at(2);
  CHECK(cs.tp == 0);
  CHECK(cs.fp == 2);
  CHECK(cs.fn == 1);
}

TEST_CASE("scores ignore a consistent renaming of predicted ids") {
  SceneOutput scene = generate(preset("crowd", 5));
  std::vector<SegmentationMap> renamed = scene.frames;
  for (SegmentationMap& map : renamed) {
    for (PixelLabel& l : map.labels) {
      std::uint16_t cls = label_class(l);
      if (map.is_thing_class(cls) && label_instance(l) != 0) {
        l = make_label(cls, static_cast<std::uint16_t>(label_instance(l) + 1000));
      }
    }
  }
  VpqReport base = vpq_report(scene.frames, scene.gt_frames);
  VpqReport shifted = vpq_report(renamed, scene.gt_frames);
  REQUIRE(base.windows.size() == shifted.windows.size());
  for (std::size_t i = 0; i < base.windows.size(); ++i) {
    CHECK(base.windows[i].vpq == shifted.windows[i].vpq);
    CHECK(base.windows[i].vpq_things == shifted.windows[i].vpq_things);
    CHECK(base.windows[i].vpq_stuff == shifted.windows[i].vpq_stuff);
  }
  CHECK(base.vpq == shifted.vpq);
}

TEST_CASE("an id switch hurts more as the window grows") {
  SwitchScene s;
  WindowScores w1 = vpq_window(s.pred, s.gt, 1);
  WindowScores w2 = vpq_window(s.pred, s.gt, 2);
  WindowScores w3 = vpq_window(s.pred, s.gt, 3);
  WindowScores w4 = vpq_window(s.pred, s.gt, 4);

  CHECK(w1.vpq == 100.0);
  // One straddling window misses both halves: 4 matches over 4 + 3/2.
  CHECK(w2.vpq == doctest::Approx(100.0 * 4.0 / 5.5).epsilon(1e-12));
  // Two straddling windows keep the bigger half at IoU 2/3 plus a false
  // positive each: (1 + 2/3 + 2/3 + 1) / (4 + 1).
  CHECK(w3.vpq == doctest::Approx(100.0 * (10.0 / 3.0) / 5.0).epsilon(1e-12));
  // The middle window splits 8 against 16 exactly in half, matching nothing.
  CHECK(w4.vpq == doctest::Approx(100.0 * 1.5 / 4.5).epsilon(1e-12));

  CHECK(w2.vpq < w1.vpq);
  CHECK(w3.vpq < w2.vpq);
  CHECK(w4.vpq < w3.vpq);
}

TEST_CASE("windows longer than the sequence contribute nothing") {
  SwitchScene s;
  std::vector<SegmentationMap> pred(s.pred.begin(), s.pred.begin() + 2);
  std::vector<SegmentationMap> gt(s.gt.begin(), s.gt.begin() + 2);
  WindowScores w = vpq_window(pred, gt, 5);
  CHECK(w.vpq == 0.0);
  CHECK(w.vpq_things == 0.0);
  CHECK_FALSE(w.per_class.at(2).present);
}

TEST_CASE("vpq_window validates its inputs") {
  SwitchScene s;
  std::vector<SegmentationMap> short_gt(s.gt.begin(), s.gt.end() - 1);
  CHECK_THROWS_AS(vpq_window(s.pred, short_gt, 1), LengthMismatch);

  std::vector<SegmentationMap> squeezed = s.gt;
  squeezed[0].width = 4;
  CHECK_THROWS_AS(vpq_window(s.pred, squeezed, 1), DimensionMismatch);

  CHECK_THROWS_AS(vpq_window(s.pred, s.gt, 0), Error);

  std::vector<SegmentationMap> flipped = s.pred;
  for (SegmentationMap& m : flipped) {
    m.categories = {{2, false, "obj"}};
  }
  CHECK_THROWS_AS(vpq_window(flipped, s.gt, 1), Error);
}

TEST_CASE("the report averages its windows") {
  SwitchScene s;
  VpqReport report = vpq_report(s.pred, s.gt, {1, 2});
  REQUIRE(report.windows.size() == 2);
  WindowScores w1 = vpq_window(s.pred, s.gt, 1);
  WindowScores w2 = vpq_window(s.pred, s.gt, 2);
  CHECK(report.vpq == (w1.vpq + w2.vpq) / 2.0);
  CHECK(report.vpq_things == (w1.vpq_things + w2.vpq_things) / 2.0);
  CHECK(report.vpq_stuff == (w1.vpq_stuff + w2.vpq_stuff) / 2.0);

  VpqReport full = vpq_report(s.pred, s.gt);
  CHECK(full.windows.size() == 4);
  CHECK(full.windows[3].window_length == 4);

  CHECK_THROWS_AS(vpq_report(s.pred, s.gt, {}), Error);
}

TEST_CASE("the report table lists every window and the mean") {
  SwitchScene s;
  std::string table = format_report_table(vpq_report(s.pred, s.gt));
  CHECK(table.find("window") != std::string::npos);
  CHECK(table.find("L=1") != std::string::npos);
  CHECK(table.find("k=0") != std::string::npos);
  CHECK(table.find("L=4") != std::string::npos);
  CHECK(table.find("k=15") != std::string::npos);
  CHECK(table.find("mean") != std::string::npos);
  CHECK(std::count(table.begin(), table.end(), '\n') == 6);
}
