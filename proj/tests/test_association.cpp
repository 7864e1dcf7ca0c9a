#include <algorithm>
#include <random>

#include "doctest.h"
#include "test_support.hpp"
#include "vps/association.hpp"
#include "vps/pixel_tracker.hpp"
#include "vps/simulator.hpp"

using namespace vps;

namespace {

CorrelationMatrix matrix_from(std::vector<std::vector<double>> rows) {
  CorrelationMatrix m;
  m.scores = ScoreMatrix(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m.scores.at(r, c) = rows[r][c];
    }
  }
  m.row_ids.resize(m.scores.rows);
  m.col_ids.resize(m.scores.cols);
  for (std::size_t r = 0; r < m.scores.rows; ++r) {
    m.row_ids[r] = {2, static_cast<std::uint16_t>(r + 1)};
  }
  for (std::size_t c = 0; c < m.scores.cols; ++c) {
    m.col_ids[c] = {2, static_cast<std::uint16_t>(c + 1)};
  }
  return m;
}

// Straight transcription of the matching rule, kept deliberately naive:
// scan the whole matrix for the best unused entry above the floor, commit,
// repeat.
Assignment oracle_greedy(const ScoreMatrix& s, double tau) {
  Assignment a;
  std::vector<bool> row_used(s.rows, false);
  std::vector<bool> col_used(s.cols, false);
  while (true) {
    bool found = false;
    std::size_t br = 0;
    std::size_t bc = 0;
    double best = 0.0;
    for (std::size_t r = 0; r < s.rows; ++r) {
      for (std::size_t c = 0; c < s.cols; ++c) {
        if (row_used[r] || col_used[c] || s.at(r, c) < tau) {
          continue;
        }
        if (!found || s.at(r, c) > best) {
          found = true;
          best = s.at(r, c);
          br = r;
          bc = c;
        }
      }
    }
    if (!found) {
      break;
    }
    row_used[br] = true;
    col_used[bc] = true;
    a.matches.push_back({br, bc, best});
  }
  std::sort(a.matches.begin(), a.matches.end(),
            [](const Assignment::Match& x, const Assignment::Match& y) {
              return x.row < y.row;
            });
  for (std::size_t r = 0; r < s.rows; ++r) {
    if (!row_used[r]) {
      a.unmatched_rows.push_back(r);
    }
  }
  for (std::size_t c = 0; c < s.cols; ++c) {
    if (!col_used[c]) {
      a.unmatched_cols.push_back(c);
    }
  }
  return a;
}

bool same_assignment(const Assignment& a, const Assignment& b) {
  if (a.matches.size() != b.matches.size() ||
      a.unmatched_rows != b.unmatched_rows ||
      a.unmatched_cols != b.unmatched_cols) {
    return false;
  }
  for (std::size_t i = 0; i < a.matches.size(); ++i) {
    if (a.matches[i].row != b.matches[i].row ||
        a.matches[i].col != b.matches[i].col ||
        a.matches[i].score != b.matches[i].score) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("fuse combines the cues entrywise") {
  CorrelationMatrix i = matrix_from({{1.0, 0.0}, {0.5, 0.25}});
  CorrelationMatrix p = matrix_from({{0.0, 1.0}, {0.5, 0.75}});
  FusionWeights w;  // defaults 0.5, 0.5, 0
  CorrelationMatrix f = fuse(i, p, w);
  CHECK(f.kind == CorrelationKind::fused);
  CHECK(f.scores.at(0, 0) == 0.5);
  CHECK(f.scores.at(0, 1) == 0.5);
  CHECK(f.scores.at(1, 0) == 0.5);
  CHECK(f.scores.at(1, 1) == 0.5);

  FusionWeights biased{0.25, 0.5, 0.1};
  CHECK(fuse(i, p, biased).scores.at(0, 0) == 0.25 * 1.0 + 0.1);

  CorrelationMatrix wrong = matrix_from({{1.0}});
  CHECK_THROWS_AS(fuse(i, wrong, w), ShapeMismatch);
  CorrelationMatrix misaligned = matrix_from({{1.0, 0.0}, {0.5, 0.25}});
  misaligned.row_ids[0] = {3, 9};
  CHECK_THROWS_AS(fuse(i, misaligned, w), IdMisalignment);
}

TEST_CASE("fit_fusion_weights recovers planted weights") {
  std::mt19937_64 eng(17);
  auto unit = [&eng]() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; };
  std::vector<CorrelationMatrix> inst;
  std::vector<CorrelationMatrix> pix;
  std::vector<ScoreMatrix> target;
  for (int k = 0; k < 4; ++k) {
    CorrelationMatrix i = matrix_from({{unit(), unit(), unit()},
                                       {unit(), unit(), unit()}});
    CorrelationMatrix p = i;
    for (double& v : p.scores.data) {
      v = unit();
    }
    ScoreMatrix t(2, 3);
    for (std::size_t e = 0; e < t.data.size(); ++e) {
      t.data[e] = 0.3 * i.scores.data[e] + 0.6 * p.scores.data[e] + 0.05;
    }
    inst.push_back(i);
    pix.push_back(p);
    target.push_back(t);
  }
  FusionWeights w = fit_fusion_weights(inst, pix, target);
  CHECK(w.w_instance == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(w.w_pixel == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(w.bias == doctest::Approx(0.05).epsilon(1e-9));

  CHECK_THROWS_AS(fit_fusion_weights(inst, pix, {}), LengthMismatch);

  // Constant cues leave the system singular.
  CorrelationMatrix flat = matrix_from({{0.5, 0.5}});
  ScoreMatrix t(1, 2, 1.0);
  CHECK_THROWS_AS(fit_fusion_weights({flat}, {flat}, {t}), Error);
}

TEST_CASE("greedy_assign follows the documented traces") {
  CorrelationMatrix m = matrix_from({{0.9, 0.85}, {0.95, 0.2}});

  SUBCASE("best-score-first ordering") {
    Assignment a = greedy_assign(m, 0.3);
    REQUIRE(a.matches.size() == 2);
    CHECK(a.matches[0].row == 0);
    CHECK(a.matches[0].col == 1);
    CHECK(a.matches[0].score == 0.85);
    CHECK(a.matches[1].row == 1);
    CHECK(a.matches[1].col == 0);
    CHECK(a.matches[1].score == 0.95);
    CHECK(a.unmatched_rows.empty());
    CHECK(a.unmatched_cols.empty());
  }
  SUBCASE("literal row order stops at the floor") {
    Assignment a = greedy_assign(m, 0.3, true);
    REQUIRE(a.matches.size() == 1);
    CHECK(a.matches[0].row == 0);
    CHECK(a.matches[0].col == 0);
    CHECK(a.matches[0].score == 0.9);
    CHECK(a.unmatched_rows == std::vector<std::size_t>{1});
    CHECK(a.unmatched_cols == std::vector<std::size_t>{1});
  }
  SUBCASE("mutual check keeps only the agreeing pair") {
    Assignment a = mutual_check(m, greedy_assign(m, 0.3));
    REQUIRE(a.matches.size() == 1);
    CHECK(a.matches[0].row == 1);
    CHECK(a.matches[0].col == 0);
    CHECK(a.unmatched_rows == std::vector<std::size_t>{0});
    CHECK(a.unmatched_cols == std::vector<std::size_t>{1});
  }
}

TEST_CASE("greedy_assign ties break toward lower indices") {
  CorrelationMatrix m = matrix_from({{0.5, 0.5}, {0.5, 0.5}});
  Assignment a = greedy_assign(m, 0.3);
  REQUIRE(a.matches.size() == 2);
  CHECK(a.matches[0].row == 0);
  CHECK(a.matches[0].col == 0);
  CHECK(a.matches[1].row == 1);
  CHECK(a.matches[1].col == 1);
}

TEST_CASE("greedy_assign agrees with a naive oracle on random matrices") {
  std::mt19937_64 eng(2024);
  auto unit = [&eng]() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; };
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t rows = eng() % 6;
    std::size_t cols = eng() % 6;
    CorrelationMatrix m;
    m.scores = ScoreMatrix(rows, cols);
    for (double& v : m.scores.data) {
      v = unit();
    }
    m.row_ids.resize(rows);
    m.col_ids.resize(cols);
    double tau = trial % 3 == 0 ? 0.0 : (trial % 3 == 1 ? 0.3 : 0.8);
    CHECK(same_assignment(greedy_assign(m, tau),
                          oracle_greedy(m.scores, tau)));
  }
}

TEST_CASE("mutual-first and mutual-after agree on tie-free matrices") {
  std::mt19937_64 eng(31337);
  auto unit = [&eng]() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; };
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t rows = 1 + eng() % 5;
    std::size_t cols = 1 + eng() % 5;
    CorrelationMatrix m;
    m.scores = ScoreMatrix(rows, cols);
    for (double& v : m.scores.data) {
      v = unit();
    }
    m.row_ids.resize(rows);
    m.col_ids.resize(cols);

    Assignment after = mutual_check(m, greedy_assign(m, 0.3));

    // Mutual agreement straight from the matrix, then thresholded.
    Assignment direct;
    for (std::size_t r = 0; r < rows; ++r) {
      std::size_t c = 0;
      for (std::size_t j = 1; j < cols; ++j) {
        if (m.scores.at(r, j) > m.scores.at(r, c)) {
          c = j;
        }
      }
      std::size_t br = 0;
      for (std::size_t i = 1; i < rows; ++i) {
        if (m.scores.at(i, c) > m.scores.at(br, c)) {
          br = i;
        }
      }
      if (br == r && m.scores.at(r, c) >= 0.3) {
        direct.matches.push_back({r, c, m.scores.at(r, c)});
      }
    }
    REQUIRE(after.matches.size() == direct.matches.size());
    for (std::size_t i = 0; i < direct.matches.size(); ++i) {
      CHECK(after.matches[i].row == direct.matches[i].row);
      CHECK(after.matches[i].col == direct.matches[i].col);
    }
  }
}

TEST_CASE("track memory evicts oldest and validates pushes") {
  TrackMemory memory(2);
  CHECK_THROWS_AS(TrackMemory(0), Error);

  MemoryFrame a;
  a.frame_index = 0;
  memory.push(std::move(a));
  MemoryFrame b;
  b.frame_index = 1;
  memory.push(std::move(b));
  MemoryFrame c;
  c.frame_index = 2;
  memory.push(std::move(c));
  REQUIRE(memory.frames().size() == 2);
  CHECK(memory.frames().front().frame_index == 1);
  CHECK(memory.frames().back().frame_index == 2);

  MemoryFrame stale;
  stale.frame_index = 2;
  CHECK_THROWS_AS(memory.push(std::move(stale)), Error);

  MemoryFrame skewed;
  skewed.frame_index = 5;
  skewed.masks.resize(1);
  CHECK_THROWS_AS(memory.push(std::move(skewed)), IdMisalignment);

  CHECK(memory.issue_id() == 1);
  CHECK(memory.issue_id() == 2);
  CHECK(memory.last_issued_id() == 2);
}

TEST_CASE("track ids stop before overflowing sixteen bits") {
  TrackMemory memory(1);
  for (int i = 1; i <= 0xffff; ++i) {
    memory.issue_id();
  }
  CHECK_THROWS_AS(memory.issue_id(), Error);
}

namespace {

// Memory fixture: frame 0 holds objects A (id 1) and B (id 2), frame 1
// holds only A. B's mask sits still at rows 2..3, cols 2..3 of a 12x8
// frame.
struct RescueFixture {
  TrackMemory memory{2};
  std::vector<InstanceMask> cur;
  std::vector<FlowField> flows;
  TrackConfig config;

  RescueFixture() {
    config.mode = TrackerMode::pixel;
    config.theta = 0.01;

    MemoryFrame f0;
    f0.frame_index = 0;
    f0.masks = {
        vpstest::make_mask(12, 8, {{8, 6}, {9, 6}}, 2, 1),
        vpstest::make_mask(12, 8, {{2, 2}, {3, 2}, {2, 3}, {3, 3}}, 2, 2)};
    f0.ids = {1, 2};
    memory.push(std::move(f0));

    MemoryFrame f1;
    f1.frame_index = 1;
    f1.masks = {vpstest::make_mask(12, 8, {{8, 5}, {9, 5}}, 2, 1)};
    f1.ids = {1};
    memory.push(std::move(f1));

    FlowField zero;
    zero.width = 12;
    zero.height = 8;
    zero.vectors.assign(2 * 12 * 8, 0.0f);
    flows = {zero, zero};

    cur = {vpstest::make_mask(12, 8, {{2, 2}, {3, 2}, {2, 3}, {3, 3}}, 2, 5)};
  }

  RescueQuery query() {
    RescueQuery q;
    q.cur_masks = &cur;
    q.flows = &flows;
    q.cur_frame_index = 2;
    q.config = &config;
    return q;
  }
};

}  // namespace

TEST_CASE("temporal_rescue readopts a vanished id across the gap") {
  RescueFixture fx;
  std::vector<Rescue> r = temporal_rescue({0}, fx.memory, 0.01, fx.query());
  REQUIRE(r.size() == 1);
  CHECK(r[0].id == 2);
  CHECK(r[0].col == 0);
  CHECK(r[0].score == 1.0);
  CHECK(r[0].from_frame_index == 0);
}

TEST_CASE("temporal_rescue never offers ids still alive in the predecessor") {
  RescueFixture fx;
  // Current instance resembles A, but id 1 is alive in frame 1.
  fx.cur = {vpstest::make_mask(12, 8, {{8, 5}, {9, 5}}, 2, 5)};
  std::vector<Rescue> r = temporal_rescue({0}, fx.memory, 0.01, fx.query());
  CHECK(r.empty());
}

TEST_CASE("temporal_rescue respects the similarity floor") {
  RescueFixture fx;
  std::vector<Rescue> none =
      temporal_rescue({0}, fx.memory, 1.0, fx.query());  // dice is exactly 1
  CHECK(none.empty());
}

TEST_CASE("temporal_rescue needs a frame beyond the predecessor") {
  RescueFixture fx;
  TrackMemory shallow(2);
  MemoryFrame only;
  only.frame_index = 1;
  only.masks = fx.memory.frames().back().masks;
  only.ids = {1};
  shallow.push(std::move(only));
  std::vector<Rescue> r = temporal_rescue({0}, shallow, 0.01, fx.query());
  CHECK(r.empty());
}

TEST_CASE("track_sequence keeps ids stable on a clean translating scene") {
  SceneSpec spec = preset("lookalike_pair", 3);
  SceneOutput scene = generate(spec);

  TrackConfig config;
  config.mode = TrackerMode::pixel;
  TrackedVideo video = track_sequence(scene.frames, scene.flows, config);

  REQUIRE(video.frames.size() == scene.frames.size());
  REQUIRE(video.records.size() == scene.frames.size());
  CHECK(count_id_switches(video, scene.gt_ids) == 0);

  for (std::size_t f = 0; f < video.records.size(); ++f) {
    REQUIRE(video.records[f].size() == 2);
    for (const InstanceRecord& rec : video.records[f]) {
      if (f == 0) {
        CHECK(rec.source == IdSource::fresh);
      } else {
        CHECK(rec.source == IdSource::match);
        CHECK(rec.score == 1.0);
      }
      CHECK(rec.track_id >= 1);
      CHECK(rec.track_id <= 2);
    }
  }

  // Relabeled frames carry the persistent ids at thing pixels.
  for (std::size_t f = 0; f < video.frames.size(); ++f) {
    std::vector<InstanceMask> things = extract_things(video.frames[f]);
    REQUIRE(things.size() == 2);
    for (const InstanceMask& m : things) {
      CHECK(m.instance_id >= 1);
      CHECK(m.instance_id <= 2);
    }
  }
}

TEST_CASE("track_sequence validates its inputs") {
  SceneOutput scene = generate(preset("lookalike_pair", 3));
  TrackConfig config;
  config.mode = TrackerMode::pixel;

  std::vector<FlowField> short_flows(scene.flows.begin(),
                                     scene.flows.end() - 1);
  CHECK_THROWS_AS(track_sequence(scene.frames, short_flows, config),
                  LengthMismatch);

  std::vector<FlowField> bad_flows = scene.flows;
  bad_flows[0].width -= 1;
  bad_flows[0].vectors.resize(2 * bad_flows[0].width * bad_flows[0].height);
  CHECK_THROWS_AS(track_sequence(scene.frames, bad_flows, config),
                  DimensionMismatch);

  TrackConfig needs_head;
  needs_head.mode = TrackerMode::hybrid;
  CHECK_THROWS_AS(track_sequence(scene.frames, scene.flows, needs_head),
                  Error);

  CHECK(track_sequence({}, {}, config).frames.empty());
}

TEST_CASE("track_sequence issues fresh ids when rescue is disabled") {
  SceneOutput scene = generate(preset("occlusion_reappear", 5));
  TrackConfig config;
  config.mode = TrackerMode::pixel;

  config.use_temporal = false;
  TrackedVideo without = track_sequence(scene.frames, scene.flows, config);
  CHECK(count_id_switches(without, scene.gt_ids) == 1);

  int fresh_later = 0;
  int rescued = 0;
  for (std::size_t f = 1; f < without.records.size(); ++f) {
    for (const InstanceRecord& rec : without.records[f]) {
      fresh_later += rec.source == IdSource::fresh ? 1 : 0;
    }
  }
  CHECK(fresh_later == 1);

  config.use_temporal = true;
  TrackedVideo with = track_sequence(scene.frames, scene.flows, config);
  CHECK(count_id_switches(with, scene.gt_ids) == 0);
  for (std::size_t f = 1; f < with.records.size(); ++f) {
    for (const InstanceRecord& rec : with.records[f]) {
      CHECK(rec.source != IdSource::fresh);
      rescued += rec.source == IdSource::rescue ? 1 : 0;
    }
  }
  CHECK(rescued == 1);
}
