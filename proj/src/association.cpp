#include "vps/association.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "vps/pixel_tracker.hpp"

namespace vps {
namespace {

void check_aligned(const CorrelationMatrix& a, const CorrelationMatrix& b) {
  if (a.scores.rows != b.scores.rows || a.scores.cols != b.scores.cols) {
    throw ShapeMismatch("cue matrices differ in shape");
  }
  if (a.row_ids != b.row_ids || a.col_ids != b.col_ids) {
    throw IdMisalignment("cue matrices index different instances");
  }
}

std::size_t row_argmax(const ScoreMatrix& m, std::size_t r) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < m.cols; ++c) {
    if (m.at(r, c) > m.at(r, best)) {
      best = c;
    }
  }
  return best;
}

std::size_t col_argmax(const ScoreMatrix& m, std::size_t c) {
  std::size_t best = 0;
  for (std::size_t r = 1; r < m.rows; ++r) {
    if (m.at(r, c) > m.at(best, c)) {
      best = r;
    }
  }
  return best;
}

void finish_assignment(Assignment& a, std::size_t rows, std::size_t cols) {
  std::sort(a.matches.begin(), a.matches.end(),
            [](const Assignment::Match& x, const Assignment::Match& y) {
              return x.row < y.row;
            });
  std::vector<std::uint8_t> row_used(rows, 0);
  std::vector<std::uint8_t> col_used(cols, 0);
  for (const Assignment::Match& m : a.matches) {
    row_used[m.row] = 1;
    col_used[m.col] = 1;
  }
  a.unmatched_rows.clear();
  a.unmatched_cols.clear();
  for (std::size_t r = 0; r < rows; ++r) {
    if (!row_used[r]) {
      a.unmatched_rows.push_back(r);
    }
  }
  for (std::size_t c = 0; c < cols; ++c) {
    if (!col_used[c]) {
      a.unmatched_cols.push_back(c);
    }
  }
}

// Mutual-agreement filter applied before any thresholding: keep (i, j)
// where i's best column is j, j's best row is i, and the score clears tau.
Assignment mutual_first_assign(const CorrelationMatrix& m, double tau) {
  Assignment a;
  for (std::size_t r = 0; r < m.scores.rows; ++r) {
    if (m.scores.cols == 0) {
      break;
    }
    std::size_t c = row_argmax(m.scores, r);
    if (col_argmax(m.scores, c) == r && m.scores.at(r, c) >= tau) {
      a.matches.push_back({r, c, m.scores.at(r, c)});
    }
  }
  finish_assignment(a, m.scores.rows, m.scores.cols);
  return a;
}

}  // namespace

CorrelationMatrix fuse(const CorrelationMatrix& instance,
                       const CorrelationMatrix& pixel,
                       const FusionWeights& weights) {
  check_aligned(instance, pixel);
  CorrelationMatrix out;
  out.kind = CorrelationKind::fused;
  out.row_ids = instance.row_ids;
  out.col_ids = instance.col_ids;
  out.scores = ScoreMatrix(instance.scores.rows, instance.scores.cols);
  for (std::size_t i = 0; i < out.scores.data.size(); ++i) {
    out.scores.data[i] = weights.w_instance * instance.scores.data[i] +
                         weights.w_pixel * pixel.scores.data[i] +
                         weights.bias;
  }
  return out;
}

FusionWeights fit_fusion_weights(
    const std::vector<CorrelationMatrix>& instance,
    const std::vector<CorrelationMatrix>& pixel,
    const std::vector<ScoreMatrix>& target) {
  if (instance.size() != pixel.size() || instance.size() != target.size()) {
    throw LengthMismatch("fusion fit inputs differ in length");
  }
  // Normal equations for [w_instance, w_pixel, bias].
  std::array<std::array<double, 3>, 3> a{};
  std::array<double, 3> rhs{};
  for (std::size_t k = 0; k < instance.size(); ++k) {
    check_aligned(instance[k], pixel[k]);
    const ScoreMatrix& si = instance[k].scores;
    const ScoreMatrix& sp = pixel[k].scores;
    const ScoreMatrix& st = target[k];
    if (st.rows != si.rows || st.cols != si.cols) {
      throw ShapeMismatch("target matrix shape differs from cues");
    }
    for (std::size_t e = 0; e < si.data.size(); ++e) {
      std::array<double, 3> row{si.data[e], sp.data[e], 1.0};
      for (int p = 0; p < 3; ++p) {
        for (int q = 0; q < 3; ++q) {
          a[p][q] += row[p] * row[q];
        }
        rhs[p] += row[p] * st.data[e];
      }
    }
  }

  // 3x3 Gaussian elimination with partial pivoting.
  std::array<std::array<double, 4>, 3> aug{};
  for (int p = 0; p < 3; ++p) {
    for (int q = 0; q < 3; ++q) {
      aug[p][q] = a[p][q];
    }
    aug[p][3] = rhs[p];
  }
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::fabs(aug[r][col]) > std::fabs(aug[pivot][col])) {
        pivot = r;
      }
    }
    if (std::fabs(aug[pivot][col]) < 1e-12) {
      throw Error("fusion fit is degenerate");
    }
    std::swap(aug[col], aug[pivot]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) {
        continue;
      }
      double f = aug[r][col] / aug[col][col];
      for (int q = col; q < 4; ++q) {
        aug[r][q] -= f * aug[col][q];
      }
    }
  }
  FusionWeights w;
  w.w_instance = aug[0][3] / aug[0][0];
  w.w_pixel = aug[1][3] / aug[1][1];
  w.bias = aug[2][3] / aug[2][2];
  return w;
}

Assignment greedy_assign(const CorrelationMatrix& m, double tau,
                         bool literal_row_order) {
  const ScoreMatrix& s = m.scores;
  Assignment a;
  std::vector<std::uint8_t> row_used(s.rows, 0);
  std::vector<std::uint8_t> col_used(s.cols, 0);

  if (literal_row_order) {
    for (std::size_t r = 0; r < s.rows; ++r) {
      std::size_t best = s.cols;
      for (std::size_t c = 0; c < s.cols; ++c) {
        if (col_used[c]) {
          continue;
        }
        if (best == s.cols || s.at(r, c) > s.at(r, best)) {
          best = c;
        }
      }
      if (best != s.cols && s.at(r, best) >= tau) {
        col_used[best] = 1;
        a.matches.push_back({r, best, s.at(r, best)});
      }
    }
  } else {
    while (true) {
      double best_score = -std::numeric_limits<double>::infinity();
      std::size_t best_r = s.rows;
      std::size_t best_c = s.cols;
      for (std::size_t r = 0; r < s.rows; ++r) {
        if (row_used[r]) {
          continue;
        }
        for (std::size_t c = 0; c < s.cols; ++c) {
          if (col_used[c]) {
            continue;
          }
          if (s.at(r, c) > best_score) {
            best_score = s.at(r, c);
            best_r = r;
            best_c = c;
          }
        }
      }
      if (best_r == s.rows || best_score < tau) {
        break;
      }
      row_used[best_r] = 1;
      col_used[best_c] = 1;
      a.matches.push_back({best_r, best_c, best_score});
    }
  }
  finish_assignment(a, s.rows, s.cols);
  return a;
}

Assignment mutual_check(const CorrelationMatrix& m, const Assignment& a) {
  Assignment out;
  for (const Assignment::Match& match : a.matches) {
    if (row_argmax(m.scores, match.row) == match.col &&
        col_argmax(m.scores, match.col) == match.row) {
      out.matches.push_back(match);
    }
  }
  finish_assignment(out, m.scores.rows, m.scores.cols);
  return out;
}

TrackMemory::TrackMemory(int capacity) : capacity_(capacity) {
  if (capacity < 1) {
    throw Error("memory window must hold at least one frame");
  }
}

void TrackMemory::push(MemoryFrame frame) {
  if (!frames_.empty() && frame.frame_index <= frames_.back().frame_index) {
    throw Error("memory frames must arrive in increasing order");
  }
  if (frame.masks.size() != frame.ids.size()) {
    throw IdMisalignment("memory frame masks and ids differ in length");
  }
  frames_.push_back(std::move(frame));
  while (frames_.size() > static_cast<std::size_t>(capacity_)) {
    frames_.pop_front();
  }
}

std::uint16_t TrackMemory::issue_id() {
  if (next_id_ > 0xffff) {
    throw Error("track id space exhausted");
  }
  return static_cast<std::uint16_t>(next_id_++);
}

namespace {

// Similarity of one remembered frame's candidate instances against the
// still-unmatched current instances, under the configured tracker mode.
ScoreMatrix rescue_scores(const MemoryFrame& mf,
                          const std::vector<std::size_t>& candidates,
                          const std::vector<std::size_t>& cols,
                          const RescueQuery& query) {
  const TrackConfig& cfg = *query.config;
  std::size_t rows = candidates.size();
  std::size_t ncols = cols.size();

  ScoreMatrix pixel;
  if (cfg.mode != TrackerMode::instance) {
    pixel = ScoreMatrix(rows, ncols);
    for (std::size_t r = 0; r < rows; ++r) {
      // Compose the per-frame forward warps across the gap.
      InstanceMask warped = mf.masks[candidates[r]];
      for (int f = mf.frame_index; f < query.cur_frame_index; ++f) {
        warped = warp_mask(warped, (*query.flows)[f]);
      }
      for (std::size_t c = 0; c < ncols; ++c) {
        const InstanceMask& cur = (*query.cur_masks)[cols[c]];
        if (cfg.class_gated && warped.class_id != cur.class_id) {
          continue;
        }
        pixel.at(r, c) = dice(warped, cur);
      }
    }
  }

  ScoreMatrix instance;
  if (cfg.mode != TrackerMode::pixel) {
    if (mf.embeddings.vectors.size() != mf.masks.size()) {
      throw IdMisalignment("memory frame lacks embeddings");
    }
    ScoreMatrix logits(rows, ncols);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::vector<double>& m = mf.embeddings.vectors[candidates[r]];
      for (std::size_t c = 0; c < ncols; ++c) {
        const std::vector<double>& n = query.cur_embeddings->vectors[cols[c]];
        double dot = 0.0;
        for (std::size_t q = 0; q < m.size(); ++q) {
          dot += m[q] * n[q];
        }
        if (cfg.cosine) {
          double nm = 0.0;
          double nn = 0.0;
          for (double x : m) nm += x * x;
          for (double x : n) nn += x * x;
          dot /= std::max(std::sqrt(nm), 1e-12) *
                 std::max(std::sqrt(nn), 1e-12);
        }
        logits.at(r, c) = dot;
      }
    }
    instance = match_softmax(logits);
  }

  switch (cfg.mode) {
    case TrackerMode::pixel:
      return pixel;
    case TrackerMode::instance:
      return instance;
    case TrackerMode::hybrid:
      break;
  }
  ScoreMatrix fused(rows, ncols);
  for (std::size_t i = 0; i < fused.data.size(); ++i) {
    fused.data[i] = cfg.fusion.w_instance * instance.data[i] +
                    cfg.fusion.w_pixel * pixel.data[i] + cfg.fusion.bias;
  }
  return fused;
}

}  // namespace

std::vector<Rescue> temporal_rescue(const std::vector<std::size_t>& unmatched_cols,
                                    const TrackMemory& memory, double theta,
                                    const RescueQuery& query) {
  std::vector<Rescue> rescues;
  if (unmatched_cols.empty() || memory.frames().size() < 2) {
    return rescues;
  }
  const MemoryFrame& predecessor = memory.frames().back();
  std::unordered_set<std::uint16_t> blocked(predecessor.ids.begin(),
                                            predecessor.ids.end());

  std::vector<std::size_t> remaining = unmatched_cols;
  for (std::size_t back = memory.frames().size() - 1; back-- > 0;) {
    if (remaining.empty()) {
      break;
    }
    const MemoryFrame& mf = memory.frames()[back];
    std::vector<std::size_t> candidates;
    for (std::size_t k = 0; k < mf.ids.size(); ++k) {
      if (!blocked.contains(mf.ids[k])) {
        candidates.push_back(k);
      }
    }
    if (candidates.empty()) {
      continue;
    }

    ScoreMatrix s = rescue_scores(mf, candidates, remaining, query);
    std::vector<std::size_t> still_unmatched;
    for (std::size_t c = 0; c < remaining.size(); ++c) {
      std::size_t r = col_argmax(s, c);
      if (s.at(r, c) > theta && row_argmax(s, r) == c) {
        std::uint16_t id = mf.ids[candidates[r]];
        rescues.push_back({id, remaining[c], s.at(r, c), mf.frame_index});
        blocked.insert(id);
      } else {
        still_unmatched.push_back(remaining[c]);
      }
    }
    remaining = std::move(still_unmatched);
  }
  std::sort(rescues.begin(), rescues.end(),
            [](const Rescue& a, const Rescue& b) { return a.col < b.col; });
  return rescues;
}

namespace {

EmbeddingSet embed_things(const std::vector<InstanceMask>& things,
                          const TrackConfig& cfg) {
  std::vector<RoiMask> rois;
  std::vector<SegmentId> ids;
  rois.reserve(things.size());
  ids.reserve(things.size());
  for (const InstanceMask& m : things) {
    rois.push_back(
        crop_scale_pad(m, cfg.roi_height, cfg.roi_width, cfg.center_anchor));
    ids.push_back(m.id());
  }
  return embed(rois, ids, *cfg.head);
}

CorrelationMatrix pair_scores(const MemoryFrame& prev,
                              const std::vector<InstanceMask>& cur,
                              const EmbeddingSet& cur_emb,
                              const FlowField& flow, const TrackConfig& cfg) {
  CorrelationMatrix instance;
  if (cfg.mode != TrackerMode::pixel) {
    instance.kind = CorrelationKind::instance;
    instance.row_ids = prev.embeddings.ids;
    instance.col_ids = cur_emb.ids;
    instance.scores =
        match_softmax(correlate(prev.embeddings, cur_emb, cfg.cosine));
    if (cfg.mode == TrackerMode::instance) {
      return instance;
    }
  }
  CorrelationMatrix pixel =
      pixel_correlation(prev.masks, flow, cur, cfg.class_gated);
  if (cfg.mode == TrackerMode::pixel) {
    return pixel;
  }
  return fuse(instance, pixel, cfg.fusion);
}

}  // namespace

TrackedVideo track_sequence(const std::vector<SegmentationMap>& frames,
                            const std::vector<FlowField>& flows,
                            const TrackConfig& config) {
  TrackedVideo out;
  if (frames.empty()) {
    return out;
  }
  if (flows.size() + 1 != frames.size()) {
    throw LengthMismatch("need exactly one flow field per adjacent pair");
  }
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (frames[f].width != frames[0].width ||
        frames[f].height != frames[0].height) {
      throw DimensionMismatch("frame geometry changes mid-sequence");
    }
    if (f < flows.size() && (flows[f].width != frames[0].width ||
                             flows[f].height != frames[0].height)) {
      throw DimensionMismatch("flow geometry differs from frames");
    }
  }
  if (config.mode != TrackerMode::pixel && config.head == nullptr) {
    throw Error("tracker mode needs embedding head parameters");
  }

  TrackMemory memory(config.memory_window);
  out.frames.reserve(frames.size());
  out.records.resize(frames.size());

  for (std::size_t f = 0; f < frames.size(); ++f) {
    std::vector<InstanceMask> things = extract_things(frames[f]);
    EmbeddingSet embeddings;
    if (config.mode != TrackerMode::pixel) {
      embeddings = embed_things(things, config);
    }

    std::vector<std::uint16_t> ids(things.size(), 0);
    std::vector<InstanceRecord>& records = out.records[f];
    records.resize(things.size());
    for (std::size_t k = 0; k < things.size(); ++k) {
      records[k].input_id = things[k].id();
    }

    if (f == 0) {
      for (std::size_t k = 0; k < things.size(); ++k) {
        ids[k] = memory.issue_id();
        records[k].track_id = ids[k];
        records[k].source = IdSource::fresh;
      }
    } else {
      const MemoryFrame& prev = memory.frames().back();
      CorrelationMatrix scores =
          pair_scores(prev, things, embeddings, flows[f - 1], config);

      Assignment assignment;
      if (config.use_mutual_check && config.mutual_before_threshold) {
        assignment = mutual_first_assign(scores, config.tau_match);
      } else {
        assignment = greedy_assign(scores, config.tau_match,
                                   config.literal_row_order);
        if (config.use_mutual_check) {
          assignment = mutual_check(scores, assignment);
        }
      }

      for (const Assignment::Match& m : assignment.matches) {
        ids[m.col] = prev.ids[m.row];
        records[m.col].track_id = ids[m.col];
        records[m.col].source = IdSource::match;
        records[m.col].score = m.score;
      }

      std::vector<std::size_t> unmatched = assignment.unmatched_cols;
      if (config.use_temporal && !unmatched.empty() &&
          memory.frames().size() >= 2) {
        RescueQuery query;
        query.cur_masks = &things;
        query.cur_embeddings = &embeddings;
        query.flows = &flows;
        query.cur_frame_index = static_cast<int>(f);
        query.config = &config;
        std::vector<Rescue> rescues =
            temporal_rescue(unmatched, memory, config.theta, query);
        std::vector<std::size_t> still;
        std::size_t next = 0;
        for (std::size_t col : unmatched) {
          if (next < rescues.size() && rescues[next].col == col) {
            ids[col] = rescues[next].id;
            records[col].track_id = ids[col];
            records[col].source = IdSource::rescue;
            records[col].score = rescues[next].score;
            ++next;
          } else {
            still.push_back(col);
          }
        }
        unmatched = std::move(still);
      }

      for (std::size_t col : unmatched) {
        ids[col] = memory.issue_id();
        records[col].track_id = ids[col];
        records[col].source = IdSource::fresh;
      }
    }

    // Relabel thing pixels with their persistent ids.
    std::unordered_map<PixelLabel, PixelLabel> relabel;
    for (std::size_t k = 0; k < things.size(); ++k) {
      relabel[make_label(things[k].class_id, things[k].instance_id)] =
          make_label(things[k].class_id, ids[k]);
    }
    SegmentationMap tracked = frames[f];
    for (PixelLabel& label : tracked.labels) {
      auto it = relabel.find(label);
      if (it != relabel.end()) {
        label = it->second;
      }
    }
    out.frames.push_back(std::move(tracked));

    MemoryFrame mem;
    mem.frame_index = static_cast<int>(f);
    mem.masks = std::move(things);
    mem.embeddings = std::move(embeddings);
    mem.ids = std::move(ids);
    memory.push(std::move(mem));
  }
  return out;
}

}  // namespace vps
