#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "vps/correlation.hpp"
#include "vps/flow.hpp"
#include "vps/instance_tracker.hpp"
#include "vps/mask.hpp"

namespace vps {

// Affine combination of the two cue matrices, the 1x1-convolution analogue.
struct FusionWeights {
  double w_instance = 0.5;
  double w_pixel = 0.5;
  double bias = 0.0;
};

// Entry-wise w_instance * instance + w_pixel * pixel + bias. The two inputs
// must agree in shape and axis ids; throws on mismatch.
CorrelationMatrix fuse(const CorrelationMatrix& instance,
                       const CorrelationMatrix& pixel,
                       const FusionWeights& weights);

// Closed-form least squares fit of the fusion weights against target score
// matrices (1 on true pairs, 0 elsewhere), pooled over all given pairs.
FusionWeights fit_fusion_weights(
    const std::vector<CorrelationMatrix>& instance,
    const std::vector<CorrelationMatrix>& pixel,
    const std::vector<ScoreMatrix>& target);

struct Assignment {
  struct Match {
    std::size_t row = 0;
    std::size_t col = 0;
    double score = 0.0;
  };
  std::vector<Match> matches;          // ordered by row index
  std::vector<std::size_t> unmatched_rows;
  std::vector<std::size_t> unmatched_cols;
};

// One-to-one greedy matching: repeatedly commit the best remaining entry
// with score >= tau. Ties break toward the lower row, then lower column.
// With literal_row_order the rows are instead served top to bottom, each
// taking its best remaining column.
Assignment greedy_assign(const CorrelationMatrix& m, double tau,
                         bool literal_row_order = false);

// Drops matches where row argmax and column argmax of the raw matrix
// disagree; demoted rows and columns rejoin the unmatched lists.
Assignment mutual_check(const CorrelationMatrix& m, const Assignment& a);

// One remembered frame: its thing masks, their embeddings (empty when the
// mode does not use them) and their persistent track ids, all aligned.
struct MemoryFrame {
  int frame_index = -1;
  std::vector<InstanceMask> masks;
  EmbeddingSet embeddings;
  std::vector<std::uint16_t> ids;
};

// Sliding window of recent frames plus the persistent id counter. Frame
// indices are strictly increasing; issued ids are unique for the sequence.
class TrackMemory {
 public:
  explicit TrackMemory(int capacity);

  void push(MemoryFrame frame);
  const std::deque<MemoryFrame>& frames() const { return frames_; }
  int capacity() const { return capacity_; }

  std::uint16_t issue_id();
  std::uint16_t last_issued_id() const {
    return static_cast<std::uint16_t>(next_id_ - 1);
  }

 private:
  int capacity_;
  std::deque<MemoryFrame> frames_;
  std::uint32_t next_id_ = 1;
};

enum class TrackerMode { instance, pixel, hybrid };
enum class IdSource { match, rescue, fresh };

struct TrackConfig {
  TrackerMode mode = TrackerMode::hybrid;
  double tau_match = 0.3;
  double theta = 0.01;
  bool use_mutual_check = true;
  bool use_temporal = true;
  bool mutual_before_threshold = false;
  int memory_window = 2;
  FusionWeights fusion;
  int roi_height = 32;
  int roi_width = 64;
  bool class_gated = true;
  bool cosine = false;
  bool center_anchor = false;
  bool literal_row_order = false;
  const EmbeddingHeadParams* head = nullptr;  // required unless pixel mode
};

// Everything the rescue scorer needs about the current frame.
struct RescueQuery {
  const std::vector<InstanceMask>* cur_masks = nullptr;
  const EmbeddingSet* cur_embeddings = nullptr;  // null in pixel mode
  const std::vector<FlowField>* flows = nullptr;  // whole-sequence flows
  int cur_frame_index = 0;
  const TrackConfig* config = nullptr;
};

struct Rescue {
  std::uint16_t id = 0;
  std::size_t col = 0;
  double score = 0.0;
  int from_frame_index = -1;
};

// Offers remembered instances that vanished before the predecessor frame to
// the still-unmatched current instances. Memory frames are visited newest
// first; an instance is adopted at the first frame where its similarity
// clears theta and the row and column argmaxes agree. Pixel similarity
// composes the forward warps across the gap.
std::vector<Rescue> temporal_rescue(const std::vector<std::size_t>& unmatched_cols,
                                    const TrackMemory& memory, double theta,
                                    const RescueQuery& query);

struct InstanceRecord {
  SegmentId input_id;
  std::uint16_t track_id = 0;
  IdSource source = IdSource::fresh;
  double score = 0.0;
};

struct TrackedVideo {
  std::vector<SegmentationMap> frames;  // instance ids replaced by track ids
  std::vector<std::vector<InstanceRecord>> records;  // per frame, per thing
};

// Runs the full per-pair association over a sequence: correlate, assign,
// optionally rescue, then relabel thing pixels with persistent ids. Stuff
// and void pixels pass through unchanged.
TrackedVideo track_sequence(const std::vector<SegmentationMap>& frames,
                            const std::vector<FlowField>& flows,
                            const TrackConfig& config);

}  // namespace vps
