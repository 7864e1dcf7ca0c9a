#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vps/association.hpp"
#include "vps/flow.hpp"
#include "vps/instance_tracker.hpp"
#include "vps/mask.hpp"

namespace vps {

enum class ShapeKind { rect, ellipse };

// One scripted object. Position and size are evaluated per frame:
// center(f) = center + velocity * f, size(f) = size * scale^f. A pixel
// belongs to the shape when its center (x + 0.5, y + 0.5) lies strictly
// inside. Integer centers with even sizes rasterize without boundary
// pixels, which keeps translation bit-exact.
struct ObjectSpec {
  ShapeKind shape = ShapeKind::rect;
  std::uint16_t class_id = 0;
  double center_x = 0.0;
  double center_y = 0.0;
  double width = 0.0;
  double height = 0.0;
  double vel_x = 0.0;
  double vel_y = 0.0;
  double scale_per_frame = 1.0;
  int z_order = 0;  // larger paints on top
  // Inclusive visible frame intervals; empty means always visible.
  std::vector<std::pair<int, int>> visibility;
};

struct SceneSpec {
  int width = 0;
  int height = 0;
  int n_frames = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint16_t> stuff_classes;  // horizontal background bands
  std::vector<ObjectSpec> objects;
};

struct SceneOutput {
  // Frames with per-frame scrambled instance ids, what a segmenter emits.
  std::vector<SegmentationMap> frames;
  // Exact forward flow per adjacent pair: object pixels carry the object
  // velocity, background pixels zero.
  std::vector<FlowField> flows;
  // The same frames with persistent object ids, the tracking ground truth.
  std::vector<SegmentationMap> gt_frames;
  // Per frame: scrambled instance id -> persistent object id.
  std::vector<std::map<std::uint16_t, std::uint16_t>> gt_ids;
};

// Deterministic per seed. Throws SpecOutOfBounds if an object's initial
// extent leaves the frame or a visibility interval leaves [0, n_frames).
SceneOutput generate(const SceneSpec& spec);

// Named scenarios: occlusion_reappear, lookalike_pair, small_fast,
// deformation, crowd. The seed only scrambles per-frame ids.
SceneSpec preset(const std::string& name, std::uint64_t seed);
std::vector<std::string> preset_names();

// Random scene whose objects all differ in silhouette, for embedding
// training: one shared thing class, per-object aspect ratios drawn without
// replacement, motion confined to disjoint cells.
SceneSpec distinct_shapes_spec(std::uint64_t seed, int n_objects = 3,
                               int n_frames = 9, int width = 96,
                               int height = 64);

// Supervised crop pairs for every adjacent frame pair of a scene. Pairs
// whose frames share no object are dropped.
std::vector<TrainExample> matching_examples(const SceneOutput& scene,
                                            int roi_height, int roi_width,
                                            bool center_anchor = false);

// Adds seeded Gaussian noise to every flow component.
void add_flow_noise(FlowField& field, double sigma, std::uint64_t seed);

// Counts adjacent appearances of one true object under different predicted
// ids, summed over objects. A reappearance after a gap counts as adjacent.
int count_id_switches(const TrackedVideo& video,
                      const std::vector<std::map<std::uint16_t, std::uint16_t>>& gt_ids);

}  // namespace vps
