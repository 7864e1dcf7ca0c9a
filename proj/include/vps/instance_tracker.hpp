#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "vps/correlation.hpp"
#include "vps/mask.hpp"

namespace vps {

// Two fully connected layers with a ReLU between them, shared by both
// frames of a pair. Weight matrices are row-major with fan-in as the row
// axis: w1 is d_in x d_hidden, w2 is d_hidden x d_embed.
struct EmbeddingHeadParams {
  int d_in = 0;
  int d_hidden = 0;
  int d_embed = 0;
  std::vector<double> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  std::vector<double> b2;
};

// Uniform weights in (-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer, zero
// biases. Same seed, same parameters.
EmbeddingHeadParams init_head(int d_in, int d_hidden, int d_embed,
                              std::uint64_t seed);

// Checkpoint format: magic "VPSE", u32 version, u32 d_in, u32 d_hidden,
// u32 d_embed, then w1, b1, w2, b2 as little-endian float64.
EmbeddingHeadParams read_head(const std::string& path);
void write_head(const EmbeddingHeadParams& params, const std::string& path);

// Embeddings of one frame's instances, aligned with their segment ids.
struct EmbeddingSet {
  int d_embed = 0;
  std::vector<std::vector<double>> vectors;
  std::vector<SegmentId> ids;
};

// Flattened crop through the head. Throws ShapeMismatch unless the crop
// has exactly d_in cells.
std::vector<double> embed_roi(const RoiMask& roi,
                              const EmbeddingHeadParams& params);

EmbeddingSet embed(const std::vector<RoiMask>& rois,
                   const std::vector<SegmentId>& ids,
                   const EmbeddingHeadParams& params);

// Pairwise dot products, rows from m, columns from n. With cosine set the
// products are normalized by both vector norms (floored at 1e-12).
ScoreMatrix correlate(const EmbeddingSet& m, const EmbeddingSet& n,
                      bool cosine = false);

// Row-wise softmax; each row becomes a distribution over columns.
ScoreMatrix match_softmax(const ScoreMatrix& logits);

// Soft column index per row: sum_j j * p(i, j).
std::vector<double> expected_target(const ScoreMatrix& probs);

// Ground-truth pairing (row index, column index) for one frame pair. A row
// appears at most once; columns are distinct.
struct MatchSupervision {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

enum class MatchLossKind {
  categorical,  // -ln p(target) per supervised row
  binary,       // -ln p(target) - sum over others of ln(1 - p(other))
};

// Mean loss over the supervised pairs. Throws EmptySupervision on an empty
// pairing, IdMisalignment on out-of-range or repeated indices.
double matching_loss(const ScoreMatrix& probs, const MatchSupervision& sup,
                     MatchLossKind kind = MatchLossKind::categorical);

struct HeadGradients {
  std::vector<double> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  std::vector<double> b2;
};

struct LossResult {
  double loss = 0.0;
  HeadGradients grads;
};

// Analytic loss and parameter gradients for one frame pair: forward both
// sides, row softmax over the correlation, backprop through the shared
// head. Gradients match matching_loss scaling exactly.
LossResult loss_gradients(const std::vector<RoiMask>& prev,
                          const std::vector<RoiMask>& cur,
                          const MatchSupervision& sup,
                          const EmbeddingHeadParams& params,
                          MatchLossKind kind = MatchLossKind::categorical);

struct TrainExample {
  std::vector<RoiMask> prev;
  std::vector<RoiMask> cur;
  MatchSupervision sup;
};

struct TrainConfig {
  double learning_rate = 1e-2;
  int epochs = 100;
  int batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 0;
  MatchLossKind loss = MatchLossKind::categorical;
};

// One pass over the dataset; gradient averaged per batch. Returns the mean
// example loss seen during the pass.
double train_epoch(EmbeddingHeadParams& params,
                   const std::vector<TrainExample>& dataset,
                   const TrainConfig& config, std::mt19937_64& order_rng);

struct TrainResult {
  EmbeddingHeadParams params;
  std::vector<double> epoch_loss;
};

// Seeded init followed by config.epochs passes of gradient descent.
TrainResult train(const std::vector<TrainExample>& dataset, int d_in,
                  int d_hidden, int d_embed, const TrainConfig& config);

// Fraction of supervised pairs whose row argmax hits the target column.
double pair_argmax_accuracy(const EmbeddingHeadParams& params,
                            const std::vector<TrainExample>& dataset);

// Crops, embeds and correlates two frames' instances; scores are the
// row-softmax probabilities.
CorrelationMatrix instance_correlation(const std::vector<InstanceMask>& prev,
                                       const std::vector<InstanceMask>& cur,
                                       const EmbeddingHeadParams& params,
                                       int roi_height, int roi_width,
                                       bool cosine = false,
                                       bool center_anchor = false);

}  // namespace vps
