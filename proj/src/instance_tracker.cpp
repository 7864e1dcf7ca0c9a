#include "vps/instance_tracker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "io_util.hpp"

namespace vps {
namespace {

constexpr std::uint8_t kHeadMagic[4] = {0x56, 0x50, 0x53, 0x45};  // "VPSE"
constexpr std::uint32_t kHeadVersion = 1;
constexpr std::uint32_t kMaxDim = 1u << 20;

// Engine output mapped to [0, 1) with 53 explicit bits, so initialization
// does not depend on library distribution internals.
double unit_double(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

struct ForwardCache {
  std::vector<double> x;  // flattened input
  std::vector<double> a;  // pre-activation
  std::vector<double> h;  // relu(a)
  std::vector<double> v;  // embedding
};

ForwardCache forward_roi(const RoiMask& roi, const EmbeddingHeadParams& p) {
  if (roi.height * roi.width != p.d_in) {
    throw ShapeMismatch("crop has " +
                        std::to_string(roi.height * roi.width) +
                        " cells, head expects " + std::to_string(p.d_in));
  }
  ForwardCache c;
  c.x.assign(roi.values.begin(), roi.values.end());
  c.a = p.b1;
  for (int r = 0; r < p.d_in; ++r) {
    double xr = c.x[r];
    if (xr == 0.0) {
      continue;
    }
    const double* row = p.w1.data() + static_cast<std::size_t>(r) * p.d_hidden;
    for (int k = 0; k < p.d_hidden; ++k) {
      c.a[k] += xr * row[k];
    }
  }
  c.h.resize(p.d_hidden);
  for (int k = 0; k < p.d_hidden; ++k) {
    c.h[k] = c.a[k] > 0.0 ? c.a[k] : 0.0;
  }
  c.v = p.b2;
  for (int k = 0; k < p.d_hidden; ++k) {
    double hk = c.h[k];
    if (hk == 0.0) {
      continue;
    }
    const double* row = p.w2.data() + static_cast<std::size_t>(k) * p.d_embed;
    for (int q = 0; q < p.d_embed; ++q) {
      c.v[q] += hk * row[q];
    }
  }
  return c;
}

void check_supervision(const MatchSupervision& sup, std::size_t rows,
                       std::size_t cols) {
  if (sup.pairs.empty()) {
    throw EmptySupervision("no supervised pairs");
  }
  std::vector<std::uint8_t> row_seen(rows, 0);
  std::vector<std::uint8_t> col_seen(cols, 0);
  for (auto [r, c] : sup.pairs) {
    if (r >= rows || c >= cols) {
      throw IdMisalignment("supervised pair outside the score matrix");
    }
    if (row_seen[r]++ != 0 || col_seen[c]++ != 0) {
      throw IdMisalignment("row or column supervised twice");
    }
  }
}

// dL/dp for each supervised row, scaled by 1/|pairs| to match the loss.
// Unsupervised rows do not contribute.
void loss_prob_grad(const ScoreMatrix& probs, const MatchSupervision& sup,
                    MatchLossKind kind, ScoreMatrix& dprobs) {
  double inv = 1.0 / static_cast<double>(sup.pairs.size());
  for (auto [r, target] : sup.pairs) {
    for (std::size_t c = 0; c < probs.cols; ++c) {
      double p = probs.at(r, c);
      if (c == target) {
        dprobs.at(r, c) += -inv / p;
      } else if (kind == MatchLossKind::binary) {
        dprobs.at(r, c) += inv / (1.0 - p);
      }
    }
  }
}

// Softmax backward per row: dz_x = p_x * (dp_x - sum_y dp_y * p_y).
void softmax_backward(const ScoreMatrix& probs, const ScoreMatrix& dprobs,
                      ScoreMatrix& dlogits) {
  for (std::size_t r = 0; r < probs.rows; ++r) {
    double dot = 0.0;
    for (std::size_t c = 0; c < probs.cols; ++c) {
      dot += dprobs.at(r, c) * probs.at(r, c);
    }
    for (std::size_t c = 0; c < probs.cols; ++c) {
      dlogits.at(r, c) = probs.at(r, c) * (dprobs.at(r, c) - dot);
    }
  }
}

// Accumulates parameter gradients for one instance given dL/dv.
void head_backward(const ForwardCache& c, const std::vector<double>& dv,
                   const EmbeddingHeadParams& p, HeadGradients& g) {
  std::vector<double> dh(p.d_hidden, 0.0);
  for (int k = 0; k < p.d_hidden; ++k) {
    double hk = c.h[k];
    double* wrow = g.w2.data() + static_cast<std::size_t>(k) * p.d_embed;
    const double* prow = p.w2.data() + static_cast<std::size_t>(k) * p.d_embed;
    double acc = 0.0;
    for (int q = 0; q < p.d_embed; ++q) {
      wrow[q] += hk * dv[q];
      acc += prow[q] * dv[q];
    }
    dh[k] = acc;
  }
  for (int q = 0; q < p.d_embed; ++q) {
    g.b2[q] += dv[q];
  }
  for (int k = 0; k < p.d_hidden; ++k) {
    if (c.a[k] <= 0.0) {
      dh[k] = 0.0;  // relu gate
    }
  }
  for (int r = 0; r < p.d_in; ++r) {
    double xr = c.x[r];
    if (xr == 0.0) {
      continue;
    }
    double* wrow = g.w1.data() + static_cast<std::size_t>(r) * p.d_hidden;
    for (int k = 0; k < p.d_hidden; ++k) {
      wrow[k] += xr * dh[k];
    }
  }
  for (int k = 0; k < p.d_hidden; ++k) {
    g.b1[k] += dh[k];
  }
}

HeadGradients zero_gradients(const EmbeddingHeadParams& p) {
  HeadGradients g;
  g.w1.assign(p.w1.size(), 0.0);
  g.b1.assign(p.b1.size(), 0.0);
  g.w2.assign(p.w2.size(), 0.0);
  g.b2.assign(p.b2.size(), 0.0);
  return g;
}

void accumulate(HeadGradients& into, const HeadGradients& g, double scale) {
  for (std::size_t i = 0; i < into.w1.size(); ++i) into.w1[i] += scale * g.w1[i];
  for (std::size_t i = 0; i < into.b1.size(); ++i) into.b1[i] += scale * g.b1[i];
  for (std::size_t i = 0; i < into.w2.size(); ++i) into.w2[i] += scale * g.w2[i];
  for (std::size_t i = 0; i < into.b2.size(); ++i) into.b2[i] += scale * g.b2[i];
}

void apply_step(EmbeddingHeadParams& p, const HeadGradients& g, double lr) {
  for (std::size_t i = 0; i < p.w1.size(); ++i) p.w1[i] -= lr * g.w1[i];
  for (std::size_t i = 0; i < p.b1.size(); ++i) p.b1[i] -= lr * g.b1[i];
  for (std::size_t i = 0; i < p.w2.size(); ++i) p.w2[i] -= lr * g.w2[i];
  for (std::size_t i = 0; i < p.b2.size(); ++i) p.b2[i] -= lr * g.b2[i];
}

}  // namespace

EmbeddingHeadParams init_head(int d_in, int d_hidden, int d_embed,
                              std::uint64_t seed) {
  if (d_in < 1 || d_hidden < 1 || d_embed < 1) {
    throw ShapeMismatch("head dimensions must be positive");
  }
  EmbeddingHeadParams p;
  p.d_in = d_in;
  p.d_hidden = d_hidden;
  p.d_embed = d_embed;
  std::mt19937_64 eng(seed);
  auto fill = [&eng](std::vector<double>& w, int fan_in) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : w) {
      v = (2.0 * unit_double(eng) - 1.0) * bound;
    }
  };
  p.w1.resize(static_cast<std::size_t>(d_in) * d_hidden);
  fill(p.w1, d_in);
  p.b1.assign(d_hidden, 0.0);
  p.w2.resize(static_cast<std::size_t>(d_hidden) * d_embed);
  fill(p.w2, d_hidden);
  p.b2.assign(d_embed, 0.0);
  return p;
}

EmbeddingHeadParams read_head(const std::string& path) {
  std::ifstream in = io::open_input(path);
  for (std::uint8_t expected : kHeadMagic) {
    if (io::read_u8(in, "magic") != expected) {
      throw BadMagic(path + ": not an embedding head checkpoint");
    }
  }
  std::uint32_t version = io::read_u32(in, "version");
  if (version != kHeadVersion) {
    throw UnsupportedVersion(path + ": unsupported version " +
                             std::to_string(version));
  }
  std::uint32_t d_in = io::read_u32(in, "d_in");
  std::uint32_t d_hidden = io::read_u32(in, "d_hidden");
  std::uint32_t d_embed = io::read_u32(in, "d_embed");
  if (d_in < 1 || d_hidden < 1 || d_embed < 1 || d_in > kMaxDim ||
      d_hidden > kMaxDim || d_embed > kMaxDim) {
    throw DimensionOverflow(path + ": implausible head dimensions");
  }
  EmbeddingHeadParams p;
  p.d_in = static_cast<int>(d_in);
  p.d_hidden = static_cast<int>(d_hidden);
  p.d_embed = static_cast<int>(d_embed);
  auto read_block = [&in, &path](std::vector<double>& w, std::size_t n) {
    w.resize(n);
    for (double& v : w) {
      v = io::read_f64(in, path + ": parameter block");
    }
  };
  read_block(p.w1, static_cast<std::size_t>(d_in) * d_hidden);
  read_block(p.b1, d_hidden);
  read_block(p.w2, static_cast<std::size_t>(d_hidden) * d_embed);
  read_block(p.b2, d_embed);
  return p;
}

void write_head(const EmbeddingHeadParams& params, const std::string& path) {
  std::ofstream out = io::open_output(path);
  for (std::uint8_t b : kHeadMagic) {
    io::write_u8(out, b);
  }
  io::write_u32(out, kHeadVersion);
  io::write_u32(out, static_cast<std::uint32_t>(params.d_in));
  io::write_u32(out, static_cast<std::uint32_t>(params.d_hidden));
  io::write_u32(out, static_cast<std::uint32_t>(params.d_embed));
  for (const std::vector<double>* block :
       {&params.w1, &params.b1, &params.w2, &params.b2}) {
    for (double v : *block) {
      io::write_f64(out, v);
    }
  }
  if (!out) {
    throw IoError("short write to " + path);
  }
}

std::vector<double> embed_roi(const RoiMask& roi,
                              const EmbeddingHeadParams& params) {
  return forward_roi(roi, params).v;
}

EmbeddingSet embed(const std::vector<RoiMask>& rois,
                   const std::vector<SegmentId>& ids,
                   const EmbeddingHeadParams& params) {
  if (rois.size() != ids.size()) {
    throw IdMisalignment("crop count differs from id count");
  }
  EmbeddingSet set;
  set.d_embed = params.d_embed;
  set.ids = ids;
  set.vectors.reserve(rois.size());
  for (const RoiMask& roi : rois) {
    set.vectors.push_back(embed_roi(roi, params));
  }
  return set;
}

ScoreMatrix correlate(const EmbeddingSet& m, const EmbeddingSet& n,
                      bool cosine) {
  if (m.d_embed != n.d_embed) {
    throw ShapeMismatch("embedding widths differ");
  }
  ScoreMatrix out(m.vectors.size(), n.vectors.size());
  for (std::size_t i = 0; i < m.vectors.size(); ++i) {
    for (std::size_t j = 0; j < n.vectors.size(); ++j) {
      double dot = std::inner_product(m.vectors[i].begin(),
                                      m.vectors[i].end(),
                                      n.vectors[j].begin(), 0.0);
      if (cosine) {
        double nm = std::sqrt(std::inner_product(m.vectors[i].begin(),
                                                 m.vectors[i].end(),
                                                 m.vectors[i].begin(), 0.0));
        double nn = std::sqrt(std::inner_product(n.vectors[j].begin(),
                                                 n.vectors[j].end(),
                                                 n.vectors[j].begin(), 0.0));
        dot /= std::max(nm, 1e-12) * std::max(nn, 1e-12);
      }
      out.at(i, j) = dot;
    }
  }
  return out;
}

ScoreMatrix match_softmax(const ScoreMatrix& logits) {
  ScoreMatrix probs(logits.rows, logits.cols);
  for (std::size_t r = 0; r < logits.rows; ++r) {
    if (logits.cols == 0) {
      continue;
    }
    double mx = logits.at(r, 0);
    for (std::size_t c = 1; c < logits.cols; ++c) {
      mx = std::max(mx, logits.at(r, c));
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < logits.cols; ++c) {
      double e = std::exp(logits.at(r, c) - mx);
      probs.at(r, c) = e;
      sum += e;
    }
    for (std::size_t c = 0; c < logits.cols; ++c) {
      probs.at(r, c) /= sum;
    }
  }
  return probs;
}

std::vector<double> expected_target(const ScoreMatrix& probs) {
  std::vector<double> out(probs.rows, 0.0);
  for (std::size_t r = 0; r < probs.rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < probs.cols; ++c) {
      acc += static_cast<double>(c) * probs.at(r, c);
    }
    out[r] = acc;
  }
  return out;
}

double matching_loss(const ScoreMatrix& probs, const MatchSupervision& sup,
                     MatchLossKind kind) {
  check_supervision(sup, probs.rows, probs.cols);
  double total = 0.0;
  for (auto [r, target] : sup.pairs) {
    total -= std::log(probs.at(r, target));
    if (kind == MatchLossKind::binary) {
      for (std::size_t c = 0; c < probs.cols; ++c) {
        if (c != target) {
          total -= std::log(1.0 - probs.at(r, c));
        }
      }
    }
  }
  return total / static_cast<double>(sup.pairs.size());
}

LossResult loss_gradients(const std::vector<RoiMask>& prev,
                          const std::vector<RoiMask>& cur,
                          const MatchSupervision& sup,
                          const EmbeddingHeadParams& params,
                          MatchLossKind kind) {
  std::vector<ForwardCache> mc;
  mc.reserve(prev.size());
  for (const RoiMask& roi : prev) {
    mc.push_back(forward_roi(roi, params));
  }
  std::vector<ForwardCache> nc;
  nc.reserve(cur.size());
  for (const RoiMask& roi : cur) {
    nc.push_back(forward_roi(roi, params));
  }

  ScoreMatrix logits(mc.size(), nc.size());
  for (std::size_t i = 0; i < mc.size(); ++i) {
    for (std::size_t j = 0; j < nc.size(); ++j) {
      logits.at(i, j) = std::inner_product(mc[i].v.begin(), mc[i].v.end(),
                                           nc[j].v.begin(), 0.0);
    }
  }
  ScoreMatrix probs = match_softmax(logits);

  LossResult result;
  result.loss = matching_loss(probs, sup, kind);
  result.grads = zero_gradients(params);

  ScoreMatrix dprobs(probs.rows, probs.cols);
  loss_prob_grad(probs, sup, kind, dprobs);
  ScoreMatrix dlogits(probs.rows, probs.cols);
  softmax_backward(probs, dprobs, dlogits);

  // The head is shared, so both frames' embeddings feed the same gradient
  // accumulators.
  for (std::size_t i = 0; i < mc.size(); ++i) {
    std::vector<double> dv(params.d_embed, 0.0);
    for (std::size_t j = 0; j < nc.size(); ++j) {
      double g = dlogits.at(i, j);
      if (g == 0.0) {
        continue;
      }
      for (int q = 0; q < params.d_embed; ++q) {
        dv[q] += g * nc[j].v[q];
      }
    }
    head_backward(mc[i], dv, params, result.grads);
  }
  for (std::size_t j = 0; j < nc.size(); ++j) {
    std::vector<double> dv(params.d_embed, 0.0);
    for (std::size_t i = 0; i < mc.size(); ++i) {
      double g = dlogits.at(i, j);
      if (g == 0.0) {
        continue;
      }
      for (int q = 0; q < params.d_embed; ++q) {
        dv[q] += g * mc[i].v[q];
      }
    }
    head_backward(nc[j], dv, params, result.grads);
  }
  return result;
}

double train_epoch(EmbeddingHeadParams& params,
                   const std::vector<TrainExample>& dataset,
                   const TrainConfig& config, std::mt19937_64& order_rng) {
  if (dataset.empty()) {
    throw EmptySupervision("training dataset is empty");
  }
  std::size_t n = dataset.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t batch =
      config.batch_size > 0 ? static_cast<std::size_t>(config.batch_size) : n;
  if (batch < n) {
    // Fisher-Yates with explicit modulo draw; deterministic given the engine.
    for (std::size_t i = n - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(order_rng() % (i + 1));
      std::swap(order[i], order[j]);
    }
  }

  double loss_sum = 0.0;
  for (std::size_t start = 0; start < n; start += batch) {
    std::size_t stop = std::min(n, start + batch);
    HeadGradients total = zero_gradients(params);
    double scale = 1.0 / static_cast<double>(stop - start);
    for (std::size_t k = start; k < stop; ++k) {
      const TrainExample& ex = dataset[order[k]];
      LossResult r =
          loss_gradients(ex.prev, ex.cur, ex.sup, params, config.loss);
      loss_sum += r.loss;
      accumulate(total, r.grads, scale);
    }
    apply_step(params, total, config.learning_rate);
  }
  return loss_sum / static_cast<double>(n);
}

TrainResult train(const std::vector<TrainExample>& dataset, int d_in,
                  int d_hidden, int d_embed, const TrainConfig& config) {
  TrainResult result;
  result.params = init_head(d_in, d_hidden, d_embed, config.seed);
  std::mt19937_64 order_rng(config.seed ^ 0x5deece66dULL);
  result.epoch_loss.reserve(config.epochs);
  for (int e = 0; e < config.epochs; ++e) {
    result.epoch_loss.push_back(
        train_epoch(result.params, dataset, config, order_rng));
  }
  return result;
}

double pair_argmax_accuracy(const EmbeddingHeadParams& params,
                            const std::vector<TrainExample>& dataset) {
  std::size_t hits = 0;
  std::size_t total = 0;
  for (const TrainExample& ex : dataset) {
    std::vector<SegmentId> prev_ids(ex.prev.size());
    std::vector<SegmentId> cur_ids(ex.cur.size());
    EmbeddingSet m = embed(ex.prev, prev_ids, params);
    EmbeddingSet n = embed(ex.cur, cur_ids, params);
    ScoreMatrix logits = correlate(m, n);
    for (auto [r, target] : ex.sup.pairs) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < logits.cols; ++c) {
        if (logits.at(r, c) > logits.at(r, best)) {
          best = c;
        }
      }
      hits += best == target ? 1 : 0;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / total;
}

CorrelationMatrix instance_correlation(const std::vector<InstanceMask>& prev,
                                       const std::vector<InstanceMask>& cur,
                                       const EmbeddingHeadParams& params,
                                       int roi_height, int roi_width,
                                       bool cosine, bool center_anchor) {
  auto embed_masks = [&](const std::vector<InstanceMask>& masks) {
    std::vector<RoiMask> rois;
    std::vector<SegmentId> ids;
    rois.reserve(masks.size());
    ids.reserve(masks.size());
    for (const InstanceMask& m : masks) {
      rois.push_back(crop_scale_pad(m, roi_height, roi_width, center_anchor));
      ids.push_back(m.id());
    }
    return embed(rois, ids, params);
  };
  EmbeddingSet m = embed_masks(prev);
  EmbeddingSet n = embed_masks(cur);

  CorrelationMatrix out;
  out.kind = CorrelationKind::instance;
  out.row_ids = m.ids;
  out.col_ids = n.ids;
  out.scores = match_softmax(correlate(m, n, cosine));
  return out;
}

}  // namespace vps
