#include "vps/pixel_tracker.hpp"

namespace vps {

double dice(const InstanceMask& p, const InstanceMask& g) {
  if (p.width != g.width || p.height != g.height) {
    throw DimensionMismatch("dice of masks with different geometry");
  }
  std::size_t n = p.bits.size();
  long long inter = 0;
  long long total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    inter += p.bits[i] & g.bits[i];
    total += p.bits[i] + g.bits[i];
  }
  if (total == 0) {
    return 0.0;
  }
  return 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

CorrelationMatrix pixel_correlation(const std::vector<InstanceMask>& prev,
                                    const FlowField& flow,
                                    const std::vector<InstanceMask>& cur,
                                    bool class_gated) {
  CorrelationMatrix out;
  out.kind = CorrelationKind::pixel;
  out.scores = ScoreMatrix(prev.size(), cur.size());
  out.row_ids.reserve(prev.size());
  for (const InstanceMask& m : prev) {
    out.row_ids.push_back(m.id());
  }
  out.col_ids.reserve(cur.size());
  for (const InstanceMask& m : cur) {
    out.col_ids.push_back(m.id());
  }

  for (std::size_t i = 0; i < prev.size(); ++i) {
    InstanceMask warped = warp_mask(prev[i], flow);
    for (std::size_t j = 0; j < cur.size(); ++j) {
      if (class_gated && prev[i].class_id != cur[j].class_id) {
        continue;  // stays 0
      }
      out.scores.at(i, j) = dice(warped, cur[j]);
    }
  }
  return out;
}

}  // namespace vps
