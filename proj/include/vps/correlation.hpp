#pragma once

#include <cstddef>
#include <vector>

#include "vps/errors.hpp"
#include "vps/mask.hpp"

namespace vps {

// Dense row-major matrix of doubles. Rows index instances of the earlier
// frame, columns instances of the later frame.
struct ScoreMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  ScoreMatrix() = default;
  ScoreMatrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

enum class CorrelationKind { pixel, instance, fused };

// Score matrix plus the segment ids its axes refer to.
struct CorrelationMatrix {
  CorrelationKind kind = CorrelationKind::pixel;
  ScoreMatrix scores;
  std::vector<SegmentId> row_ids;
  std::vector<SegmentId> col_ids;
};

}  // namespace vps
