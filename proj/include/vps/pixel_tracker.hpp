#pragma once

#include <vector>

#include "vps/correlation.hpp"
#include "vps/flow.hpp"
#include "vps/mask.hpp"

namespace vps {

// Dice coefficient with squared-count denominator:
//   2 |P ∩ G| / (|P| + |G|).
// For binary masks the squared pixel values equal the values themselves.
// Two empty masks score 0. Throws DimensionMismatch.
double dice(const InstanceMask& p, const InstanceMask& g);

// Warps every previous-frame mask forward along the flow and scores it
// against every current-frame mask by dice overlap. With class_gated set,
// pairs of different classes are pinned to 0 and skip the warp overlap.
CorrelationMatrix pixel_correlation(const std::vector<InstanceMask>& prev,
                                    const FlowField& flow,
                                    const std::vector<InstanceMask>& cur,
                                    bool class_gated = true);

}  // namespace vps
