#pragma once

#include "zeroguide/labeling.hpp"
#include "zeroguide/types.hpp"

#include <vector>

namespace zeroguide {

// Qualitative rendering: each segment tinted with a color hashed from its
// node id, boundaries darkened, label text drawn at the segment centroid.
RgbImage render_overlay(const RgbImage& image, const std::vector<LabeledSegment>& segments);

}  // namespace zeroguide
