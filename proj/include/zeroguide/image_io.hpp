#pragma once

#include "zeroguide/types.hpp"

#include <string>

namespace zeroguide {

RgbImage read_rgb_png(const std::string& path);
void write_rgb_png(const RgbImage& image, const std::string& path);

IndexImage read_index_png(const std::string& path);
void write_index_png(const IndexImage& image, const std::string& path);

// Binary masks serialize as 8-bit PNG with values 0/255; entries >= 0.5 are
// written as 255.
SegmentMask read_mask_png(const std::string& path);
void write_mask_png(const SegmentMask& mask, const std::string& path);

}  // namespace zeroguide
