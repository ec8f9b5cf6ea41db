#pragma once

// Ten hand-counted segmentation/recall fixtures on 4x4 images with three
// classes. Expected values were tallied by hand from the masks below; the
// comments carry the arithmetic so they can be re-checked without running
// anything.

#include "zeroguide/evaluation.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace zgtest {

struct MetricFixture {
    std::string name;
    zeroguide::GroundTruth gt;
    std::vector<zeroguide::ReassignedSegment> segments;
    std::vector<long long> expect_intersection;  // per class
    std::vector<long long> expect_union;
    std::vector<int> expect_gt_present;
    double expect_miou = 0.0;  // NaN when no class present
    int expect_recall_tp = 0;  // at tau_iou = 0.5
    int expect_recall_total = 0;
};

inline zeroguide::GroundTruth fixture_gt(const std::array<int, 16>& cells) {
    zeroguide::GroundTruth gt;
    gt.map.height = 4;
    gt.map.width = 4;
    gt.map.data.resize(16);
    for (int i = 0; i < 16; ++i) gt.map.data[static_cast<std::size_t>(i)] =
        static_cast<unsigned char>(cells[static_cast<std::size_t>(i)]);
    gt.classes = {"road", "tree", "sign"};
    gt.ignore_index = 255;
    return gt;
}

inline zeroguide::ReassignedSegment fixture_seg(const std::array<int, 16>& cells, int cls,
                                                bool verified) {
    zeroguide::ReassignedSegment seg;
    seg.mask = zeroguide::SegmentMask::zeros(4, 4);
    for (int i = 0; i < 16; ++i) {
        if (cells[static_cast<std::size_t>(i)] != 0) seg.mask.set(i / 4, i % 4, 1.0f);
    }
    seg.class_index = cls;
    seg.method = "tt";
    seg.score = verified ? 1.0 : 0.0;
    seg.verified = verified;
    return seg;
}

inline std::vector<MetricFixture> metric_fixtures() {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<MetricFixture> out;

    const std::array<int, 16> all0 = {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
    const std::array<int, 16> ones = {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
    const std::array<int, 16> left = {1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0};
    const std::array<int, 16> right = {0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1};

    // 1. Exact cover: I=U=16 for class 0, IoU 1, recall TP (1 > 0.5).
    out.push_back({"exact-cover", fixture_gt(all0), {fixture_seg(ones, 0, true)},
                   {16, 0, 0}, {16, 0, 0}, {1, 0, 0}, 1.0, 1, 1});

    // 2. Half cover: I=8, U=16, IoU 0.5; 0.5 is not > 0.5, so no recall TP.
    out.push_back({"half-cover", fixture_gt(all0), {fixture_seg(left, 0, true)},
                   {8, 0, 0}, {16, 0, 0}, {1, 0, 0}, 0.5, 0, 1});

    // 3. Wrong class: pred says 1 everywhere over gt 0. Class 0: I=0, U=16
    //    (gt side). Class 1: I=0, U=16 (pred side). mIoU over present {0}: 0.
    out.push_back({"wrong-class", fixture_gt(all0), {fixture_seg(ones, 1, true)},
                   {0, 0, 0}, {16, 16, 0}, {1, 0, 0}, 0.0, 0, 1});

    // 4. Unverified segment counts as background: gt side only, I=0, U=16.
    out.push_back({"unverified-background", fixture_gt(all0), {fixture_seg(ones, 0, false)},
                   {0, 0, 0}, {16, 0, 0}, {1, 0, 0}, 0.0, 0, 1});

    // 5. Ignore region: rows 2-3 ignored, pred covers everything. Only the
    //    8 non-ignore pixels count on either side: I=U=8, IoU 1.
    const std::array<int, 16> top0 = {0, 0, 0, 0, 0, 0, 0, 0,
                                      255, 255, 255, 255, 255, 255, 255, 255};
    out.push_back({"ignore-region", fixture_gt(top0), {fixture_seg(ones, 0, true)},
                   {8, 0, 0}, {8, 0, 0}, {1, 0, 0}, 1.0, 1, 1});

    // 6. Two classes, both exact: IoU 1 each, class 0 absent (union 0).
    std::array<int, 16> split12{};
    for (int i = 0; i < 16; ++i) split12[static_cast<std::size_t>(i)] = (i % 4 < 2) ? 1 : 2;
    out.push_back({"two-class-split", fixture_gt(split12),
                   {fixture_seg(left, 1, true), fixture_seg(right, 2, true)},
                   {0, 8, 8}, {0, 8, 8}, {0, 1, 1}, 1.0, 2, 2});

    // 7. Two same-class segments union to the full gt: recall uses the union.
    std::array<int, 16> all2{};
    all2.fill(2);
    out.push_back({"same-class-union", fixture_gt(all2),
                   {fixture_seg(left, 2, true), fixture_seg(right, 2, true)},
                   {0, 0, 16}, {0, 0, 16}, {0, 0, 1}, 1.0, 1, 1});

    // 8. One big wrong-half prediction: gt left 0 / right 1, pred 0 everywhere.
    //    Class 0: I=8, U=16 (8 gt + 8 pred bleed) -> 0.5. Class 1: I=0, U=8.
    //    mIoU (0.5 + 0)/2 = 0.25; no recall TP (0.5 and 0).
    std::array<int, 16> split01{};
    for (int i = 0; i < 16; ++i) split01[static_cast<std::size_t>(i)] = (i % 4 < 2) ? 0 : 1;
    out.push_back({"bleed", fixture_gt(split01), {fixture_seg(ones, 0, true)},
                   {8, 0, 0}, {16, 8, 0}, {1, 1, 0}, 0.25, 0, 2});

    // 9. Recall boundary: 12 gt pixels of class 1 (rows 0-2), row 3 ignored;
    //    pred is 6 of those pixels -> IoU 6/12 = 0.5 exactly, not a TP.
    const std::array<int, 16> rows012 = {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1,
                                         255, 255, 255, 255};
    const std::array<int, 16> six = {1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
    out.push_back({"recall-boundary", fixture_gt(rows012), {fixture_seg(six, 1, true)},
                   {0, 6, 0}, {0, 12, 0}, {0, 1, 0}, 0.5, 0, 1});

    // 10. Fully ignored image: nothing counts anywhere; image mIoU is NaN and
    //     the image contributes 0/0 grounding segments.
    std::array<int, 16> allig{};
    allig.fill(255);
    out.push_back({"all-ignore", fixture_gt(allig), {fixture_seg(ones, 0, true)},
                   {0, 0, 0}, {0, 0, 0}, {0, 0, 0}, nan, 0, 0});

    return out;
}

}  // namespace zgtest
