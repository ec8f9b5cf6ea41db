#pragma once

#include "zeroguide/clustering.hpp"
#include "zeroguide/dense_crf.hpp"
#include "zeroguide/encoders.hpp"
#include "zeroguide/merge_tree.hpp"

#include <string>
#include <vector>

namespace zeroguide {

struct OversegmentParams {
    int n_target = 20;
    double t_feature = 0.9;
    CrfParams crf;
};

// Pixel-resolution refinement output. masks[i] belongs to frontier node
// node_ids[i]; masks are pairwise disjoint and cover the image. Frontier
// clusters that end up empty after refinement are dropped and noted in
// warnings.
struct RefineResult {
    std::vector<int> node_ids;
    std::vector<SegmentMask> masks;
    std::vector<std::string> warnings;
};

// Upsamples the frontier clustering to pixel resolution and refines it with
// mean-field CRF inference. Unary energy per pixel is its patch feature's
// distance to each frontier centroid, normalized across centroids, carried to
// pixels by nearest-neighbor upsampling. With crf.iterations == 0 the output
// is exactly the nearest-neighbor upsampling of the patch assignment.
RefineResult upsample_and_refine(const MergeTree& tree, const PatchFeatures& features,
                                 const RgbImage& image, const CrfParams& crf);

struct SegmentCandidates {
    MergeTree tree;
    std::vector<int> node_ids;
    std::vector<SegmentMask> masks;
    std::vector<std::string> warnings;
};

// Full candidate stage: patch features, agglomerative clustering to
// params.n_target, sibling pruning at params.t_feature, CRF refinement.
SegmentCandidates segment_candidates(const RgbImage& image,
                                     const PatchFeatureExtractor& extractor,
                                     const OversegmentParams& params);

}  // namespace zeroguide
