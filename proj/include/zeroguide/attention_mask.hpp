#pragma once

#include "zeroguide/encoders.hpp"
#include "zeroguide/types.hpp"

#include <utility>
#include <vector>

namespace zeroguide {

// Flat token mask of length T; entry 0 is the global token and is pinned to
// 1, the remaining entries follow the patch grid row-major, values in [0,1].
struct AttentionMask {
    Eigen::VectorXd values;

    int tokens() const { return static_cast<int>(values.size()); }
    static AttentionMask all_ones(int tokens);
    void validate() const;  // throws on a violated invariant
};

// Settings for saliency-weighted global subtraction. subtract=false forces
// the subtraction weight w to 0 (the ablation used by the end-to-end no-op
// check); the saliency S_l is still computed and reported.
struct GlobalSubtractionConfig {
    double sigma_sq = 2.5;
    int layer_start = 21;  // 1-indexed, inclusive
    int layer_end = 24;
    bool subtract = true;
};

// Per-layer saliency S_l (mean masked/unmasked cosine over all tokens) and
// the subtraction weight actually applied at that layer.
struct LayerSaliency {
    int layer = 0;
    double s = 0.0;
    double w = 0.0;
};

// Masked softmax: out_j = e^{x_j} * m_j / sum_k e^{x_k} * m_k, computed with
// max-logit subtraction. Entries with m_j == 0 come out exactly 0. Throws
// when every entry is masked out.
Eigen::VectorXd masked_softmax(const Eigen::VectorXd& logits, const Eigen::VectorXd& mask);

// Area interpolation of a pixel mask onto the patch grid, with the global
// token slot prepended at value 1. Each grid cell's value is the mean of the
// pixel mask over the cell.
AttentionMask downsample_mask(const SegmentMask& mask, int grid_rows, int grid_cols);

// w = exp(-(s+1)^2 / (2 sigma_sq)); peaks at 1 when s = -1.
double saliency_weight(double s, double sigma_sq);

// The masked-attention substitution for one layer: per head, recompute the
// attention with the masked softmax, measure the layer saliency against the
// unmasked output, and subtract w times the global token's unmasked output
// from every token. Returns the substituted T x (heads*key_dim) output.
std::pair<Eigen::MatrixXd, LayerSaliency> layer_transform(const AttentionLayerState& state,
                                                          const AttentionMask& mask,
                                                          const GlobalSubtractionConfig& cfg);

// Encodes one segment: downsamples its mask to the token grid and runs the
// joint encoder with layer_transform hooked on cfg's layer range. When
// saliency_log is given, one LayerSaliency per hooked layer is appended.
Eigen::VectorXd encode_segment(const RgbImage& image, const SegmentMask& mask,
                               const JointImageEncoder& encoder,
                               const GlobalSubtractionConfig& cfg,
                               std::vector<LayerSaliency>* saliency_log = nullptr);

}  // namespace zeroguide
