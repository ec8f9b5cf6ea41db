#pragma once

#include "zeroguide/types.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace zeroguide {

struct PatchFeatureRequest {
    const RgbImage* image = nullptr;
    int grid_rows = 0;
    int grid_cols = 0;
};

// Per-patch feature tensor: (rows*cols) x channels, patch order row-major.
struct PatchFeatures {
    int rows = 0;
    int cols = 0;
    Eigen::MatrixXd data;

    int patch_count() const { return rows * cols; }
    int channels() const { return static_cast<int>(data.cols()); }
};

// Snapshot of one self-attention layer handed to hooks. The global token sits
// at row 0 of every matrix; token count = patch count + 1.
struct AttentionLayerState {
    int layer = 0;   // 1-indexed
    int tokens = 0;  // T
    int heads = 0;
    int key_dim = 0;  // d_k
    std::vector<Eigen::MatrixXd> q, k, v;  // per head, T x d_k
};

// Standard post-softmax attention output for one layer, heads concatenated:
// T x (heads * key_dim). Shared by the replay forward pass and by hooks that
// need the unmasked output.
Eigen::MatrixXd attention_output(const AttentionLayerState& state);

// Substitutes the post-softmax attention output of one hooked layer. Must be
// pure and return a T x (heads * key_dim) matrix.
using AttentionHook = std::function<Eigen::MatrixXd(const AttentionLayerState&)>;

// Self-distilled ViT adapter: per-patch features for clustering.
class PatchFeatureExtractor {
public:
    virtual ~PatchFeatureExtractor() = default;
    virtual int grid_rows() const = 0;
    virtual int grid_cols() const = 0;
    virtual int channels() const = 0;
    virtual PatchFeatures extract(const PatchFeatureRequest& req) const = 0;
};

// Joint image encoder adapter. Declares its patch grid and joint-space
// dimensionality up front; encode runs the full forward pass with the hook
// substituted on layers in [hook_start, hook_end] (1-indexed, inclusive).
class JointImageEncoder {
public:
    virtual ~JointImageEncoder() = default;
    virtual int layer_count() const = 0;
    virtual int grid_rows() const = 0;
    virtual int grid_cols() const = 0;
    virtual int joint_dim() const = 0;
    // hook == nullptr encodes the image natively.
    virtual Eigen::VectorXd encode(const RgbImage& image, const AttentionHook& hook,
                                   int hook_start, int hook_end) const = 0;

    Eigen::VectorXd encode(const RgbImage& image) const { return encode(image, nullptr, 0, 0); }
};

// Text side of the joint space.
class TextEncoder {
public:
    virtual ~TextEncoder() = default;
    virtual int dim() const = 0;
    virtual Eigen::VectorXd embed(const std::string& text) const = 0;
};

// Sentence-similarity space, separate from the joint space; used only by
// text-to-text reassignment and text quality scoring.
class SentenceEncoder {
public:
    virtual ~SentenceEncoder() = default;
    virtual int dim() const = 0;
    virtual Eigen::VectorXd embed(const std::string& text) const = 0;
};

// The set of adapters a pipeline run needs.
struct EncoderSet {
    std::shared_ptr<PatchFeatureExtractor> patches;
    std::shared_ptr<JointImageEncoder> joint;
    std::shared_ptr<TextEncoder> text;
    std::shared_ptr<SentenceEncoder> sentence;
    std::string fingerprint;  // identifies the backing model/replay content
};

}  // namespace zeroguide
