#pragma once

#include "zeroguide/encoders.hpp"
#include "zeroguide/tensor_store.hpp"

#include <memory>
#include <string>

namespace zeroguide {

// A loaded replay file shared by the adapters built from it. Read-only after
// construction, safe for concurrent calls.
//
// Expected keys:
//   meta/dino            [grid_rows, grid_cols, channels]
//   meta/encoder         [layers, heads, key_dim, model_dim, grid_rows,
//                         grid_cols, joint_dim]
//   meta/text            [dim]
//   meta/sbert           [dim]
//   dino/<imgkey>/features   (rows*cols) x channels
//   img/<imgkey>/tokens      T x model_dim initial token matrix, global at 0
//   enc/L<l>/Wq|Wk|Wv        model_dim x heads*key_dim
//   enc/L<l>/Wo              heads*key_dim x model_dim
//   enc/L<l>/W1, W2          optional MLP weights
//   proj                     model_dim x joint_dim
//   text/<phrase>            joint-space embedding
//   sbert/<phrase>           sentence-space embedding
// <imgkey> is the content hash from image_content_key().
class ReplaySession {
public:
    explicit ReplaySession(const std::string& path);

    const TensorStore& store() const { return store_; }
    const std::string& path() const { return path_; }
    std::string fingerprint() const;

private:
    std::string path_;
    TensorStore store_;
};

class ReplayPatchFeatureExtractor : public PatchFeatureExtractor {
public:
    explicit ReplayPatchFeatureExtractor(std::shared_ptr<ReplaySession> session);
    int grid_rows() const override { return rows_; }
    int grid_cols() const override { return cols_; }
    int channels() const override { return channels_; }
    PatchFeatures extract(const PatchFeatureRequest& req) const override;

private:
    std::shared_ptr<ReplaySession> session_;
    int rows_ = 0, cols_ = 0, channels_ = 0;
};

// Miniature transformer whose weights and per-image input tokens come from
// the replay file. Hooked layers substitute the attention output; the result
// flows through the residual stream and optional MLP exactly as in a live
// encoder, so masking layers before the last one still shapes the embedding.
// No layer norm: the recorded weights are scaled for a stable forward pass.
class ReplayJointImageEncoder : public JointImageEncoder {
public:
    explicit ReplayJointImageEncoder(std::shared_ptr<ReplaySession> session);
    int layer_count() const override { return layers_; }
    int grid_rows() const override { return rows_; }
    int grid_cols() const override { return cols_; }
    int joint_dim() const override { return joint_dim_; }
    Eigen::VectorXd encode(const RgbImage& image, const AttentionHook& hook, int hook_start,
                           int hook_end) const override;
    using JointImageEncoder::encode;

private:
    std::shared_ptr<ReplaySession> session_;
    int layers_ = 0, heads_ = 0, key_dim_ = 0, model_dim_ = 0;
    int rows_ = 0, cols_ = 0, joint_dim_ = 0;
};

class ReplayTextEncoder : public TextEncoder {
public:
    explicit ReplayTextEncoder(std::shared_ptr<ReplaySession> session);
    int dim() const override { return dim_; }
    Eigen::VectorXd embed(const std::string& text) const override;

private:
    std::shared_ptr<ReplaySession> session_;
    int dim_ = 0;
};

class ReplaySentenceEncoder : public SentenceEncoder {
public:
    explicit ReplaySentenceEncoder(std::shared_ptr<ReplaySession> session);
    int dim() const override { return dim_; }
    Eigen::VectorXd embed(const std::string& text) const override;

private:
    std::shared_ptr<ReplaySession> session_;
    int dim_ = 0;
};

// Builds the full adapter set from one replay file.
EncoderSet open_replay_backend(const std::string& path);

}  // namespace zeroguide
