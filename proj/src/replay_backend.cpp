#include "zeroguide/replay_backend.hpp"

#include <cmath>
#include <cstdio>

namespace zeroguide {

namespace {

int meta_int(const Eigen::VectorXd& v, int i) { return static_cast<int>(std::lround(v(i))); }

Eigen::MatrixXd gelu(const Eigen::MatrixXd& x) {
    return x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))); });
}

// Numerically stable softmax over one logit row.
Eigen::VectorXd softmax_row(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - m).exp();
    return e / e.sum();
}

}  // namespace

Eigen::MatrixXd attention_output(const AttentionLayerState& state) {
    const int t = state.tokens;
    const int hd = state.heads * state.key_dim;
    Eigen::MatrixXd out(t, hd);
    const double scale = 1.0 / std::sqrt(static_cast<double>(state.key_dim));
    for (int h = 0; h < state.heads; ++h) {
        const Eigen::MatrixXd logits = state.q[h] * state.k[h].transpose() * scale;  // T x T
        for (int i = 0; i < t; ++i) {
            const Eigen::VectorXd probs = softmax_row(logits.row(i).transpose());
            out.row(i).segment(h * state.key_dim, state.key_dim) =
                (probs.transpose() * state.v[h]);
        }
    }
    return out;
}

ReplaySession::ReplaySession(const std::string& path)
    : path_(path), store_(TensorStore::load(path)) {}

std::string ReplaySession::fingerprint() const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "zgtr:%016llx",
                  static_cast<unsigned long long>(store_.content_hash()));
    return std::string(buf);
}

ReplayPatchFeatureExtractor::ReplayPatchFeatureExtractor(std::shared_ptr<ReplaySession> session)
    : session_(std::move(session)) {
    const Eigen::VectorXd meta = session_->store().vector("meta/dino");
    if (meta.size() != 3) throw Error("meta/dino must have 3 entries");
    rows_ = meta_int(meta, 0);
    cols_ = meta_int(meta, 1);
    channels_ = meta_int(meta, 2);
    if (rows_ < 1 || cols_ < 1 || channels_ < 1) throw Error("meta/dino has invalid values");
}

PatchFeatures ReplayPatchFeatureExtractor::extract(const PatchFeatureRequest& req) const {
    if (req.image == nullptr || !req.image->valid()) {
        throw Error("extract: invalid image");
    }
    if (req.grid_rows != rows_ || req.grid_cols != cols_) {
        throw ShapeError("extract: requested grid " + std::to_string(req.grid_rows) + "x" +
                         std::to_string(req.grid_cols) + " but replay file records " +
                         std::to_string(rows_) + "x" + std::to_string(cols_));
    }
    if (req.image->height < rows_ || req.image->width < cols_) {
        throw ShapeError("extract: image smaller than the patch grid");
    }
    const std::string key = "dino/" + image_content_key(*req.image) + "/features";
    const TensorEntry& e = session_->store().get(key);
    // Recorded as rows x cols x channels; flatten the grid to one patch per row.
    if (e.dims.size() != 3 || static_cast<int>(e.dims[0]) != rows_ ||
        static_cast<int>(e.dims[1]) != cols_ || static_cast<int>(e.dims[2]) != channels_) {
        throw ShapeError("extract: replay tensor '" + key + "' does not match declared grid");
    }
    Eigen::MatrixXd data(rows_ * cols_, channels_);
    for (int p = 0; p < rows_ * cols_; ++p) {
        for (int c = 0; c < channels_; ++c) {
            data(p, c) = static_cast<double>(
                e.data[static_cast<std::size_t>(p) * static_cast<std::size_t>(channels_) +
                       static_cast<std::size_t>(c)]);
        }
    }
    if (!data.allFinite()) throw Error("extract: non-finite features in '" + key + "'");
    PatchFeatures out;
    out.rows = rows_;
    out.cols = cols_;
    out.data = std::move(data);
    return out;
}

ReplayJointImageEncoder::ReplayJointImageEncoder(std::shared_ptr<ReplaySession> session)
    : session_(std::move(session)) {
    const Eigen::VectorXd meta = session_->store().vector("meta/encoder");
    if (meta.size() != 7) throw Error("meta/encoder must have 7 entries");
    layers_ = meta_int(meta, 0);
    heads_ = meta_int(meta, 1);
    key_dim_ = meta_int(meta, 2);
    model_dim_ = meta_int(meta, 3);
    rows_ = meta_int(meta, 4);
    cols_ = meta_int(meta, 5);
    joint_dim_ = meta_int(meta, 6);
    if (layers_ < 1 || heads_ < 1 || key_dim_ < 1 || model_dim_ < 1 || rows_ < 1 || cols_ < 1 ||
        joint_dim_ < 1) {
        throw Error("meta/encoder has invalid values");
    }
}

Eigen::VectorXd ReplayJointImageEncoder::encode(const RgbImage& image, const AttentionHook& hook,
                                                int hook_start, int hook_end) const {
    if (!image.valid()) throw Error("encode: invalid image");
    if (hook) {
        if (hook_start < 1 || hook_end < hook_start || hook_end > layers_) {
            throw ConfigError("encode: hook layer range [" + std::to_string(hook_start) + "," +
                              std::to_string(hook_end) + "] invalid for " +
                              std::to_string(layers_) + " layers");
        }
    }
    const TensorStore& store = session_->store();
    const std::string tokens_key = "img/" + image_content_key(image) + "/tokens";
    Eigen::MatrixXd x = store.matrix(tokens_key);
    const int t = rows_ * cols_ + 1;
    if (x.rows() != t || x.cols() != model_dim_) {
        throw ShapeError("encode: token tensor '" + tokens_key + "' has shape " +
                         std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                         ", expected " + std::to_string(t) + "x" + std::to_string(model_dim_));
    }
    const int hd = heads_ * key_dim_;
    for (int layer = 1; layer <= layers_; ++layer) {
        const std::string base = "enc/L" + std::to_string(layer) + "/";
        const Eigen::MatrixXd wq = store.matrix(base + "Wq");
        const Eigen::MatrixXd wk = store.matrix(base + "Wk");
        const Eigen::MatrixXd wv = store.matrix(base + "Wv");
        const Eigen::MatrixXd wo = store.matrix(base + "Wo");
        if (wq.rows() != model_dim_ || wq.cols() != hd || wo.rows() != hd ||
            wo.cols() != model_dim_) {
            throw ShapeError("encode: bad weight shapes at layer " + std::to_string(layer));
        }
        AttentionLayerState state;
        state.layer = layer;
        state.tokens = t;
        state.heads = heads_;
        state.key_dim = key_dim_;
        state.q.reserve(heads_);
        state.k.reserve(heads_);
        state.v.reserve(heads_);
        const Eigen::MatrixXd q_all = x * wq;
        const Eigen::MatrixXd k_all = x * wk;
        const Eigen::MatrixXd v_all = x * wv;
        for (int h = 0; h < heads_; ++h) {
            state.q.push_back(q_all.middleCols(h * key_dim_, key_dim_));
            state.k.push_back(k_all.middleCols(h * key_dim_, key_dim_));
            state.v.push_back(v_all.middleCols(h * key_dim_, key_dim_));
        }
        Eigen::MatrixXd attn;
        if (hook && layer >= hook_start && layer <= hook_end) {
            attn = hook(state);
            if (attn.rows() != t || attn.cols() != hd) {
                throw ShapeError("encode: hook output at layer " + std::to_string(layer) +
                                 " has shape " + std::to_string(attn.rows()) + "x" +
                                 std::to_string(attn.cols()) + ", expected " + std::to_string(t) +
                                 "x" + std::to_string(hd));
            }
        } else {
            attn = attention_output(state);
        }
        x = x + attn * wo;
        if (store.contains(base + "W1")) {
            const Eigen::MatrixXd w1 = store.matrix(base + "W1");
            const Eigen::MatrixXd w2 = store.matrix(base + "W2");
            x = x + gelu(x * w1) * w2;
        }
    }
    const Eigen::MatrixXd proj = store.matrix("proj");
    if (proj.rows() != model_dim_ || proj.cols() != joint_dim_) {
        throw ShapeError("encode: projection has wrong shape");
    }
    return (x.row(0) * proj).transpose();
}

ReplayTextEncoder::ReplayTextEncoder(std::shared_ptr<ReplaySession> session)
    : session_(std::move(session)) {
    dim_ = meta_int(session_->store().vector("meta/text"), 0);
    if (dim_ < 1) throw Error("meta/text has invalid dimension");
}

Eigen::VectorXd ReplayTextEncoder::embed(const std::string& text) const {
    if (text.empty()) throw Error("embed: empty string");
    Eigen::VectorXd v = session_->store().vector("text/" + text);
    if (v.size() != dim_) throw ShapeError("embed: bank entry 'text/" + text + "' has wrong size");
    return v;
}

ReplaySentenceEncoder::ReplaySentenceEncoder(std::shared_ptr<ReplaySession> session)
    : session_(std::move(session)) {
    dim_ = meta_int(session_->store().vector("meta/sbert"), 0);
    if (dim_ < 1) throw Error("meta/sbert has invalid dimension");
}

Eigen::VectorXd ReplaySentenceEncoder::embed(const std::string& text) const {
    if (text.empty()) throw Error("embed: empty string");
    Eigen::VectorXd v = session_->store().vector("sbert/" + text);
    if (v.size() != dim_) {
        throw ShapeError("embed: bank entry 'sbert/" + text + "' has wrong size");
    }
    return v;
}

EncoderSet open_replay_backend(const std::string& path) {
    auto session = std::make_shared<ReplaySession>(path);
    EncoderSet set;
    set.patches = std::make_shared<ReplayPatchFeatureExtractor>(session);
    set.joint = std::make_shared<ReplayJointImageEncoder>(session);
    set.text = std::make_shared<ReplayTextEncoder>(session);
    set.sentence = std::make_shared<ReplaySentenceEncoder>(session);
    set.fingerprint = session->fingerprint();
    return set;
}

}  // namespace zeroguide
