#include "zeroguide/attention_mask.hpp"

#include <cmath>
#include <limits>

namespace zeroguide {

AttentionMask AttentionMask::all_ones(int tokens) {
    if (tokens < 2) throw Error("attention mask: need the global token plus one patch");
    AttentionMask m;
    m.values = Eigen::VectorXd::Ones(tokens);
    return m;
}

void AttentionMask::validate() const {
    if (values.size() < 2) throw Error("attention mask: need the global token plus one patch");
    if (values(0) != 1.0) throw Error("attention mask: global token entry must be 1");
    bool any_patch = false;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        const double v = values(i);
        if (!(v >= 0.0 && v <= 1.0)) {
            throw Error("attention mask: entry " + std::to_string(i) + " outside [0,1]");
        }
        if (i > 0 && v > 0.0) any_patch = true;
    }
    if (!any_patch) throw Error("attention mask: every patch entry is zero");
}

Eigen::VectorXd masked_softmax(const Eigen::VectorXd& logits, const Eigen::VectorXd& mask) {
    if (logits.size() != mask.size()) {
        throw ShapeError("masked softmax: logits and mask lengths differ");
    }
    double max_logit = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        const double x = logits(i);
        if (std::isnan(x)) throw Error("masked softmax: NaN logit");
        if (mask(i) > 0.0 && std::isfinite(x)) max_logit = std::max(max_logit, x);
    }
    if (!std::isfinite(max_logit)) throw Error("masked softmax: every entry is masked");
    Eigen::VectorXd out(logits.size());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        const double z = mask(i) == 0.0 ? 0.0 : std::exp(logits(i) - max_logit) * mask(i);
        out(i) = z;
        sum += z;
    }
    if (sum <= 0.0) throw Error("masked softmax: every entry is masked");
    return out / sum;
}

AttentionMask downsample_mask(const SegmentMask& mask, int grid_rows, int grid_cols) {
    if (grid_rows < 1 || grid_cols < 1) throw Error("downsample_mask: empty grid");
    if (mask.height < grid_rows || mask.width < grid_cols) {
        throw ShapeError("downsample_mask: mask resolution below the patch grid");
    }
    AttentionMask out;
    out.values.resize(static_cast<Eigen::Index>(grid_rows) * grid_cols + 1);
    out.values(0) = 1.0;
    for (int r = 0; r < grid_rows; ++r) {
        const int y0 = static_cast<int>(static_cast<long long>(r) * mask.height / grid_rows);
        const int y1 =
            static_cast<int>(static_cast<long long>(r + 1) * mask.height / grid_rows);
        for (int c = 0; c < grid_cols; ++c) {
            const int x0 = static_cast<int>(static_cast<long long>(c) * mask.width / grid_cols);
            const int x1 =
                static_cast<int>(static_cast<long long>(c + 1) * mask.width / grid_cols);
            double acc = 0.0;
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) acc += mask.at(y, x);
            }
            out.values(static_cast<Eigen::Index>(r) * grid_cols + c + 1) =
                acc / (static_cast<double>(y1 - y0) * (x1 - x0));
        }
    }
    return out;
}

double saliency_weight(double s, double sigma_sq) {
    if (sigma_sq <= 0.0) throw ConfigError("saliency weight: sigma_sq must be positive");
    return std::exp(-(s + 1.0) * (s + 1.0) / (2.0 * sigma_sq));
}

std::pair<Eigen::MatrixXd, LayerSaliency> layer_transform(const AttentionLayerState& state,
                                                          const AttentionMask& mask,
                                                          const GlobalSubtractionConfig& cfg) {
    if (state.layer < cfg.layer_start || state.layer > cfg.layer_end) {
        throw ConfigError("layer_transform: layer " + std::to_string(state.layer) +
                          " outside configured range");
    }
    mask.validate();
    if (mask.tokens() != state.tokens) {
        throw ShapeError("layer_transform: mask length " + std::to_string(mask.tokens()) +
                         " != token count " + std::to_string(state.tokens));
    }
    const int t = state.tokens;
    const int hd = state.heads * state.key_dim;
    const double scale = 1.0 / std::sqrt(static_cast<double>(state.key_dim));

    Eigen::MatrixXd plain(t, hd);
    Eigen::MatrixXd masked(t, hd);
    const Eigen::VectorXd all_ones = Eigen::VectorXd::Ones(t);
    for (int h = 0; h < state.heads; ++h) {
        const Eigen::MatrixXd logits = state.q[static_cast<std::size_t>(h)] *
                                       state.k[static_cast<std::size_t>(h)].transpose() * scale;
        for (int i = 0; i < t; ++i) {
            const Eigen::VectorXd row = logits.row(i).transpose();
            plain.row(i).segment(h * state.key_dim, state.key_dim) =
                (masked_softmax(row, all_ones).transpose() *
                 state.v[static_cast<std::size_t>(h)]);
            masked.row(i).segment(h * state.key_dim, state.key_dim) =
                (masked_softmax(row, mask.values).transpose() *
                 state.v[static_cast<std::size_t>(h)]);
        }
    }

    double s = 0.0;
    for (int i = 0; i < t; ++i) {
        s += cosine_similarity_lenient(plain.row(i).transpose(), masked.row(i).transpose());
    }
    s /= t;

    LayerSaliency sal;
    sal.layer = state.layer;
    sal.s = s;
    sal.w = cfg.subtract ? saliency_weight(s, cfg.sigma_sq) : 0.0;

    Eigen::MatrixXd out = masked;
    if (sal.w != 0.0) {
        const Eigen::RowVectorXd global = sal.w * plain.row(0);
        out.rowwise() -= global;
    }
    return {std::move(out), sal};
}

Eigen::VectorXd encode_segment(const RgbImage& image, const SegmentMask& mask,
                               const JointImageEncoder& encoder,
                               const GlobalSubtractionConfig& cfg,
                               std::vector<LayerSaliency>* saliency_log) {
    if (mask.all_zero()) throw Error("encode_segment: empty segment mask");
    if (cfg.layer_start < 1 || cfg.layer_end < cfg.layer_start ||
        cfg.layer_end > encoder.layer_count()) {
        throw ConfigError("encode_segment: layer range [" + std::to_string(cfg.layer_start) +
                          "," + std::to_string(cfg.layer_end) + "] invalid for " +
                          std::to_string(encoder.layer_count()) + " layers");
    }
    const AttentionMask token_mask =
        downsample_mask(mask, encoder.grid_rows(), encoder.grid_cols());
    token_mask.validate();
    AttentionHook hook = [&](const AttentionLayerState& state) {
        auto [out, sal] = layer_transform(state, token_mask, cfg);
        if (saliency_log != nullptr) saliency_log->push_back(sal);
        return out;
    };
    return encoder.encode(image, hook, cfg.layer_start, cfg.layer_end);
}

}  // namespace zeroguide
