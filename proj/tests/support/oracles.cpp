#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace zgtest {

Eigen::VectorXd oracle_masked_softmax(const Eigen::VectorXd& logits, const Eigen::VectorXd& mask) {
    const Eigen::Index n = logits.size();
    double max_logit = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
        if (mask(j) > 0.0 && logits(j) > max_logit) max_logit = logits(j);
    }
    if (!std::isfinite(max_logit)) throw std::runtime_error("oracle: all entries masked");
    Eigen::VectorXd out(n);
    double denom = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double e = mask(j) > 0.0 ? std::exp(logits(j) - max_logit) * mask(j) : 0.0;
        out(j) = e;
        denom += e;
    }
    return out / denom;
}

std::pair<Eigen::MatrixXd, zeroguide::LayerSaliency> oracle_layer_transform(
    const zeroguide::AttentionLayerState& state, const zeroguide::AttentionMask& mask,
    const zeroguide::GlobalSubtractionConfig& cfg) {
    const int t = state.tokens;
    const int hd = state.heads * state.key_dim;
    const double scale = 1.0 / std::sqrt(static_cast<double>(state.key_dim));

    Eigen::MatrixXd plain(t, hd);
    Eigen::MatrixXd masked(t, hd);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(t);
    for (int h = 0; h < state.heads; ++h) {
        const Eigen::MatrixXd logits =
            state.q[static_cast<std::size_t>(h)] *
            state.k[static_cast<std::size_t>(h)].transpose() * scale;
        for (int i = 0; i < t; ++i) {
            const Eigen::VectorXd p = oracle_masked_softmax(logits.row(i), ones);
            const Eigen::VectorXd m = oracle_masked_softmax(logits.row(i), mask.values);
            plain.block(i, h * state.key_dim, 1, state.key_dim) =
                (p.transpose() * state.v[static_cast<std::size_t>(h)]);
            masked.block(i, h * state.key_dim, 1, state.key_dim) =
                (m.transpose() * state.v[static_cast<std::size_t>(h)]);
        }
    }

    double s_sum = 0.0;
    for (int i = 0; i < t; ++i) {
        const double na = plain.row(i).norm();
        const double nb = masked.row(i).norm();
        if (na == 0.0 && nb == 0.0) {
            s_sum += 1.0;
        } else if (na == 0.0 || nb == 0.0) {
            s_sum += 0.0;
        } else {
            s_sum += plain.row(i).dot(masked.row(i)) / (na * nb);
        }
    }
    zeroguide::LayerSaliency sal;
    sal.layer = state.layer;
    sal.s = s_sum / static_cast<double>(t);
    sal.w = cfg.subtract ? std::exp(-(sal.s + 1.0) * (sal.s + 1.0) / (2.0 * cfg.sigma_sq)) : 0.0;

    Eigen::MatrixXd out = masked;
    for (int i = 0; i < t; ++i) out.row(i) -= sal.w * plain.row(0);
    return {out, sal};
}

namespace {

struct OracleCluster {
    int id;
    std::vector<int> members;  // patch indices
};

// Variance of the merged member set, recomputed from raw features.
double merged_ssd(const zeroguide::PatchFeatures& f, const std::vector<int>& a,
                  const std::vector<int>& b) {
    const int c = f.channels();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(c);
    for (int p : a) {
        for (int d = 0; d < c; ++d) mean(d) += f.data(p, d);
    }
    for (int p : b) {
        for (int d = 0; d < c; ++d) mean(d) += f.data(p, d);
    }
    mean /= static_cast<double>(a.size() + b.size());
    double ssd = 0.0;
    auto add = [&](int p) {
        for (int d = 0; d < c; ++d) {
            const double diff = f.data(p, d) - mean(d);
            ssd += diff * diff;
        }
    };
    for (int p : a) add(p);
    for (int p : b) add(p);
    return ssd;
}

}  // namespace

OracleClustering oracle_agglomerate(const zeroguide::PatchFeatures& features, int n_target) {
    const int p = features.patch_count();
    std::vector<OracleCluster> active;
    for (int i = 0; i < p; ++i) active.push_back({i, {i}});

    OracleClustering out;
    if (static_cast<int>(active.size()) == n_target) {
        for (const OracleCluster& c : active) out.frontier.push_back(c.id);
    }
    int next_id = p;
    while (active.size() > 1) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < active.size(); ++i) {
            for (std::size_t j = i + 1; j < active.size(); ++j) {
                const double cost =
                    merged_ssd(features, active[i].members, active[j].members) /
                    static_cast<double>(active[i].members.size() + active[j].members.size());
                if (cost < best) {
                    best = cost;
                    bi = i;
                    bj = j;
                }
            }
        }
        OracleCluster merged;
        merged.id = next_id++;
        merged.members = active[bi].members;
        merged.members.insert(merged.members.end(), active[bj].members.begin(),
                              active[bj].members.end());
        std::sort(merged.members.begin(), merged.members.end());
        out.merges.push_back({active[bi].id, active[bj].id, merged.id});
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bi));
        active.push_back(std::move(merged));
        std::sort(active.begin(), active.end(),
                  [](const OracleCluster& a, const OracleCluster& b) { return a.id < b.id; });
        if (static_cast<int>(active.size()) == n_target) {
            for (const OracleCluster& c : active) out.frontier.push_back(c.id);
        }
    }
    return out;
}

std::vector<std::pair<std::string, double>> oracle_retrieve(const Eigen::VectorXd& query,
                                                            const zeroguide::VocabularyBank& bank,
                                                            int k) {
    std::vector<std::pair<std::string, double>> scored;
    const double qn = query.norm();
    for (std::size_t i = 0; i < bank.phrases.size(); ++i) {
        const Eigen::VectorXd row = bank.embeddings.row(static_cast<Eigen::Index>(i)).transpose();
        scored.emplace_back(bank.phrases[i], query.dot(row) / (qn * row.norm()));
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (k < static_cast<int>(scored.size())) scored.resize(static_cast<std::size_t>(k));
    return scored;
}

}  // namespace zgtest
