#include "zeroguide/clustering.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace zeroguide {

namespace {

// Variance of the union of two summarized clusters (Welford-style pooling).
double merged_variance(const ClusterNode& a, const ClusterNode& b) {
    const double na = a.size;
    const double nb = b.size;
    const double cross = (na * nb / (na + nb)) * (a.mean - b.mean).squaredNorm();
    return (a.ssd + b.ssd + cross) / (na + nb);
}

}  // namespace

MergeTree agglomerate(const PatchFeatures& features, int n_target) {
    const int p = features.patch_count();
    if (n_target < 1) throw Error("agglomerate: n_target must be >= 1");
    if (p < n_target) {
        throw Error("agglomerate: " + std::to_string(p) + " patches but n_target=" +
                    std::to_string(n_target));
    }
    if (features.data.rows() != p) throw ShapeError("agglomerate: feature row count mismatch");
    if (!features.data.allFinite()) throw Error("agglomerate: non-finite features");

    std::vector<ClusterNode> nodes;
    nodes.reserve(static_cast<std::size_t>(2 * p - 1));
    for (int i = 0; i < p; ++i) {
        ClusterNode n;
        n.id = i;
        n.mean = features.data.row(i).transpose();
        nodes.push_back(std::move(n));
    }

    std::vector<int> active(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) active[static_cast<std::size_t>(i)] = i;

    std::vector<int> frontier;
    if (p == n_target) frontier = active;

    // Pair costs cached across steps; only the merged cluster's row changes.
    const int total = 2 * p - 1;
    std::vector<double> cost(static_cast<std::size_t>(total) * total,
                             std::numeric_limits<double>::quiet_NaN());
    auto cost_at = [&](int a, int b) -> double& {
        if (a > b) std::swap(a, b);
        return cost[static_cast<std::size_t>(a) * total + b];
    };
    for (std::size_t i = 0; i < active.size(); ++i) {
        for (std::size_t j = i + 1; j < active.size(); ++j) {
            cost_at(active[i], active[j]) =
                merged_variance(nodes[static_cast<std::size_t>(active[i])],
                                nodes[static_cast<std::size_t>(active[j])]);
        }
    }

    while (active.size() > 1) {
        int best_a = -1, best_b = -1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < active.size(); ++i) {
            for (std::size_t j = i + 1; j < active.size(); ++j) {
                const double c = cost_at(active[i], active[j]);
                // active is ascending, so the first strict minimum found is
                // the lexicographically lowest (min id, max id) pair.
                if (c < best) {
                    best = c;
                    best_a = active[i];
                    best_b = active[j];
                }
            }
        }
        const ClusterNode& a = nodes[static_cast<std::size_t>(best_a)];
        const ClusterNode& b = nodes[static_cast<std::size_t>(best_b)];
        ClusterNode parent;
        parent.id = static_cast<int>(nodes.size());
        parent.left = best_a;
        parent.right = best_b;
        parent.size = a.size + b.size;
        parent.mean = (a.size * a.mean + b.size * b.mean) / parent.size;
        parent.ssd = a.ssd + b.ssd +
                     (static_cast<double>(a.size) * b.size / parent.size) *
                         (a.mean - b.mean).squaredNorm();
        nodes.push_back(std::move(parent));

        active.erase(std::remove_if(active.begin(), active.end(),
                                    [&](int id) { return id == best_a || id == best_b; }),
                     active.end());
        const int pid = static_cast<int>(nodes.size()) - 1;
        for (int other : active) {
            cost_at(other, pid) = merged_variance(nodes[static_cast<std::size_t>(other)],
                                                  nodes[static_cast<std::size_t>(pid)]);
        }
        active.push_back(pid);  // ids grow, so the order stays ascending

        if (static_cast<int>(active.size()) == n_target) frontier = active;
    }

    return MergeTree(features.rows, features.cols, std::move(nodes), std::move(frontier));
}

MergeTree prune_siblings(const MergeTree& tree, double t_feature) {
    if (t_feature < -1.0 || t_feature > 1.0) {
        throw Error("prune_siblings: threshold must lie in [-1, 1]");
    }
    std::set<int> frontier(tree.frontier().begin(), tree.frontier().end());
    bool changed = true;
    while (changed) {
        changed = false;
        // Snapshot: replacements apply in ascending id order, then rescan.
        const std::vector<int> current(frontier.begin(), frontier.end());
        for (int id : current) {
            if (!frontier.count(id)) continue;  // consumed earlier this pass
            const int sib = tree.sibling(id);
            if (sib < 0 || !frontier.count(sib)) continue;
            const ClusterNode& a = tree.node(id);
            const ClusterNode& b = tree.node(sib);
            if (cosine_similarity_lenient(a.mean, b.mean) > t_feature) {
                frontier.erase(id);
                frontier.erase(sib);
                frontier.insert(tree.parent(id));
                changed = true;
            }
        }
    }
    MergeTree out = tree;
    out.set_frontier(std::vector<int>(frontier.begin(), frontier.end()));
    return out;
}

}  // namespace zeroguide
