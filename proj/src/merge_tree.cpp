#include "zeroguide/merge_tree.hpp"

#include <json.hpp>

#include <algorithm>

namespace zeroguide {

using nlohmann::ordered_json;

MergeTree::MergeTree(int grid_rows, int grid_cols, std::vector<ClusterNode> nodes,
                     std::vector<int> frontier)
    : grid_rows_(grid_rows),
      grid_cols_(grid_cols),
      nodes_(std::move(nodes)),
      frontier_(std::move(frontier)) {
    build_parent_index();
    validate();
}

const ClusterNode& MergeTree::node(int id) const {
    if (id < 0 || id >= node_count()) {
        throw Error("merge tree: node id " + std::to_string(id) + " out of range");
    }
    return nodes_[static_cast<std::size_t>(id)];
}

void MergeTree::set_frontier(std::vector<int> frontier) {
    frontier_ = std::move(frontier);
    validate();
}

int MergeTree::parent(int id) const {
    node(id);
    return parent_[static_cast<std::size_t>(id)];
}

int MergeTree::sibling(int id) const {
    const int p = parent(id);
    if (p < 0) return -1;
    const ClusterNode& pn = nodes_[static_cast<std::size_t>(p)];
    return pn.left == id ? pn.right : pn.left;
}

std::vector<int> MergeTree::leaves_under(int id) const {
    std::vector<int> out;
    std::vector<int> stack{id};
    while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        const ClusterNode& n = node(cur);
        if (n.is_leaf()) {
            out.push_back(cur);
        } else {
            stack.push_back(n.left);
            stack.push_back(n.right);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> MergeTree::frontier_assignment() const {
    std::vector<int> assign(static_cast<std::size_t>(leaf_count()), -1);
    for (std::size_t pos = 0; pos < frontier_.size(); ++pos) {
        for (int leaf : leaves_under(frontier_[pos])) {
            assign[static_cast<std::size_t>(leaf)] = static_cast<int>(pos);
        }
    }
    return assign;
}

void MergeTree::build_parent_index() {
    parent_.assign(nodes_.size(), -1);
    for (const ClusterNode& n : nodes_) {
        if (n.is_leaf()) continue;
        parent_[static_cast<std::size_t>(n.left)] = n.id;
        parent_[static_cast<std::size_t>(n.right)] = n.id;
    }
}

void MergeTree::validate() const {
    const int leaves = leaf_count();
    if (grid_rows_ < 1 || grid_cols_ < 1) throw Error("merge tree: empty patch grid");
    const int expected_nodes = 2 * leaves - 1;
    if (node_count() != expected_nodes) {
        throw Error("merge tree: " + std::to_string(node_count()) + " nodes for " +
                    std::to_string(leaves) + " leaves; expected " +
                    std::to_string(expected_nodes));
    }
    for (int i = 0; i < node_count(); ++i) {
        const ClusterNode& n = nodes_[static_cast<std::size_t>(i)];
        if (n.id != i) throw Error("merge tree: node ids must be dense and ordered");
        const bool should_be_leaf = i < leaves;
        if (should_be_leaf != n.is_leaf()) {
            throw Error("merge tree: node " + std::to_string(i) +
                        (should_be_leaf ? " must be a leaf" : " must be internal"));
        }
        if (!n.is_leaf()) {
            if ((n.left < 0) != (n.right < 0)) {
                throw Error("merge tree: node " + std::to_string(i) + " has one child");
            }
            if (n.left >= i || n.right >= i || n.left == n.right) {
                throw Error("merge tree: node " + std::to_string(i) + " has invalid children");
            }
            const ClusterNode& l = nodes_[static_cast<std::size_t>(n.left)];
            const ClusterNode& r = nodes_[static_cast<std::size_t>(n.right)];
            if (n.size != l.size + r.size) {
                throw Error("merge tree: node " + std::to_string(i) + " size mismatch");
            }
        } else if (n.size != 1) {
            throw Error("merge tree: leaf " + std::to_string(i) + " must have size 1");
        }
    }
    int roots = 0;
    for (std::size_t i = 0; i < parent_.size(); ++i) {
        if (parent_[i] < 0) ++roots;
    }
    if (roots != 1) throw Error("merge tree: expected exactly one root");
    // Frontier must partition all patches.
    std::vector<char> seen(static_cast<std::size_t>(leaves), 0);
    for (int id : frontier_) {
        for (int leaf : leaves_under(id)) {
            if (seen[static_cast<std::size_t>(leaf)]) {
                throw Error("merge tree: frontier nodes overlap at patch " +
                            std::to_string(leaf));
            }
            seen[static_cast<std::size_t>(leaf)] = 1;
        }
    }
    for (int i = 0; i < leaves; ++i) {
        if (!seen[static_cast<std::size_t>(i)]) {
            throw Error("merge tree: frontier misses patch " + std::to_string(i));
        }
    }
    if (!std::is_sorted(frontier_.begin(), frontier_.end())) {
        throw Error("merge tree: frontier must be in ascending id order");
    }
}

std::string MergeTree::to_json() const {
    ordered_json doc;
    doc["schema_version"] = 1;
    doc["grid_rows"] = grid_rows_;
    doc["grid_cols"] = grid_cols_;
    doc["frontier"] = frontier_;
    ordered_json nodes = ordered_json::array();
    for (const ClusterNode& n : nodes_) {
        ordered_json jn;
        jn["id"] = n.id;
        jn["children"] =
            n.is_leaf() ? ordered_json::array() : ordered_json::array({n.left, n.right});
        ordered_json mean = ordered_json::array();
        for (Eigen::Index i = 0; i < n.mean.size(); ++i) mean.push_back(n.mean(i));
        jn["mean"] = std::move(mean);
        jn["ssd"] = n.ssd;
        if (n.is_leaf()) jn["members"] = std::vector<int>{n.id};
        nodes.push_back(std::move(jn));
    }
    doc["nodes"] = std::move(nodes);
    ordered_json merges = ordered_json::array();
    for (const ClusterNode& n : nodes_) {
        if (!n.is_leaf()) merges.push_back(ordered_json::array({n.left, n.right, n.id}));
    }
    doc["merges"] = std::move(merges);
    return doc.dump(2) + "\n";
}

MergeTree MergeTree::from_json(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw Error(std::string("merge tree: invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("schema_version", 0) != 1) {
        throw Error("merge tree: unsupported schema");
    }
    const int rows = doc.at("grid_rows").get<int>();
    const int cols = doc.at("grid_cols").get<int>();
    std::vector<ClusterNode> nodes;
    for (const auto& jn : doc.at("nodes")) {
        ClusterNode n;
        n.id = jn.at("id").get<int>();
        const auto& ch = jn.at("children");
        if (!ch.empty()) {
            if (ch.size() != 2) throw Error("merge tree: node must have 0 or 2 children");
            n.left = ch[0].get<int>();
            n.right = ch[1].get<int>();
        }
        const auto& mean = jn.at("mean");
        n.mean.resize(static_cast<Eigen::Index>(mean.size()));
        for (std::size_t i = 0; i < mean.size(); ++i) {
            n.mean(static_cast<Eigen::Index>(i)) = mean[i].get<double>();
        }
        n.ssd = jn.at("ssd").get<double>();
        nodes.push_back(std::move(n));
    }
    // Sizes are derivable; ids are dense so children precede parents.
    for (ClusterNode& n : nodes) {
        if (!n.is_leaf()) {
            if (n.left < 0 || n.right < 0 || n.left >= n.id || n.right >= n.id ||
                static_cast<std::size_t>(n.id) >= nodes.size()) {
                throw Error("merge tree: malformed node ids");
            }
            n.size = nodes[static_cast<std::size_t>(n.left)].size +
                     nodes[static_cast<std::size_t>(n.right)].size;
        }
    }
    // The merge-history array is redundant with children; verify it agrees.
    const auto& merges = doc.at("merges");
    std::size_t mi = 0;
    for (const ClusterNode& n : nodes) {
        if (n.is_leaf()) continue;
        if (mi >= merges.size() || merges[mi][0].get<int>() != n.left ||
            merges[mi][1].get<int>() != n.right || merges[mi][2].get<int>() != n.id) {
            throw Error("merge tree: merge history disagrees with node store");
        }
        ++mi;
    }
    if (mi != merges.size()) throw Error("merge tree: merge history disagrees with node store");
    return MergeTree(rows, cols, std::move(nodes),
                     doc.at("frontier").get<std::vector<int>>());
}

}  // namespace zeroguide
