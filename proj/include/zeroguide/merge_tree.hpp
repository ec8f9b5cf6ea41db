#pragma once

#include <string>
#include <vector>

#include "zeroguide/types.hpp"

namespace zeroguide {

// One node of the agglomerative merge history. Leaves are patches (node id ==
// patch index); internal nodes union their two children. mean/ssd summarize
// the member features and stay recomputable from them.
struct ClusterNode {
    int id = -1;
    int left = -1;   // -1 for leaves
    int right = -1;  // -1 for leaves
    Eigen::VectorXd mean;
    double ssd = 0.0;  // sum of squared deviations from mean
    int size = 1;      // member patch count

    bool is_leaf() const { return left < 0 && right < 0; }
};

// Full merge history over a patch grid plus the frontier snapshot taken when
// clustering reached its target count. Node ids are dense: leaves occupy
// 0..P-1, internal nodes follow in merge order, so a parent id always exceeds
// its children's ids and the last node is the root.
class MergeTree {
public:
    MergeTree() = default;
    MergeTree(int grid_rows, int grid_cols, std::vector<ClusterNode> nodes,
              std::vector<int> frontier);

    int grid_rows() const { return grid_rows_; }
    int grid_cols() const { return grid_cols_; }
    int leaf_count() const { return grid_rows_ * grid_cols_; }
    int node_count() const { return static_cast<int>(nodes_.size()); }

    const ClusterNode& node(int id) const;
    const std::vector<ClusterNode>& nodes() const { return nodes_; }

    // Active cluster ids, ascending. They partition the patch grid.
    const std::vector<int>& frontier() const { return frontier_; }
    void set_frontier(std::vector<int> frontier);

    int root() const { return node_count() - 1; }

    // Parent id, or -1 for the root.
    int parent(int id) const;

    // The other child of this node's parent, or -1 for the root.
    int sibling(int id) const;

    // Member patch indices under the given node, ascending.
    std::vector<int> leaves_under(int id) const;

    // Patch index -> frontier position for every patch.
    std::vector<int> frontier_assignment() const;

    std::string to_json() const;
    static MergeTree from_json(const std::string& text);

private:
    void build_parent_index();
    void validate() const;

    int grid_rows_ = 0;
    int grid_cols_ = 0;
    std::vector<ClusterNode> nodes_;
    std::vector<int> frontier_;
    std::vector<int> parent_;
};

}  // namespace zeroguide
