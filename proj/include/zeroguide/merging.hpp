#pragma once

#include "zeroguide/labeling.hpp"
#include "zeroguide/merge_tree.hpp"

#include <functional>
#include <vector>

namespace zeroguide {

// Outcome of scoring one sibling pair.
struct MergeDecision {
    int node_a = -1;
    int node_b = -1;
    double visual = 0.0;
    double text = 0.0;
    double combined = 0.0;  // arithmetic mean of visual and text
    bool merged = false;    // combined >= tau_merge
};

// Visual cosine between segment embeddings, text cosine between label
// embeddings, combined as their mean, compared against tau_merge.
MergeDecision score_pair(const LabeledSegment& a, const LabeledSegment& b, double tau_merge);

// Re-encodes and re-decodes a union mask after a merge.
using SegmentLabeler =
    std::function<std::pair<Eigen::VectorXd, TextLabel>(const SegmentMask& mask)>;

// Recursive sibling merging up the tree: scans live nodes bottom-up
// (ascending id), merges any sibling pair scoring at least tau_merge into
// their parent with a freshly computed embedding and label, and repeats until
// no pair qualifies. Segments must sit on frontier leaves of the tree.
// Decisions, when requested, record every scored pair in evaluation order.
std::vector<LabeledSegment> merge_up_tree(const MergeTree& tree,
                                          std::vector<LabeledSegment> segments,
                                          double tau_merge, const SegmentLabeler& relabel,
                                          std::vector<MergeDecision>* decisions = nullptr);

}  // namespace zeroguide
