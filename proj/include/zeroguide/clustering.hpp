#pragma once

#include "zeroguide/encoders.hpp"
#include "zeroguide/merge_tree.hpp"

namespace zeroguide {

// Bottom-up agglomerative clustering over patch features. Starting from one
// cluster per patch, repeatedly merges the pair whose union has the smallest
// feature variance (pooled SSD / member count), snapshots the frontier when
// n_target clusters remain, and keeps merging to a single root so the full
// history is available for semantic merging. Ties pick the lexicographically
// lowest (min id, max id) pair.
MergeTree agglomerate(const PatchFeatures& features, int n_target);

// Replaces sibling frontier leaves whose mean-feature cosine similarity
// exceeds t_feature (strictly) by their parent, repeating until no pair
// qualifies. Idempotent at fixpoint.
MergeTree prune_siblings(const MergeTree& tree, double t_feature);

}  // namespace zeroguide
