#include "zeroguide/merging.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace zeroguide {

MergeDecision score_pair(const LabeledSegment& a, const LabeledSegment& b, double tau_merge) {
    if (a.embedding.size() == 0 || b.embedding.size() == 0) {
        throw Error("score_pair: segment missing its joint embedding");
    }
    if (a.label.joint.size() == 0 || b.label.joint.size() == 0) {
        throw Error("score_pair: segment missing its label embedding");
    }
    MergeDecision d;
    d.node_a = a.node_id;
    d.node_b = b.node_id;
    d.visual = cosine_similarity(a.embedding, b.embedding);
    d.text = cosine_similarity(a.label.joint, b.label.joint);
    d.combined = 0.5 * (d.visual + d.text);
    d.merged = d.combined >= tau_merge;
    return d;
}

std::vector<LabeledSegment> merge_up_tree(const MergeTree& tree,
                                          std::vector<LabeledSegment> segments,
                                          double tau_merge, const SegmentLabeler& relabel,
                                          std::vector<MergeDecision>* decisions) {
    if (!relabel) throw Error("merge_up_tree: missing relabel callback");
    const std::set<int> frontier(tree.frontier().begin(), tree.frontier().end());
    std::map<int, LabeledSegment> live;
    for (LabeledSegment& s : segments) {
        if (!frontier.count(s.node_id)) {
            throw Error("merge_up_tree: segment node " + std::to_string(s.node_id) +
                        " is not a frontier leaf");
        }
        if (live.count(s.node_id)) {
            throw Error("merge_up_tree: duplicate segment node " + std::to_string(s.node_id));
        }
        live.emplace(s.node_id, std::move(s));
    }

    // Ascending node ids are a bottom-up order (parents outnumber children),
    // so one in-order scan per round processes children before parents; a new
    // parent joins the scan later in the same round. Pairs already scored and
    // rejected are not re-scored unless one side changed.
    std::set<std::pair<int, int>> rejected;
    bool changed = true;
    while (changed) {
        changed = false;
        auto it = live.begin();
        while (it != live.end()) {
            const int id = it->first;
            const int sib = tree.sibling(id);
            auto sit = sib >= 0 ? live.find(sib) : live.end();
            if (sit == live.end()) {
                ++it;
                continue;
            }
            const std::pair<int, int> key{std::min(id, sib), std::max(id, sib)};
            if (rejected.count(key)) {
                ++it;
                continue;
            }
            const LabeledSegment& a = it->second.node_id < sit->second.node_id ? it->second
                                                                               : sit->second;
            const LabeledSegment& b = it->second.node_id < sit->second.node_id ? sit->second
                                                                               : it->second;
            MergeDecision d = score_pair(a, b, tau_merge);
            if (decisions != nullptr) decisions->push_back(d);
            if (!d.merged) {
                rejected.insert(key);
                ++it;
                continue;
            }
            LabeledSegment merged;
            merged.node_id = tree.parent(id);
            merged.mask = SegmentMask::zeros(a.mask.height, a.mask.width);
            for (std::size_t i = 0; i < merged.mask.values.size(); ++i) {
                merged.mask.values[i] = std::max(a.mask.values[i], b.mask.values[i]);
            }
            auto [embedding, label] = relabel(merged.mask);
            merged.embedding = std::move(embedding);
            merged.label = std::move(label);
            live.erase(sit);
            it = live.erase(it);
            auto [pos, inserted] = live.emplace(merged.node_id, std::move(merged));
            (void)inserted;
            changed = true;
            // Resume at the new parent or wherever the scan now stands.
            it = pos;
        }
    }

    std::vector<LabeledSegment> out;
    out.reserve(live.size());
    for (auto& [id, seg] : live) out.push_back(std::move(seg));
    return out;
}

}  // namespace zeroguide
