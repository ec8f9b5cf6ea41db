#pragma once

#include "zeroguide/encoders.hpp"
#include "zeroguide/labeling.hpp"
#include "zeroguide/types.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace zeroguide {

// Per-pixel class indices plus the class-name list. Pixels at ignore_index
// take part in no metric.
struct GroundTruth {
    IndexImage map;
    std::vector<std::string> classes;
    int ignore_index = 255;

    // Class indices with at least one non-ignore pixel, ascending.
    std::vector<int> present_classes() const;
    // Union mask of one class's pixels.
    SegmentMask class_mask(int class_index) const;
};

// Test-set class names embedded on both text sides, unit-normalized, for
// label reassignment. Argmax ties resolve to the earliest class.
class ClassBank {
public:
    ClassBank(std::vector<std::string> classes, const TextEncoder& text,
              const SentenceEncoder& sentence);

    const std::vector<std::string>& classes() const { return classes_; }
    std::pair<int, double> nearest_sentence(const Eigen::VectorXd& v) const;
    std::pair<int, double> nearest_joint(const Eigen::VectorXd& v) const;
    Eigen::VectorXd sentence_embedding(int class_index) const;

private:
    std::vector<std::string> classes_;
    Eigen::MatrixXd joint_;     // unit rows
    Eigen::MatrixXd sentence_;  // unit rows
};

// Text-to-text reassignment: nearest class to the predicted label in the
// sentence space. Returns (class name, cosine score).
std::pair<std::string, double> reassign_tt(const TextLabel& label, const ClassBank& bank);

// Segment-to-text reassignment: nearest class to the segment's joint
// embedding; the predicted label plays no part.
std::pair<std::string, double> reassign_st(const Eigen::VectorXd& segment_embedding,
                                           const ClassBank& bank);

// Threshold check for reassignment scores; the boundary verifies.
bool verify(double score, double threshold);

// One prediction after reassignment; unverified segments still carry their
// mask but count as background in every metric.
struct ReassignedSegment {
    SegmentMask mask;
    int class_index = -1;
    std::string method;  // "tt" | "st"
    double score = 0.0;
    bool verified = false;
};

// Pixel intersections/unions per class for one image. Entries cover every
// class; classes absent from both sides keep 0/0.
struct IouTable {
    std::vector<long long> intersection;
    std::vector<long long> uni;
    std::vector<char> gt_present;
    int gt_class_count = 0;
    double image_miou = 0.0;  // mean over gt-present classes; NaN when none
};

IouTable segmentation_iou(const std::vector<ReassignedSegment>& segments,
                          const GroundTruth& gt);

// Grounding-segment recall counts for one image: one grounding segment per
// gt class present, matched by the union of same-class verified predictions,
// true positive above tau_iou (strictly).
struct RecallCount {
    int tp = 0;
    int total = 0;
};

RecallCount segment_recall(const std::vector<ReassignedSegment>& segments,
                           const GroundTruth& gt, double tau_iou);

// Label prediction for one ground-truth segment: the labeler runs the
// pipeline (encode the gt mask, decode a label); score is the sentence-space
// cosine between the predicted label and the class name.
struct TgqEntry {
    std::string class_name;
    std::string predicted;
    double score = 0.0;
};

using GtSegmentLabeler = std::function<TextLabel(const SegmentMask& gt_mask)>;

std::vector<TgqEntry> tgq_image_entries(const GroundTruth& gt, const GtSegmentLabeler& labeler,
                                        const SentenceEncoder& sentence);

// True positives under tau_sbert; the boundary does not count.
int tgq_true_positives(const std::vector<TgqEntry>& entries, double tau_sbert);

// Dataset-level aggregation: per-class intersections/unions summed across
// images before dividing; recall and TGQ as pooled TP rates.
struct DatasetAccumulator {
    std::vector<long long> intersection;
    std::vector<long long> uni;
    long long recall_tp = 0;
    long long recall_total = 0;
    long long tgq_tp = 0;
    long long tgq_total = 0;
    int images = 0;

    explicit DatasetAccumulator(int class_count = 0)
        : intersection(static_cast<std::size_t>(class_count), 0),
          uni(static_cast<std::size_t>(class_count), 0) {}

    void add_iou(const IouTable& t);
    void add_recall(const RecallCount& r);
    void add_tgq(int tp, int total);

    // Mean IoU over classes with nonzero union; NaN when no class has any.
    double miou() const;
    double recall_rate() const;  // NaN when no grounding segments
    double tgq_rate() const;     // NaN when no gt segments
};

// Appendix-style verification-threshold grids.
std::vector<double> sweep_grid_clip();   // 0.00 .. 0.35, step 0.05
std::vector<double> sweep_grid_sbert();  // 0.0 .. 1.0, step 0.1

}  // namespace zeroguide
