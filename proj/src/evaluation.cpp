#include "zeroguide/evaluation.hpp"

#include <cmath>
#include <limits>

namespace zeroguide {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::MatrixXd unit_rows(const std::vector<std::string>& names,
                          const std::function<Eigen::VectorXd(const std::string&)>& embed) {
    Eigen::MatrixXd m;
    for (std::size_t i = 0; i < names.size(); ++i) {
        Eigen::VectorXd v = embed(names[i]);
        const double norm = v.norm();
        if (!(norm > 0.0) || !v.allFinite()) {
            throw Error("class bank: degenerate embedding for '" + names[i] + "'");
        }
        if (i == 0) m.resize(static_cast<Eigen::Index>(names.size()), v.size());
        if (v.size() != m.cols()) throw ShapeError("class bank: inconsistent dimensions");
        m.row(static_cast<Eigen::Index>(i)) = (v / norm).transpose();
    }
    return m;
}

std::pair<int, double> nearest_row(const Eigen::MatrixXd& rows, const Eigen::VectorXd& v) {
    const double norm = v.norm();
    if (!(norm > 0.0) || !v.allFinite()) {
        throw Error("reassignment: degenerate query embedding");
    }
    const Eigen::VectorXd scores = rows * (v / norm);
    int best = 0;
    for (Eigen::Index i = 1; i < scores.size(); ++i) {
        if (scores(i) > scores(best)) best = static_cast<int>(i);
    }
    return {best, scores(best)};
}

}  // namespace

std::vector<int> GroundTruth::present_classes() const {
    std::vector<char> seen(classes.size(), 0);
    for (std::uint8_t v : map.data) {
        if (v != ignore_index && v < classes.size()) seen[v] = 1;
    }
    std::vector<int> out;
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (seen[i]) out.push_back(static_cast<int>(i));
    }
    return out;
}

SegmentMask GroundTruth::class_mask(int class_index) const {
    SegmentMask m = SegmentMask::zeros(map.height, map.width);
    for (std::size_t i = 0; i < map.data.size(); ++i) {
        if (map.data[i] == class_index) m.values[i] = 1.0f;
    }
    return m;
}

ClassBank::ClassBank(std::vector<std::string> classes, const TextEncoder& text,
                     const SentenceEncoder& sentence)
    : classes_(std::move(classes)) {
    if (classes_.empty()) throw Error("class bank: empty class list");
    joint_ = unit_rows(classes_, [&](const std::string& s) { return text.embed(s); });
    sentence_ = unit_rows(classes_, [&](const std::string& s) { return sentence.embed(s); });
}

std::pair<int, double> ClassBank::nearest_sentence(const Eigen::VectorXd& v) const {
    return nearest_row(sentence_, v);
}

std::pair<int, double> ClassBank::nearest_joint(const Eigen::VectorXd& v) const {
    return nearest_row(joint_, v);
}

Eigen::VectorXd ClassBank::sentence_embedding(int class_index) const {
    if (class_index < 0 || class_index >= static_cast<int>(classes_.size())) {
        throw Error("class bank: class index out of range");
    }
    return sentence_.row(class_index).transpose();
}

std::pair<std::string, double> reassign_tt(const TextLabel& label, const ClassBank& bank) {
    if (label.sentence.size() == 0) {
        throw Error("reassign_tt: label has no sentence embedding");
    }
    const auto [idx, score] = bank.nearest_sentence(label.sentence);
    return {bank.classes()[static_cast<std::size_t>(idx)], score};
}

std::pair<std::string, double> reassign_st(const Eigen::VectorXd& segment_embedding,
                                           const ClassBank& bank) {
    const auto [idx, score] = bank.nearest_joint(segment_embedding);
    return {bank.classes()[static_cast<std::size_t>(idx)], score};
}

bool verify(double score, double threshold) { return score >= threshold; }

IouTable segmentation_iou(const std::vector<ReassignedSegment>& segments,
                          const GroundTruth& gt) {
    const int classes = static_cast<int>(gt.classes.size());
    const std::size_t pixels = gt.map.data.size();
    // Per-pixel predicted class; -1 = background (no verified segment).
    std::vector<int> pred(pixels, -1);
    for (const ReassignedSegment& s : segments) {
        if (s.mask.height != gt.map.height || s.mask.width != gt.map.width) {
            throw ShapeError("segmentation_iou: mask resolution differs from ground truth");
        }
        if (!s.verified) continue;
        if (s.class_index < 0 || s.class_index >= classes) {
            throw Error("segmentation_iou: reassigned class index out of range");
        }
        for (std::size_t i = 0; i < pixels; ++i) {
            if (s.mask.values[i] >= 0.5f) pred[i] = s.class_index;
        }
    }

    IouTable t;
    t.intersection.assign(static_cast<std::size_t>(classes), 0);
    t.uni.assign(static_cast<std::size_t>(classes), 0);
    t.gt_present.assign(static_cast<std::size_t>(classes), 0);
    for (std::size_t i = 0; i < pixels; ++i) {
        if (gt.map.data[i] == gt.ignore_index) continue;
        const int g = gt.map.data[i];
        if (g >= classes) throw Error("segmentation_iou: ground-truth index out of range");
        const int p = pred[i];
        t.gt_present[static_cast<std::size_t>(g)] = 1;
        if (p == g) {
            ++t.intersection[static_cast<std::size_t>(g)];
            ++t.uni[static_cast<std::size_t>(g)];
        } else {
            ++t.uni[static_cast<std::size_t>(g)];
            if (p >= 0) ++t.uni[static_cast<std::size_t>(p)];
        }
    }

    double sum = 0.0;
    for (int c = 0; c < classes; ++c) {
        if (!t.gt_present[static_cast<std::size_t>(c)]) continue;
        ++t.gt_class_count;
        sum += static_cast<double>(t.intersection[static_cast<std::size_t>(c)]) /
               static_cast<double>(t.uni[static_cast<std::size_t>(c)]);
    }
    t.image_miou = t.gt_class_count > 0 ? sum / t.gt_class_count : kNaN;
    return t;
}

RecallCount segment_recall(const std::vector<ReassignedSegment>& segments,
                           const GroundTruth& gt, double tau_iou) {
    const std::size_t pixels = gt.map.data.size();
    RecallCount rc;
    for (int c : gt.present_classes()) {
        ++rc.total;
        // Union of verified predictions reassigned to this class.
        std::vector<char> pred(pixels, 0);
        for (const ReassignedSegment& s : segments) {
            if (!s.verified || s.class_index != c) continue;
            if (s.mask.height != gt.map.height || s.mask.width != gt.map.width) {
                throw ShapeError("segment_recall: mask resolution differs from ground truth");
            }
            for (std::size_t i = 0; i < pixels; ++i) {
                if (s.mask.values[i] >= 0.5f) pred[i] = 1;
            }
        }
        long long inter = 0, uni = 0;
        for (std::size_t i = 0; i < pixels; ++i) {
            if (gt.map.data[i] == gt.ignore_index) continue;
            const bool g = gt.map.data[i] == c;
            const bool p = pred[i] != 0;
            if (g && p) ++inter;
            if (g || p) ++uni;
        }
        if (uni > 0 && static_cast<double>(inter) / static_cast<double>(uni) > tau_iou) {
            ++rc.tp;
        }
    }
    return rc;
}

std::vector<TgqEntry> tgq_image_entries(const GroundTruth& gt, const GtSegmentLabeler& labeler,
                                        const SentenceEncoder& sentence) {
    if (!labeler) throw Error("tgq: missing labeler");
    std::vector<TgqEntry> out;
    for (int c : gt.present_classes()) {
        const SegmentMask mask = gt.class_mask(c);
        const TextLabel label = labeler(mask);
        TgqEntry e;
        e.class_name = gt.classes[static_cast<std::size_t>(c)];
        e.predicted = label.surface;
        Eigen::VectorXd pred = label.sentence.size() > 0 ? label.sentence
                                                         : sentence.embed(label.surface);
        e.score = cosine_similarity(pred, sentence.embed(e.class_name));
        out.push_back(std::move(e));
    }
    return out;
}

int tgq_true_positives(const std::vector<TgqEntry>& entries, double tau_sbert) {
    int tp = 0;
    for (const TgqEntry& e : entries) {
        if (e.score > tau_sbert) ++tp;
    }
    return tp;
}

void DatasetAccumulator::add_iou(const IouTable& t) {
    if (t.intersection.size() != intersection.size()) {
        throw ShapeError("dataset accumulator: class count mismatch");
    }
    for (std::size_t c = 0; c < intersection.size(); ++c) {
        intersection[c] += t.intersection[c];
        uni[c] += t.uni[c];
    }
    ++images;
}

void DatasetAccumulator::add_recall(const RecallCount& r) {
    recall_tp += r.tp;
    recall_total += r.total;
}

void DatasetAccumulator::add_tgq(int tp, int total) {
    tgq_tp += tp;
    tgq_total += total;
}

double DatasetAccumulator::miou() const {
    double sum = 0.0;
    int counted = 0;
    for (std::size_t c = 0; c < uni.size(); ++c) {
        if (uni[c] > 0) {
            sum += static_cast<double>(intersection[c]) / static_cast<double>(uni[c]);
            ++counted;
        }
    }
    return counted > 0 ? sum / counted : kNaN;
}

double DatasetAccumulator::recall_rate() const {
    return recall_total > 0 ? static_cast<double>(recall_tp) / static_cast<double>(recall_total)
                            : kNaN;
}

double DatasetAccumulator::tgq_rate() const {
    return tgq_total > 0 ? static_cast<double>(tgq_tp) / static_cast<double>(tgq_total) : kNaN;
}

std::vector<double> sweep_grid_clip() {
    std::vector<double> grid;
    for (int i = 0; i <= 7; ++i) grid.push_back(0.05 * i);
    return grid;
}

std::vector<double> sweep_grid_sbert() {
    std::vector<double> grid;
    for (int i = 0; i <= 10; ++i) grid.push_back(0.1 * i);
    return grid;
}

}  // namespace zeroguide
