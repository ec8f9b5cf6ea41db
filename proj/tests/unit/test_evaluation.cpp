#include "zeroguide/evaluation.hpp"

#include "support/metric_fixtures.hpp"
#include "support/stub_encoders.hpp"

#include <doctest.h>

#include <cmath>

using namespace zeroguide;

namespace {

Eigen::VectorXd vec3(double a, double b, double c) {
    Eigen::VectorXd v(3);
    v << a, b, c;
    return v;
}

// Classes road/tree/sign with hand-placed vectors on both text sides. The
// joint vectors carry different norms so bank normalization is exercised.
ClassBank road_bank() {
    std::map<std::string, Eigen::VectorXd> joint{
        {"road", vec3(2.0, 0.0, 0.0)},
        {"tree", vec3(0.0, 5.0, 0.0)},
        {"sign", vec3(0.0, 0.0, 0.5)},
    };
    std::map<std::string, Eigen::VectorXd> sent{
        {"road", vec3(1.0, 0.0, 0.0)},
        {"tree", vec3(0.6, 0.8, 0.0)},
        {"sign", vec3(0.0, 0.0, 1.0)},
    };
    const zgtest::MapTextEncoder text(std::move(joint), 3);
    const zgtest::MapSentenceEncoder sentence(std::move(sent), 3);
    return ClassBank({"road", "tree", "sign"}, text, sentence);
}

}  // namespace

TEST_CASE("ground truth present classes and class masks") {
    const auto fixtures = zgtest::metric_fixtures();
    const GroundTruth& bleed = fixtures[7].gt;  // left 0 / right 1
    CHECK(bleed.present_classes() == std::vector<int>{0, 1});
    const SegmentMask m0 = bleed.class_mask(0);
    CHECK(m0.area() == 8);
    CHECK(m0.at(0, 0) == 1.0f);
    CHECK(m0.at(0, 3) == 0.0f);

    const GroundTruth& allig = fixtures[9].gt;
    CHECK(allig.present_classes().empty());
}

TEST_CASE("class bank reassignment picks the nearest class") {
    const ClassBank bank = road_bank();

    SUBCASE("sentence side") {
        const auto [idx, score] = bank.nearest_sentence(vec3(0.9, 0.1, 0.0));
        CHECK(bank.classes()[static_cast<std::size_t>(idx)] == "road");
        CHECK(score == doctest::Approx(cosine_similarity(vec3(0.9, 0.1, 0.0), vec3(1, 0, 0)))
                           .epsilon(1e-12));
    }
    SUBCASE("joint side ignores norms") {
        const auto [idx, score] = bank.nearest_joint(vec3(0.0, 0.0, 9.0));
        CHECK(bank.classes()[static_cast<std::size_t>(idx)] == "sign");
        CHECK(score == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("degenerate queries are rejected") {
        CHECK_THROWS_AS(bank.nearest_joint(Eigen::VectorXd::Zero(3)), Error);
    }
    SUBCASE("sentence embeddings come back unit-normalized") {
        CHECK(bank.sentence_embedding(1).norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK_THROWS_AS(bank.sentence_embedding(3), Error);
    }
}

TEST_CASE("reassignment ties keep class-list order") {
    std::map<std::string, Eigen::VectorXd> joint{
        {"first", vec3(1.0, 0.0, 0.0)},
        {"twin", vec3(2.0, 0.0, 0.0)},  // same direction, listed later
        {"off", vec3(0.0, 1.0, 0.0)},
    };
    std::map<std::string, Eigen::VectorXd> sent = joint;
    const zgtest::MapTextEncoder text(std::move(joint), 3);
    const zgtest::MapSentenceEncoder sentence(std::move(sent), 3);
    const ClassBank bank({"first", "twin", "off"}, text, sentence);
    CHECK(bank.nearest_joint(vec3(3.0, 0.0, 0.0)).first == 0);
    CHECK(bank.nearest_sentence(vec3(3.0, 0.0, 0.0)).first == 0);
}

TEST_CASE("reassign_tt scores the label's sentence embedding") {
    const ClassBank bank = road_bank();
    TextLabel label;
    label.surface = "a word the bank never sees";
    label.sentence = vec3(0.6, 0.8, 0.0);  // exactly the tree sentence vector
    const auto [name, score] = reassign_tt(label, bank);
    CHECK(name == "tree");
    CHECK(score == doctest::Approx(1.0).epsilon(1e-12));

    label.sentence = Eigen::VectorXd();
    CHECK_THROWS_AS(reassign_tt(label, bank), Error);
}

TEST_CASE("reassign_st uses only the segment embedding") {
    const ClassBank bank = road_bank();
    const auto [name, score] = reassign_st(vec3(0.0, 4.0, 0.1), bank);
    CHECK(name == "tree");
    CHECK(score > 0.99);
}

TEST_CASE("verification is inclusive at the threshold") {
    CHECK(verify(0.5, 0.5));
    CHECK_FALSE(verify(0.49, 0.5));
    CHECK(verify(0.1, 0.1));
    CHECK(verify(0.11, 0.1));
    CHECK_FALSE(verify(0.0999, 0.1));
}

TEST_CASE("hand-counted IoU and recall fixtures") {
    for (const zgtest::MetricFixture& fx : zgtest::metric_fixtures()) {
        CAPTURE(fx.name);
        const IouTable t = segmentation_iou(fx.segments, fx.gt);
        REQUIRE(t.intersection.size() == 3);
        for (int c = 0; c < 3; ++c) {
            CHECK(t.intersection[static_cast<std::size_t>(c)] ==
                  fx.expect_intersection[static_cast<std::size_t>(c)]);
            CHECK(t.uni[static_cast<std::size_t>(c)] ==
                  fx.expect_union[static_cast<std::size_t>(c)]);
            CHECK(static_cast<int>(t.gt_present[static_cast<std::size_t>(c)]) ==
                  fx.expect_gt_present[static_cast<std::size_t>(c)]);
        }
        if (std::isnan(fx.expect_miou)) {
            CHECK(std::isnan(t.image_miou));
        } else {
            CHECK(t.image_miou == doctest::Approx(fx.expect_miou).epsilon(1e-12));
        }
        const RecallCount rc = segment_recall(fx.segments, fx.gt, 0.5);
        CHECK(rc.tp == fx.expect_recall_tp);
        CHECK(rc.total == fx.expect_recall_total);
    }
}

TEST_CASE("metric input validation") {
    const auto fixtures = zgtest::metric_fixtures();
    SUBCASE("resolution mismatch") {
        ReassignedSegment bad = fixtures[0].segments[0];
        bad.mask = SegmentMask::zeros(2, 2);
        CHECK_THROWS_AS(segmentation_iou({bad}, fixtures[0].gt), ShapeError);
    }
    SUBCASE("ground-truth index beyond the class list") {
        GroundTruth gt = fixtures[0].gt;
        gt.map.data[0] = 7;
        CHECK_THROWS_AS(segmentation_iou(fixtures[0].segments, gt), Error);
    }
    SUBCASE("reassigned class out of range") {
        ReassignedSegment bad = fixtures[0].segments[0];
        bad.class_index = 9;
        CHECK_THROWS_AS(segmentation_iou({bad}, fixtures[0].gt), Error);
    }
}

TEST_CASE("tgq entries score gt segments through the labeler") {
    const auto fixtures = zgtest::metric_fixtures();
    const GroundTruth& gt = fixtures[7].gt;  // road and tree present

    std::map<std::string, Eigen::VectorXd> sent{
        {"road", vec3(1.0, 0.0, 0.0)},
        {"tree", vec3(0.0, 1.0, 0.0)},
        {"sign", vec3(0.0, 0.0, 1.0)},
        {"static", vec3(0.0, 0.0, 1.0)},  // orthogonal to both present classes
    };
    const zgtest::MapSentenceEncoder sentence(std::move(sent), 3);

    SUBCASE("verbatim labeler scores 1 everywhere") {
        int calls = 0;
        const GtSegmentLabeler verbatim = [&](const SegmentMask& mask) {
            ++calls;
            TextLabel label;
            label.surface = mask.at(0, 0) >= 0.5f ? "road" : "tree";
            return label;
        };
        const auto entries = tgq_image_entries(gt, verbatim, sentence);
        REQUIRE(entries.size() == 2);
        CHECK(calls == 2);
        CHECK(entries[0].class_name == "road");
        CHECK(entries[0].predicted == "road");
        CHECK(entries[0].score == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(entries[1].class_name == "tree");
        CHECK(entries[1].score == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(tgq_true_positives(entries, 0.5) == 2);
    }
    SUBCASE("a fixed unrelated word scores zero") {
        const GtSegmentLabeler fixed = [](const SegmentMask&) {
            TextLabel label;
            label.surface = "static";
            return label;
        };
        const auto entries = tgq_image_entries(gt, fixed, sentence);
        REQUIRE(entries.size() == 2);
        for (const auto& e : entries) CHECK(e.score == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(tgq_true_positives(entries, 0.5) == 0);
    }
    SUBCASE("an explicit sentence embedding bypasses the encoder") {
        const GtSegmentLabeler canned = [](const SegmentMask&) {
            TextLabel label;
            label.surface = "never embedded";
            label.sentence = vec3(1.0, 0.0, 0.0);
            return label;
        };
        const auto entries = tgq_image_entries(gt, canned, sentence);
        CHECK(entries[0].score == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("the tp boundary is strict") {
        std::vector<TgqEntry> entries(1);
        entries[0].score = 0.5;
        CHECK(tgq_true_positives(entries, 0.5) == 0);
        entries[0].score = 0.5000001;
        CHECK(tgq_true_positives(entries, 0.5) == 1);
    }
}

TEST_CASE("dataset accumulation pools pixel counts before dividing") {
    const auto fixtures = zgtest::metric_fixtures();
    DatasetAccumulator acc(3);

    // exact-cover: class 0 I=U=16. half-cover: class 0 I=8 U=16.
    acc.add_iou(segmentation_iou(fixtures[0].segments, fixtures[0].gt));
    acc.add_iou(segmentation_iou(fixtures[1].segments, fixtures[1].gt));
    CHECK(acc.images == 2);
    CHECK(acc.intersection[0] == 24);
    CHECK(acc.uni[0] == 32);
    // Only class 0 has any union; mIoU = 24/32 over that one class.
    CHECK(acc.miou() == doctest::Approx(0.75).epsilon(1e-12));

    acc.add_recall({1, 1});
    acc.add_recall({0, 1});
    CHECK(acc.recall_rate() == doctest::Approx(0.5).epsilon(1e-12));
    acc.add_tgq(3, 4);
    CHECK(acc.tgq_rate() == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("dataset accumulator degenerate edges") {
    DatasetAccumulator acc(2);
    CHECK(std::isnan(acc.miou()));
    CHECK(std::isnan(acc.recall_rate()));
    CHECK(std::isnan(acc.tgq_rate()));
    IouTable wrong;
    wrong.intersection = {0};
    wrong.uni = {0};
    CHECK_THROWS_AS(acc.add_iou(wrong), ShapeError);
}

TEST_CASE("sweep grids match the published threshold tables") {
    const auto clip = sweep_grid_clip();
    REQUIRE(clip.size() == 8);
    for (int i = 0; i < 8; ++i) {
        CHECK(clip[static_cast<std::size_t>(i)] == doctest::Approx(0.05 * i).epsilon(1e-12));
    }
    const auto sbert = sweep_grid_sbert();
    REQUIRE(sbert.size() == 11);
    for (int i = 0; i < 11; ++i) {
        CHECK(sbert[static_cast<std::size_t>(i)] == doctest::Approx(0.1 * i).epsilon(1e-12));
    }
}

TEST_CASE("raising the verification threshold never helps the counts") {
    // Segments with scores spread over [0,1] against the bleed fixture's gt;
    // as tau rises, verified/recall/tgq counts must be non-increasing.
    const auto fixtures = zgtest::metric_fixtures();
    const GroundTruth& gt = fixtures[7].gt;

    std::vector<std::pair<std::array<int, 16>, int>> shapes = {
        {{1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0}, 0},
        {{0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1}, 1},
        {{1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}, 1},
    };
    const std::vector<double> scores = {0.95, 0.42, 0.17};

    std::vector<TgqEntry> tgq(3);
    tgq[0].score = 0.85;
    tgq[1].score = 0.31;
    tgq[2].score = 0.05;

    for (const std::vector<double>& grid : {sweep_grid_sbert(), sweep_grid_clip()}) {
        int prev_verified = 1 << 20, prev_recall = 1 << 20, prev_tgq = 1 << 20;
        for (double tau : grid) {
            std::vector<ReassignedSegment> segs;
            int verified = 0;
            for (std::size_t i = 0; i < shapes.size(); ++i) {
                ReassignedSegment s =
                    zgtest::fixture_seg(shapes[i].first, shapes[i].second, false);
                s.score = scores[i];
                s.verified = verify(s.score, tau);
                verified += s.verified ? 1 : 0;
                segs.push_back(std::move(s));
            }
            const RecallCount rc = segment_recall(segs, gt, 0.5);
            const int tgq_tp = tgq_true_positives(tgq, tau);
            CHECK(verified <= prev_verified);
            CHECK(rc.tp <= prev_recall);
            CHECK(tgq_tp <= prev_tgq);
            prev_verified = verified;
            prev_recall = rc.tp;
            prev_tgq = tgq_tp;
        }
    }
}
