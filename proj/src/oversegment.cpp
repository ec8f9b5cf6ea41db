#include "zeroguide/oversegment.hpp"

#include <cmath>

namespace zeroguide {

namespace {

// Pixel row/col -> patch index under the grid tiling used everywhere: patch p
// covers pixel range [floor(p*H/rows), floor((p+1)*H/rows)).
int patch_of(int pixel, int pixels, int cells) {
    return static_cast<int>(static_cast<long long>(pixel) * cells / pixels);
}

}  // namespace

RefineResult upsample_and_refine(const MergeTree& tree, const PatchFeatures& features,
                                 const RgbImage& image, const CrfParams& crf) {
    if (!image.valid()) throw Error("upsample_and_refine: invalid image");
    if (features.rows != tree.grid_rows() || features.cols != tree.grid_cols()) {
        throw ShapeError("upsample_and_refine: features grid does not match tree");
    }
    if (image.height < tree.grid_rows() || image.width < tree.grid_cols()) {
        throw ShapeError("upsample_and_refine: image smaller than the patch grid");
    }
    const int h = image.height;
    const int w = image.width;
    const int rows = tree.grid_rows();
    const int cols = tree.grid_cols();
    const std::vector<int>& frontier = tree.frontier();
    const int k = static_cast<int>(frontier.size());
    const std::vector<int> patch_label = tree.frontier_assignment();

    std::vector<int> pixel_label(static_cast<std::size_t>(h) * w);
    if (crf.iterations == 0 || k == 1) {
        // Refinement disabled (or nothing to refine): nearest-neighbor
        // upsampling of the patch assignment.
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const int p = patch_of(y, h, rows) * cols + patch_of(x, w, cols);
                pixel_label[static_cast<std::size_t>(y) * w + x] =
                    patch_label[static_cast<std::size_t>(p)];
            }
        }
    } else {
        // Per-patch unary: distance to each frontier centroid, normalized
        // across centroids; all-zero rows fall back to a uniform unary.
        Eigen::MatrixXd patch_unary(rows * cols, k);
        for (int p = 0; p < rows * cols; ++p) {
            const Eigen::VectorXd f = features.data.row(p).transpose();
            double sum = 0.0;
            for (int c = 0; c < k; ++c) {
                const double d = (f - tree.node(frontier[static_cast<std::size_t>(c)]).mean).norm();
                patch_unary(p, c) = d;
                sum += d;
            }
            if (sum > 0.0) {
                patch_unary.row(p) /= sum;
            } else {
                patch_unary.row(p).setConstant(1.0 / k);
            }
        }
        Eigen::MatrixXd unary(static_cast<Eigen::Index>(h) * w, k);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const int p = patch_of(y, h, rows) * cols + patch_of(x, w, cols);
                unary.row(static_cast<Eigen::Index>(y) * w + x) = patch_unary.row(p);
            }
        }
        pixel_label = DenseCrf(image, crf).run(unary);
    }

    std::vector<int> areas(static_cast<std::size_t>(k), 0);
    for (int lbl : pixel_label) ++areas[static_cast<std::size_t>(lbl)];

    RefineResult out;
    std::vector<int> compact(static_cast<std::size_t>(k), -1);
    for (int c = 0; c < k; ++c) {
        if (areas[static_cast<std::size_t>(c)] == 0) {
            out.warnings.push_back("segment for node " +
                                   std::to_string(frontier[static_cast<std::size_t>(c)]) +
                                   " is empty after refinement; dropped");
            continue;
        }
        compact[static_cast<std::size_t>(c)] = static_cast<int>(out.masks.size());
        out.node_ids.push_back(frontier[static_cast<std::size_t>(c)]);
        out.masks.push_back(SegmentMask::zeros(h, w));
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int c = compact[static_cast<std::size_t>(
                pixel_label[static_cast<std::size_t>(y) * w + x])];
            out.masks[static_cast<std::size_t>(c)].set(y, x, 1.0f);
        }
    }
    return out;
}

SegmentCandidates segment_candidates(const RgbImage& image,
                                     const PatchFeatureExtractor& extractor,
                                     const OversegmentParams& params) {
    PatchFeatureRequest req;
    req.image = &image;
    req.grid_rows = extractor.grid_rows();
    req.grid_cols = extractor.grid_cols();
    const PatchFeatures features = extractor.extract(req);

    MergeTree tree = agglomerate(features, std::min(params.n_target, features.patch_count()));
    tree = prune_siblings(tree, params.t_feature);
    RefineResult refined = upsample_and_refine(tree, features, image, params.crf);

    SegmentCandidates out;
    out.tree = std::move(tree);
    out.node_ids = std::move(refined.node_ids);
    out.masks = std::move(refined.masks);
    out.warnings = std::move(refined.warnings);
    return out;
}

}  // namespace zeroguide
