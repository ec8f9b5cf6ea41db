#pragma once

#include "zeroguide/types.hpp"

#include <array>
#include <vector>

namespace zeroguide {

// Fully-connected pairwise CRF settings. The two kernels follow the usual
// appearance/smoothness split: a spatial Gaussian on pixel coordinates and a
// bilateral kernel on coordinates plus RGB. Weights and widths are
// implementation defaults surfaced in the run config.
struct CrfParams {
    int iterations = 10;
    double gaussian_sigma_xy = 3.0;
    double gaussian_weight = 1.0;
    double bilateral_sigma_xy = 50.0;
    double bilateral_sigma_rgb = 13.0;
    double bilateral_weight = 2.0;
};

// Mean-field inference over a dense CRF with Potts compatibility. The spatial
// kernel runs as a separable truncated-Gaussian blur; the bilateral kernel as
// a 5-D bilateral grid (splat, [1,2,1] blur per dim, slice). Messages are
// self-excluded and normalized per pixel, so kernel scale factors cancel.
class DenseCrf {
public:
    DenseCrf(const RgbImage& image, const CrfParams& params);

    // unary: (H*W) x L energies, pixels row-major. Lower energy = preferred.
    // Returns per-pixel marginals after params.iterations updates.
    Eigen::MatrixXd marginals(const Eigen::MatrixXd& unary) const;

    // Argmax labels of the marginals; ties pick the lowest label index.
    std::vector<int> run(const Eigen::MatrixXd& unary) const;

    int pixel_count() const { return height_ * width_; }

private:
    Eigen::MatrixXd gaussian_blur(const Eigen::MatrixXd& q) const;
    Eigen::MatrixXd bilateral_blur(const Eigen::MatrixXd& q) const;

    int height_ = 0;
    int width_ = 0;
    CrfParams params_;

    // Spatial blur taps and per-pixel message normalizers (ones-blur minus
    // self), precomputed at construction.
    std::vector<double> gauss_taps_;
    Eigen::VectorXd gauss_norm_;
    Eigen::VectorXd bilateral_norm_;

    // Bilateral grid geometry: per-pixel continuous 5-D position (offset so
    // the splat base index is >= 1) and the grid extents.
    std::vector<std::array<double, 5>> positions_;
    std::array<int, 5> grid_dims_{};
    std::array<std::size_t, 5> grid_strides_{};
    std::size_t grid_cells_ = 0;
};

}  // namespace zeroguide
