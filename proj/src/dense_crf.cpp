#include "zeroguide/dense_crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace zeroguide {

namespace {

constexpr double kNormFloor = 1e-9;

Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& energy) {
    Eigen::MatrixXd q(energy.rows(), energy.cols());
    for (Eigen::Index i = 0; i < energy.rows(); ++i) {
        const double m = energy.row(i).maxCoeff();
        Eigen::ArrayXd e = (energy.row(i).array() - m).exp();
        q.row(i) = (e / e.sum()).matrix();
    }
    return q;
}

}  // namespace

DenseCrf::DenseCrf(const RgbImage& image, const CrfParams& params)
    : height_(image.height), width_(image.width), params_(params) {
    if (!image.valid()) throw Error("dense crf: invalid image");
    if (params.iterations < 0) throw ConfigError("dense crf: negative iteration count");
    if (params.gaussian_sigma_xy <= 0 || params.bilateral_sigma_xy <= 0 ||
        params.bilateral_sigma_rgb <= 0) {
        throw ConfigError("dense crf: kernel widths must be positive");
    }
    const int n = pixel_count();

    // Spatial kernel taps, truncated at three sigmas; center tap is 1.
    const int radius = static_cast<int>(std::ceil(3.0 * params.gaussian_sigma_xy));
    gauss_taps_.resize(static_cast<std::size_t>(radius) + 1);
    for (int d = 0; d <= radius; ++d) {
        gauss_taps_[static_cast<std::size_t>(d)] =
            std::exp(-0.5 * d * d / (params.gaussian_sigma_xy * params.gaussian_sigma_xy));
    }

    // Bilateral grid geometry from the actual pixel range.
    positions_.resize(static_cast<std::size_t>(n));
    std::array<double, 5> lo{}, hi{};
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            const std::uint8_t* px = image.pixel(y, x);
            std::array<double, 5> p{x / params.bilateral_sigma_xy,
                                    y / params.bilateral_sigma_xy,
                                    px[0] / params.bilateral_sigma_rgb,
                                    px[1] / params.bilateral_sigma_rgb,
                                    px[2] / params.bilateral_sigma_rgb};
            for (int d = 0; d < 5; ++d) {
                lo[static_cast<std::size_t>(d)] = std::min(lo[static_cast<std::size_t>(d)], p[static_cast<std::size_t>(d)]);
                hi[static_cast<std::size_t>(d)] = std::max(hi[static_cast<std::size_t>(d)], p[static_cast<std::size_t>(d)]);
            }
            positions_[static_cast<std::size_t>(y) * width_ + x] = p;
        }
    }
    grid_cells_ = 1;
    for (int d = 0; d < 5; ++d) {
        const auto sd = static_cast<std::size_t>(d);
        // Shift so floor(position) >= 1, leaving one pad cell per side for
        // the blur and the +1 interpolation corner.
        for (auto& p : positions_) p[sd] += 1.0 - lo[sd];
        grid_dims_[sd] = static_cast<int>(std::floor(hi[sd] - lo[sd])) + 4;
        grid_strides_[sd] = grid_cells_;
        grid_cells_ *= static_cast<std::size_t>(grid_dims_[sd]);
    }

    // Message normalizers: each kernel applied to all-ones, minus the self
    // contribution (center weight 1).
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(n, 1);
    gauss_norm_ = (gaussian_blur(ones).col(0).array() - 1.0).max(kNormFloor).matrix();
    bilateral_norm_ = (bilateral_blur(ones).col(0).array() - 1.0).max(kNormFloor).matrix();
}

Eigen::MatrixXd DenseCrf::gaussian_blur(const Eigen::MatrixXd& q) const {
    const int radius = static_cast<int>(gauss_taps_.size()) - 1;
    Eigen::MatrixXd tmp = Eigen::MatrixXd::Zero(q.rows(), q.cols());
    // Horizontal pass.
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            const Eigen::Index i = static_cast<Eigen::Index>(y) * width_ + x;
            for (int d = -radius; d <= radius; ++d) {
                const int xx = x + d;
                if (xx < 0 || xx >= width_) continue;
                tmp.row(i) += gauss_taps_[static_cast<std::size_t>(std::abs(d))] *
                              q.row(static_cast<Eigen::Index>(y) * width_ + xx);
            }
        }
    }
    // Vertical pass.
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(q.rows(), q.cols());
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            const Eigen::Index i = static_cast<Eigen::Index>(y) * width_ + x;
            for (int d = -radius; d <= radius; ++d) {
                const int yy = y + d;
                if (yy < 0 || yy >= height_) continue;
                out.row(i) += gauss_taps_[static_cast<std::size_t>(std::abs(d))] *
                              tmp.row(static_cast<Eigen::Index>(yy) * width_ + x);
            }
        }
    }
    return out;
}

Eigen::MatrixXd DenseCrf::bilateral_blur(const Eigen::MatrixXd& q) const {
    const Eigen::Index n = q.rows();
    const Eigen::Index channels = q.cols();
    Eigen::MatrixXd out(n, channels);
    std::vector<double> grid(grid_cells_);
    std::vector<double> blurred(grid_cells_);

    for (Eigen::Index c = 0; c < channels; ++c) {
        std::fill(grid.begin(), grid.end(), 0.0);

        // Splat: multilinear distribution over the 32 surrounding cells.
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& p = positions_[static_cast<std::size_t>(i)];
            int base[5];
            double frac[5];
            for (int d = 0; d < 5; ++d) {
                const double f = std::floor(p[static_cast<std::size_t>(d)]);
                base[d] = static_cast<int>(f);
                frac[d] = p[static_cast<std::size_t>(d)] - f;
            }
            const double v = q(i, c);
            for (int corner = 0; corner < 32; ++corner) {
                double w = v;
                std::size_t idx = 0;
                for (int d = 0; d < 5; ++d) {
                    const int bit = (corner >> d) & 1;
                    w *= bit ? frac[d] : 1.0 - frac[d];
                    idx += static_cast<std::size_t>(base[d] + bit) * grid_strides_[static_cast<std::size_t>(d)];
                }
                grid[idx] += w;
            }
        }

        // Blur: [1, 2, 1] along each dimension.
        for (int d = 0; d < 5; ++d) {
            const std::size_t stride = grid_strides_[static_cast<std::size_t>(d)];
            const int dim = grid_dims_[static_cast<std::size_t>(d)];
            const std::size_t outer = grid_cells_ / static_cast<std::size_t>(dim);
            std::fill(blurred.begin(), blurred.end(), 0.0);
            for (std::size_t o = 0; o < outer; ++o) {
                // Decompose the outer index into the base offset with the
                // current dimension removed.
                std::size_t rem = o;
                std::size_t offset = 0;
                for (int dd = 0; dd < 5; ++dd) {
                    if (dd == d) continue;
                    const auto sdd = static_cast<std::size_t>(dd);
                    const std::size_t extent = static_cast<std::size_t>(grid_dims_[sdd]);
                    offset += (rem % extent) * grid_strides_[sdd];
                    rem /= extent;
                }
                for (int k = 0; k < dim; ++k) {
                    const std::size_t idx = offset + static_cast<std::size_t>(k) * stride;
                    double v = 2.0 * grid[idx];
                    if (k > 0) v += grid[idx - stride];
                    if (k + 1 < dim) v += grid[idx + stride];
                    blurred[idx] = v;
                }
            }
            grid.swap(blurred);
        }

        // Slice: multilinear interpolation back to pixels.
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& p = positions_[static_cast<std::size_t>(i)];
            int base[5];
            double frac[5];
            for (int d = 0; d < 5; ++d) {
                const double f = std::floor(p[static_cast<std::size_t>(d)]);
                base[d] = static_cast<int>(f);
                frac[d] = p[static_cast<std::size_t>(d)] - f;
            }
            double acc = 0.0;
            for (int corner = 0; corner < 32; ++corner) {
                double w = 1.0;
                std::size_t idx = 0;
                for (int d = 0; d < 5; ++d) {
                    const int bit = (corner >> d) & 1;
                    w *= bit ? frac[d] : 1.0 - frac[d];
                    idx += static_cast<std::size_t>(base[d] + bit) * grid_strides_[static_cast<std::size_t>(d)];
                }
                acc += w * grid[idx];
            }
            out(i, c) = acc;
        }
    }
    return out;
}

Eigen::MatrixXd DenseCrf::marginals(const Eigen::MatrixXd& unary) const {
    if (unary.rows() != pixel_count()) {
        throw ShapeError("dense crf: unary row count " + std::to_string(unary.rows()) +
                         " != pixel count " + std::to_string(pixel_count()));
    }
    if (unary.cols() < 1) throw ShapeError("dense crf: need at least one label");
    Eigen::MatrixXd q = row_softmax(-unary);
    for (int it = 0; it < params_.iterations; ++it) {
        Eigen::MatrixXd energy = -unary;
        if (params_.gaussian_weight != 0.0) {
            Eigen::MatrixXd msg = gaussian_blur(q) - q;
            msg.array().colwise() /= gauss_norm_.array();
            energy += params_.gaussian_weight * msg;
        }
        if (params_.bilateral_weight != 0.0) {
            Eigen::MatrixXd msg = bilateral_blur(q) - q;
            msg.array().colwise() /= bilateral_norm_.array();
            energy += params_.bilateral_weight * msg;
        }
        q = row_softmax(energy);
    }
    return q;
}

std::vector<int> DenseCrf::run(const Eigen::MatrixXd& unary) const {
    const Eigen::MatrixXd q = marginals(unary);
    std::vector<int> labels(static_cast<std::size_t>(q.rows()));
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        int best = 0;
        for (Eigen::Index c = 1; c < q.cols(); ++c) {
            if (q(i, c) > q(i, best)) best = static_cast<int>(c);
        }
        labels[static_cast<std::size_t>(i)] = best;
    }
    return labels;
}

}  // namespace zeroguide
