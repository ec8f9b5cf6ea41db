#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace zeroguide {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape/contract violations between tensors, masks, or replay entries.
struct ShapeError : Error {
    using Error::Error;
};

// A backend (live model or replay file) cannot serve the request.
struct BackendError : Error {
    using Error::Error;
};

// Bad user configuration; reported before any work starts.
struct ConfigError : Error {
    using Error::Error;
};

// Interleaved 8-bit RGB raster, row-major.
struct RgbImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;  // height*width*3

    bool valid() const {
        return height > 0 && width > 0 &&
               data.size() == static_cast<std::size_t>(height) * width * 3;
    }
    const std::uint8_t* pixel(int y, int x) const {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
    std::uint8_t* pixel(int y, int x) {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
};

// Per-pixel class-index raster (ground truth maps use 255 as ignore).
struct IndexImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;  // height*width

    std::uint8_t at(int y, int x) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }
};

// Alpha mask over the image grid identifying one segment. Values in [0,1];
// hard masks use exactly 0/1.
struct SegmentMask {
    int height = 0;
    int width = 0;
    std::vector<float> values;  // height*width, row-major

    static SegmentMask zeros(int h, int w) {
        SegmentMask m;
        m.height = h;
        m.width = w;
        m.values.assign(static_cast<std::size_t>(h) * w, 0.0f);
        return m;
    }
    float at(int y, int x) const {
        return values[static_cast<std::size_t>(y) * width + x];
    }
    void set(int y, int x, float v) {
        values[static_cast<std::size_t>(y) * width + x] = v;
    }
    // Pixel count of the covered region (entries >= 0.5).
    int area() const {
        int n = 0;
        for (float v : values) {
            if (v >= 0.5f) ++n;
        }
        return n;
    }
    bool all_zero() const {
        for (float v : values) {
            if (v > 0.0f) return false;
        }
        return true;
    }
};

// Cosine similarity. Throws on a zero-norm input; embeddings compared with
// this are required to be non-degenerate.
double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Cosine similarity that tolerates zero vectors: both zero -> 1, one zero -> 0.
// Used where the compared quantities are intermediate activations.
double cosine_similarity_lenient(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// FNV-1a over arbitrary bytes; the replay backends key images by this.
std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ull);

// Content hash of an RGB raster (dimensions + pixels), as fixed-width hex.
std::string image_content_key(const RgbImage& image);

}  // namespace zeroguide
