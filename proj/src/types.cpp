#include "zeroguide/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace zeroguide {

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) {
        throw ShapeError("cosine_similarity: dimension mismatch (" +
                         std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0 || !std::isfinite(na) || !std::isfinite(nb)) {
        throw Error("cosine_similarity: degenerate norm");
    }
    // Rounding can push the quotient a hair outside [-1, 1]; thresholds at the
    // boundary (tau <= -1 folds everything) rely on the exact range.
    return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

double cosine_similarity_lenient(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 && nb == 0.0) return 1.0;
    if (na == 0.0 || nb == 0.0) return 0.0;
    return a.dot(b) / (na * nb);
}

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string image_content_key(const RgbImage& image) {
    std::uint32_t dims[2] = {static_cast<std::uint32_t>(image.height),
                             static_cast<std::uint32_t>(image.width)};
    std::uint64_t h = fnv1a64(dims, sizeof(dims));
    h = fnv1a64(image.data.data(), image.data.size(), h);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace zeroguide
