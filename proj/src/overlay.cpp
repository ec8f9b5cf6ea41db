#include "zeroguide/overlay.hpp"

#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cstring>
#include <string>

namespace zeroguide {

namespace {

cv::Vec3b segment_color(int node_id) {
    const std::string key = "segment/" + std::to_string(node_id);
    const std::uint64_t h = fnv1a64(key.data(), key.size());
    // Keep channels away from black so the tint stays visible.
    return cv::Vec3b(static_cast<std::uint8_t>(64 + (h & 0xFF) % 192),
                     static_cast<std::uint8_t>(64 + ((h >> 8) & 0xFF) % 192),
                     static_cast<std::uint8_t>(64 + ((h >> 16) & 0xFF) % 192));
}

}  // namespace

RgbImage render_overlay(const RgbImage& image, const std::vector<LabeledSegment>& segments) {
    if (!image.valid()) throw Error("render_overlay: invalid image");
    const int h = image.height;
    const int w = image.width;
    cv::Mat canvas(h, w, CV_8UC3);
    std::vector<int> owner(static_cast<std::size_t>(h) * w, -1);
    for (std::size_t s = 0; s < segments.size(); ++s) {
        const SegmentMask& m = segments[s].mask;
        if (m.height != h || m.width != w) {
            throw ShapeError("render_overlay: mask resolution differs from image");
        }
        for (std::size_t i = 0; i < m.values.size(); ++i) {
            if (m.values[i] >= 0.5f) owner[i] = static_cast<int>(s);
        }
    }

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const std::uint8_t* px = image.pixel(y, x);
            cv::Vec3b out(px[0], px[1], px[2]);
            if (owner[i] >= 0) {
                const cv::Vec3b tint = segment_color(segments[static_cast<std::size_t>(owner[i])].node_id);
                for (int c = 0; c < 3; ++c) {
                    out[c] = static_cast<std::uint8_t>((out[c] + tint[c]) / 2);
                }
            }
            const bool boundary =
                (x + 1 < w && owner[i] != owner[i + 1]) ||
                (y + 1 < h && owner[i] != owner[i + static_cast<std::size_t>(w)]);
            if (boundary) out = cv::Vec3b(16, 16, 16);
            canvas.at<cv::Vec3b>(y, x) = out;
        }
    }

    for (const LabeledSegment& seg : segments) {
        long long sy = 0, sx = 0, n = 0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (seg.mask.at(y, x) >= 0.5f) {
                    sy += y;
                    sx += x;
                    ++n;
                }
            }
        }
        if (n == 0) continue;
        const std::string text = seg.label.surface;
        const double font_scale = 0.35;
        int baseline = 0;
        const cv::Size size =
            cv::getTextSize(text, cv::FONT_HERSHEY_SIMPLEX, font_scale, 1, &baseline);
        cv::Point at(static_cast<int>(sx / n) - size.width / 2,
                     static_cast<int>(sy / n) + size.height / 2);
        at.x = std::clamp(at.x, 1, std::max(1, w - size.width - 1));
        at.y = std::clamp(at.y, size.height + 1, std::max(size.height + 1, h - 2));
        cv::putText(canvas, text, at, cv::FONT_HERSHEY_SIMPLEX, font_scale,
                    cv::Scalar(0, 0, 0), 2, cv::LINE_8);
        cv::putText(canvas, text, at, cv::FONT_HERSHEY_SIMPLEX, font_scale,
                    cv::Scalar(255, 255, 255), 1, cv::LINE_8);
    }

    RgbImage out;
    out.height = h;
    out.width = w;
    out.data.resize(static_cast<std::size_t>(h) * w * 3);
    for (int y = 0; y < h; ++y) {
        std::memcpy(out.data.data() + static_cast<std::size_t>(y) * w * 3,
                    canvas.ptr<std::uint8_t>(y), static_cast<std::size_t>(w) * 3);
    }
    return out;
}

}  // namespace zeroguide
