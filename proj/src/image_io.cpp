#include "zeroguide/image_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <cstring>

namespace zeroguide {

RgbImage read_rgb_png(const std::string& path) {
    cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
    if (bgr.empty()) throw Error("cannot read image " + path);
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    RgbImage out;
    out.height = rgb.rows;
    out.width = rgb.cols;
    out.data.resize(static_cast<std::size_t>(rgb.rows) * rgb.cols * 3);
    for (int y = 0; y < rgb.rows; ++y) {
        std::memcpy(out.data.data() + static_cast<std::size_t>(y) * rgb.cols * 3,
                    rgb.ptr<std::uint8_t>(y), static_cast<std::size_t>(rgb.cols) * 3);
    }
    return out;
}

void write_rgb_png(const RgbImage& image, const std::string& path) {
    if (!image.valid()) throw Error("write_rgb_png: invalid image");
    cv::Mat rgb(image.height, image.width, CV_8UC3,
                const_cast<std::uint8_t*>(image.data.data()));
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    if (!cv::imwrite(path, bgr)) throw Error("cannot write image " + path);
}

IndexImage read_index_png(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_GRAYSCALE);
    if (m.empty()) throw Error("cannot read index map " + path);
    IndexImage out;
    out.height = m.rows;
    out.width = m.cols;
    out.data.resize(static_cast<std::size_t>(m.rows) * m.cols);
    for (int y = 0; y < m.rows; ++y) {
        std::memcpy(out.data.data() + static_cast<std::size_t>(y) * m.cols,
                    m.ptr<std::uint8_t>(y), static_cast<std::size_t>(m.cols));
    }
    return out;
}

void write_index_png(const IndexImage& image, const std::string& path) {
    cv::Mat m(image.height, image.width, CV_8UC1,
              const_cast<std::uint8_t*>(image.data.data()));
    if (!cv::imwrite(path, m)) throw Error("cannot write index map " + path);
}

SegmentMask read_mask_png(const std::string& path) {
    const IndexImage raw = read_index_png(path);
    SegmentMask mask = SegmentMask::zeros(raw.height, raw.width);
    for (std::size_t i = 0; i < raw.data.size(); ++i) {
        mask.values[i] = raw.data[i] >= 128 ? 1.0f : 0.0f;
    }
    return mask;
}

void write_mask_png(const SegmentMask& mask, const std::string& path) {
    IndexImage raw;
    raw.height = mask.height;
    raw.width = mask.width;
    raw.data.resize(mask.values.size());
    for (std::size_t i = 0; i < mask.values.size(); ++i) {
        raw.data[i] = mask.values[i] >= 0.5f ? 255 : 0;
    }
    write_index_png(raw, path);
}

}  // namespace zeroguide
