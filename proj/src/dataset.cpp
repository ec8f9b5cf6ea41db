#include "zeroguide/dataset.hpp"

#include "zeroguide/image_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

namespace zeroguide {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t");
        lines.push_back(line.substr(first, last - first + 1));
    }
    return lines;
}

}  // namespace

DatasetIndex ingest_dataset(const std::string& root, const std::string& subset_file,
                            int ignore_index) {
    const fs::path rootp(root);
    const fs::path images = rootp / "images";
    const fs::path annotations = rootp / "annotations";
    const fs::path class_file = rootp / "classes.txt";
    if (!fs::is_directory(images)) throw Error("dataset: missing images/ under " + root);
    if (!fs::is_directory(annotations)) {
        throw Error("dataset: missing annotations/ under " + root);
    }
    if (!fs::is_regular_file(class_file)) throw Error("dataset: missing classes.txt in " + root);

    DatasetIndex index;
    index.root = root;
    index.split = rootp.filename().string();
    index.ignore_index = ignore_index;
    index.classes = read_lines(class_file.string());
    if (index.classes.empty()) throw Error("dataset: classes.txt is empty");
    {
        std::set<std::string> unique(index.classes.begin(), index.classes.end());
        if (unique.size() != index.classes.size()) {
            throw Error("dataset: duplicate class names in classes.txt");
        }
    }

    for (const auto& entry : fs::directory_iterator(images)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
        index.ids.push_back(entry.path().stem().string());
    }
    if (index.ids.empty()) throw Error("dataset: no PNG images under " + images.string());
    std::sort(index.ids.begin(), index.ids.end());
    for (const std::string& id : index.ids) {
        const fs::path img = images / (id + ".png");
        const fs::path gt = annotations / (id + ".png");
        if (!fs::is_regular_file(gt)) {
            throw Error("dataset: missing annotation for image '" + id + "'");
        }
        index.image_paths.push_back(img.string());
        index.gt_paths.push_back(gt.string());
    }

    if (!subset_file.empty()) {
        const std::vector<std::string> subset = read_lines(subset_file);
        if (subset.empty()) throw Error("dataset: class subset file is empty");
        index.index_remap.assign(index.classes.size(), -1);
        std::vector<std::string> kept;
        for (const std::string& name : subset) {
            const auto it = std::find(index.classes.begin(), index.classes.end(), name);
            if (it == index.classes.end()) {
                throw Error("dataset: subset class '" + name + "' not in classes.txt");
            }
            const auto full = static_cast<std::size_t>(it - index.classes.begin());
            if (index.index_remap[full] != -1) {
                throw Error("dataset: subset lists '" + name + "' twice");
            }
            index.index_remap[full] = static_cast<int>(kept.size());
            kept.push_back(name);
        }
        index.classes = std::move(kept);
    }
    return index;
}

RgbImage load_image(const DatasetIndex& index, std::size_t i) {
    if (i >= index.size()) throw Error("dataset: image index out of range");
    return read_rgb_png(index.image_paths[i]);
}

GroundTruth load_ground_truth(const DatasetIndex& index, std::size_t i) {
    if (i >= index.size()) throw Error("dataset: image index out of range");
    GroundTruth gt;
    gt.map = read_index_png(index.gt_paths[i]);
    gt.classes = index.classes;
    gt.ignore_index = index.ignore_index;
    const std::size_t full_count =
        index.index_remap.empty() ? index.classes.size() : index.index_remap.size();
    for (std::uint8_t& v : gt.map.data) {
        if (v == index.ignore_index) continue;
        if (v >= full_count) {
            throw Error("dataset: unknown class index " + std::to_string(int(v)) +
                        " in annotation for '" + index.ids[i] + "'");
        }
        if (!index.index_remap.empty()) {
            const int mapped = index.index_remap[v];
            v = mapped < 0 ? static_cast<std::uint8_t>(index.ignore_index)
                           : static_cast<std::uint8_t>(mapped);
        }
    }
    return gt;
}

}  // namespace zeroguide
