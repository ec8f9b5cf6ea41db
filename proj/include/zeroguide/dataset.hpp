#pragma once

#include "zeroguide/evaluation.hpp"
#include "zeroguide/types.hpp"

#include <string>
#include <vector>

namespace zeroguide {

// A validated VOC-style dataset listing. Layout under the root:
//   images/<id>.png        RGB inputs
//   annotations/<id>.png   8-bit class-index maps (ignore pixels = 255)
//   classes.txt            one class name per line, line number = index
// Ids are sorted lexicographically.
struct DatasetIndex {
    std::string root;
    std::string split;
    std::vector<std::string> ids;
    std::vector<std::string> image_paths;
    std::vector<std::string> gt_paths;
    std::vector<std::string> classes;
    int ignore_index = 255;

    // When a class subset is active: full-list index -> subset index or -1.
    // Empty when the full list is in use.
    std::vector<int> index_remap;

    std::size_t size() const { return ids.size(); }
};

// Scans the root, pairs every image with its annotation map, and loads the
// class list. subset_file, when non-empty, names a file listing a subset of
// class names (one per line); the index's class list shrinks to those, in
// subset-file order, and ground truth loads remap other classes to ignore.
DatasetIndex ingest_dataset(const std::string& root, const std::string& subset_file = "",
                            int ignore_index = 255);

// Loads and validates one image/annotation pair from the index.
RgbImage load_image(const DatasetIndex& index, std::size_t i);
GroundTruth load_ground_truth(const DatasetIndex& index, std::size_t i);

}  // namespace zeroguide
