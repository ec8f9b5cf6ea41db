#pragma once

#include "zeroguide/attention_mask.hpp"
#include "zeroguide/dense_crf.hpp"
#include "zeroguide/oversegment.hpp"

#include <cstdint>
#include <string>

namespace zeroguide {

// Every tunable of a run. Defaults are the operating point the rest of the
// code assumes; file values and CLI flags override them in that order.
struct RunConfig {
    // Over-segmentation.
    int n_target = 20;
    double t_feature = 0.9;
    int crf_iterations = 10;
    double crf_gaussian_sigma = 3.0;
    double crf_gaussian_weight = 1.0;
    double crf_bilateral_sigma_xy = 50.0;
    double crf_bilateral_sigma_rgb = 13.0;
    double crf_bilateral_weight = 2.0;

    // Masked attention.
    double sigma_sq = 2.5;
    int layer_start = 21;
    int layer_end = 24;
    bool subtract_global = true;

    // Merging and evaluation thresholds.
    double tau_merge = 0.8;
    double tau_sbert = 0.5;
    double tau_clip = 0.1;
    double tau_iou = 0.5;

    // Run plumbing.
    std::string decoder = "retrieval";
    std::string backend = "live";  // "live" | "replay:<file>"
    std::string dataset;
    std::string out_dir;
    std::string class_subset;  // optional class-subset file
    std::string vocabulary;    // optional phrase-list file; default: class list
    int ignore_index = 255;
    int workers = 1;
    std::uint64_t seed = 0;
    bool saliency_dump = false;

    CrfParams crf_params() const;
    OversegmentParams oversegment_params() const;
    GlobalSubtractionConfig subtraction_config() const;

    bool is_replay() const;
    std::string replay_path() const;  // empty unless backend is replay:<file>

    void validate() const;  // throws ConfigError
};

// Applies a flat key=value file ('#' starts a comment; blank lines ignored).
// Unknown keys are configuration errors.
void apply_config_file(RunConfig& cfg, const std::string& path);

// Applies one key/value pair. Shared by the file parser and tests.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

// Serializes every field except out_dir in a fixed order, one key=value per
// line. Two runs of the same configuration echo identical bytes, so run
// directories stay byte-comparable across output locations.
std::string echo_config(const RunConfig& cfg);

// Parses echo_config output (or any config text) onto the defaults.
RunConfig parse_config_text(const std::string& text);

}  // namespace zeroguide
