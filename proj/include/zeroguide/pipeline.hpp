#pragma once

#include "zeroguide/config.hpp"
#include "zeroguide/dataset.hpp"
#include "zeroguide/encoders.hpp"
#include "zeroguide/evaluation.hpp"
#include "zeroguide/labeling.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace zeroguide {

// Locations inside one run directory.
struct RunPaths {
    std::string run_dir;

    std::string config_file() const;
    std::string images_dir() const;
    std::string image_dir(const std::string& id) const;
    std::string done_marker(const std::string& id) const;
    std::string reports_dir() const;
};

// Opens the adapter set named by cfg.backend. The live backend needs model
// weights this build does not bundle, so only replay files open.
EncoderSet open_backend(const RunConfig& cfg);

// The phrase bank for decoding: cfg.vocabulary when set, the dataset class
// list otherwise. Honors ZEROGUIDE_CACHE: banks are stored under
// $ZEROGUIDE_CACHE/banks keyed by phrases + backend fingerprint.
VocabularyBank run_vocabulary_bank(const RunConfig& cfg, const DatasetIndex& index,
                                   const EncoderSet& encoders);

struct PipelineOutcome {
    int processed = 0;
    int skipped = 0;  // resumed images with complete artifacts
    int failed = 0;
    std::vector<std::string> failures;  // "<id>: <reason>"
};

// End-to-end run: segments every image (worker pool, per-image failure
// isolation, resumable via completion markers), persists all artifacts, then
// writes TT and ST evaluation reports over the completed images.
PipelineOutcome run_pipeline(const RunConfig& cfg, std::ostream& log);

// Merged segments of one image loaded back from a run; the partition
// invariant is re-validated on load.
struct ImageArtifacts {
    std::string id;
    int height = 0;
    int width = 0;
    std::vector<LabeledSegment> merged;
};

ImageArtifacts load_image_artifacts(const RunPaths& paths, const std::string& id);

struct EvalOptions {
    std::string method;  // "tt" | "st"
    std::string sweep;   // "" | "clip" (st) | "sbert" (tt)
};

// Evaluates a finished run, writing reports/eval_<method>[_sweep_<p>].json
// and .csv. Returns the JSON summary text (for sweeps, the full sweep
// document). Ground-truth label predictions are cached per image in
// tgq.json and reused across methods and sweeps.
std::string evaluate_run(const std::string& run_dir, const EvalOptions& opts,
                         std::ostream& log);

// Re-renders overlay.png for every completed image of the run.
void emit_overlays(const std::string& run_dir, std::ostream& log);

}  // namespace zeroguide
