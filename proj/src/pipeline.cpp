#include "zeroguide/pipeline.hpp"

#include "zeroguide/attention_mask.hpp"
#include "zeroguide/image_io.hpp"
#include "zeroguide/merging.hpp"
#include "zeroguide/overlay.hpp"
#include "zeroguide/oversegment.hpp"
#include "zeroguide/replay_backend.hpp"
#include "zeroguide/tensor_store.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace zeroguide {

namespace {

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("short write to " + path);
}

std::string csv_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

nlohmann::ordered_json json_number_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

std::vector<std::string> read_phrase_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t a = line.find_first_not_of(" \t");
        if (a == std::string::npos) continue;
        std::size_t b = line.find_last_not_of(" \t");
        lines.push_back(line.substr(a, b - a + 1));
    }
    if (lines.empty()) throw Error("vocabulary file " + path + " lists no phrases");
    return lines;
}

}  // namespace

std::string RunPaths::config_file() const { return (fs::path(run_dir) / "run_config.txt").string(); }
std::string RunPaths::images_dir() const { return (fs::path(run_dir) / "images").string(); }
std::string RunPaths::image_dir(const std::string& id) const {
    return (fs::path(run_dir) / "images" / id).string();
}
std::string RunPaths::done_marker(const std::string& id) const {
    return (fs::path(image_dir(id)) / "done").string();
}
std::string RunPaths::reports_dir() const { return (fs::path(run_dir) / "reports").string(); }

EncoderSet open_backend(const RunConfig& cfg) {
    if (cfg.is_replay()) return open_replay_backend(cfg.replay_path());
    throw ConfigError(
        "backend 'live' needs pretrained model weights, which this build does not bundle; "
        "use --backend replay:<file>");
}

VocabularyBank run_vocabulary_bank(const RunConfig& cfg, const DatasetIndex& index,
                                   const EncoderSet& encoders) {
    std::vector<std::string> phrases;
    std::string source;
    if (!cfg.vocabulary.empty()) {
        phrases = read_phrase_file(cfg.vocabulary);
        source = cfg.vocabulary;
    } else {
        phrases = index.classes;
        source = "dataset classes";
    }

    const char* cache_root = std::getenv("ZEROGUIDE_CACHE");
    if (cache_root == nullptr || *cache_root == '\0') {
        return build_bank(phrases, *encoders.text, source);
    }

    std::string blob;
    for (const std::string& p : phrases) {
        blob += p;
        blob += '\n';
    }
    blob += '|';
    blob += encoders.fingerprint;
    char key[32];
    std::snprintf(key, sizeof(key), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(blob.data(), blob.size())));

    const fs::path dir = fs::path(cache_root) / "banks";
    const fs::path tensor_path = dir / (std::string(key) + ".zgtr");
    const fs::path list_path = dir / (std::string(key) + ".txt");
    if (fs::exists(tensor_path) && fs::exists(list_path)) {
        VocabularyBank bank = load_bank(tensor_path.string(), list_path.string());
        bank.source = source;
        return bank;
    }
    VocabularyBank bank = build_bank(phrases, *encoders.text, source);
    fs::create_directories(dir);
    save_bank(bank, tensor_path.string(), list_path.string());
    return bank;
}

namespace {

struct SaliencyRow {
    int segment = 0;
    int layer = 0;
    double s = 0.0;
    double w = 0.0;
};

// Runs the full per-image stage and persists every artifact. Returns true
// when complete artifacts already existed and the image was skipped.
bool process_image(const RunConfig& cfg, const DatasetIndex& index, std::size_t i,
                   const EncoderSet& encoders, const LabelDecoder& decoder,
                   const RunPaths& paths) {
    const std::string& id = index.ids[i];
    if (fs::exists(paths.done_marker(id))) return true;

    // Rebuild from scratch so a previously interrupted attempt leaves no
    // stale artifacts behind.
    const fs::path dir(paths.image_dir(id));
    std::error_code ec;
    fs::remove_all(dir, ec);
    fs::create_directories(dir / "candidates");
    fs::create_directories(dir / "merged");

    const RgbImage image = load_image(index, i);
    SegmentCandidates cands = segment_candidates(image, *encoders.patches, cfg.oversegment_params());
    write_text_file((dir / "merge_tree.json").string(), cands.tree.to_json());

    const GlobalSubtractionConfig subcfg = cfg.subtraction_config();
    std::vector<SaliencyRow> saliency_rows;

    TensorStore embeddings;
    std::vector<LabeledSegment> segments;
    nlohmann::ordered_json candidate_rows = nlohmann::ordered_json::array();
    for (std::size_t s = 0; s < cands.masks.size(); ++s) {
        const int node = cands.node_ids[s];
        write_mask_png(cands.masks[s],
                       (dir / "candidates" / (std::to_string(node) + ".png")).string());

        LabeledSegment seg;
        seg.node_id = node;
        seg.mask = cands.masks[s];
        std::vector<LayerSaliency> layer_log;
        seg.embedding = encode_segment(image, seg.mask, *encoders.joint, subcfg,
                                       cfg.saliency_dump ? &layer_log : nullptr);
        seg.label = decoder.decode(seg.embedding);
        embeddings.put_vector("cand/" + std::to_string(node), seg.embedding);
        for (const LayerSaliency& ls : layer_log) saliency_rows.push_back({node, ls.layer, ls.s, ls.w});

        candidate_rows.push_back({{"node", node},
                                  {"area", seg.mask.area()},
                                  {"label", seg.label.surface},
                                  {"score", seg.label.score}});
        segments.push_back(std::move(seg));
    }

    std::vector<MergeDecision> decisions;
    std::vector<std::vector<LayerSaliency>> merge_logs;
    SegmentLabeler relabel = [&](const SegmentMask& mask) {
        std::vector<LayerSaliency> layer_log;
        Eigen::VectorXd emb = encode_segment(image, mask, *encoders.joint, subcfg,
                                             cfg.saliency_dump ? &layer_log : nullptr);
        TextLabel label = decoder.decode(emb);
        merge_logs.push_back(std::move(layer_log));
        return std::make_pair(std::move(emb), std::move(label));
    };
    std::vector<LabeledSegment> merged =
        merge_up_tree(cands.tree, std::move(segments), cfg.tau_merge, relabel, &decisions);

    if (cfg.saliency_dump) {
        // The k-th relabel call belongs to the k-th accepted decision; its
        // saliency rows report under the new parent node.
        std::size_t k = 0;
        for (const MergeDecision& d : decisions) {
            if (!d.merged) continue;
            const int parent = cands.tree.parent(d.node_a);
            for (const LayerSaliency& ls : merge_logs[k]) {
                saliency_rows.push_back({parent, ls.layer, ls.s, ls.w});
            }
            ++k;
        }
    }

    nlohmann::ordered_json merged_rows = nlohmann::ordered_json::array();
    for (const LabeledSegment& seg : merged) {
        write_mask_png(seg.mask, (dir / "merged" / (std::to_string(seg.node_id) + ".png")).string());
        embeddings.put_vector("merged/" + std::to_string(seg.node_id), seg.embedding);
        merged_rows.push_back({{"node", seg.node_id},
                               {"area", seg.mask.area()},
                               {"label", seg.label.surface},
                               {"score", seg.label.score}});
    }
    embeddings.save((dir / "embeddings.zgtr").string());

    nlohmann::ordered_json decision_rows = nlohmann::ordered_json::array();
    for (const MergeDecision& d : decisions) {
        decision_rows.push_back({{"a", d.node_a},
                                 {"b", d.node_b},
                                 {"visual", d.visual},
                                 {"text", d.text},
                                 {"combined", d.combined},
                                 {"merged", d.merged}});
    }

    nlohmann::ordered_json labels;
    labels["schema_version"] = 1;
    labels["image"] = id;
    labels["decoder"] = decoder.name();
    labels["warnings"] = cands.warnings;
    labels["candidates"] = candidate_rows;
    labels["merged"] = merged_rows;
    labels["decisions"] = decision_rows;
    write_text_file((dir / "labels.json").string(), labels.dump(2) + "\n");

    write_rgb_png(render_overlay(image, merged), (dir / "overlay.png").string());

    if (cfg.saliency_dump) {
        std::string csv = "image,segment,layer,saliency,weight\n";
        for (const SaliencyRow& r : saliency_rows) {
            csv += id + ',' + std::to_string(r.segment) + ',' + std::to_string(r.layer) + ',' +
                   csv_double(r.s) + ',' + csv_double(r.w) + '\n';
        }
        write_text_file((dir / "saliency.csv").string(), csv);
    }

    write_text_file(paths.done_marker(id), "ok\n");
    return false;
}

}  // namespace

ImageArtifacts load_image_artifacts(const RunPaths& paths, const std::string& id) {
    const fs::path dir(paths.image_dir(id));
    if (!fs::exists(paths.done_marker(id))) {
        throw Error("artifacts for image '" + id + "' are incomplete");
    }

    nlohmann::json labels;
    try {
        labels = nlohmann::json::parse(read_text_file((dir / "labels.json").string()));
    } catch (const nlohmann::json::exception& e) {
        throw Error("labels.json for image '" + id + "': " + e.what());
    }

    TensorStore store = TensorStore::load((dir / "embeddings.zgtr").string());

    ImageArtifacts art;
    art.id = id;
    for (const auto& row : labels.at("merged")) {
        LabeledSegment seg;
        seg.node_id = row.at("node").get<int>();
        seg.mask = read_mask_png((dir / "merged" / (std::to_string(seg.node_id) + ".png")).string());
        seg.embedding = store.vector("merged/" + std::to_string(seg.node_id));
        seg.label.surface = row.at("label").get<std::string>();
        seg.label.score = row.at("score").get<double>();
        seg.label.decoder = labels.at("decoder").get<std::string>();
        art.merged.push_back(std::move(seg));
    }
    if (art.merged.empty()) throw Error("image '" + id + "' has no merged segments on disk");

    art.height = art.merged.front().mask.height;
    art.width = art.merged.front().mask.width;

    // The masks must still partition the image exactly.
    std::vector<int> cover(static_cast<std::size_t>(art.height) * art.width, 0);
    for (const LabeledSegment& seg : art.merged) {
        if (seg.mask.height != art.height || seg.mask.width != art.width) {
            throw ShapeError("image '" + id + "': merged masks disagree on resolution");
        }
        for (std::size_t p = 0; p < cover.size(); ++p) {
            if (seg.mask.values[p] >= 0.5f) ++cover[p];
        }
    }
    for (std::size_t p = 0; p < cover.size(); ++p) {
        if (cover[p] != 1) {
            throw Error("image '" + id + "': merged masks do not partition the image (pixel " +
                        std::to_string(p) + " covered " + std::to_string(cover[p]) + " times)");
        }
    }
    return art;
}

namespace {

struct ScoredSegment {
    const LabeledSegment* seg = nullptr;
    int class_index = -1;
    double score = 0.0;
};

// Ground-truth label predictions for one image, cached in tgq.json so the
// expensive encode/decode pass runs once per image per decoder.
std::vector<TgqEntry> tgq_entries_cached(const fs::path& image_dir, const std::string& id,
                                         const GroundTruth& gt, const RgbImage& image,
                                         const GlobalSubtractionConfig& subcfg,
                                         const EncoderSet& encoders, const LabelDecoder& decoder) {
    const fs::path cache = image_dir / "tgq.json";
    const std::vector<int> present = gt.present_classes();

    if (fs::exists(cache)) {
        try {
            nlohmann::json doc = nlohmann::json::parse(read_text_file(cache.string()));
            if (doc.at("schema_version").get<int>() == 1 &&
                doc.at("decoder").get<std::string>() == decoder.name()) {
                const auto& rows = doc.at("entries");
                if (rows.size() == present.size()) {
                    bool classes_match = true;
                    std::vector<TgqEntry> entries;
                    for (std::size_t k = 0; k < rows.size(); ++k) {
                        TgqEntry e;
                        e.class_name = rows[k].at("class").get<std::string>();
                        e.predicted = rows[k].at("predicted").get<std::string>();
                        e.score = rows[k].at("score").get<double>();
                        if (e.class_name != gt.classes[static_cast<std::size_t>(present[k])]) {
                            classes_match = false;
                            break;
                        }
                        entries.push_back(std::move(e));
                    }
                    if (classes_match) return entries;
                }
            }
        } catch (const nlohmann::json::exception&) {
            // Unreadable cache: recompute below.
        }
    }

    GtSegmentLabeler labeler = [&](const SegmentMask& mask) {
        const Eigen::VectorXd emb = encode_segment(image, mask, *encoders.joint, subcfg);
        return decoder.decode(emb);
    };
    std::vector<TgqEntry> entries = tgq_image_entries(gt, labeler, *encoders.sentence);

    nlohmann::ordered_json doc;
    doc["schema_version"] = 1;
    doc["image"] = id;
    doc["decoder"] = decoder.name();
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const TgqEntry& e : entries) {
        rows.push_back({{"class", e.class_name}, {"predicted", e.predicted}, {"score", e.score}});
    }
    doc["entries"] = rows;
    write_text_file(cache.string(), doc.dump(2) + "\n");
    return entries;
}

nlohmann::ordered_json summary_json(const std::string& method, double verification_tau,
                                    const RunConfig& cfg, double tgq_tau,
                                    const DatasetIndex& index, int skipped,
                                    long long total_segments, long long verified_segments,
                                    const DatasetAccumulator& acc) {
    nlohmann::ordered_json doc;
    doc["schema_version"] = 1;
    doc["method"] = method;
    doc["unverified_policy"] = "background";
    doc["image_order"] = "lexicographic";
    nlohmann::ordered_json thresholds;
    thresholds["verification"] = verification_tau;
    thresholds["tau_sbert"] = tgq_tau;
    thresholds["tau_clip"] = cfg.tau_clip;
    thresholds["tau_iou"] = cfg.tau_iou;
    doc["thresholds"] = thresholds;
    doc["images"] = acc.images;
    doc["skipped_images"] = skipped;
    doc["classes"] = index.classes;
    doc["total_segments"] = total_segments;
    doc["verified_segments"] = verified_segments;
    doc["miou"] = json_number_or_null(acc.miou());
    doc["recall"] = {{"tp", acc.recall_tp},
                     {"total", acc.recall_total},
                     {"rate", json_number_or_null(acc.recall_rate())}};
    doc["tgq"] = {{"tp", acc.tgq_tp},
                  {"total", acc.tgq_total},
                  {"rate", json_number_or_null(acc.tgq_rate())}};
    nlohmann::ordered_json per_class = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < index.classes.size(); ++c) {
        nlohmann::ordered_json row;
        row["name"] = index.classes[c];
        row["intersection"] = acc.intersection[c];
        row["union"] = acc.uni[c];
        row["iou"] = acc.uni[c] > 0
                         ? nlohmann::ordered_json(static_cast<double>(acc.intersection[c]) /
                                                  static_cast<double>(acc.uni[c]))
                         : nlohmann::ordered_json(nullptr);
        per_class.push_back(row);
    }
    doc["per_class"] = per_class;
    return doc;
}

}  // namespace

std::string evaluate_run(const std::string& run_dir, const EvalOptions& opts, std::ostream& log) {
    if (opts.method != "tt" && opts.method != "st") {
        throw ConfigError("eval: method must be 'tt' or 'st', got '" + opts.method + "'");
    }
    if (!opts.sweep.empty()) {
        if (opts.method == "tt" && opts.sweep != "sbert") {
            throw ConfigError("eval: method tt is verified on tau_sbert; use --sweep sbert");
        }
        if (opts.method == "st" && opts.sweep != "clip") {
            throw ConfigError("eval: method st is verified on tau_clip; use --sweep clip");
        }
    }

    RunPaths paths{run_dir};
    if (!fs::exists(paths.config_file())) {
        throw Error("eval: " + run_dir + " holds no run (missing run_config.txt)");
    }
    RunConfig cfg = parse_config_text(read_text_file(paths.config_file()));
    cfg.out_dir = run_dir;
    cfg.validate();

    const DatasetIndex index = ingest_dataset(cfg.dataset, cfg.class_subset, cfg.ignore_index);
    const EncoderSet encoders = open_backend(cfg);
    const ClassBank class_bank(index.classes, *encoders.text, *encoders.sentence);
    std::unique_ptr<LabelDecoder> decoder =
        make_decoder(cfg.decoder, run_vocabulary_bank(cfg, index, encoders), encoders.sentence);
    const GlobalSubtractionConfig subcfg = cfg.subtraction_config();

    std::vector<double> taus;
    if (opts.sweep == "clip") {
        taus = sweep_grid_clip();
    } else if (opts.sweep == "sbert") {
        taus = sweep_grid_sbert();
    } else {
        taus = {opts.method == "tt" ? cfg.tau_sbert : cfg.tau_clip};
    }

    const int class_count = static_cast<int>(index.classes.size());
    std::vector<DatasetAccumulator> accs(taus.size(), DatasetAccumulator(class_count));
    std::vector<long long> verified_segments(taus.size(), 0);
    long long total_segments = 0;
    int skipped = 0;

    std::string csv;
    if (opts.sweep.empty()) {
        csv = "image,class,intersection,union,iou,gt_present,recall_tp,tgq_predicted,tgq_score\n";
    }

    for (std::size_t i = 0; i < index.size(); ++i) {
        const std::string& id = index.ids[i];
        if (!fs::exists(paths.done_marker(id))) {
            ++skipped;
            continue;
        }
        const ImageArtifacts art = load_image_artifacts(paths, id);
        const GroundTruth gt = load_ground_truth(index, i);
        if (gt.map.height != art.height || gt.map.width != art.width) {
            throw ShapeError("image '" + id + "': annotation is " + std::to_string(gt.map.width) +
                             "x" + std::to_string(gt.map.height) + " but run artifacts are " +
                             std::to_string(art.width) + "x" + std::to_string(art.height));
        }

        // Reassign once per segment; thresholds only gate verification.
        std::vector<ScoredSegment> scored;
        for (const LabeledSegment& seg : art.merged) {
            ScoredSegment s;
            s.seg = &seg;
            if (opts.method == "tt") {
                const Eigen::VectorXd sentence = encoders.sentence->embed(seg.label.surface);
                std::tie(s.class_index, s.score) = class_bank.nearest_sentence(sentence);
            } else {
                std::tie(s.class_index, s.score) = class_bank.nearest_joint(seg.embedding);
            }
            scored.push_back(s);
        }
        total_segments += static_cast<long long>(scored.size());

        const RgbImage image = load_image(index, i);
        const std::vector<TgqEntry> tgq = tgq_entries_cached(fs::path(paths.image_dir(id)), id, gt,
                                                             image, subcfg, encoders, *decoder);

        for (std::size_t t = 0; t < taus.size(); ++t) {
            const double tau = taus[t];
            std::vector<ReassignedSegment> segments;
            for (const ScoredSegment& s : scored) {
                ReassignedSegment r;
                r.mask = s.seg->mask;
                r.class_index = s.class_index;
                r.method = opts.method;
                r.score = s.score;
                r.verified = verify(s.score, tau);
                if (r.verified) ++verified_segments[t];
                segments.push_back(std::move(r));
            }

            const IouTable table = segmentation_iou(segments, gt);
            const RecallCount recall = segment_recall(segments, gt, cfg.tau_iou);
            const double tgq_tau = (opts.sweep == "sbert") ? tau : cfg.tau_sbert;
            accs[t].add_iou(table);
            accs[t].add_recall(recall);
            accs[t].add_tgq(tgq_true_positives(tgq, tgq_tau), static_cast<int>(tgq.size()));

            if (opts.sweep.empty()) {
                // One row per class that shows up in gt or in the prediction.
                std::size_t tgq_pos = 0;
                for (int c = 0; c < class_count; ++c) {
                    const bool present = table.gt_present[static_cast<std::size_t>(c)] != 0;
                    const TgqEntry* entry = nullptr;
                    if (present) {
                        entry = &tgq[tgq_pos];
                        ++tgq_pos;
                    }
                    if (!present && table.uni[static_cast<std::size_t>(c)] == 0) continue;
                    const long long inter = table.intersection[static_cast<std::size_t>(c)];
                    const long long uni = table.uni[static_cast<std::size_t>(c)];
                    const double iou = static_cast<double>(inter) / static_cast<double>(uni);
                    std::string recall_tp;
                    if (present) {
                        recall_tp = iou > cfg.tau_iou ? "1" : "0";
                    }
                    csv += id + ',' + index.classes[static_cast<std::size_t>(c)] + ',' +
                           std::to_string(inter) + ',' + std::to_string(uni) + ',' +
                           csv_double(iou) + ',' + (present ? "1" : "0") + ',' + recall_tp + ',' +
                           (entry != nullptr ? entry->predicted : "") + ',' +
                           (entry != nullptr ? csv_double(entry->score) : "") + '\n';
                }
            }
        }
    }

    fs::create_directories(paths.reports_dir());
    const std::string stem =
        "eval_" + opts.method + (opts.sweep.empty() ? "" : "_sweep_" + opts.sweep);
    const fs::path json_path = fs::path(paths.reports_dir()) / (stem + ".json");
    const fs::path csv_path = fs::path(paths.reports_dir()) / (stem + ".csv");

    std::string json_text;
    if (opts.sweep.empty()) {
        const nlohmann::ordered_json doc =
            summary_json(opts.method, taus[0], cfg, cfg.tau_sbert, index, skipped, total_segments,
                         verified_segments[0], accs[0]);
        json_text = doc.dump(2) + "\n";
    } else {
        nlohmann::ordered_json doc;
        doc["schema_version"] = 1;
        doc["method"] = opts.method;
        doc["sweep"] = opts.sweep;
        nlohmann::ordered_json summaries = nlohmann::ordered_json::array();
        csv = "threshold,verified_segments,total_segments,miou,recall_tp,recall_total,recall_rate,"
              "tgq_tp,tgq_total,tgq_rate\n";
        for (std::size_t t = 0; t < taus.size(); ++t) {
            const double tgq_tau = (opts.sweep == "sbert") ? taus[t] : cfg.tau_sbert;
            summaries.push_back(summary_json(opts.method, taus[t], cfg, tgq_tau, index, skipped,
                                             total_segments, verified_segments[t], accs[t]));
            const DatasetAccumulator& a = accs[t];
            csv += csv_double(taus[t]) + ',' + std::to_string(verified_segments[t]) + ',' +
                   std::to_string(total_segments) + ',' +
                   (std::isnan(a.miou()) ? "" : csv_double(a.miou())) + ',' +
                   std::to_string(a.recall_tp) + ',' + std::to_string(a.recall_total) + ',' +
                   (std::isnan(a.recall_rate()) ? "" : csv_double(a.recall_rate())) + ',' +
                   std::to_string(a.tgq_tp) + ',' + std::to_string(a.tgq_total) + ',' +
                   (std::isnan(a.tgq_rate()) ? "" : csv_double(a.tgq_rate())) + '\n';
        }
        doc["summaries"] = summaries;
        json_text = doc.dump(2) + "\n";
    }

    write_text_file(json_path.string(), json_text);
    write_text_file(csv_path.string(), csv);
    log << "wrote " << json_path.string() << " and " << csv_path.string() << "\n";
    return json_text;
}

PipelineOutcome run_pipeline(const RunConfig& cfg_in, std::ostream& log) {
    RunConfig cfg = cfg_in;
    cfg.validate();
    if (cfg.dataset.empty()) throw ConfigError("config: dataset is required");
    if (cfg.out_dir.empty()) throw ConfigError("config: out_dir is required");

    const DatasetIndex index = ingest_dataset(cfg.dataset, cfg.class_subset, cfg.ignore_index);
    const EncoderSet encoders = open_backend(cfg);
    std::unique_ptr<LabelDecoder> decoder =
        make_decoder(cfg.decoder, run_vocabulary_bank(cfg, index, encoders), encoders.sentence);

    RunPaths paths{cfg.out_dir};
    fs::create_directories(paths.images_dir());
    fs::create_directories(paths.reports_dir());

    const std::string echo = echo_config(cfg);
    if (fs::exists(paths.config_file())) {
        if (read_text_file(paths.config_file()) != echo) {
            throw ConfigError("run directory " + cfg.out_dir +
                              " was created with a different configuration; resume with the same "
                              "settings or pick a fresh --out");
        }
    } else {
        write_text_file(paths.config_file(), echo);
    }

    PipelineOutcome outcome;
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= index.size()) return;
            const std::string& id = index.ids[i];
            try {
                const bool resumed = process_image(cfg, index, i, encoders, *decoder, paths);
                std::lock_guard<std::mutex> lk(mu);
                if (resumed) {
                    ++outcome.skipped;
                    log << "skip " << id << " (already complete)\n";
                } else {
                    ++outcome.processed;
                    log << "done " << id << "\n";
                }
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lk(mu);
                ++outcome.failed;
                outcome.failures.push_back(id + ": " + e.what());
                log << "fail " << id << ": " << e.what() << "\n";
            }
        }
    };

    const int workers =
        std::max(1, std::min(cfg.workers, static_cast<int>(index.size() > 0 ? index.size() : 1)));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }

    if (outcome.processed + outcome.skipped > 0) {
        for (const char* method : {"tt", "st"}) {
            EvalOptions opts;
            opts.method = method;
            evaluate_run(cfg.out_dir, opts, log);
        }
    } else {
        log << "no image completed; skipping evaluation reports\n";
    }
    return outcome;
}

void emit_overlays(const std::string& run_dir, std::ostream& log) {
    RunPaths paths{run_dir};
    if (!fs::exists(paths.config_file())) {
        throw Error("overlay: " + run_dir + " holds no run (missing run_config.txt)");
    }
    RunConfig cfg = parse_config_text(read_text_file(paths.config_file()));
    cfg.out_dir = run_dir;
    cfg.validate();
    const DatasetIndex index = ingest_dataset(cfg.dataset, cfg.class_subset, cfg.ignore_index);

    int rendered = 0;
    for (std::size_t i = 0; i < index.size(); ++i) {
        const std::string& id = index.ids[i];
        if (!fs::exists(paths.done_marker(id))) continue;
        const ImageArtifacts art = load_image_artifacts(paths, id);
        const RgbImage image = load_image(index, i);
        write_rgb_png(render_overlay(image, art.merged),
                      (fs::path(paths.image_dir(id)) / "overlay.png").string());
        ++rendered;
        log << "overlay " << id << "\n";
    }
    if (rendered == 0) throw Error("overlay: no completed images in " + run_dir);
}

}  // namespace zeroguide
