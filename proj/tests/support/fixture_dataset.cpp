#include "support/fixture_dataset.hpp"

#include "support/rng.hpp"
#include "support/temp_dir.hpp"
#include "zeroguide/attention_mask.hpp"
#include "zeroguide/image_io.hpp"
#include "zeroguide/replay_backend.hpp"
#include "zeroguide/tensor_store.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace zgtest {

namespace {

constexpr int kSize = 96;
constexpr int kGrid = 8;
constexpr int kCell = kSize / kGrid;
constexpr int kModelDim = 16;
constexpr int kHeads = 2;
constexpr int kKeyDim = 8;
constexpr int kLayers = 24;
constexpr int kJointDim = 16;
constexpr int kSbertDim = 12;
constexpr int kDinoChannels = 16;
constexpr int kHidden = 32;

const std::vector<std::string>& class_names() {
    static const std::vector<std::string> names = {"sky", "grass", "water", "building", "cat"};
    return names;
}

const std::vector<std::string>& image_ids() {
    static const std::vector<std::string> ids = {"img_a", "img_b", "img_c"};
    return ids;
}

// -1 on one side of each class region, +1 on the other; gives the patch
// features two sub-families per class so pruning has real decisions to make.
int subfamily_sign(int pc) { return pc < kGrid / 2 ? -1 : 1; }

const int kClassColor[5][3] = {
    {90, 150, 235},   // sky
    {70, 170, 60},    // grass
    {30, 90, 180},    // water
    {150, 120, 100},  // building
    {230, 140, 40},   // cat
};

zeroguide::RgbImage render_image(int image_index) {
    zeroguide::RgbImage img;
    img.height = kSize;
    img.width = kSize;
    img.data.resize(static_cast<std::size_t>(kSize) * kSize * 3);
    SplitMix64 rng(0x1000u + static_cast<std::uint64_t>(image_index));
    for (int y = 0; y < kSize; ++y) {
        for (int x = 0; x < kSize; ++x) {
            const int cls = fixture_patch_class(image_index, y / kCell, x / kCell);
            for (int c = 0; c < 3; ++c) {
                const int noise = rng.below(13) - 6;
                int v = kClassColor[cls][c] + noise;
                if (v < 0) v = 0;
                if (v > 255) v = 255;
                img.data[(static_cast<std::size_t>(y) * kSize + x) * 3 +
                         static_cast<std::size_t>(c)] = static_cast<unsigned char>(v);
            }
        }
    }
    return img;
}

zeroguide::IndexImage render_annotation(int image_index) {
    zeroguide::IndexImage gt;
    gt.height = kSize;
    gt.width = kSize;
    gt.data.assign(static_cast<std::size_t>(kSize) * kSize, 0);
    for (int y = 0; y < kSize; ++y) {
        for (int x = 0; x < kSize; ++x) {
            int v = fixture_patch_class(image_index, y / kCell, x / kCell);
            // img_b carries an ignore square inside the water region.
            if (image_index == 1 && y >= 40 && y < 48 && x >= 40 && x < 48) v = 255;
            gt.data[static_cast<std::size_t>(y) * kSize + x] = static_cast<unsigned char>(v);
        }
    }
    return gt;
}

Eigen::MatrixXd random_matrix(SplitMix64& rng, int rows, int cols, double scale) {
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
    }
    return m;
}

Eigen::MatrixXd dino_features(int image_index) {
    SplitMix64 rng(0x2000u + static_cast<std::uint64_t>(image_index));
    Eigen::MatrixXd f(kGrid * kGrid, kDinoChannels);
    for (int pr = 0; pr < kGrid; ++pr) {
        for (int pc = 0; pc < kGrid; ++pc) {
            const int cls = fixture_patch_class(image_index, pr, pc);
            Eigen::VectorXd v = Eigen::VectorXd::Zero(kDinoChannels);
            v(cls) = 10.0;
            v(5 + cls) = 3.0 * subfamily_sign(pc);
            for (int d = 0; d < kDinoChannels; ++d) v(d) += 0.05 * rng.normal();
            f.row(pr * kGrid + pc) = v.transpose();
        }
    }
    return f;
}

Eigen::MatrixXd image_tokens(int image_index) {
    SplitMix64 rng(0x3000u + static_cast<std::uint64_t>(image_index));
    Eigen::MatrixXd tokens(kGrid * kGrid + 1, kModelDim);
    // Global token: a small fixed vector shared by every image, so segment
    // embeddings differ mainly through the masked patches.
    Eigen::VectorXd g = Eigen::VectorXd::Zero(kModelDim);
    g(15) = 0.5;
    tokens.row(0) = g.transpose();
    for (int pr = 0; pr < kGrid; ++pr) {
        for (int pc = 0; pc < kGrid; ++pc) {
            const int cls = fixture_patch_class(image_index, pr, pc);
            Eigen::VectorXd v = Eigen::VectorXd::Zero(kModelDim);
            v(cls) = 8.0;
            v(5 + cls) = 0.3 * subfamily_sign(pc);
            for (int d = 0; d < kModelDim; ++d) v(d) += 0.05 * rng.normal();
            tokens.row(1 + pr * kGrid + pc) = v.transpose();
        }
    }
    return tokens;
}

void write_classes_file(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    for (const std::string& name : class_names()) out << name << "\n";
}

}  // namespace

int fixture_patch_class(int image_index, int pr, int pc) {
    switch (image_index) {
        case 0:  // img_a: sky over grass
            return pr < 3 ? 0 : 1;
        case 1:  // img_b: sky, water band, then building | grass
            if (pr < 2) return 0;
            if (pr < 5) return 2;
            return pc < 4 ? 3 : 1;
        default:  // img_c: building with a water pond
            if (pr >= 3 && pr <= 5 && pc >= 2 && pc <= 5) return 2;
            return 3;
    }
}

zeroguide::RgbImage fixture_image(int image_index) { return render_image(image_index); }

FixtureDataset write_e2e_fixture(const std::string& dir) {
    FixtureDataset fx;
    fx.dataset_root = (fs::path(dir) / "dataset").string();
    fx.replay_path = (fs::path(dir) / "replay.zgtr").string();
    fx.classes = class_names();
    fx.image_ids = image_ids();

    fs::create_directories(fs::path(fx.dataset_root) / "images");
    fs::create_directories(fs::path(fx.dataset_root) / "annotations");
    write_classes_file((fs::path(fx.dataset_root) / "classes.txt").string());

    std::vector<zeroguide::RgbImage> images;
    for (int i = 0; i < 3; ++i) {
        const zeroguide::RgbImage img = render_image(i);
        const zeroguide::IndexImage gt = render_annotation(i);
        zeroguide::write_rgb_png(
            img, (fs::path(fx.dataset_root) / "images" / (fx.image_ids[i] + ".png")).string());
        zeroguide::write_index_png(
            gt, (fs::path(fx.dataset_root) / "annotations" / (fx.image_ids[i] + ".png")).string());
        images.push_back(img);
    }

    zeroguide::TensorStore store;
    store.put("meta/dino", {3},
              {static_cast<float>(kGrid), static_cast<float>(kGrid),
               static_cast<float>(kDinoChannels)});
    store.put("meta/encoder", {7},
              {static_cast<float>(kLayers), static_cast<float>(kHeads),
               static_cast<float>(kKeyDim), static_cast<float>(kModelDim),
               static_cast<float>(kGrid), static_cast<float>(kGrid),
               static_cast<float>(kJointDim)});
    store.put("meta/text", {1}, {static_cast<float>(kJointDim)});
    store.put("meta/sbert", {1}, {static_cast<float>(kSbertDim)});

    SplitMix64 wrng(0xabcdef01u);
    for (int l = 1; l <= kLayers; ++l) {
        const std::string base = "enc/L" + std::to_string(l) + "/";
        // Keep the lower layers close to identity. They run unmasked, so any
        // weight they carry pours whole-image context into the residual that
        // the masked top layers cannot take back out, and the segment signal
        // drowns. The top four layers (the defaults the pipeline masks) get
        // real weight and decide the embedding.
        const bool top = l > kLayers - 4;
        const double attn_scale = top ? 0.05 : 0.01;
        const double mlp_scale = top ? 0.03 : 0.01;
        store.put_matrix(base + "Wq", random_matrix(wrng, kModelDim, kHeads * kKeyDim, 0.12));
        store.put_matrix(base + "Wk", random_matrix(wrng, kModelDim, kHeads * kKeyDim, 0.12));
        store.put_matrix(base + "Wv",
                         random_matrix(wrng, kModelDim, kHeads * kKeyDim, attn_scale));
        store.put_matrix(base + "Wo",
                         random_matrix(wrng, kHeads * kKeyDim, kModelDim, attn_scale));
        store.put_matrix(base + "W1", random_matrix(wrng, kModelDim, kHidden, mlp_scale));
        store.put_matrix(base + "W2", random_matrix(wrng, kHidden, kModelDim, mlp_scale));
    }
    store.put_matrix("proj", random_matrix(wrng, kModelDim, kJointDim, 0.25));

    for (int i = 0; i < 3; ++i) {
        const std::string key = zeroguide::image_content_key(images[static_cast<std::size_t>(i)]);
        const Eigen::MatrixXd feats = dino_features(i);
        std::vector<float> flat(static_cast<std::size_t>(feats.size()));
        for (int r = 0; r < feats.rows(); ++r) {
            for (int c = 0; c < feats.cols(); ++c) {
                flat[static_cast<std::size_t>(r) * kDinoChannels + static_cast<std::size_t>(c)] =
                    static_cast<float>(feats(r, c));
            }
        }
        store.put("dino/" + key + "/features", {kGrid, kGrid, kDinoChannels}, flat);
        store.put_matrix("img/" + key + "/tokens", image_tokens(i));
    }

    // Sentence space: one axis per class, plus an axis for a word unrelated
    // to every class.
    for (std::size_t c = 0; c < class_names().size(); ++c) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(kSbertDim);
        v(static_cast<Eigen::Index>(c)) = 1.0;
        store.put_vector("sbert/" + class_names()[c], v);
    }
    {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(kSbertDim);
        v(kSbertDim - 1) = 1.0;
        store.put_vector("sbert/static", v);
    }

    store.save(fx.replay_path);

    // Joint-space phrase vectors come from the recorded encoder itself: each
    // class phrase embeds as the encoding of that class's full region in the
    // first image that shows it. Retrieval then has honest targets.
    {
        const zeroguide::EncoderSet enc = zeroguide::open_replay_backend(fx.replay_path);
        zeroguide::GlobalSubtractionConfig subcfg;  // defaults: layers 21-24
        for (std::size_t c = 0; c < class_names().size(); ++c) {
            Eigen::VectorXd vec;
            bool found = false;
            for (int i = 0; i < 3 && !found; ++i) {
                zeroguide::SegmentMask mask = zeroguide::SegmentMask::zeros(kSize, kSize);
                bool any = false;
                for (int y = 0; y < kSize; ++y) {
                    for (int x = 0; x < kSize; ++x) {
                        if (fixture_patch_class(i, y / kCell, x / kCell) ==
                            static_cast<int>(c)) {
                            mask.set(y, x, 1.0f);
                            any = true;
                        }
                    }
                }
                if (!any) continue;
                vec = zeroguide::encode_segment(images[static_cast<std::size_t>(i)], mask,
                                                *enc.joint, subcfg);
                found = true;
            }
            if (!found) {
                // A phrase with no region anywhere (the held-out class):
                // a fixed far-off direction in joint space.
                SplitMix64 rng(0x5151u + static_cast<std::uint64_t>(c));
                vec = Eigen::VectorXd(kJointDim);
                for (int d = 0; d < kJointDim; ++d) vec(d) = rng.normal();
                vec *= 4.0 / vec.norm();
            }
            store.put_vector("text/" + class_names()[c], vec);
        }
        store.save(fx.replay_path);
    }

    // Self-check: every class region must retrieve its own phrase with a
    // clear margin, in every image where it appears, and phrase vectors must
    // stay well separated. Catches drift in the recorded constants early.
    {
        const zeroguide::EncoderSet enc = zeroguide::open_replay_backend(fx.replay_path);
        zeroguide::GlobalSubtractionConfig subcfg;
        std::vector<Eigen::VectorXd> bank;
        for (const std::string& name : class_names()) {
            bank.push_back(enc.text->embed(name));
        }
        for (std::size_t a = 0; a < bank.size(); ++a) {
            for (std::size_t b = a + 1; b < bank.size(); ++b) {
                const double cs = zeroguide::cosine_similarity(bank[a], bank[b]);
                if (cs > 0.6) {
                    throw std::runtime_error("fixture: phrase vectors for '" + class_names()[a] +
                                             "' and '" + class_names()[b] + "' too close (" +
                                             std::to_string(cs) + ")");
                }
            }
        }
        for (int i = 0; i < 3; ++i) {
            for (std::size_t c = 0; c < class_names().size(); ++c) {
                zeroguide::SegmentMask mask = zeroguide::SegmentMask::zeros(kSize, kSize);
                bool any = false;
                for (int y = 0; y < kSize; ++y) {
                    for (int x = 0; x < kSize; ++x) {
                        if (fixture_patch_class(i, y / kCell, x / kCell) ==
                            static_cast<int>(c)) {
                            mask.set(y, x, 1.0f);
                            any = true;
                        }
                    }
                }
                if (!any) continue;
                const Eigen::VectorXd seg =
                    zeroguide::encode_segment(images[static_cast<std::size_t>(i)], mask,
                                              *enc.joint, subcfg);
                double best = -2.0, second = -2.0;
                std::size_t best_c = 0;
                for (std::size_t k = 0; k < bank.size(); ++k) {
                    const double cs = zeroguide::cosine_similarity(seg, bank[k]);
                    if (cs > best) {
                        second = best;
                        best = cs;
                        best_c = k;
                    } else if (cs > second) {
                        second = cs;
                    }
                }
                if (best_c != c) {
                    throw std::runtime_error("fixture: image " + fx.image_ids[i] + " class '" +
                                             class_names()[c] + "' retrieves '" +
                                             class_names()[best_c] + "'");
                }
                if (best - second < 0.02) {
                    throw std::runtime_error("fixture: weak retrieval margin for '" +
                                             class_names()[c] + "' in " + fx.image_ids[i] + " (" +
                                             std::to_string(best - second) + ")");
                }
            }
        }
    }

    return fx;
}

const FixtureDataset& shared_fixture() {
    static TempDir dir("fixture");
    static FixtureDataset fx = write_e2e_fixture(dir.path());
    return fx;
}

}  // namespace zgtest
