#pragma once

#include "zeroguide/encoders.hpp"
#include "zeroguide/types.hpp"

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace zeroguide {

// Ordered phrase list with unit-normalized joint-space embeddings, one row
// per phrase. Rank ties everywhere resolve in bank order.
struct VocabularyBank {
    std::vector<std::string> phrases;
    Eigen::MatrixXd embeddings;  // size() x dim, unit rows
    std::string source;

    std::size_t size() const { return phrases.size(); }
};

// Embeds each phrase (trimmed) and normalizes. Throws on an empty list,
// an empty phrase, or duplicates after trimming.
VocabularyBank build_bank(const std::vector<std::string>& phrases, const TextEncoder& encoder,
                          const std::string& source);

// Top-k phrases by cosine to the query embedding, descending; ties keep bank
// order. k is clamped to the bank size.
std::vector<std::pair<std::string, double>> retrieve_top_k(const Eigen::VectorXd& embedding,
                                                           const VocabularyBank& bank, int k);

// Bank persistence: tensor container holding "text/<phrase>" rows plus a
// sidecar phrase list, one phrase per line, in bank order.
void save_bank(const VocabularyBank& bank, const std::string& tensor_path,
               const std::string& list_path);
VocabularyBank load_bank(const std::string& tensor_path, const std::string& list_path);

// A decoded label: surface text plus its embeddings on both text sides.
struct TextLabel {
    std::string surface;
    Eigen::VectorXd joint;     // joint-space embedding of the surface text
    Eigen::VectorXd sentence;  // sentence-space embedding
    std::string decoder;
    double score = 0.0;
};

// Decoder contract: joint embedding in, label out. Implementations must be
// deterministic and pure.
class LabelDecoder {
public:
    virtual ~LabelDecoder() = default;
    virtual std::string name() const = 0;
    virtual TextLabel decode(const Eigen::VectorXd& embedding) const = 0;
};

// Default decoder: nearest bank phrase by cosine.
class RetrievalDecoder : public LabelDecoder {
public:
    RetrievalDecoder(VocabularyBank bank, std::shared_ptr<const SentenceEncoder> sentence);
    std::string name() const override { return "retrieval"; }
    TextLabel decode(const Eigen::VectorXd& embedding) const override;
    const VocabularyBank& bank() const { return bank_; }

private:
    VocabularyBank bank_;
    std::shared_ptr<const SentenceEncoder> sentence_;
};

// Decoder factory for the CLI names. "generative" names the optional caption
// adapter, which is not installed in this build; selecting it is a config
// error so runs fail before any work starts.
std::unique_ptr<LabelDecoder> make_decoder(const std::string& name, VocabularyBank bank,
                                           std::shared_ptr<const SentenceEncoder> sentence);

// A segment with everything downstream stages need.
struct LabeledSegment {
    int node_id = -1;  // merge-tree node backing the mask
    SegmentMask mask;
    Eigen::VectorXd embedding;  // joint-space segment embedding
    TextLabel label;
};

}  // namespace zeroguide
