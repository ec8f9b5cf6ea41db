#include "zeroguide/labeling.hpp"

#include "zeroguide/tensor_store.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace zeroguide {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

}  // namespace

VocabularyBank build_bank(const std::vector<std::string>& phrases, const TextEncoder& encoder,
                          const std::string& source) {
    if (phrases.empty()) throw Error("build_bank: empty phrase list");
    VocabularyBank bank;
    bank.source = source;
    std::set<std::string> seen;
    for (const std::string& raw : phrases) {
        const std::string phrase = trim(raw);
        if (phrase.empty()) throw Error("build_bank: blank phrase in list");
        if (!seen.insert(phrase).second) {
            throw Error("build_bank: duplicate phrase '" + phrase + "'");
        }
        bank.phrases.push_back(phrase);
    }
    const int n = static_cast<int>(bank.phrases.size());
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd v = encoder.embed(bank.phrases[static_cast<std::size_t>(i)]);
        const double norm = v.norm();
        if (!(norm > 0.0) || !v.allFinite()) {
            throw Error("build_bank: degenerate embedding for '" +
                        bank.phrases[static_cast<std::size_t>(i)] + "'");
        }
        if (i == 0) bank.embeddings.resize(n, v.size());
        if (v.size() != bank.embeddings.cols()) {
            throw ShapeError("build_bank: embedding dimension changed mid-bank");
        }
        bank.embeddings.row(i) = (v / norm).transpose();
    }
    return bank;
}

std::vector<std::pair<std::string, double>> retrieve_top_k(const Eigen::VectorXd& embedding,
                                                           const VocabularyBank& bank, int k) {
    if (bank.size() == 0) throw Error("retrieve_top_k: empty bank");
    if (k < 1) throw Error("retrieve_top_k: k must be >= 1");
    if (embedding.size() != bank.embeddings.cols()) {
        throw ShapeError("retrieve_top_k: query dimension " + std::to_string(embedding.size()) +
                         " does not match bank dimension " +
                         std::to_string(bank.embeddings.cols()));
    }
    const double norm = embedding.norm();
    if (!(norm > 0.0) || !embedding.allFinite()) {
        throw Error("retrieve_top_k: degenerate query embedding");
    }
    const Eigen::VectorXd q = embedding / norm;
    const Eigen::VectorXd scores = bank.embeddings * q;  // rows are unit-norm
    std::vector<int> order(bank.size());
    for (std::size_t i = 0; i < bank.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores(a) > scores(b); });
    const int take = std::min<int>(k, static_cast<int>(bank.size()));
    std::vector<std::pair<std::string, double>> out;
    out.reserve(static_cast<std::size_t>(take));
    for (int i = 0; i < take; ++i) {
        out.emplace_back(bank.phrases[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])],
                         scores(order[static_cast<std::size_t>(i)]));
    }
    return out;
}

void save_bank(const VocabularyBank& bank, const std::string& tensor_path,
               const std::string& list_path) {
    TensorStore store;
    for (std::size_t i = 0; i < bank.size(); ++i) {
        store.put_vector("text/" + bank.phrases[i], bank.embeddings.row(static_cast<int>(i)).transpose());
    }
    store.save(tensor_path);
    std::ofstream list(list_path, std::ios::binary);
    if (!list) throw Error("save_bank: cannot write " + list_path);
    for (const std::string& p : bank.phrases) list << p << "\n";
}

VocabularyBank load_bank(const std::string& tensor_path, const std::string& list_path) {
    std::ifstream list(list_path, std::ios::binary);
    if (!list) throw Error("load_bank: cannot read " + list_path);
    VocabularyBank bank;
    bank.source = list_path;
    std::string line;
    while (std::getline(list, line)) {
        const std::string phrase = trim(line);
        if (!phrase.empty()) bank.phrases.push_back(phrase);
    }
    if (bank.phrases.empty()) throw Error("load_bank: empty phrase list " + list_path);
    const TensorStore store = TensorStore::load(tensor_path);
    for (std::size_t i = 0; i < bank.phrases.size(); ++i) {
        const Eigen::VectorXd v = store.vector("text/" + bank.phrases[i]);
        if (i == 0) bank.embeddings.resize(static_cast<int>(bank.phrases.size()), v.size());
        if (v.size() != bank.embeddings.cols()) {
            throw ShapeError("load_bank: inconsistent embedding dimensions");
        }
        bank.embeddings.row(static_cast<int>(i)) = v.transpose();
    }
    return bank;
}

RetrievalDecoder::RetrievalDecoder(VocabularyBank bank,
                                   std::shared_ptr<const SentenceEncoder> sentence)
    : bank_(std::move(bank)), sentence_(std::move(sentence)) {
    if (bank_.size() == 0) throw Error("retrieval decoder: empty bank");
    if (sentence_ == nullptr) throw Error("retrieval decoder: missing sentence encoder");
}

TextLabel RetrievalDecoder::decode(const Eigen::VectorXd& embedding) const {
    const auto top = retrieve_top_k(embedding, bank_, 1);
    TextLabel label;
    label.surface = top[0].first;
    label.score = top[0].second;
    label.decoder = name();
    // The bank row is the unit-normalized text embedding of the phrase.
    for (std::size_t i = 0; i < bank_.size(); ++i) {
        if (bank_.phrases[i] == label.surface) {
            label.joint = bank_.embeddings.row(static_cast<int>(i)).transpose();
            break;
        }
    }
    label.sentence = sentence_->embed(label.surface);
    return label;
}

std::unique_ptr<LabelDecoder> make_decoder(const std::string& name, VocabularyBank bank,
                                           std::shared_ptr<const SentenceEncoder> sentence) {
    if (name == "retrieval") {
        return std::make_unique<RetrievalDecoder>(std::move(bank), std::move(sentence));
    }
    if (name == "generative") {
        throw ConfigError(
            "decoder 'generative' requires the caption-optimizer adapter, which is not "
            "installed in this build; use --decoder retrieval");
    }
    throw ConfigError("unknown decoder '" + name + "'");
}

}  // namespace zeroguide
