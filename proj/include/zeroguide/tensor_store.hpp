#pragma once

#include "zeroguide/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace zeroguide {

// One named tensor: up to rank-4 dims and row-major f32 payload.
struct TensorEntry {
    std::string key;
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    std::size_t element_count() const {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
    Eigen::MatrixXd as_matrix() const;  // rank-2 only
    Eigen::VectorXd as_vector() const;  // rank-1 only
};

// Binary tensor container, file magic "ZGTR". A single file can carry patch
// features, per-layer weight or Q/K/V tensors, and embedding banks, each
// addressed by a string key ("qkv/L21/Q", "text/cat", ...).
//
// Layout, little-endian:
//   "ZGTR" | u32 version | u32 entry count
//   per entry: u16 key length | key bytes | u8 rank | rank x u32 dims | f32 data
class TensorStore {
public:
    static constexpr std::uint32_t kVersion = 1;

    TensorStore() = default;

    // Insertion order is preserved on write, so identical put sequences
    // produce byte-identical files.
    void put(const std::string& key, std::vector<std::uint32_t> dims, std::vector<float> data);
    void put_matrix(const std::string& key, const Eigen::MatrixXd& m);
    void put_vector(const std::string& key, const Eigen::VectorXd& v);

    bool contains(const std::string& key) const;
    const TensorEntry& get(const std::string& key) const;  // throws BackendError naming the key
    Eigen::MatrixXd matrix(const std::string& key) const;
    Eigen::VectorXd vector(const std::string& key) const;

    std::size_t size() const { return entries_.size(); }
    const std::vector<TensorEntry>& entries() const { return entries_; }

    // Keys sharing a prefix, in insertion order (used to enumerate banks).
    std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

    void save(const std::string& path) const;
    static TensorStore load(const std::string& path);

    // Fingerprint of the serialized content (cache keys, provenance).
    std::uint64_t content_hash() const;

private:
    std::vector<TensorEntry> entries_;
    std::map<std::string, std::size_t> index_;
};

}  // namespace zeroguide
