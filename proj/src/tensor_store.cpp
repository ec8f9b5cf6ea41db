#include "zeroguide/tensor_store.hpp"

#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace zeroguide {

namespace {

void write_bytes(std::ostream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void write_le(std::ostream& out, T v) {
    static_assert(std::is_integral_v<T>);
    std::uint8_t buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf[i] = static_cast<std::uint8_t>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
    }
    write_bytes(out, buf, sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    std::uint8_t buf[sizeof(T)];
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!in) throw BackendError("tensor store: truncated file");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    }
    return static_cast<T>(v);
}

void write_f32_le(std::ostream& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    write_le<std::uint32_t>(out, bits);
}

float read_f32_le(std::istream& in) {
    std::uint32_t bits = read_le<std::uint32_t>(in);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

}  // namespace

Eigen::MatrixXd TensorEntry::as_matrix() const {
    if (dims.size() != 2) {
        throw ShapeError("tensor '" + key + "' has rank " + std::to_string(dims.size()) +
                         ", expected 2");
    }
    Eigen::MatrixXd m(dims[0], dims[1]);
    for (std::uint32_t r = 0; r < dims[0]; ++r) {
        for (std::uint32_t c = 0; c < dims[1]; ++c) {
            m(r, c) = static_cast<double>(data[static_cast<std::size_t>(r) * dims[1] + c]);
        }
    }
    return m;
}

Eigen::VectorXd TensorEntry::as_vector() const {
    if (dims.size() != 1) {
        throw ShapeError("tensor '" + key + "' has rank " + std::to_string(dims.size()) +
                         ", expected 1");
    }
    Eigen::VectorXd v(dims[0]);
    for (std::uint32_t i = 0; i < dims[0]; ++i) v(i) = static_cast<double>(data[i]);
    return v;
}

void TensorStore::put(const std::string& key, std::vector<std::uint32_t> dims,
                      std::vector<float> data) {
    if (key.empty() || key.size() > std::numeric_limits<std::uint16_t>::max()) {
        throw Error("tensor store: invalid key length");
    }
    if (dims.empty() || dims.size() > 255) {
        throw ShapeError("tensor store: rank must be in [1,255] for key '" + key + "'");
    }
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    if (n != data.size()) {
        throw ShapeError("tensor store: dims/data mismatch for key '" + key + "'");
    }
    if (index_.count(key)) {
        throw Error("tensor store: duplicate key '" + key + "'");
    }
    index_[key] = entries_.size();
    entries_.push_back(TensorEntry{key, std::move(dims), std::move(data)});
}

void TensorStore::put_matrix(const std::string& key, const Eigen::MatrixXd& m) {
    std::vector<float> data(static_cast<std::size_t>(m.rows()) * m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            data[static_cast<std::size_t>(r) * m.cols() + c] = static_cast<float>(m(r, c));
        }
    }
    put(key, {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())},
        std::move(data));
}

void TensorStore::put_vector(const std::string& key, const Eigen::VectorXd& v) {
    std::vector<float> data(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) data[i] = static_cast<float>(v(i));
    put(key, {static_cast<std::uint32_t>(v.size())}, std::move(data));
}

bool TensorStore::contains(const std::string& key) const { return index_.count(key) != 0; }

const TensorEntry& TensorStore::get(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) {
        throw BackendError("replay key not found: '" + key + "'");
    }
    return entries_[it->second];
}

Eigen::MatrixXd TensorStore::matrix(const std::string& key) const { return get(key).as_matrix(); }

Eigen::VectorXd TensorStore::vector(const std::string& key) const { return get(key).as_vector(); }

std::vector<std::string> TensorStore::keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& e : entries_) {
        if (e.key.rfind(prefix, 0) == 0) out.push_back(e.key);
    }
    return out;
}

void TensorStore::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("tensor store: cannot open '" + path + "' for writing");
    out.write("ZGTR", 4);
    write_le<std::uint32_t>(out, kVersion);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(entries_.size()));
    for (const auto& e : entries_) {
        write_le<std::uint16_t>(out, static_cast<std::uint16_t>(e.key.size()));
        write_bytes(out, e.key.data(), e.key.size());
        write_le<std::uint8_t>(out, static_cast<std::uint8_t>(e.dims.size()));
        for (auto d : e.dims) write_le<std::uint32_t>(out, d);
        for (float f : e.data) write_f32_le(out, f);
    }
    if (!out) throw Error("tensor store: write failed for '" + path + "'");
}

TensorStore TensorStore::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw BackendError("tensor store: cannot open '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "ZGTR", 4) != 0) {
        throw BackendError("tensor store: bad magic in '" + path + "'");
    }
    const auto version = read_le<std::uint32_t>(in);
    if (version != kVersion) {
        throw BackendError("tensor store: unsupported version " + std::to_string(version));
    }
    const auto count = read_le<std::uint32_t>(in);
    TensorStore store;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto key_len = read_le<std::uint16_t>(in);
        std::string key(key_len, '\0');
        in.read(key.data(), key_len);
        if (!in) throw BackendError("tensor store: truncated key");
        const auto rank = read_le<std::uint8_t>(in);
        std::vector<std::uint32_t> dims(rank);
        std::size_t n = 1;
        for (auto& d : dims) {
            d = read_le<std::uint32_t>(in);
            n *= d;
        }
        std::vector<float> data(n);
        for (auto& f : data) f = read_f32_le(in);
        store.put(key, std::move(dims), std::move(data));
    }
    return store;
}

std::uint64_t TensorStore::content_hash() const {
    std::ostringstream buf(std::ios::binary);
    write_le<std::uint32_t>(buf, kVersion);
    write_le<std::uint32_t>(buf, static_cast<std::uint32_t>(entries_.size()));
    for (const auto& e : entries_) {
        write_bytes(buf, e.key.data(), e.key.size());
        for (auto d : e.dims) write_le<std::uint32_t>(buf, d);
        for (float f : e.data) write_f32_le(buf, f);
    }
    const std::string s = buf.str();
    return fnv1a64(s.data(), s.size());
}

}  // namespace zeroguide
