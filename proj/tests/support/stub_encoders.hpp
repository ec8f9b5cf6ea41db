#pragma once

// Tiny in-memory encoder stubs for tests that need a text or sentence space
// without a replay file.

#include "zeroguide/encoders.hpp"
#include "zeroguide/types.hpp"

#include <map>
#include <string>

namespace zgtest {

class MapTextEncoder : public zeroguide::TextEncoder {
public:
    MapTextEncoder(std::map<std::string, Eigen::VectorXd> table, int dim)
        : table_(std::move(table)), dim_(dim) {}

    int dim() const override { return dim_; }

    Eigen::VectorXd embed(const std::string& text) const override {
        auto it = table_.find(text);
        if (it == table_.end()) throw zeroguide::BackendError("stub text encoder: '" + text + "'");
        return it->second;
    }

private:
    std::map<std::string, Eigen::VectorXd> table_;
    int dim_;
};

class MapSentenceEncoder : public zeroguide::SentenceEncoder {
public:
    MapSentenceEncoder(std::map<std::string, Eigen::VectorXd> table, int dim)
        : table_(std::move(table)), dim_(dim) {}

    int dim() const override { return dim_; }

    Eigen::VectorXd embed(const std::string& text) const override {
        auto it = table_.find(text);
        if (it == table_.end()) {
            throw zeroguide::BackendError("stub sentence encoder: '" + text + "'");
        }
        return it->second;
    }

private:
    std::map<std::string, Eigen::VectorXd> table_;
    int dim_;
};

}  // namespace zgtest
