#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace figret {

/// 64-bit FNV-1a. Offset basis 14695981039346656037, prime 1099511628211.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Sparse, L2-normalized feature vector with strictly increasing indices.
struct FeatureVector {
    std::vector<std::pair<std::uint32_t, double>> entries;

    bool empty() const { return entries.empty(); }
    double norm() const;

    bool operator==(const FeatureVector&) const = default;
};

/// Lowercased alphanumeric tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Hashed unigram + bigram counts, L2-normalized. Empty text gives the zero
/// vector. `dim` must be a positive feature-space size.
FeatureVector featurize(std::string_view text, std::uint32_t dim);

}  // namespace figret
