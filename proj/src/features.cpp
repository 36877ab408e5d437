#include "figret/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

namespace figret {

double FeatureVector::norm() const {
    double s = 0.0;
    for (const auto& [_, v] : entries) s += v * v;
    return std::sqrt(s);
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

FeatureVector featurize(std::string_view text, std::uint32_t dim) {
    const auto tokens = tokenize(text);
    std::map<std::uint32_t, double> counts;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        counts[static_cast<std::uint32_t>(fnv1a64(tokens[i]) % dim)] += 1.0;
        if (i + 1 < tokens.size()) {
            const std::string bigram = tokens[i] + ' ' + tokens[i + 1];
            counts[static_cast<std::uint32_t>(fnv1a64(bigram) % dim)] += 1.0;
        }
    }
    FeatureVector fv;
    fv.entries.assign(counts.begin(), counts.end());
    const double n = fv.norm();
    if (n > 0.0)
        for (auto& [_, v] : fv.entries) v /= n;
    return fv;
}

}  // namespace figret
