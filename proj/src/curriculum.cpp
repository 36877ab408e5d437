#include "figret/curriculum.hpp"

#include <algorithm>
#include <cmath>

#include "figret/error.hpp"
#include "figret/rng.hpp"

namespace figret {

void CurriculumConfig::validate() const {
    if (!(t1 > 0.0) || !(t2 > 0.0)) throw ConfigError("curriculum temperatures must be > 0");
    if (steps < 1) throw ConfigError("curriculum needs at least one step");
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw DomainError("softmax of an empty vector");
    const double mx = *std::max_element(logits.begin(), logits.end());
    if (!std::isfinite(mx)) throw DomainError("non-finite logit");
    double sum = 0.0;
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (auto& p : out) p /= sum;
    return out;
}

std::vector<double> p1_weights(std::span<const int> labels, double t1) {
    if (!(t1 > 0.0)) throw ConfigError("t1 must be > 0");
    if (labels.empty()) throw DomainError("p1_weights of an empty list");
    std::vector<double> logits;
    logits.reserve(labels.size());
    for (int y : labels) {
        if (y != 0 && y != 1) throw DomainError("labels must be 0 or 1");
        logits.push_back((2.0 * y - 1.0) / t1);
    }
    return softmax(logits);
}

std::vector<double> p2_weights(std::span<const double> scores, double t2) {
    if (!(t2 > 0.0)) throw ConfigError("t2 must be > 0");
    if (scores.empty()) throw DomainError("p2_weights of an empty list");
    std::vector<double> logits;
    logits.reserve(scores.size());
    for (double s : scores) logits.push_back(s / t2);
    return softmax(logits);
}

std::vector<double> combined_weights(std::span<const int> labels, std::span<const double> scores, std::size_t t,
                                     const CurriculumConfig& config) {
    config.validate();
    if (labels.size() != scores.size()) throw DomainError("labels and scores differ in length");
    if (labels.empty()) throw DomainError("combined_weights of an empty list");
    if (t > config.steps) throw DomainError("step " + std::to_string(t) + " beyond " + std::to_string(config.steps));
    const double remaining = 1.0 - static_cast<double>(t) / static_cast<double>(config.steps);
    const double b1 = remaining / config.t1;
    const double b2 = remaining / config.t2;
    std::vector<double> logits(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw DomainError("labels must be 0 or 1");
        logits[i] = b1 * (2.0 * labels[i] - 1.0) + b2 * scores[i];
    }
    return softmax(logits);
}

std::vector<std::size_t> sample_batch(std::span<const double> weights, std::size_t batch_size, std::uint64_t seed) {
    if (weights.empty()) throw DomainError("sample_batch needs weights");
    std::vector<double> cdf(weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) throw DomainError("weights must be finite and >= 0");
        acc += weights[i];
        cdf[i] = acc;
    }
    if (!(acc > 0.0)) throw DomainError("weights sum to zero");
    Rng rng(derive_seed(seed, {0x73616d706c65ULL}));
    std::vector<std::size_t> out;
    out.reserve(batch_size);
    for (std::size_t k = 0; k < batch_size; ++k) {
        const double u = rng.uniform() * acc;
        // First slot whose cdf exceeds u; it necessarily has positive weight.
        auto i = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        if (i == cdf.size()) {
            i = cdf.size() - 1;
            while (weights[i] == 0.0) --i;
        }
        out.push_back(i);
    }
    return out;
}

}  // namespace figret
