#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "figret/features.hpp"
#include "figret/rng.hpp"
#include "figret/triplet.hpp"

namespace figret {

enum class SimilarityKind : std::uint8_t { dot = 0, cosine = 1 };

std::string_view to_string(SimilarityKind k);
SimilarityKind similarity_kind_from_string(std::string_view s);

struct EncoderConfig {
    std::uint32_t feature_dim = 1u << 15;
    std::uint32_t embed_dim = 128;
    SimilarityKind kind = SimilarityKind::cosine;
    /// Loss temperature; unset means 1.0 for dot, 0.05 for cosine.
    std::optional<double> temperature;
    double learning_rate = 0.5;
    /// Standard deviation of initial weights is init_scale / sqrt(embed_dim).
    double init_scale = 1.0;

    double resolved_temperature() const {
        if (temperature) return *temperature;
        return kind == SimilarityKind::cosine ? 0.05 : 1.0;
    }

    /// Fine-tuning preset used for transformer retrievers (lr 5e-6). Kept for
    /// reference; it barely moves the hashed linear encoder.
    static EncoderConfig transformer_preset();
};

using Embedding = std::vector<double>;

/// Sparse gradient over embedding columns: feature index -> d loss / d E[:, j].
using SparseGradient = std::map<std::uint32_t, std::vector<double>>;

/// The trainable student: a dense embedding matrix E (embed_dim x feature_dim)
/// applied to hashed text features. Storage is feature-major so the columns a
/// sparse input touches are contiguous.
class EncoderModel {
public:
    EncoderModel(std::uint32_t feature_dim, std::uint32_t embed_dim, SimilarityKind kind, double temperature,
                 std::uint64_t seed = 0);

    /// Gaussian init, deterministic in seed.
    static EncoderModel initialize(const EncoderConfig& config, std::uint64_t seed);

    std::uint32_t feature_dim() const { return feature_dim_; }
    std::uint32_t embed_dim() const { return embed_dim_; }
    SimilarityKind kind() const { return kind_; }
    double temperature() const { return temperature_; }
    std::uint64_t version() const { return version_; }
    std::uint64_t seed() const { return seed_; }

    /// E[row, feature].
    double weight(std::uint32_t row, std::uint32_t feature) const {
        return weights_[static_cast<std::size_t>(feature) * embed_dim_ + row];
    }
    void set_weight(std::uint32_t row, std::uint32_t feature, double v) {
        weights_[static_cast<std::size_t>(feature) * embed_dim_ + row] = v;
    }
    std::span<const double> column(std::uint32_t feature) const {
        return {weights_.data() + static_cast<std::size_t>(feature) * embed_dim_, embed_dim_};
    }

    /// Multiplies every weight by c. Does not bump the version.
    void scale(double c);

    FeatureVector features(std::string_view text) const { return figret::featurize(text, feature_dim_); }

    /// E * f before normalization.
    Embedding project(const FeatureVector& f) const;

    /// E * featurize(text), L2-normalized in cosine mode. A zero projection
    /// stays zero. Throws NumericError on non-finite output.
    Embedding embed(const FeatureVector& f) const;
    Embedding embed(std::string_view text) const { return embed(features(text)); }

    /// E <- E - lr * gradient; bumps the version.
    void apply_gradient(const SparseGradient& gradient, double learning_rate);

    void save(const std::filesystem::path& path) const;
    static EncoderModel load(const std::filesystem::path& path);

    bool operator==(const EncoderModel&) const = default;

private:
    std::uint32_t feature_dim_;
    std::uint32_t embed_dim_;
    SimilarityKind kind_;
    double temperature_;
    std::uint64_t version_ = 0;
    std::uint64_t seed_;
    std::vector<double> weights_;
};

/// Dot product. Throws DimensionError on length mismatch.
double similarity(std::span<const double> a, std::span<const double> b);

struct TripletLoss {
    double loss = 0.0;
    double sim_pos = 0.0;
    double sim_neg = 0.0;
    SparseGradient gradient;
};

/// Pairwise logistic loss -log sigmoid((sim(x, d+) - sim(x, d-)) / tau) and
/// its exact gradient with respect to E.
TripletLoss triplet_loss(const EncoderModel& model, const FeatureVector& query, const FeatureVector& positive,
                         const FeatureVector& negative);
TripletLoss triplet_loss(const EncoderModel& model, std::string_view query, std::string_view positive,
                         std::string_view negative);

/// -log sigmoid(z), stable for large |z|.
double log_sigmoid_loss(double z);

struct StepResult {
    double mean_loss = 0.0;
    std::size_t size = 0;
};

/// One SGD step over the batch. For each triplet one positive and one
/// negative are drawn uniformly with `rng`. On a non-finite loss the model is
/// left untouched and NumericError names the triplet.
StepResult train_step(EncoderModel& model, std::span<const GuidanceTriplet* const> batch, double learning_rate,
                      Rng& rng);
StepResult train_step(EncoderModel& model, std::span<const GuidanceTriplet> batch, double learning_rate, Rng& rng);

}  // namespace figret
