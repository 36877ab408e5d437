#include "figret/encoder.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "figret/error.hpp"

namespace figret {

std::string_view to_string(SimilarityKind k) {
    return k == SimilarityKind::cosine ? "cosine" : "dot";
}

SimilarityKind similarity_kind_from_string(std::string_view s) {
    if (s == "dot") return SimilarityKind::dot;
    if (s == "cosine") return SimilarityKind::cosine;
    throw ConfigError("unknown similarity kind '" + std::string(s) + "'");
}

EncoderConfig EncoderConfig::transformer_preset() {
    EncoderConfig c;
    c.learning_rate = 5e-6;
    return c;
}

EncoderModel::EncoderModel(std::uint32_t feature_dim, std::uint32_t embed_dim, SimilarityKind kind,
                           double temperature, std::uint64_t seed)
    : feature_dim_(feature_dim), embed_dim_(embed_dim), kind_(kind), temperature_(temperature), seed_(seed) {
    if (feature_dim == 0 || embed_dim == 0) throw ConfigError("encoder dimensions must be positive");
    if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ConfigError("temperature must be > 0");
    weights_.assign(static_cast<std::size_t>(feature_dim) * embed_dim, 0.0);
}

EncoderModel EncoderModel::initialize(const EncoderConfig& config, std::uint64_t seed) {
    EncoderModel m(config.feature_dim, config.embed_dim, config.kind, config.resolved_temperature(), seed);
    Rng rng(derive_seed(seed, {0x656e636f646572ULL}));
    const double sd = config.init_scale / std::sqrt(static_cast<double>(config.embed_dim));
    for (auto& w : m.weights_) w = sd * rng.normal();
    return m;
}

void EncoderModel::scale(double c) {
    for (auto& w : weights_) w *= c;
}

Embedding EncoderModel::project(const FeatureVector& f) const {
    Embedding out(embed_dim_, 0.0);
    for (const auto& [j, v] : f.entries) {
        if (j >= feature_dim_) throw DimensionError("feature index out of range");
        const auto col = column(j);
        for (std::uint32_t i = 0; i < embed_dim_; ++i) out[i] += v * col[i];
    }
    return out;
}

namespace {

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

void check_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) throw NumericError("non-finite embedding; model weights are corrupted");
}

}  // namespace

Embedding EncoderModel::embed(const FeatureVector& f) const {
    auto out = project(f);
    check_finite(out);
    if (kind_ == SimilarityKind::cosine) {
        const double n = norm2(out);
        if (n > 0.0)
            for (auto& x : out) x /= n;
    }
    return out;
}

void EncoderModel::apply_gradient(const SparseGradient& gradient, double learning_rate) {
    for (const auto& [j, g] : gradient) {
        if (j >= feature_dim_ || g.size() != embed_dim_) throw DimensionError("gradient shape mismatch");
        double* col = weights_.data() + static_cast<std::size_t>(j) * embed_dim_;
        for (std::uint32_t i = 0; i < embed_dim_; ++i) col[i] -= learning_rate * g[i];
    }
    ++version_;
}

namespace {

constexpr char kMagic[8] = {'F', 'G', 'R', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kFormat = 1;

template <typename T>
void put_le(std::string& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw ParseError("checkpoint truncated");
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, in.data() + pos, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    pos += sizeof(T);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

}  // namespace

// Layout: magic[8] | u32 format | u32 F | u32 m | u8 kind | f64 tau |
// u64 version | u64 seed | f64[m * F] row-major E, all little-endian.
void EncoderModel::save(const std::filesystem::path& path) const {
    std::string out;
    out.reserve(64 + weights_.size() * sizeof(double));
    out.append(kMagic, sizeof(kMagic));
    put_le(out, kFormat);
    put_le(out, feature_dim_);
    put_le(out, embed_dim_);
    put_le(out, static_cast<std::uint8_t>(kind_));
    put_le(out, temperature_);
    put_le(out, version_);
    put_le(out, seed_);
    for (std::uint32_t i = 0; i < embed_dim_; ++i)
        for (std::uint32_t j = 0; j < feature_dim_; ++j) put_le(out, weight(i, j));
    atomic_write(path, out);
}

EncoderModel EncoderModel::load(const std::filesystem::path& path) {
    const std::string in = read_file(path);
    if (in.size() < sizeof(kMagic) || std::memcmp(in.data(), kMagic, sizeof(kMagic)) != 0)
        throw ParseError(path.string() + ": not an encoder checkpoint");
    std::size_t pos = sizeof(kMagic);
    if (get_le<std::uint32_t>(in, pos) != kFormat) throw ParseError(path.string() + ": unsupported checkpoint format");
    const auto f = get_le<std::uint32_t>(in, pos);
    const auto m = get_le<std::uint32_t>(in, pos);
    const auto kind = get_le<std::uint8_t>(in, pos);
    if (kind > 1) throw ParseError(path.string() + ": bad similarity kind");
    const auto tau = get_le<double>(in, pos);
    const auto version = get_le<std::uint64_t>(in, pos);
    const auto seed = get_le<std::uint64_t>(in, pos);
    if (in.size() - pos != static_cast<std::size_t>(f) * m * sizeof(double))
        throw ParseError(path.string() + ": checkpoint size does not match header");
    EncoderModel model(f, m, static_cast<SimilarityKind>(kind), tau, seed);
    model.version_ = version;
    for (std::uint32_t i = 0; i < m; ++i)
        for (std::uint32_t j = 0; j < f; ++j) model.set_weight(i, j, get_le<double>(in, pos));
    return model;
}

double similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("similarity of vectors with different lengths");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double log_sigmoid_loss(double z) {
    // -log sigmoid(z) = log(1 + exp(-z))
    if (z > 0) return std::log1p(std::exp(-z));
    return -z + std::log1p(std::exp(z));
}

namespace {

// Pulls d loss / d(normalized u) back to d loss / d u.
std::vector<double> through_normalization(std::span<const double> raw, std::span<const double> unit,
                                          std::vector<double> grad_unit) {
    const double n = norm2(raw);
    if (n == 0.0) return std::vector<double>(raw.size(), 0.0);
    const double proj = similarity(unit, grad_unit);
    for (std::size_t i = 0; i < grad_unit.size(); ++i) grad_unit[i] = (grad_unit[i] - proj * unit[i]) / n;
    return grad_unit;
}

void accumulate(SparseGradient& grad, const FeatureVector& f, std::span<const double> side, std::size_t m) {
    for (const auto& [j, v] : f.entries) {
        auto& col = grad[j];
        if (col.empty()) col.assign(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) col[i] += v * side[i];
    }
}

}  // namespace

TripletLoss triplet_loss(const EncoderModel& model, const FeatureVector& query, const FeatureVector& positive,
                         const FeatureVector& negative) {
    const double tau = model.temperature();
    if (!(tau > 0.0)) throw ConfigError("temperature must be > 0");
    const std::size_t m = model.embed_dim();
    const bool cosine = model.kind() == SimilarityKind::cosine;

    const auto q_raw = model.project(query);
    const auto p_raw = model.project(positive);
    const auto n_raw = model.project(negative);
    const auto q = model.embed(query);
    const auto p = model.embed(positive);
    const auto n = model.embed(negative);

    TripletLoss out;
    out.sim_pos = similarity(q, p);
    out.sim_neg = similarity(q, n);
    const double z = (out.sim_pos - out.sim_neg) / tau;
    out.loss = log_sigmoid_loss(z);

    // d loss / dz = -(1 - sigmoid(z)) = -sigmoid(-z)
    const double dz = -1.0 / (1.0 + std::exp(z));
    const double c = dz / tau;

    std::vector<double> gq(m), gp(m), gn(m);
    for (std::size_t i = 0; i < m; ++i) {
        gq[i] = c * (p[i] - n[i]);
        gp[i] = c * q[i];
        gn[i] = -c * q[i];
    }
    if (cosine) {
        gq = through_normalization(q_raw, q, std::move(gq));
        gp = through_normalization(p_raw, p, std::move(gp));
        gn = through_normalization(n_raw, n, std::move(gn));
    }
    accumulate(out.gradient, query, gq, m);
    accumulate(out.gradient, positive, gp, m);
    accumulate(out.gradient, negative, gn, m);
    return out;
}

TripletLoss triplet_loss(const EncoderModel& model, std::string_view query, std::string_view positive,
                         std::string_view negative) {
    return triplet_loss(model, model.features(query), model.features(positive), model.features(negative));
}

StepResult train_step(EncoderModel& model, std::span<const GuidanceTriplet* const> batch, double learning_rate,
                      Rng& rng) {
    if (batch.empty()) throw PreconditionError("train_step needs a non-empty batch");
    SparseGradient total;
    double loss_sum = 0.0;
    const std::size_t m = model.embed_dim();
    for (const auto* t : batch) {
        if (t->positives.empty() || t->negatives.empty())
            throw PreconditionError("triplet " + t->id + " has an empty document set");
        const auto& pos = t->positives[rng.below(t->positives.size())];
        const auto& neg = t->negatives[rng.below(t->negatives.size())];
        auto r = triplet_loss(model, t->query.text, pos.text, neg.text);
        if (!std::isfinite(r.loss)) throw NumericError("non-finite loss on triplet " + t->id);
        loss_sum += r.loss;
        for (auto& [j, g] : r.gradient) {
            auto& col = total[j];
            if (col.empty()) col.assign(m, 0.0);
            for (std::size_t i = 0; i < m; ++i) col[i] += g[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (auto& [_, g] : total)
        for (auto& x : g) x *= inv;
    model.apply_gradient(total, learning_rate);
    return {loss_sum * inv, batch.size()};
}

StepResult train_step(EncoderModel& model, std::span<const GuidanceTriplet> batch, double learning_rate, Rng& rng) {
    std::vector<const GuidanceTriplet*> ptrs;
    ptrs.reserve(batch.size());
    for (const auto& t : batch) ptrs.push_back(&t);
    return train_step(model, std::span<const GuidanceTriplet* const>(ptrs), learning_rate, rng);
}

}  // namespace figret
