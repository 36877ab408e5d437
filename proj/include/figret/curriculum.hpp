#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace figret {

enum class AnnealSchedule { linear };

struct CurriculumConfig {
    /// Temperature of the origin distribution (guidance vs preference).
    double t1 = 2.0;
    /// Temperature of the difficulty distribution over parent NDCG.
    double t2 = 0.2;
    std::size_t steps = 1;
    AnnealSchedule schedule = AnnealSchedule::linear;
    std::uint64_t seed = 0;

    void validate() const;
};

/// p_i proportional to exp((2 y_i - 1) / t1). Labels are 0 or 1.
std::vector<double> p1_weights(std::span<const int> labels, double t1);

/// p_i proportional to exp(s_i / t2).
std::vector<double> p2_weights(std::span<const double> scores, double t2);

/// Product of the two distributions with inverse temperatures annealed
/// linearly to zero:
///   p_i(t) ~ exp(b1(t) (2 y_i - 1) + b2(t) s_i),
///   b1(t) = (1 - t/steps) / t1,  b2(t) = (1 - t/steps) / t2.
/// At t = 0 it is the renormalized product of p1 and p2; at t = steps it is
/// uniform. Throws DomainError for t > steps.
std::vector<double> combined_weights(std::span<const int> labels, std::span<const double> scores, std::size_t t,
                                     const CurriculumConfig& config);

/// Softmax of arbitrary log-weights via log-sum-exp.
std::vector<double> softmax(std::span<const double> logits);

/// `batch_size` i.i.d. draws (with replacement) from `weights`, deterministic
/// per seed.
std::vector<std::size_t> sample_batch(std::span<const double> weights, std::size_t batch_size, std::uint64_t seed);

}  // namespace figret
