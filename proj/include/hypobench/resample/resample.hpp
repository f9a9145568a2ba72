#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hypobench/common/rng.hpp"
#include "hypobench/preprocess/preprocess.hpp"

namespace hypobench::resample {

struct SmoteConfig {
    std::size_t k_neighbors = 5;
    /// Minority count divided by majority count after resampling.
    double target_ratio = 1.0;
    std::uint64_t rng_seed = 0;
};

/// How one synthetic sample was made: x = x_base + mu * (x_neighbor - x_base).
/// Indices refer to the input dataset.
struct SmoteDraw {
    std::size_t base = 0;
    std::size_t neighbor = 0;
    double mu = 0.0;
};

struct SmoteResult {
    prep::SequenceDataset dataset;
    std::vector<SmoteDraw> draws;
};

/// ceil(target_ratio * majority) - minority, floored at zero. A product that
/// sits within 1e-9 relative of an integer is treated as that integer so that
/// e.g. 0.3 * 10 asks for 3 rather than 4.
std::size_t smote_count(std::size_t majority, std::size_t minority, double target_ratio);

/// For each of the given rows of `x` (row width `width`), the indices (into
/// `rows`) of its k nearest other rows by Euclidean distance, nearest first,
/// ties broken by the lower index.
std::vector<std::vector<std::size_t>> nearest_neighbors(const std::vector<double>& x, std::size_t width,
                                                        const std::vector<std::size_t>& rows, std::size_t k);

/// Oversamples the minority class in flattened window*feature space.
/// Original samples are kept unchanged and first; synthetic samples copy the
/// metadata of their base sample with `synthetic` set. Throws ConfigError on
/// a bad config and ResampleError when the minority class has no more than
/// k_neighbors samples. Returns the input unchanged when no samples are
/// needed.
SmoteResult smote(const prep::SequenceDataset& ds, const SmoteConfig& config);

/// weight_i = 1 / count(class of i). Throws WeightingError unless both
/// classes are present.
std::vector<double> batch_weights(const std::vector<int>& y);

/// `count` indices drawn with replacement with probability proportional to
/// the weights, by inverse transform on the cumulative sum.
std::vector<std::size_t> sample_indices(const std::vector<double>& weights, std::size_t count, Rng& rng);

/// sample_indices cut into consecutive batches of batch_size (the last one
/// may be short).
std::vector<std::vector<std::size_t>> sample_batches(const std::vector<double>& weights, std::size_t batch_size,
                                                     std::size_t count, std::uint64_t seed);

}  // namespace hypobench::resample
