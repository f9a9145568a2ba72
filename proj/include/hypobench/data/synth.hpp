#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hypobench/common/date.hpp"
#include "hypobench/data/hindcast.hpp"

namespace hypobench::data {

/// Synthetic hindcast generator settings.
///
/// Each ocean cell carries three latent drivers that follow unit-variance
/// AR(1) processes (coefficient `persistence`) around a cell offset and a
/// shared seasonal cycle. The observed drivers are affine in the latents and
/// scaled per depth bin. Oxygen drawdown D_t is an exponential moving average
/// (weight `smoothing`) of a fixed mix of the latents times `driver_gain`;
/// the hypoxia score is D_t plus `noise_scale` standard deviations of white
/// noise. The score threshold is the (1 - hypoxia_base_rate) quantile over all
/// ocean records, and bottom oxygen is a decreasing function of the score
/// that crosses 2 mg/L exactly at the threshold.
struct SynthConfig {
    std::size_t n_cells = 200;
    std::size_t n_days = 120;
    /// Inclusive date ranges; their lengths must sum to n_days.
    std::vector<DateRange> seasons;
    double hypoxia_base_rate = 0.1;
    std::uint64_t rng_seed = 7;
    double noise_scale = 0.2;
    std::size_t depth_bins = 3;
    double land_fraction = 0.0;
    double driver_gain = 1.0;
    double persistence = 0.92;
    double smoothing = 0.25;
    std::size_t burn_in_days = 60;
};

/// Shortest series the generator accepts (default window 7 plus one day).
inline constexpr std::size_t kMinSynthDays = 8;

/// Throws ConfigError when the configuration breaks an invariant.
void validate(const SynthConfig& config);

/// Deterministic in the config. Cells are generated from independent random
/// streams, so the result does not depend on the thread count.
HindcastSet generate_synthetic(const SynthConfig& config);

}  // namespace hypobench::data
