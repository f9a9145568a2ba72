#include "hypobench/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hypobench/common/errors.hpp"
#include "hypobench/common/omp.hpp"
#include "hypobench/common/rng.hpp"

namespace hypobench::data {

namespace {

constexpr std::size_t kDrivers = 3;
constexpr double kDriverMix[kDrivers] = {1.0, 0.8, 0.6};
constexpr double kLatentCenter = 6.0;
constexpr double kCellOffsetSd = 0.6;
constexpr double kSeasonalAmplitude = 0.5;
constexpr double kGridStep = 0.05;

std::vector<DateRange> effective_seasons(const SynthConfig& c) {
    if (!c.seasons.empty()) {
        auto seasons = c.seasons;
        std::sort(seasons.begin(), seasons.end(), [](const DateRange& a, const DateRange& b) {
            return a.first < b.first;
        });
        return seasons;
    }
    const Date start = make_date(2019, 6, 1);
    return {{start, start + std::chrono::days(static_cast<long>(c.n_days) - 1)}};
}

// Physical units per depth bin: deeper bins are more stratified and consume
// more oxygen at the bed.
double driver_scale(std::size_t driver, int depth_bin) {
    static constexpr double base[kDrivers] = {40.0, 15.0, 0.02};
    static constexpr double slope[kDrivers] = {0.5, 0.3, 0.2};
    return base[driver] * (1.0 + slope[driver] * depth_bin);
}

struct CellSeries {
    bool land = false;
    int depth_bin = 0;
    double lon = 0.0;
    double lat = 0.0;
    std::vector<double> latent;  // [day, driver]
    std::vector<double> drawdown;
    std::vector<double> noise;
};

double population_sd(const std::vector<CellSeries>& cells, auto value) {
    double sum = 0.0, sum_sq = 0.0;
    std::size_t n = 0;
    for (const auto& c : cells) {
        if (c.land) continue;
        for (std::size_t d = 0; d < c.drawdown.size(); ++d) {
            const double v = value(c, d);
            sum += v;
            sum_sq += v * v;
            ++n;
        }
    }
    if (n == 0) return 0.0;
    const double mean = sum / static_cast<double>(n);
    return std::sqrt(std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean));
}

}  // namespace

void validate(const SynthConfig& c) {
    if (c.n_cells == 0) throw ConfigError("synth: n_cells must be positive");
    if (c.n_days < kMinSynthDays) {
        throw ConfigError("synth: n_days must be at least " + std::to_string(kMinSynthDays));
    }
    if (!(c.hypoxia_base_rate > 0.0 && c.hypoxia_base_rate < 0.5)) {
        throw ConfigError("synth: hypoxia_base_rate must lie in (0, 0.5)");
    }
    if (!(c.noise_scale >= 0.0) || !std::isfinite(c.noise_scale)) {
        throw ConfigError("synth: noise_scale must be finite and non-negative");
    }
    if (c.depth_bins == 0) throw ConfigError("synth: depth_bins must be positive");
    if (!(c.land_fraction >= 0.0 && c.land_fraction < 1.0)) {
        throw ConfigError("synth: land_fraction must lie in [0, 1)");
    }
    if (!(c.driver_gain >= 0.0) || !std::isfinite(c.driver_gain)) {
        throw ConfigError("synth: driver_gain must be finite and non-negative");
    }
    if (!(c.persistence >= 0.0 && c.persistence < 1.0)) throw ConfigError("synth: persistence must lie in [0, 1)");
    if (!(c.smoothing > 0.0 && c.smoothing <= 1.0)) throw ConfigError("synth: smoothing must lie in (0, 1]");
    if (!c.seasons.empty()) {
        const auto seasons = effective_seasons(c);
        std::size_t total = 0;
        for (std::size_t i = 0; i < seasons.size(); ++i) {
            if (seasons[i].last < seasons[i].first) throw ConfigError("synth: season ends before it starts");
            if (i > 0 && seasons[i - 1].overlaps(seasons[i])) throw ConfigError("synth: seasons overlap");
            total += static_cast<std::size_t>(seasons[i].days());
        }
        if (total != c.n_days) {
            throw ConfigError("synth: seasons cover " + std::to_string(total) + " days but n_days is " +
                              std::to_string(c.n_days));
        }
    }
}

HindcastSet generate_synthetic(const SynthConfig& config) {
    validate(config);
    const auto seasons = effective_seasons(config);
    std::vector<Date> dates;
    for (const auto& s : seasons) {
        for (Date d = s.first; d <= s.last; d += std::chrono::days(1)) dates.push_back(d);
    }
    const std::size_t n_days = dates.size();
    const std::size_t grid_cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(config.n_cells))));
    const std::size_t grid_rows = (config.n_cells + grid_cols - 1) / grid_cols;

    double mix_norm = 0.0;
    for (double w : kDriverMix) mix_norm += w * w;
    mix_norm = std::sqrt(mix_norm);
    const double rho = config.persistence;
    const double innovation = std::sqrt(1.0 - rho * rho);

    std::vector<CellSeries> cells(config.n_cells);
#pragma omp parallel for schedule(static)
    for (std::size_t cell = 0; cell < config.n_cells; ++cell) {
        Rng rng(config.rng_seed, cell);
        CellSeries& out = cells[cell];
        const std::size_t row = cell / grid_cols;
        out.lon = -94.0 + kGridStep * static_cast<double>(cell % grid_cols);
        out.lat = 28.5 + kGridStep * static_cast<double>(row);
        out.depth_bin = static_cast<int>(row * config.depth_bins / grid_rows);
        out.land = rng.uniform() < config.land_fraction;
        double offset[kDrivers];
        for (auto& o : offset) o = kCellOffsetSd * rng.normal();

        out.latent.assign(n_days * kDrivers, 0.0);
        out.drawdown.assign(n_days, 0.0);
        out.noise.assign(n_days, 0.0);
        std::size_t day = 0;
        for (const auto& season : seasons) {
            double ar[kDrivers];
            for (auto& a : ar) a = rng.normal();
            double ema = 0.0;
            const Date start = season.first - std::chrono::days(static_cast<long>(config.burn_in_days));
            bool first = true;
            for (Date d = start; d <= season.last; d += std::chrono::days(1)) {
                const double phase = 2.0 * std::numbers::pi * (day_of_year(d) - 120) / 365.25;
                const double seasonal = kSeasonalAmplitude * std::sin(phase);
                double z[kDrivers];
                double u = 0.0;
                for (std::size_t k = 0; k < kDrivers; ++k) {
                    if (!first) ar[k] = rho * ar[k] + innovation * rng.normal();
                    z[k] = offset[k] + seasonal + ar[k];
                    u += kDriverMix[k] * z[k];
                }
                u *= config.driver_gain / mix_norm;
                ema = first ? u : (1.0 - config.smoothing) * ema + config.smoothing * u;
                first = false;
                if (d >= season.first) {
                    for (std::size_t k = 0; k < kDrivers; ++k) out.latent[day * kDrivers + k] = z[k];
                    out.drawdown[day] = ema;
                    out.noise[day] = rng.normal();
                    ++day;
                }
            }
        }
    }

    double drawdown_sd = population_sd(cells, [](const CellSeries& c, std::size_t d) { return c.drawdown[d]; });
    if (!(drawdown_sd > 0.0)) drawdown_sd = 1.0;
    const double noise_sd = config.noise_scale * drawdown_sd;
    auto score = [&](const CellSeries& c, std::size_t d) { return c.drawdown[d] + noise_sd * c.noise[d]; };
    double score_sd = population_sd(cells, score);
    if (!(score_sd > 0.0)) score_sd = 1.0;

    std::vector<double> scores;
    for (const auto& c : cells) {
        if (c.land) continue;
        for (std::size_t d = 0; d < n_days; ++d) scores.push_back(score(c, d));
    }
    // Exactly round(rate * N) scores lie strictly above the threshold when
    // there are no ties at it.
    double threshold = 0.0;
    if (!scores.empty()) {
        const auto k = static_cast<std::size_t>(std::llround(config.hypoxia_base_rate * scores.size()));
        std::nth_element(scores.begin(), scores.begin() + static_cast<long>(k), scores.end(), std::greater<>());
        threshold = scores[k];
    }

    std::vector<HindcastRecord> records;
    records.reserve(config.n_cells * n_days);
    for (std::size_t cell = 0; cell < config.n_cells; ++cell) {
        const CellSeries& c = cells[cell];
        for (std::size_t d = 0; d < n_days; ++d) {
            HindcastRecord r;
            r.date = dates[d];
            r.cell_id = static_cast<std::int64_t>(cell);
            r.depth_bin = c.depth_bin;
            r.lon = c.lon;
            r.lat = c.lat;
            r.land = c.land;
            if (!c.land) {
                r.pea = driver_scale(0, c.depth_bin) * std::max(0.0, kLatentCenter + c.latent[d * kDrivers + 0]);
                r.soc = driver_scale(1, c.depth_bin) * std::max(0.0, kLatentCenter + c.latent[d * kDrivers + 1]);
                r.dcp_temp = driver_scale(2, c.depth_bin) * std::max(0.0, kLatentCenter + c.latent[d * kDrivers + 2]);
                const double margin = (threshold - score(c, d)) / score_sd;
                r.do_bottom = margin >= 0.0 ? 2.0 + 1.5 * margin : 2.0 * std::exp(0.75 * margin);
            }
            records.push_back(r);
        }
    }
    return make_hindcast_set(std::move(records));
}

}  // namespace hypobench::data
