#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hypobench/common/date.hpp"
#include "hypobench/data/hindcast.hpp"

namespace hypobench::prep {

inline constexpr double kHypoxiaThreshold = 2.0;

/// 1 iff do_bottom < threshold, or <= threshold when `inclusive`.
/// Throws DomainError on a negative concentration.
int binarize(double do_bottom, double threshold = kHypoxiaThreshold, bool inclusive = false);

struct Cyclical {
    double doy_sin = 0.0;
    double doy_cos = 1.0;
    double month_sin = 0.0;
    double month_cos = 1.0;
};

/// sin/cos of 2*pi*day/year_length and of 2*pi*(month-1)/12. Throws
/// DomainError when the day or month is out of range.
Cyclical encode_cyclical(double day_of_year, double year_length, int month);

inline constexpr std::size_t kDriverCount = 3;

/// Per depth bin, per driver (pea, soc, dcp_temp) min and max.
struct ScalerParams {
    std::vector<std::array<double, kDriverCount>> min;
    std::vector<std::array<double, kDriverCount>> max;

    std::size_t depth_bins() const { return min.size(); }
    bool operator==(const ScalerParams&) const = default;
};

/// Fits on ocean records only. Throws SplitError when a depth bin below the
/// set's depth_bins count has no ocean record.
ScalerParams fit_scaler(const data::HindcastSet& train);

/// (v - min) / (max - min) for one value; 0 when max == min. Not clipped.
double scale_value(double v, double min, double max);

/// Normalized (pea, soc, dcp_temp) of one record. Throws ContractError when
/// the record's depth bin was not fitted.
std::array<double, kDriverCount> apply_scaler(const ScalerParams& params, const data::HindcastRecord& record);

/// Records dated inside any period go to the second set. Throws SplitError
/// when the periods overlap or either side ends up empty.
std::pair<data::HindcastSet, data::HindcastSet> temporal_split(const data::HindcastSet& set,
                                                               const std::vector<DateRange>& test_periods);

struct FeatureOptions {
    bool hour_encoding = false;
};

/// Feature layout: pea_n, soc_n, dcp_n, doy_sin, doy_cos, month_sin,
/// month_cos, then hour_sin, hour_cos when enabled.
std::vector<std::string> feature_names(const FeatureOptions& options);

/// One contiguous run of daily ocean records of one cell.
struct CellSeries {
    std::int64_t cell_id = 0;
    int depth_bin = 0;
    Date first{};
    std::size_t days = 0;
    std::size_t features = 0;
    std::vector<double> x;          // [days, features]
    std::vector<double> do_bottom;  // [days]
};

/// Normalizes and encodes the ocean records of `set`, splitting each cell at
/// gaps in its dates. Land cells are dropped.
std::vector<CellSeries> build_series(const data::HindcastSet& set, const ScalerParams& scaler,
                                     const FeatureOptions& options);

struct SampleMeta {
    Date end_date{};     // last input day
    Date target_date{};  // day whose oxygen is labelled
    std::int64_t cell_id = 0;
    int depth_bin = 0;
    bool synthetic = false;

    bool operator==(const SampleMeta&) const = default;
};

struct SequenceDataset {
    std::size_t window = 0;
    std::size_t lead = 0;
    std::size_t features = 0;
    std::vector<double> x;  // [samples, window, features]
    std::vector<int> y;
    std::vector<SampleMeta> meta;

    std::size_t size() const { return y.size(); }
    std::size_t sample_width() const { return window * features; }
    std::size_t positives() const;
    bool operator==(const SequenceDataset&) const = default;
};

struct SequenceOptions {
    std::size_t window = 7;
    std::size_t lead = 1;
    double threshold = kHypoxiaThreshold;
    bool inclusive = false;
};

/// max(0, days - window - lead + 1).
std::size_t sequence_count(std::size_t days, std::size_t window, std::size_t lead);

struct SequenceBuild {
    SequenceDataset dataset;
    /// Runs shorter than window + lead, which yield no samples.
    std::size_t skipped_runs = 0;
};

/// For every run and end day t: inputs are days t-window+1..t, the label is
/// the binarized oxygen at day t+lead. Throws ConfigError when window is 0.
SequenceBuild build_sequences(const std::vector<CellSeries>& series, const SequenceOptions& options);

/// Everything between a raw hindcast and train/test sequences.
struct PreparedData {
    ScalerParams scaler;
    SequenceDataset train;
    SequenceDataset test;
    std::size_t skipped_runs = 0;
};

/// Split, fit the scaler on the training side, and build sequences for both
/// sides independently so no window crosses a split boundary.
PreparedData prepare(const data::HindcastSet& set, const std::vector<DateRange>& test_periods,
                     const SequenceOptions& sequence, const FeatureOptions& features);

std::string scaler_to_csv(const ScalerParams& params);
ScalerParams scaler_from_csv(const std::string& text);

std::string sequences_to_csv(const SequenceDataset& ds);
SequenceDataset sequences_from_csv(const std::string& text);

}  // namespace hypobench::prep
