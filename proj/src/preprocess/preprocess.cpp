#include "hypobench/preprocess/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "hypobench/common/csv.hpp"
#include "hypobench/common/errors.hpp"
#include "hypobench/common/io.hpp"

namespace hypobench::prep {

int binarize(double do_bottom, double threshold, bool inclusive) {
    if (!(do_bottom >= 0.0)) throw DomainError("binarize: negative oxygen concentration");
    return inclusive ? (do_bottom <= threshold ? 1 : 0) : (do_bottom < threshold ? 1 : 0);
}

Cyclical encode_cyclical(double day_of_year, double year_length, int month) {
    if (!(year_length > 0.0) || !(day_of_year >= 0.0 && day_of_year < year_length)) {
        throw DomainError("encode_cyclical: day of year outside [0, year length)");
    }
    if (month < 1 || month > 12) throw DomainError("encode_cyclical: month outside 1..12");
    const double a = 2.0 * std::numbers::pi * day_of_year / year_length;
    const double b = 2.0 * std::numbers::pi * (month - 1) / 12.0;
    return {std::sin(a), std::cos(a), std::sin(b), std::cos(b)};
}

ScalerParams fit_scaler(const data::HindcastSet& train) {
    ScalerParams p;
    constexpr double inf = std::numeric_limits<double>::infinity();
    p.min.assign(train.depth_bins, {inf, inf, inf});
    p.max.assign(train.depth_bins, {-inf, -inf, -inf});
    std::vector<bool> seen(train.depth_bins, false);
    for (const auto& r : train.records) {
        if (r.land) continue;
        const auto bin = static_cast<std::size_t>(r.depth_bin);
        const double v[kDriverCount] = {r.pea, r.soc, r.dcp_temp};
        for (std::size_t k = 0; k < kDriverCount; ++k) {
            p.min[bin][k] = std::min(p.min[bin][k], v[k]);
            p.max[bin][k] = std::max(p.max[bin][k], v[k]);
        }
        seen[bin] = true;
    }
    for (std::size_t b = 0; b < seen.size(); ++b) {
        if (!seen[b]) throw SplitError("fit_scaler: depth bin " + std::to_string(b) + " has no training records");
    }
    return p;
}

double scale_value(double v, double min, double max) { return max > min ? (v - min) / (max - min) : 0.0; }

std::array<double, kDriverCount> apply_scaler(const ScalerParams& params, const data::HindcastRecord& r) {
    const auto bin = static_cast<std::size_t>(r.depth_bin);
    if (bin >= params.depth_bins()) {
        throw ContractError("apply_scaler: depth bin " + std::to_string(r.depth_bin) + " was not fitted");
    }
    const double v[kDriverCount] = {r.pea, r.soc, r.dcp_temp};
    std::array<double, kDriverCount> out{};
    for (std::size_t k = 0; k < kDriverCount; ++k) out[k] = scale_value(v[k], params.min[bin][k], params.max[bin][k]);
    return out;
}

std::pair<data::HindcastSet, data::HindcastSet> temporal_split(const data::HindcastSet& set,
                                                               const std::vector<DateRange>& test_periods) {
    for (std::size_t i = 0; i < test_periods.size(); ++i) {
        for (std::size_t j = i + 1; j < test_periods.size(); ++j) {
            if (test_periods[i].overlaps(test_periods[j])) {
                throw SplitError("temporal_split: test periods " + format_date_range(test_periods[i]) + " and " +
                                 format_date_range(test_periods[j]) + " overlap");
            }
        }
    }
    std::vector<data::HindcastRecord> train, test;
    for (const auto& r : set.records) {
        const bool in_test = std::any_of(test_periods.begin(), test_periods.end(),
                                         [&](const DateRange& p) { return p.contains(r.date); });
        (in_test ? test : train).push_back(r);
    }
    if (train.empty()) throw SplitError("temporal_split: no records left for training");
    if (test.empty()) throw SplitError("temporal_split: no records fall inside the test periods");
    auto a = data::make_hindcast_set(std::move(train));
    auto b = data::make_hindcast_set(std::move(test));
    // Keep the full depth-bin count on both sides so scaler indices agree.
    a.depth_bins = b.depth_bins = set.depth_bins;
    return {std::move(a), std::move(b)};
}

std::vector<std::string> feature_names(const FeatureOptions& options) {
    std::vector<std::string> names{"pea_n", "soc_n", "dcp_n", "doy_sin", "doy_cos", "month_sin", "month_cos"};
    if (options.hour_encoding) {
        names.emplace_back("hour_sin");
        names.emplace_back("hour_cos");
    }
    return names;
}

std::vector<CellSeries> build_series(const data::HindcastSet& set, const ScalerParams& scaler,
                                     const FeatureOptions& options) {
    const std::size_t f = feature_names(options).size();
    std::vector<CellSeries> out;
    const auto& recs = set.records;
    for (std::size_t i = 0; i < recs.size();) {
        if (recs[i].land) {
            ++i;
            continue;
        }
        CellSeries s;
        s.cell_id = recs[i].cell_id;
        s.depth_bin = recs[i].depth_bin;
        s.first = recs[i].date;
        s.features = f;
        std::size_t j = i;
        while (j < recs.size() && recs[j].cell_id == s.cell_id && !recs[j].land &&
               recs[j].date == s.first + std::chrono::days(static_cast<long>(j - i))) {
            const auto& r = recs[j];
            const auto drivers = apply_scaler(scaler, r);
            const auto cyc = encode_cyclical(day_of_year(r.date), days_in_year(r.date), static_cast<int>(month_of(r.date)));
            s.x.insert(s.x.end(), drivers.begin(), drivers.end());
            s.x.insert(s.x.end(), {cyc.doy_sin, cyc.doy_cos, cyc.month_sin, cyc.month_cos});
            if (options.hour_encoding) {
                // Daily records are stamped at hour 0.
                s.x.insert(s.x.end(), {0.0, 1.0});
            }
            s.do_bottom.push_back(r.do_bottom);
            ++j;
        }
        s.days = j - i;
        out.push_back(std::move(s));
        i = j;
    }
    return out;
}

std::size_t SequenceDataset::positives() const {
    return static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
}

std::size_t sequence_count(std::size_t days, std::size_t window, std::size_t lead) {
    return days >= window + lead ? days - window - lead + 1 : 0;
}

SequenceBuild build_sequences(const std::vector<CellSeries>& series, const SequenceOptions& options) {
    if (options.window == 0) throw ConfigError("build_sequences: window must be at least 1");
    SequenceBuild out;
    auto& ds = out.dataset;
    ds.window = options.window;
    ds.lead = options.lead;
    ds.features = series.empty() ? 0 : series.front().features;
    for (const auto& s : series) {
        if (s.features != ds.features) throw ContractError("build_sequences: runs disagree on feature count");
        const std::size_t n = sequence_count(s.days, options.window, options.lead);
        if (n == 0) {
            ++out.skipped_runs;
            continue;
        }
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t end = k + options.window - 1;
            const std::size_t target = end + options.lead;
            const auto begin = s.x.begin() + static_cast<long>(k * s.features);
            ds.x.insert(ds.x.end(), begin, begin + static_cast<long>(options.window * s.features));
            ds.y.push_back(binarize(s.do_bottom[target], options.threshold, options.inclusive));
            ds.meta.push_back({s.first + std::chrono::days(static_cast<long>(end)),
                               s.first + std::chrono::days(static_cast<long>(target)), s.cell_id, s.depth_bin,
                               false});
        }
    }
    return out;
}

PreparedData prepare(const data::HindcastSet& set, const std::vector<DateRange>& test_periods,
                     const SequenceOptions& sequence, const FeatureOptions& features) {
    auto [train_set, test_set] = temporal_split(set, test_periods);
    PreparedData out;
    out.scaler = fit_scaler(train_set);
    auto train = build_sequences(build_series(train_set, out.scaler, features), sequence);
    auto test = build_sequences(build_series(test_set, out.scaler, features), sequence);
    const std::size_t f = feature_names(features).size();
    train.dataset.features = test.dataset.features = f;
    out.train = std::move(train.dataset);
    out.test = std::move(test.dataset);
    out.skipped_runs = train.skipped_runs + test.skipped_runs;
    return out;
}

// --- serialization -------------------------------------------------------------

namespace {

const char* const kDriverNames[kDriverCount] = {"pea", "soc", "dcp_temp"};

}  // namespace

std::string scaler_to_csv(const ScalerParams& p) {
    std::string out = "depth_bin,feature,min,max\n";
    for (std::size_t b = 0; b < p.depth_bins(); ++b) {
        for (std::size_t k = 0; k < kDriverCount; ++k) {
            append_csv_row(out, {std::to_string(b), kDriverNames[k], format_double(p.min[b][k]),
                                 format_double(p.max[b][k])});
        }
    }
    return out;
}

ScalerParams scaler_from_csv(const std::string& text) {
    const CsvTable t = CsvTable::parse(text);
    const auto c_bin = t.column("depth_bin"), c_feat = t.column("feature"), c_min = t.column("min"),
               c_max = t.column("max");
    ScalerParams p;
    std::vector<std::array<bool, kDriverCount>> seen;
    for (std::size_t row = 0; row < t.rows(); ++row) {
        const auto bin = t.integer(row, c_bin);
        if (bin < 0 || bin > 100000) throw ParseError("scaler row " + std::to_string(t.line(row)) + ": bad depth bin");
        const auto b = static_cast<std::size_t>(bin);
        std::size_t k = kDriverCount;
        for (std::size_t i = 0; i < kDriverCount; ++i) {
            if (t.field(row, c_feat) == kDriverNames[i]) k = i;
        }
        if (k == kDriverCount) throw ParseError("scaler row " + std::to_string(t.line(row)) + ": unknown feature");
        if (b >= p.min.size()) {
            p.min.resize(b + 1);
            p.max.resize(b + 1);
            seen.resize(b + 1);
        }
        p.min[b][k] = t.number(row, c_min);
        p.max[b][k] = t.number(row, c_max);
        if (p.max[b][k] < p.min[b][k]) throw IntegrityError("scaler: max below min for depth bin " + std::to_string(b));
        seen[b][k] = true;
    }
    for (const auto& s : seen) {
        if (!std::all_of(s.begin(), s.end(), [](bool v) { return v; })) {
            throw SchemaError("scaler: incomplete depth bin entry");
        }
    }
    return p;
}

namespace {

constexpr std::size_t kMetaColumns = 6;

}  // namespace

std::string sequences_to_csv(const SequenceDataset& ds) {
    std::vector<std::string> fields{"end_date", "target_date", "cell_id", "depth_bin", "synthetic", "label"};
    for (std::size_t t = 0; t < ds.window; ++t) {
        for (std::size_t f = 0; f < ds.features; ++f) {
            fields.push_back("t" + std::to_string(t) + "_f" + std::to_string(f));
        }
    }
    std::string out;
    append_csv_row(out, fields);
    const std::size_t width = ds.sample_width();
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& m = ds.meta[i];
        fields = {format_date(m.end_date), format_date(m.target_date), std::to_string(m.cell_id),
                  std::to_string(m.depth_bin), m.synthetic ? "1" : "0", std::to_string(ds.y[i])};
        for (std::size_t j = 0; j < width; ++j) fields.push_back(format_double(ds.x[i * width + j]));
        append_csv_row(out, fields);
    }
    return out;
}

SequenceDataset sequences_from_csv(const std::string& text) {
    const CsvTable t = CsvTable::parse(text);
    const auto c_end = t.column("end_date"), c_target = t.column("target_date"), c_cell = t.column("cell_id"),
               c_depth = t.column("depth_bin"), c_syn = t.column("synthetic"), c_label = t.column("label");
    const auto& header = t.header();
    if (header.size() < kMetaColumns + 1) throw SchemaError("sequence file has no feature columns");
    SequenceDataset ds;
    std::size_t first_feature = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i].rfind("t0_f", 0) == 0) {
            first_feature = std::min(first_feature, i);
            ++ds.features;
        }
    }
    const std::size_t width = header.size() - first_feature;
    if (ds.features == 0 || width % ds.features != 0) throw SchemaError("sequence file: malformed feature columns");
    ds.window = width / ds.features;
    for (std::size_t s = 0; s < ds.window; ++s) {
        for (std::size_t f = 0; f < ds.features; ++f) {
            const std::string expected = "t" + std::to_string(s) + "_f" + std::to_string(f);
            if (header[first_feature + s * ds.features + f] != expected) {
                throw SchemaError("sequence file: missing column '" + expected + "'");
            }
        }
    }
    for (std::size_t row = 0; row < t.rows(); ++row) {
        SampleMeta m;
        m.end_date = parse_date(t.field(row, c_end));
        m.target_date = parse_date(t.field(row, c_target));
        m.cell_id = t.integer(row, c_cell);
        m.depth_bin = static_cast<int>(t.integer(row, c_depth));
        const auto syn = t.integer(row, c_syn), label = t.integer(row, c_label);
        if ((syn != 0 && syn != 1) || (label != 0 && label != 1)) {
            throw ParseError("row " + std::to_string(t.line(row)) + ": synthetic and label must be 0 or 1");
        }
        m.synthetic = syn == 1;
        const auto lead = (m.target_date - m.end_date).count();
        if (lead < 0) throw IntegrityError("row " + std::to_string(t.line(row)) + ": target precedes window end");
        if (row == 0) ds.lead = static_cast<std::size_t>(lead);
        if (static_cast<std::size_t>(lead) != ds.lead) {
            throw IntegrityError("row " + std::to_string(t.line(row)) + ": inconsistent lead");
        }
        ds.meta.push_back(m);
        ds.y.push_back(static_cast<int>(label));
        for (std::size_t j = 0; j < width; ++j) ds.x.push_back(t.number(row, first_feature + j));
    }
    return ds;
}

}  // namespace hypobench::prep
