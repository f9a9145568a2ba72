#include <cmath>
#include <set>

#include "doctest.h"
#include "hypobench/common/errors.hpp"
#include "hypobench/data/synth.hpp"
#include "hypobench/preprocess/preprocess.hpp"

using namespace hypobench;
using namespace hypobench::prep;

namespace {

data::HindcastRecord record(const char* date, std::int64_t cell, int depth, double pea, double do_bottom = 5.0) {
    data::HindcastRecord r;
    r.date = parse_date(date);
    r.cell_id = cell;
    r.depth_bin = depth;
    r.pea = pea;
    r.soc = 1.0;
    r.dcp_temp = 0.5;
    r.do_bottom = do_bottom;
    return r;
}

// A single cell with `days` contiguous daily records starting 2019-07-01.
CellSeries contiguous_run(std::size_t days, std::size_t features = 2) {
    CellSeries s;
    s.cell_id = 1;
    s.first = parse_date("2019-07-01");
    s.days = days;
    s.features = features;
    for (std::size_t d = 0; d < days; ++d) {
        for (std::size_t f = 0; f < features; ++f) s.x.push_back(static_cast<double>(d * 10 + f));
        s.do_bottom.push_back(d % 3 == 0 ? 1.0 : 4.0);
    }
    return s;
}

}  // namespace

TEST_CASE("binarize uses a strict threshold by default") {
    CHECK(binarize(1.5) == 1);
    CHECK(binarize(3.7) == 0);
    CHECK(binarize(2.0) == 0);
    CHECK(binarize(2.0, 2.0, true) == 1);
    CHECK(binarize(0.0) == 1);
    CHECK_THROWS_AS(binarize(-0.1), DomainError);
}

TEST_CASE("cyclical encoding examples") {
    const auto start = encode_cyclical(0, 365, 1);
    CHECK(start.doy_sin == 0.0);
    CHECK(start.doy_cos == 1.0);
    CHECK(start.month_sin == 0.0);
    CHECK(start.month_cos == 1.0);

    const auto quarter = encode_cyclical(91, 364, 4);
    CHECK(quarter.doy_sin == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(quarter.doy_cos) < 1e-12);
    CHECK(quarter.month_sin == doctest::Approx(1.0).epsilon(1e-12));

    const auto last = encode_cyclical(364, 365, 12);
    CHECK(std::abs(last.doy_sin - start.doy_sin) < 0.02);
    CHECK(std::abs(last.doy_cos - start.doy_cos) < 0.02);

    CHECK_THROWS_AS(encode_cyclical(365, 365, 1), DomainError);
    CHECK_THROWS_AS(encode_cyclical(-1, 365, 1), DomainError);
    CHECK_THROWS_AS(encode_cyclical(0, 365, 13), DomainError);
}

TEST_CASE("every cyclical pair lies on the unit circle") {
    for (int year_length : {365, 366}) {
        for (int day = 0; day < year_length; ++day) {
            const auto e = encode_cyclical(day, year_length, 1 + day % 12);
            CHECK(std::abs(e.doy_sin * e.doy_sin + e.doy_cos * e.doy_cos - 1.0) < 1e-9);
            CHECK(std::abs(e.month_sin * e.month_sin + e.month_cos * e.month_cos - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("min-max scaling examples") {
    CHECK(scale_value(2, 2, 6) == 0.0);
    CHECK(scale_value(4, 2, 6) == 0.5);
    CHECK(scale_value(6, 2, 6) == 1.0);
    CHECK(scale_value(5, 5, 5) == 0.0);
    CHECK(scale_value(8, 2, 6) == 1.5);
}

TEST_CASE("scaler is fit per depth bin on ocean records") {
    auto land = record("2019-07-01", 9, 0, 0.0, 0.0);
    land.land = true;
    land.soc = land.dcp_temp = 0.0;
    const auto set = data::make_hindcast_set({record("2019-07-01", 1, 0, 2), record("2019-07-02", 1, 0, 4),
                                              record("2019-07-03", 1, 0, 6), record("2019-07-01", 2, 1, 5),
                                              record("2019-07-02", 2, 1, 5), land});
    const auto p = fit_scaler(set);
    REQUIRE(p.depth_bins() == 2);
    CHECK(p.min[0][0] == 2.0);
    CHECK(p.max[0][0] == 6.0);
    CHECK(apply_scaler(p, record("2019-07-04", 1, 0, 4))[0] == 0.5);
    CHECK(apply_scaler(p, record("2019-07-04", 1, 0, 8))[0] == 1.5);
    CHECK(apply_scaler(p, record("2019-07-03", 2, 1, 5))[0] == 0.0);
    CHECK_THROWS_AS(apply_scaler(p, record("2019-07-04", 3, 2, 4)), ContractError);

    auto missing = set;
    missing.depth_bins = 3;
    CHECK_THROWS_AS(fit_scaler(missing), SplitError);
}

TEST_CASE("scaled training drivers lie in [0, 1]") {
    data::SynthConfig c;
    c.n_cells = 40;
    c.n_days = 30;
    const auto set = data::generate_synthetic(c);
    const auto p = fit_scaler(set);
    for (const auto& r : set.records) {
        for (double v : apply_scaler(p, r)) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("temporal split counts and disjointness") {
    std::vector<data::HindcastRecord> recs;
    std::size_t days_2009 = 0;
    for (Date d = make_date(2009, 1, 1); d <= make_date(2010, 12, 31); d += std::chrono::days(1)) {
        recs.push_back(record(format_date(d).c_str(), 1, 0, 1.0));
        if (year_of(d) == 2009) ++days_2009;
    }
    const auto set = data::make_hindcast_set(recs);
    const auto [train, test] = temporal_split(set, {parse_date_range("2010-01-01..2010-12-31")});
    CHECK(train.records.size() == days_2009);
    CHECK(test.records.size() == 365);
    std::set<std::pair<Date, std::int64_t>> keys;
    for (const auto& r : train.records) keys.insert({r.date, r.cell_id});
    for (const auto& r : test.records) CHECK(keys.count({r.date, r.cell_id}) == 0);

    CHECK_THROWS_AS(temporal_split(set, {parse_date_range("2009-01-01..2010-12-31")}), SplitError);
    CHECK_THROWS_AS(temporal_split(set, {parse_date_range("2011-01-01..2011-12-31")}), SplitError);
    CHECK_THROWS_AS(temporal_split(set, {parse_date_range("2010-01-01..2010-06-30"),
                                         parse_date_range("2010-06-01..2010-07-30")}),
                    SplitError);
}

TEST_CASE("sequence count examples") {
    CHECK(build_sequences({contiguous_run(10)}, {7, 1}).dataset.size() == 3);
    CHECK(build_sequences({contiguous_run(7)}, {7, 0}).dataset.size() == 1);
    const auto empty = build_sequences({contiguous_run(7)}, {7, 1});
    CHECK(empty.dataset.size() == 0);
    CHECK(empty.skipped_runs == 1);
    CHECK_THROWS_AS(build_sequences({contiguous_run(7)}, {0, 1}), ConfigError);
}

TEST_CASE("sequence counts match the closed form") {
    for (std::size_t days = 1; days <= 30; ++days) {
        for (std::size_t window = 1; window <= 10; ++window) {
            for (std::size_t lead = 0; lead <= 3; ++lead) {
                const std::size_t expected = days + 1 > window + lead ? days + 1 - window - lead : 0;
                const auto built = build_sequences({contiguous_run(days), contiguous_run(days)}, {window, lead});
                CHECK(built.dataset.size() == 2 * expected);
                CHECK(sequence_count(days, window, lead) == expected);
            }
        }
    }
}

TEST_CASE("windows hold the preceding days and labels come from the lead day") {
    const auto run = contiguous_run(10);
    const auto ds = build_sequences({run}, {3, 2}).dataset;
    REQUIRE(ds.size() == 6);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t t = 0; t < 3; ++t) CHECK(ds.x[(i * 3 + t) * 2] == static_cast<double>((i + t) * 10));
        CHECK(ds.y[i] == binarize(run.do_bottom[i + 2 + 2]));
        CHECK(ds.meta[i].end_date == run.first + std::chrono::days(static_cast<long>(i + 2)));
        CHECK(ds.meta[i].target_date == ds.meta[i].end_date + std::chrono::days(2));
    }
}

TEST_CASE("gaps split a cell into contiguous runs and land is dropped") {
    auto land = record("2019-07-01", 3, 0, 0.0, 0.0);
    land.land = true;
    land.soc = land.dcp_temp = 0.0;
    std::vector<data::HindcastRecord> recs{record("2019-07-01", 1, 0, 1), record("2019-07-02", 1, 0, 2),
                                           record("2019-07-04", 1, 0, 3), record("2019-07-01", 2, 0, 4), land};
    const auto set = data::make_hindcast_set(recs);
    const auto series = build_series(set, fit_scaler(set), {});
    REQUIRE(series.size() == 3);
    CHECK(series[0].days == 2);
    CHECK(series[1].days == 1);
    CHECK(series[1].first == parse_date("2019-07-04"));
    CHECK(series[2].cell_id == 2);
    CHECK(series[0].features == 7);
    CHECK(build_series(set, fit_scaler(set), {true})[0].features == 9);
}

TEST_CASE("no window crosses the train/test boundary") {
    data::SynthConfig c;
    c.n_cells = 30;
    c.n_days = 60;
    c.seasons = {parse_date_range("2019-06-01..2019-07-10"), parse_date_range("2020-06-01..2020-06-20")};
    const auto set = data::generate_synthetic(c);
    // Test period in the middle of the first season as well as the whole second.
    const std::vector<DateRange> periods{parse_date_range("2019-06-15..2019-06-25"),
                                         parse_date_range("2020-06-01..2020-06-20")};
    const auto prepared = prepare(set, periods, {}, {});
    auto in_test = [&](Date d) {
        for (const auto& p : periods) {
            if (p.contains(d)) return true;
        }
        return false;
    };
    CHECK(prepared.train.size() > 0);
    CHECK(prepared.test.size() > 0);
    for (const auto& m : prepared.train.meta) {
        CHECK_FALSE(in_test(m.target_date));
        for (int k = 0; k < 7; ++k) CHECK_FALSE(in_test(m.end_date - std::chrono::days(k)));
    }
    for (const auto& m : prepared.test.meta) {
        CHECK(in_test(m.target_date));
        for (int k = 0; k < 7; ++k) CHECK(in_test(m.end_date - std::chrono::days(k)));
    }
}

TEST_CASE("scaler and sequence files round-trip") {
    data::SynthConfig c;
    c.n_cells = 10;
    c.n_days = 20;
    const auto set = data::generate_synthetic(c);
    const auto p = fit_scaler(set);
    CHECK(scaler_from_csv(scaler_to_csv(p)) == p);
    const auto ds = build_sequences(build_series(set, p, {}), {}).dataset;
    CHECK(sequences_from_csv(sequences_to_csv(ds)) == ds);
}
