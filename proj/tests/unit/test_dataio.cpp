#include <filesystem>
#include <string>

#include "doctest.h"
#include "hypobench/common/errors.hpp"
#include "hypobench/data/hindcast.hpp"
#include "hypobench/data/synth.hpp"
#include "hypobench/preprocess/preprocess.hpp"

using namespace hypobench;
using namespace hypobench::data;

namespace {

SynthConfig small_config() {
    SynthConfig c;
    c.n_cells = 30;
    c.n_days = 40;
    c.seasons = {parse_date_range("2019-06-01..2019-06-20"), parse_date_range("2020-06-01..2020-06-20")};
    c.land_fraction = 0.2;
    return c;
}

double ocean_positive_fraction(const HindcastSet& set) {
    std::size_t pos = 0, n = 0;
    for (const auto& r : set.records) {
        if (r.land) continue;
        ++n;
        pos += static_cast<std::size_t>(prep::binarize(r.do_bottom));
    }
    return static_cast<double>(pos) / static_cast<double>(n);
}

const char* kThreeRows =
    "date,cell_id,depth_bin,lon,lat,pea,soc,dcp_temp,do_bottom,land\n"
    "2020-08-01,5,1,-92.5,29.0,120.5,30.25,0.05,1.5,0\n"
    "2020-08-02,5,1,-92.5,29.0,118,31,0.049,2.5,0\n"
    "2020-08-01,6,0,-92.45,29.0,0,0,0,0,1\n";

}  // namespace

TEST_CASE("same seed gives byte-identical output") {
    const auto c = small_config();
    CHECK(hindcast_to_csv(generate_synthetic(c)) == hindcast_to_csv(generate_synthetic(c)));
    auto other = c;
    other.rng_seed = 8;
    CHECK(hindcast_to_csv(generate_synthetic(other)) != hindcast_to_csv(generate_synthetic(c)));
}

TEST_CASE("no drawdown and no noise means no hypoxia") {
    auto c = small_config();
    c.noise_scale = 0.0;
    c.driver_gain = 0.0;
    const auto set = generate_synthetic(c);
    for (const auto& r : set.records) {
        if (!r.land) CHECK(prep::binarize(r.do_bottom) == 0);
    }
}

TEST_CASE("realized positive rate tracks the configured base rate") {
    SynthConfig c;
    c.n_cells = 200;
    c.n_days = 120;
    c.hypoxia_base_rate = 0.1;
    const double frac = ocean_positive_fraction(generate_synthetic(c));
    CHECK(frac >= 0.07);
    CHECK(frac <= 0.13);
    for (double rate : {0.05, 0.25, 0.4}) {
        c.hypoxia_base_rate = rate;
        c.n_cells = 50;
        const double f = ocean_positive_fraction(generate_synthetic(c));
        CHECK(f >= 0.7 * rate);
        CHECK(f <= 1.3 * rate);
    }
}

TEST_CASE("generated sets satisfy the record invariants") {
    const auto c = small_config();
    const auto set = generate_synthetic(c);
    CHECK(set.cells == c.n_cells);
    CHECK(set.days == c.n_days);
    CHECK(set.records.size() == c.n_cells * c.n_days);
    CHECK(set.depth_bins == c.depth_bins);
    std::size_t land = 0;
    for (const auto& r : set.records) {
        if (r.land) {
            ++land;
            CHECK(r.pea == 0.0);
            CHECK(r.soc == 0.0);
            CHECK(r.dcp_temp == 0.0);
        } else {
            CHECK(r.pea >= 0.0);
            CHECK(r.soc >= 0.0);
            CHECK(r.dcp_temp >= 0.0);
            CHECK(r.do_bottom >= 0.0);
        }
    }
    CHECK(land > 0);
    CHECK(land < set.records.size());
}

TEST_CASE("hypoxia follows the smoothed driver history") {
    // Lagged driver sums separate the classes, so the planted signal is
    // visible to a model that looks back over several days.
    SynthConfig c;
    c.n_cells = 100;
    c.n_days = 60;
    c.noise_scale = 0.0;
    const auto set = generate_synthetic(c);
    double mean_pos = 0.0, mean_neg = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 7; i < set.records.size(); ++i) {
        const auto& r = set.records[i];
        if (set.records[i - 7].cell_id != r.cell_id || r.depth_bin != 0) continue;
        double history = 0.0;
        for (std::size_t k = 1; k <= 7; ++k) history += set.records[i - k].pea / 40.0;
        if (prep::binarize(r.do_bottom)) {
            mean_pos += history;
            ++n_pos;
        } else {
            mean_neg += history;
            ++n_neg;
        }
    }
    REQUIRE(n_pos > 0);
    REQUIRE(n_neg > 0);
    CHECK(mean_pos / n_pos > mean_neg / n_neg + 3.0);
}

TEST_CASE("invalid synth configs are rejected") {
    SynthConfig c;
    c.hypoxia_base_rate = 0.5;
    CHECK_THROWS_AS(generate_synthetic(c), ConfigError);
    c = SynthConfig{};
    c.hypoxia_base_rate = 0.0;
    CHECK_THROWS_AS(generate_synthetic(c), ConfigError);
    c = SynthConfig{};
    c.n_days = 7;
    CHECK_THROWS_AS(generate_synthetic(c), ConfigError);
    c = SynthConfig{};
    c.seasons = {parse_date_range("2019-06-01..2019-06-30")};
    CHECK_THROWS_AS(generate_synthetic(c), ConfigError);
    c.n_days = 60;
    c.seasons = {parse_date_range("2019-06-01..2019-07-10"), parse_date_range("2019-07-01..2019-07-20")};
    CHECK_THROWS_AS(generate_synthetic(c), ConfigError);
}

TEST_CASE("write then load reproduces the set") {
    const auto set = generate_synthetic(small_config());
    const auto path = std::filesystem::temp_directory_path() / "hypobench_hindcast_roundtrip.csv";
    write_hindcast(path, set);
    CHECK(load_hindcast(path) == set);
    std::filesystem::remove(path);
}

TEST_CASE("load_hindcast reads a well-formed file") {
    const auto set = hindcast_from_csv(kThreeRows);
    CHECK(set.records.size() == 3);
    CHECK(set.cells == 2);
    CHECK(set.days == 2);
    CHECK(set.depth_bins == 2);
    CHECK(set.records[0].soc == 30.25);
    CHECK(set.records[2].land);
}

TEST_CASE("columns may appear in any order") {
    const std::string text =
        "land,date,cell_id,depth_bin,lon,lat,pea,soc,dcp_temp,do_bottom\n"
        "0,2020-08-01,5,1,-92.5,29.0,120.5,30.25,0.05,1.5\n";
    CHECK(hindcast_from_csv(text).records[0].do_bottom == 1.5);
}

TEST_CASE("a missing column is named") {
    const std::string text =
        "date,cell_id,depth_bin,lon,lat,pea,dcp_temp,do_bottom,land\n"
        "2020-08-01,5,1,-92.5,29.0,120.5,0.05,1.5,0\n";
    try {
        hindcast_from_csv(text);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("soc") != std::string::npos);
    }
}

TEST_CASE("duplicate keys are an integrity error") {
    const std::string text = std::string(kThreeRows) + "2020-08-01,5,1,-92.5,29.0,1,1,0.01,3,0\n";
    CHECK_THROWS_AS(hindcast_from_csv(text), IntegrityError);
}

TEST_CASE("non-numeric fields report the row") {
    const std::string text =
        "date,cell_id,depth_bin,lon,lat,pea,soc,dcp_temp,do_bottom,land\n"
        "2020-08-01,5,1,-92.5,29.0,120.5,30.25,0.05,1.5,0\n"
        "2020-08-02,5,1,-92.5,29.0,abc,30.25,0.05,1.5,0\n";
    try {
        hindcast_from_csv(text);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string what = e.what();
        CHECK(what.find("row 3") != std::string::npos);
        CHECK(what.find("pea") != std::string::npos);
    }
}

TEST_CASE("record invariants are enforced on load") {
    const std::string header = "date,cell_id,depth_bin,lon,lat,pea,soc,dcp_temp,do_bottom,land\n";
    CHECK_THROWS_AS(hindcast_from_csv(header + "2020-08-01,1,0,0,0,-1,1,1,3,0\n"), DomainError);
    CHECK_THROWS_AS(hindcast_from_csv(header + "2020-08-01,1,0,0,0,1,1,1,3,1\n"), IntegrityError);
    CHECK_THROWS_AS(hindcast_from_csv(header + "2020-08-01,1,0,0,0,1,1,1,3,0\n2020-08-02,1,1,0,0,1,1,1,3,0\n"),
                    IntegrityError);
    CHECK_THROWS_AS(hindcast_from_csv(header + "2020-13-01,1,0,0,0,1,1,1,3,0\n"), ParseError);
    CHECK_THROWS_AS(hindcast_from_csv(header + "2020-08-01,1,0,0,0,1,1,1,3,2\n"), ParseError);
}
