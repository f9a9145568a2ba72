#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "hypobench/common/errors.hpp"
#include "hypobench/resample/resample.hpp"

using namespace hypobench;
using namespace hypobench::resample;
using prep::SequenceDataset;

namespace {

SequenceDataset random_dataset(std::size_t majority, std::size_t minority, Rng& rng, std::size_t window = 2,
                               std::size_t features = 3) {
    SequenceDataset ds;
    ds.window = window;
    ds.features = features;
    const std::size_t n = majority + minority;
    for (std::size_t i = 0; i < n; ++i) {
        const int label = i % 3 == 0 && i / 3 < minority ? 1 : 0;
        ds.y.push_back(label);
        ds.meta.push_back({make_date(2019, 7, 1), make_date(2019, 7, 2), static_cast<std::int64_t>(i), 0, false});
        for (std::size_t c = 0; c < window * features; ++c) ds.x.push_back(rng.uniform(-1.0, 1.0) + label);
    }
    // Fix up class sizes exactly.
    std::size_t pos = ds.positives();
    for (std::size_t i = 0; pos < minority && i < n; ++i) {
        if (ds.y[i] == 0) {
            ds.y[i] = 1;
            ++pos;
        }
    }
    return ds;
}

// All-pairs squared distances among the minority rows, computed directly.
std::vector<std::vector<double>> brute_force_distances(const SequenceDataset& ds, const std::vector<std::size_t>& rows) {
    const std::size_t w = ds.sample_width();
    std::vector<std::vector<double>> d(rows.size(), std::vector<double>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows.size(); ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < w; ++c) {
                const double diff = ds.x[rows[i] * w + c] - ds.x[rows[j] * w + c];
                s += diff * diff;
            }
            d[i][j] = s;
        }
    }
    return d;
}

}  // namespace

TEST_CASE("interpolation examples") {
    SequenceDataset ds;
    ds.window = 2;
    ds.features = 2;
    // Minority: one sample at the origin and two at (1,1,1,1); k = 1.
    ds.x = {0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 5, 5, 5, 5, 6, 6, 6, 6, 7, 7, 7, 7, 8, 8, 8, 8};
    ds.y = {1, 1, 1, 0, 0, 0, 0};
    ds.meta.resize(7);
    const auto r = smote(ds, {1, 1.0, 3});
    REQUIRE(r.draws.size() == 1);
    const auto& d = r.draws[0];
    for (std::size_t c = 0; c < 4; ++c) {
        const double xb = ds.x[d.base * 4 + c];
        const double xn = ds.x[d.neighbor * 4 + c];
        CHECK(r.dataset.x[7 * 4 + c] == xb + d.mu * (xn - xb));
    }
    // mu = 0.5 between 0 and 1 is the midpoint; mu = 0 is the base itself.
    CHECK(0.0 + 0.5 * (1.0 - 0.0) == 0.5);
    CHECK(r.dataset.y.back() == 1);
    CHECK(r.dataset.meta.back().synthetic);
}

TEST_CASE("synthetic count follows the ratio formula") {
    CHECK(smote_count(100, 10, 1.0) == 90);
    CHECK(smote_count(100, 10, 0.5) == 40);
    CHECK(smote_count(10, 1, 0.3) == 2);
    CHECK(smote_count(7, 1, 0.5) == 3);
    CHECK(smote_count(100, 60, 0.5) == 0);

    Rng rng(1);
    const auto ds = random_dataset(100, 10, rng);
    const auto r = smote(ds, {5, 1.0, 9});
    CHECK(r.dataset.size() == 200);
    CHECK(r.dataset.positives() == 100);
    CHECK(r.draws.size() == 90);
}

TEST_CASE("originals are preserved first and unchanged") {
    Rng rng(2);
    const auto ds = random_dataset(60, 12, rng);
    const auto r = smote(ds, {3, 0.8, 4});
    const std::size_t w = ds.sample_width();
    REQUIRE(r.dataset.size() >= ds.size());
    CHECK(std::equal(ds.x.begin(), ds.x.end(), r.dataset.x.begin()));
    CHECK(std::equal(ds.y.begin(), ds.y.end(), r.dataset.y.begin()));
    for (std::size_t i = ds.size(); i < r.dataset.size(); ++i) CHECK(r.dataset.meta[i].synthetic);
    CHECK(r.dataset.x.size() == r.dataset.size() * w);
}

TEST_CASE("synthetic samples sit on the segment to a true nearest neighbour") {
    Rng rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        const auto ds = random_dataset(80, 15 + trial, rng, 3, 2);
        const std::size_t k = 1 + static_cast<std::size_t>(trial);
        const auto r = smote(ds, {k, 1.0, static_cast<std::uint64_t>(trial)});
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (ds.y[i] == 1) rows.push_back(i);
        }
        const auto dist = brute_force_distances(ds, rows);
        const std::size_t w = ds.sample_width();
        for (std::size_t s = 0; s < r.draws.size(); ++s) {
            const auto& d = r.draws[s];
            CHECK(d.mu >= 0.0);
            CHECK(d.mu < 1.0);
            for (std::size_t c = 0; c < w; ++c) {
                const double v = r.dataset.x[(ds.size() + s) * w + c];
                const double a = ds.x[d.base * w + c], b = ds.x[d.neighbor * w + c];
                CHECK(v >= std::min(a, b) - 1e-12);
                CHECK(v <= std::max(a, b) + 1e-12);
            }
            const auto bi = static_cast<std::size_t>(std::find(rows.begin(), rows.end(), d.base) - rows.begin());
            const auto ni = static_cast<std::size_t>(std::find(rows.begin(), rows.end(), d.neighbor) - rows.begin());
            REQUIRE(bi < rows.size());
            REQUIRE(ni < rows.size());
            CHECK(bi != ni);
            // Fewer than k other minority samples are strictly closer.
            std::size_t closer = 0;
            for (std::size_t j = 0; j < rows.size(); ++j) {
                if (j != bi && dist[bi][j] < dist[bi][ni]) ++closer;
            }
            CHECK(closer < k);
        }
    }
}

TEST_CASE("neighbour lists match a brute-force ranking with index tie-breaks") {
    std::vector<double> x{0, 1, 1, 3, 3, 3.5};  // width 1; rows 1 and 2 tie with row 0
    const auto nn = nearest_neighbors(x, 1, {0, 1, 2, 3, 4, 5}, 2);
    CHECK(nn[0] == std::vector<std::size_t>{1, 2});
    CHECK(nn[3] == std::vector<std::size_t>{4, 5});
    CHECK(nn[5] == std::vector<std::size_t>{3, 4});
}

TEST_CASE("reshaping a flattened original is the identity") {
    Rng rng(5);
    const auto ds = random_dataset(30, 10, rng, 4, 3);
    const auto r = smote(ds, {2, 1.0, 1});
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t t = 0; t < 4; ++t) {
            for (std::size_t f = 0; f < 3; ++f) CHECK(r.dataset.x[(i * 4 + t) * 3 + f] == ds.x[(i * 4 + t) * 3 + f]);
        }
    }
}

TEST_CASE("smote is deterministic and validates its inputs") {
    Rng rng(6);
    const auto ds = random_dataset(50, 8, rng);
    CHECK(smote(ds, {3, 1.0, 11}).dataset == smote(ds, {3, 1.0, 11}).dataset);
    CHECK_THROWS_AS(smote(ds, {8, 1.0, 1}), ResampleError);
    CHECK_THROWS_AS(smote(ds, {0, 1.0, 1}), ConfigError);
    CHECK_THROWS_AS(smote(ds, {3, 1.5, 1}), ConfigError);
    const auto balanced = random_dataset(10, 10, rng);
    const auto same = smote(balanced, {3, 1.0, 1});
    CHECK(same.dataset == balanced);
    CHECK(same.draws.empty());
}

TEST_CASE("batch weights are inverse class counts") {
    const auto w = batch_weights({0, 0, 0, 1});
    CHECK(w == std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0});
    CHECK_THROWS_AS(batch_weights({0, 0}), WeightingError);
    CHECK_THROWS_AS(batch_weights({}), WeightingError);
}

TEST_CASE("weighted draws balance the classes") {
    std::vector<int> y(1000, 0);
    for (std::size_t i = 0; i < 100; ++i) y[i * 10] = 1;
    Rng rng(42);
    const auto idx = sample_indices(batch_weights(y), 10000, rng);
    std::size_t pos = 0;
    for (auto i : idx) pos += static_cast<std::size_t>(y[i]);
    const double frac = static_cast<double>(pos) / 10000.0;
    CHECK(frac >= 0.47);
    CHECK(frac <= 0.53);

    const auto batches = sample_batches(batch_weights(y), 300, 1000, 7);
    CHECK(batches.size() == 4);
    CHECK(batches.back().size() == 100);
}
