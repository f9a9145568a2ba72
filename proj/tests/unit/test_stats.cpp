#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "hypobench/common/errors.hpp"
#include "hypobench/common/rng.hpp"
#include "hypobench/stats/stats.hpp"

using namespace hypobench;
using namespace hypobench::stats;

namespace {

// 1 - P(X <= x) for chi-square(1), integrating the density in u = sqrt(t),
// where it becomes 2 phi(u), by composite Simpson.
double sf_by_integration(double x) {
    const int n = 20000;
    const double top = std::sqrt(x), h = top / n;
    auto f = [](double u) { return 2.0 * std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); };
    double s = f(0.0) + f(top);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
    return 1.0 - s * h / 3.0;
}

}  // namespace

TEST_CASE("contingency examples") {
    const std::vector<int> labels{1, 1, 1, 0};
    CHECK(contingency(labels, labels, labels) == ContingencyTable{4, 0, 0, 0});
    const auto t = contingency(std::vector<int>{1, 0, 1, 0}, std::vector<int>{1, 1, 0, 0}, labels);
    CHECK(t == ContingencyTable{2, 1, 1, 0});
    std::vector<int> y(10, 1), wrong(10, 0);
    const auto all = contingency(y, wrong, y);
    CHECK(all.b == 10);
    CHECK(all.c == 0);
    CHECK(all.total() == 10);
    CHECK_THROWS_AS(contingency(std::vector<int>{1}, labels, labels), ContractError);
    CHECK_THROWS_AS(contingency(std::vector<int>{1, 1, 1, 2}, labels, labels), ContractError);
}

TEST_CASE("mcnemar examples") {
    const auto even = mcnemar({0, 5, 5, 0});
    CHECK(even.chi2 == 0.0);
    CHECK(even.p_value == 1.0);
    const auto lopsided = mcnemar({3, 10, 0, 2});
    CHECK(lopsided.chi2 == 10.0);
    CHECK(std::abs(lopsided.p_value - 1.565e-3) < 1e-6);
    CHECK_THROWS_AS(mcnemar({5, 0, 0, 5}), DomainError);
}

TEST_CASE("mcnemar is symmetric in b and c") {
    for (std::size_t b = 0; b < 12; ++b) {
        for (std::size_t c = 0; c < 12; ++c) {
            if (b + c == 0) continue;
            for (bool cc : {false, true}) {
                const auto x = mcnemar({1, b, c, 2}, cc), y = mcnemar({1, c, b, 2}, cc);
                CHECK(x.chi2 == y.chi2);
                CHECK(x.p_value == y.p_value);
            }
        }
    }
}

TEST_CASE("continuity correction") {
    CHECK(mcnemar({0, 10, 0, 0}, true).chi2 == doctest::Approx(8.1).epsilon(1e-15));
    CHECK(mcnemar({0, 1, 0, 0}, true).chi2 == 0.0);
}

TEST_CASE("chi-square survival examples") {
    CHECK(chi2_sf_df1(0.0) == 1.0);
    CHECK(std::abs(chi2_sf_df1(3.841459) - 0.05) < 1e-6);
    CHECK(std::abs(chi2_sf_df1(10.0) - 1.565e-3) < 1e-6);
    CHECK_THROWS_AS(chi2_sf_df1(-1.0), DomainError);
}

TEST_CASE("chi-square survival agrees with numerical integration") {
    for (double x : {0.01, 0.5, 1.0, 3.841459, 10.0, 25.0, 50.0, 100.0}) {
        CAPTURE(x);
        CHECK(std::abs(chi2_sf_df1(x) - sf_by_integration(x)) < 1e-12);
    }
}

TEST_CASE("chi-square survival agrees with Monte Carlo") {
    Rng rng(9);
    const int n = 1000000;
    std::vector<double> draws(n);
    for (auto& d : draws) {
        const double z = rng.normal();
        d = z * z;
    }
    for (double x : {1.0, 4.0, 10.0}) {
        CAPTURE(x);
        const double p = chi2_sf_df1(x);
        const double hits = static_cast<double>(std::count_if(draws.begin(), draws.end(), [x](double d) { return d > x; }));
        const double se = std::sqrt(p * (1.0 - p) / n);
        CHECK(std::abs(hits / n - p) < 3.0 * se);
    }
}

TEST_CASE("cohens w examples and labels") {
    CHECK(cohens_w(0.0, 10) == 0.0);
    CHECK(cohens_w(25.0, 100) == 0.5);
    CHECK(cohens_w(1.0, 4) == 0.5);
    CHECK(classify_effect(0.5) == Effect::kLarge);
    CHECK(classify_effect(0.3) == Effect::kMedium);
    CHECK(classify_effect(0.1) == Effect::kSmall);
    CHECK(classify_effect(0.0999) == Effect::kNegligible);
    CHECK(effect_label(Effect::kLarge) == "large");
    CHECK_THROWS_AS(cohens_w(1.0, 0), DomainError);
    const auto m = mcnemar({50, 30, 10, 10});
    CHECK(cohens_w(m.chi2, 100) == std::sqrt(m.chi2 / 100.0));
}

TEST_CASE("significance bands") {
    CHECK(significance_label(0.0005) == "strong");
    CHECK(significance_label(0.01) == "significant");
    CHECK(significance_label(0.05) == "ns");
}

TEST_CASE("pairwise comparison covers every unordered pair once") {
    const std::vector<int> y{1, 0, 1, 0, 1, 1, 0, 0};
    const std::vector<std::vector<int>> preds{
        {1, 0, 1, 0, 1, 1, 0, 0}, {1, 1, 1, 0, 0, 1, 0, 0}, {0, 0, 1, 0, 1, 1, 1, 0}, {1, 0, 1, 0, 1, 1, 0, 0}};
    const std::vector<std::string> names{"a", "b", "c", "d"};
    CHECK(pairwise_compare({"a", "b"}, {preds[0], preds[1]}, y).size() == 1);
    const auto r = pairwise_compare(names, preds, y);
    REQUIRE(r.size() == 6);
    CHECK(r[0].model_a == "a");
    CHECK(r[0].model_b == "b");
    CHECK(r[5].model_a == "c");
    CHECK(r[5].model_b == "d");
    for (const auto& p : r) {
        CHECK(p.model_a != p.model_b);
        CHECK(p.n == y.size());
        CHECK(p.cohens_w >= 0.0);
        CHECK(p.p_value >= 0.0);
        CHECK(p.p_value <= 1.0);
    }
    // a and d agree everywhere.
    CHECK(r[2].degenerate);
    CHECK(r[2].p_value == 1.0);
    CHECK(r[0].table == contingency(preds[0], preds[1], y));
    const std::string csv = pairwise_to_csv(r);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
    CHECK_THROWS_AS(pairwise_compare({"a"}, {preds[0]}, y), ContractError);
    CHECK_THROWS_AS(pairwise_compare(names, {preds[0], preds[1], preds[2], {1, 0}}, y), ContractError);
}
