#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hypobench::stats {

/// a: both right, b: A right and B wrong, c: A wrong and B right, d: both wrong.
struct ContingencyTable {
    std::size_t a = 0, b = 0, c = 0, d = 0;
    std::size_t total() const { return a + b + c + d; }
    bool operator==(const ContingencyTable&) const = default;
};

/// Throws ContractError on length mismatch or a non-binary entry.
ContingencyTable contingency(std::span<const int> preds_a, std::span<const int> preds_b,
                             std::span<const int> labels);

struct McNemar {
    double chi2 = 0.0;
    double p_value = 1.0;
};

/// chi2 = (b - c)^2 / (b + c), or (max(|b - c| - 1, 0))^2 / (b + c) with the
/// continuity correction; p from the one-degree-of-freedom chi-square.
/// Throws DomainError when b + c = 0.
McNemar mcnemar(const ContingencyTable& table, bool continuity_correction = false);

/// P(X > x) for X ~ chi-square(1), erfc(sqrt(x / 2)). Throws DomainError on
/// negative or non-finite x.
double chi2_sf_df1(double x);

/// sqrt(chi2 / n). Throws DomainError when n = 0 or chi2 < 0.
double cohens_w(double chi2, std::size_t n);

enum class Effect { kNegligible, kSmall, kMedium, kLarge };

/// Boundaries 0.1, 0.3, 0.5, each inclusive on its upper class.
Effect classify_effect(double w);
std::string_view effect_label(Effect e);

inline constexpr double kSignificance = 0.05;
inline constexpr double kStrongSignificance = 0.001;

/// "strong" below 0.001, "significant" below 0.05, otherwise "ns".
std::string_view significance_label(double p);

struct PairwiseResult {
    std::string model_a;
    std::string model_b;
    ContingencyTable table;
    double chi2 = 0.0;
    double p_value = 1.0;
    double cohens_w = 0.0;
    std::size_t n = 0;
    /// The models never disagree (b = c = 0): chi2 0, p 1, w 0.
    bool degenerate = false;
};

/// One result per unordered pair (i < j) in row-major order. Throws
/// ContractError on fewer than two models or misaligned predictions.
std::vector<PairwiseResult> pairwise_compare(const std::vector<std::string>& names,
                                             const std::vector<std::vector<int>>& predictions,
                                             std::span<const int> labels, bool continuity_correction = false);

/// Long form, one row per pair:
/// `model_a,model_b,n,a,b,c,d,chi2,p_value,cohens_w,effect,significance`.
std::string pairwise_to_csv(const std::vector<PairwiseResult>& results);

}  // namespace hypobench::stats
