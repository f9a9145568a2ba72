#include "hypobench/stats/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hypobench/common/errors.hpp"
#include "hypobench/common/io.hpp"

namespace hypobench::stats {

ContingencyTable contingency(std::span<const int> preds_a, std::span<const int> preds_b,
                             std::span<const int> labels) {
    if (preds_a.size() != labels.size() || preds_b.size() != labels.size()) {
        throw ContractError("contingency: prediction lengths " + std::to_string(preds_a.size()) + " and " +
                            std::to_string(preds_b.size()) + " do not match " + std::to_string(labels.size()) +
                            " labels");
    }
    ContingencyTable t;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (int v : {preds_a[i], preds_b[i], labels[i]}) {
            if (v != 0 && v != 1) throw ContractError("contingency: entry " + std::to_string(i) + " is not 0 or 1");
        }
        const bool a_right = preds_a[i] == labels[i];
        const bool b_right = preds_b[i] == labels[i];
        if (a_right && b_right) {
            ++t.a;
        } else if (a_right) {
            ++t.b;
        } else if (b_right) {
            ++t.c;
        } else {
            ++t.d;
        }
    }
    return t;
}

McNemar mcnemar(const ContingencyTable& t, bool continuity_correction) {
    const std::size_t discordant = t.b + t.c;
    if (discordant == 0) throw DomainError("mcnemar: the classifiers never disagree (b = c = 0)");
    double diff = std::abs(static_cast<double>(t.b) - static_cast<double>(t.c));
    if (continuity_correction) diff = std::max(diff - 1.0, 0.0);
    McNemar r;
    r.chi2 = diff * diff / static_cast<double>(discordant);
    r.p_value = chi2_sf_df1(r.chi2);
    return r;
}

double chi2_sf_df1(double x) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("chi2_sf_df1: x must be finite and non-negative");
    return std::erfc(std::sqrt(0.5 * x));
}

double cohens_w(double chi2, std::size_t n) {
    if (n == 0) throw DomainError("cohens_w: sample count must be positive");
    if (!(chi2 >= 0.0)) throw DomainError("cohens_w: chi2 must be non-negative");
    return std::sqrt(chi2 / static_cast<double>(n));
}

Effect classify_effect(double w) {
    if (w >= 0.5) return Effect::kLarge;
    if (w >= 0.3) return Effect::kMedium;
    if (w >= 0.1) return Effect::kSmall;
    return Effect::kNegligible;
}

std::string_view effect_label(Effect e) {
    switch (e) {
        case Effect::kNegligible: return "negligible";
        case Effect::kSmall: return "small";
        case Effect::kMedium: return "medium";
        case Effect::kLarge: return "large";
    }
    return "?";
}

std::string_view significance_label(double p) {
    if (p < kStrongSignificance) return "strong";
    if (p < kSignificance) return "significant";
    return "ns";
}

std::vector<PairwiseResult> pairwise_compare(const std::vector<std::string>& names,
                                             const std::vector<std::vector<int>>& predictions,
                                             std::span<const int> labels, bool continuity_correction) {
    if (names.size() < 2) throw ContractError("pairwise_compare: need at least two models");
    if (names.size() != predictions.size()) {
        throw ContractError("pairwise_compare: " + std::to_string(names.size()) + " names for " +
                            std::to_string(predictions.size()) + " prediction sets");
    }
    std::vector<PairwiseResult> out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        for (std::size_t j = i + 1; j < names.size(); ++j) {
            PairwiseResult r;
            r.model_a = names[i];
            r.model_b = names[j];
            r.table = contingency(predictions[i], predictions[j], labels);
            r.n = r.table.total();
            if (r.table.b + r.table.c == 0) {
                r.degenerate = true;
            } else {
                const McNemar m = mcnemar(r.table, continuity_correction);
                r.chi2 = m.chi2;
                r.p_value = m.p_value;
                r.cohens_w = cohens_w(m.chi2, r.n);
            }
            out.push_back(std::move(r));
        }
    }
    return out;
}

std::string pairwise_to_csv(const std::vector<PairwiseResult>& results) {
    std::ostringstream out;
    out << "model_a,model_b,n,a,b,c,d,chi2,p_value,cohens_w,effect,significance\n";
    for (const auto& r : results) {
        out << r.model_a << ',' << r.model_b << ',' << r.n << ',' << r.table.a << ',' << r.table.b << ','
            << r.table.c << ',' << r.table.d << ',' << format_double(r.chi2) << ',' << format_double(r.p_value)
            << ',' << format_double(r.cohens_w) << ',' << effect_label(classify_effect(r.cohens_w)) << ','
            << (r.degenerate ? std::string_view("degenerate") : significance_label(r.p_value)) << '\n';
    }
    return out.str();
}

}  // namespace hypobench::stats
