#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hypobench/metrics/metrics.hpp"
#include "hypobench/stats/stats.hpp"

namespace hypobench::cli {

/// Scalar part of an EvalReport, as stored in report.csv.
struct ModelSummary {
    std::string model;
    std::size_t samples = 0;
    std::size_t positives = 0;
    double auc_roc = 0.0;
    double auc_pr = 0.0;
    double brier = 0.0;
    double log_loss = 0.0;
    metrics::Classification at_optimal;
    metrics::Classification at_half;
};

ModelSummary summarize(const std::string& model, const metrics::EvalReport& report);

/// `metric,value` rows; every double in shortest round-trip form.
std::string summary_to_csv(const ModelSummary& s);
/// Throws ParseError on a missing metric.
ModelSummary summary_from_csv(const std::string& model, const std::string& text);

/// One held-out period of the human-readable report.
struct PeriodReport {
    std::string period;
    std::vector<ModelSummary> models;
    std::vector<stats::PairwiseResult> pairs;
};

struct ReportHeader {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::size_t train_samples = 0;
    std::size_t train_positives = 0;
};

/// Plain-text tables: classification metrics at the F1-optimal threshold,
/// calibration, confusion counts, McNemar p-values and Cohen's w per pair.
/// Contains no timings, so it is a pure function of config and seed.
std::string render_report(const ReportHeader& header, const std::vector<PeriodReport>& periods);

/// Square matrices (NaN on the diagonal) over `names` in the given order.
std::vector<std::vector<double>> p_value_matrix(const std::vector<std::string>& names,
                                                const std::vector<stats::PairwiseResult>& pairs);
std::vector<std::vector<double>> effect_matrix(const std::vector<std::string>& names,
                                               const std::vector<stats::PairwiseResult>& pairs);
/// `model,<name>...` header then one row per model; the diagonal is empty.
std::string matrix_to_csv(const std::vector<std::string>& names, const std::vector<std::vector<double>>& m);

}  // namespace hypobench::cli
