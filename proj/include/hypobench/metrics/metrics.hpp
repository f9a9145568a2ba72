#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hypobench::metrics {

enum class CurveKind { kRoc, kPr };

/// ROC: x = false positive rate, y = true positive rate.
/// PR:  x = recall, y = precision.
/// `threshold` is the score cut with the rule score >= threshold; the
/// leading point uses +infinity (nothing predicted positive).
struct CurvePoint {
    double threshold = 0.0;
    double x = 0.0;
    double y = 0.0;
};

struct Curve {
    CurveKind kind = CurveKind::kRoc;
    std::vector<CurvePoint> points;
};

struct CurveAuc {
    Curve curve;
    double auc = 0.0;
};

/// One point per distinct score in descending order, after (0, 0). The area
/// is the trapezoid rule over those points, accumulated in integer counts so
/// that it equals the pairwise probability (ties counted one half) exactly.
/// Throws MetricError unless both classes are present.
CurveAuc roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Precision and recall at every distinct score in descending order, after
/// (recall 0, precision 1). The area is average precision: the sum over
/// points of (recall_i - recall_{i-1}) * precision_i. Throws MetricError
/// when there is no positive.
CurveAuc pr_auc(std::span<const double> scores, std::span<const int> labels);

struct Threshold {
    double threshold = 0.0;
    double f1 = 0.0;
};

/// F1 = 2tp / (2tp + fp + fn).
double f1_score(std::size_t tp, std::size_t fp, std::size_t fn);

/// The distinct score with the largest F1; among equal F1 the highest
/// score wins. F1 values are compared as exact fractions. Throws MetricError
/// unless both classes are present.
Threshold optimize_threshold(std::span<const double> scores, std::span<const int> labels);

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::size_t total() const { return tp + fp + tn + fn; }
    bool operator==(const Confusion&) const = default;
};

/// Scalar block at one threshold. A zero denominator gives 0 and sets the
/// matching flag.
struct Classification {
    double threshold = 0.0;
    Confusion confusion;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_undefined = false;
    bool recall_undefined = false;
};

/// Predicts positive when score >= threshold. Throws MetricError on a
/// threshold outside [0, 1] or misaligned inputs.
Classification classification_report(std::span<const double> scores, std::span<const int> labels,
                                     double threshold);

/// Mean of (p - y)^2. Throws MetricError on empty input or scores outside
/// [0, 1].
double brier(std::span<const double> scores, std::span<const int> labels);

inline constexpr double kLogLossEps = 1e-15;

/// Mean of -(y ln p + (1 - y) ln(1 - p)) with p clamped to [eps, 1 - eps].
double log_loss(std::span<const double> scores, std::span<const int> labels, double eps = kLogLossEps);

struct EvalReport {
    std::size_t samples = 0;
    std::size_t positives = 0;
    double auc_roc = 0.0;
    double auc_pr = 0.0;
    double brier = 0.0;
    double log_loss = 0.0;
    double optimal_threshold = 0.0;
    Classification at_optimal;
    Classification at_half;
    Curve roc;
    Curve pr;
};

EvalReport evaluate(std::span<const double> scores, std::span<const int> labels);

/// `threshold,x,y`.
std::string curve_to_csv(const Curve& curve);

}  // namespace hypobench::metrics
