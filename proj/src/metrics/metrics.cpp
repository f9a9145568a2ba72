#include "hypobench/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>

#include "hypobench/common/errors.hpp"
#include "hypobench/common/io.hpp"

namespace hypobench::metrics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_inputs(const char* who, std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw MetricError(std::string(who) + ": " + std::to_string(scores.size()) + " scores for " +
                          std::to_string(labels.size()) + " labels");
    }
    if (scores.empty()) throw MetricError(std::string(who) + ": empty input");
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i])) throw MetricError(std::string(who) + ": non-finite score at " + std::to_string(i));
        if (labels[i] != 0 && labels[i] != 1) {
            throw MetricError(std::string(who) + ": label at " + std::to_string(i) + " is not 0 or 1");
        }
    }
}

void check_probabilities(const char* who, std::span<const double> scores) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] < 0.0 || scores[i] > 1.0) {
            throw MetricError(std::string(who) + ": score at " + std::to_string(i) + " lies outside [0, 1]");
        }
    }
}

// Cumulative counts at each distinct score, scores descending.
struct Step {
    double threshold;
    std::uint64_t tp;
    std::uint64_t fp;
};

struct Sweep {
    std::vector<Step> steps;
    std::uint64_t positives = 0;
    std::uint64_t negatives = 0;
};

Sweep sweep(std::span<const double> scores, std::span<const int> labels) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    Sweep s;
    std::uint64_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const std::size_t idx = order[i];
        (labels[idx] ? tp : fp) += 1;
        if (i + 1 == order.size() || scores[order[i + 1]] != scores[idx]) s.steps.push_back({scores[idx], tp, fp});
    }
    s.positives = tp;
    s.negatives = fp;
    return s;
}

void require_both_classes(const char* who, const Sweep& s) {
    if (s.positives == 0 || s.negatives == 0) {
        throw MetricError(std::string(who) + ": both classes must be present (" + std::to_string(s.positives) +
                          " positive, " + std::to_string(s.negatives) + " negative)");
    }
}

double ratio(std::uint64_t num, std::uint64_t den) { return static_cast<double>(num) / static_cast<double>(den); }

}  // namespace

CurveAuc roc_auc(std::span<const double> scores, std::span<const int> labels) {
    check_inputs("roc_auc", scores, labels);
    const Sweep s = sweep(scores, labels);
    require_both_classes("roc_auc", s);
    CurveAuc out;
    out.curve.kind = CurveKind::kRoc;
    out.curve.points.push_back({kInf, 0.0, 0.0});
    // Twice the area in units of one (positive, negative) pair.
    std::uint64_t twice_area = 0, prev_tp = 0, prev_fp = 0;
    for (const Step& st : s.steps) {
        twice_area += (st.fp - prev_fp) * (st.tp + prev_tp);
        out.curve.points.push_back({st.threshold, ratio(st.fp, s.negatives), ratio(st.tp, s.positives)});
        prev_tp = st.tp;
        prev_fp = st.fp;
    }
    out.auc = ratio(twice_area, 2 * s.positives * s.negatives);
    return out;
}

CurveAuc pr_auc(std::span<const double> scores, std::span<const int> labels) {
    check_inputs("pr_auc", scores, labels);
    const Sweep s = sweep(scores, labels);
    if (s.positives == 0) throw MetricError("pr_auc: no positive samples");
    CurveAuc out;
    out.curve.kind = CurveKind::kPr;
    out.curve.points.push_back({kInf, 0.0, 1.0});
    std::uint64_t prev_tp = 0;
    for (const Step& st : s.steps) {
        const double precision = ratio(st.tp, st.tp + st.fp);
        out.auc += ratio(st.tp - prev_tp, s.positives) * precision;
        out.curve.points.push_back({st.threshold, ratio(st.tp, s.positives), precision});
        prev_tp = st.tp;
    }
    return out;
}

double f1_score(std::size_t tp, std::size_t fp, std::size_t fn) {
    const std::size_t den = 2 * tp + fp + fn;
    return den == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(den);
}

Threshold optimize_threshold(std::span<const double> scores, std::span<const int> labels) {
    check_inputs("optimize_threshold", scores, labels);
    const Sweep s = sweep(scores, labels);
    require_both_classes("optimize_threshold", s);
    // Best F1 kept as the fraction num / den; a later (lower) threshold
    // replaces it only when strictly better.
    std::uint64_t best_num = 0, best_den = 1;
    double best_threshold = s.steps.front().threshold;
    for (const Step& st : s.steps) {
        const std::uint64_t num = 2 * st.tp;
        const std::uint64_t den = st.tp + st.fp + s.positives;
        if (num * best_den > best_num * den) {
            best_num = num;
            best_den = den;
            best_threshold = st.threshold;
        }
    }
    return {best_threshold, ratio(best_num, best_den)};
}

Classification classification_report(std::span<const double> scores, std::span<const int> labels,
                                     double threshold) {
    check_inputs("classification_report", scores, labels);
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw MetricError("classification_report: threshold outside [0, 1]");
    Classification r;
    r.threshold = threshold;
    Confusion& c = r.confusion;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        if (labels[i]) {
            (predicted ? c.tp : c.fn) += 1;
        } else {
            (predicted ? c.fp : c.tn) += 1;
        }
    }
    r.accuracy = ratio(c.tp + c.tn, c.total());
    r.precision_undefined = c.tp + c.fp == 0;
    r.recall_undefined = c.tp + c.fn == 0;
    r.precision = r.precision_undefined ? 0.0 : ratio(c.tp, c.tp + c.fp);
    r.recall = r.recall_undefined ? 0.0 : ratio(c.tp, c.tp + c.fn);
    r.f1 = f1_score(c.tp, c.fp, c.fn);
    return r;
}

double brier(std::span<const double> scores, std::span<const int> labels) {
    check_inputs("brier", scores, labels);
    check_probabilities("brier", scores);
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double e = scores[i] - labels[i];
        total += e * e;
    }
    return total / static_cast<double>(scores.size());
}

double log_loss(std::span<const double> scores, std::span<const int> labels, double eps) {
    check_inputs("log_loss", scores, labels);
    check_probabilities("log_loss", scores);
    if (!(eps > 0.0 && eps < 0.5)) throw MetricError("log_loss: eps must lie in (0, 0.5)");
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double p = std::clamp(scores[i], eps, 1.0 - eps);
        total -= labels[i] ? std::log(p) : std::log1p(-p);
    }
    return total / static_cast<double>(scores.size());
}

EvalReport evaluate(std::span<const double> scores, std::span<const int> labels) {
    EvalReport r;
    auto roc = roc_auc(scores, labels);
    auto pr = pr_auc(scores, labels);
    r.samples = scores.size();
    r.positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    r.auc_roc = roc.auc;
    r.auc_pr = pr.auc;
    r.roc = std::move(roc.curve);
    r.pr = std::move(pr.curve);
    r.brier = brier(scores, labels);
    r.log_loss = log_loss(scores, labels);
    r.optimal_threshold = optimize_threshold(scores, labels).threshold;
    r.at_optimal = classification_report(scores, labels, r.optimal_threshold);
    r.at_half = classification_report(scores, labels, 0.5);
    return r;
}

std::string curve_to_csv(const Curve& curve) {
    std::ostringstream out;
    out << "threshold,x,y\n";
    for (const auto& p : curve.points) {
        out << (std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold)) << ','
            << format_double(p.x) << ',' << format_double(p.y) << '\n';
    }
    return out.str();
}

}  // namespace hypobench::metrics
