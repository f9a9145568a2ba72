#include "hypobench/cli/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <sstream>

#include "hypobench/common/csv.hpp"
#include "hypobench/common/errors.hpp"
#include "hypobench/common/io.hpp"

namespace hypobench::cli {

namespace {

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

std::string pad(std::string s, std::size_t width, bool right = false) {
    if (s.size() >= width) return s;
    return right ? std::string(width - s.size(), ' ') + s : s + std::string(width - s.size(), ' ');
}

void put_classification(std::vector<std::pair<std::string, std::string>>& rows, const std::string& prefix,
                        const metrics::Classification& c) {
    rows.emplace_back(prefix + "threshold", format_double(c.threshold));
    rows.emplace_back(prefix + "accuracy", format_double(c.accuracy));
    rows.emplace_back(prefix + "precision", format_double(c.precision));
    rows.emplace_back(prefix + "recall", format_double(c.recall));
    rows.emplace_back(prefix + "f1", format_double(c.f1));
    rows.emplace_back(prefix + "precision_undefined", c.precision_undefined ? "1" : "0");
    rows.emplace_back(prefix + "recall_undefined", c.recall_undefined ? "1" : "0");
    rows.emplace_back(prefix + "tp", std::to_string(c.confusion.tp));
    rows.emplace_back(prefix + "fp", std::to_string(c.confusion.fp));
    rows.emplace_back(prefix + "tn", std::to_string(c.confusion.tn));
    rows.emplace_back(prefix + "fn", std::to_string(c.confusion.fn));
}

struct Fields {
    std::map<std::string, std::string> values;
    std::string model;

    const std::string& raw(const std::string& key) const {
        const auto it = values.find(key);
        if (it == values.end()) throw ParseError("report for " + model + ": missing metric " + key);
        return it->second;
    }
    double real(const std::string& key) const {
        const std::string& text = raw(key);
        char* end = nullptr;
        const double v = std::strtod(text.c_str(), &end);
        if (text.empty() || *end != '\0') throw ParseError("report for " + model + ": bad value for " + key + ": " + text);
        return v;
    }
    std::size_t count(const std::string& key) const { return static_cast<std::size_t>(real(key)); }

    metrics::Classification classification(const std::string& prefix) const {
        metrics::Classification c;
        c.threshold = real(prefix + "threshold");
        c.accuracy = real(prefix + "accuracy");
        c.precision = real(prefix + "precision");
        c.recall = real(prefix + "recall");
        c.f1 = real(prefix + "f1");
        c.precision_undefined = raw(prefix + "precision_undefined") == "1";
        c.recall_undefined = raw(prefix + "recall_undefined") == "1";
        c.confusion = {count(prefix + "tp"), count(prefix + "fp"), count(prefix + "tn"), count(prefix + "fn")};
        return c;
    }
};

std::size_t index_of(const std::vector<std::string>& names, const std::string& name) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    throw ContractError("report: unknown model " + name);
}

std::vector<std::vector<double>> pair_matrix(const std::vector<std::string>& names,
                                             const std::vector<stats::PairwiseResult>& pairs, bool effect) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::vector<double>> m(names.size(), std::vector<double>(names.size(), nan));
    for (const auto& p : pairs) {
        const std::size_t i = index_of(names, p.model_a), j = index_of(names, p.model_b);
        m[i][j] = m[j][i] = effect ? p.cohens_w : p.p_value;
    }
    return m;
}

}  // namespace

ModelSummary summarize(const std::string& model, const metrics::EvalReport& r) {
    ModelSummary s;
    s.model = model;
    s.samples = r.samples;
    s.positives = r.positives;
    s.auc_roc = r.auc_roc;
    s.auc_pr = r.auc_pr;
    s.brier = r.brier;
    s.log_loss = r.log_loss;
    s.at_optimal = r.at_optimal;
    s.at_half = r.at_half;
    return s;
}

std::string summary_to_csv(const ModelSummary& s) {
    std::vector<std::pair<std::string, std::string>> rows{
        {"samples", std::to_string(s.samples)},   {"positives", std::to_string(s.positives)},
        {"auc_roc", format_double(s.auc_roc)},    {"auc_pr", format_double(s.auc_pr)},
        {"brier", format_double(s.brier)},        {"log_loss", format_double(s.log_loss)},
    };
    put_classification(rows, "optimal_", s.at_optimal);
    put_classification(rows, "half_", s.at_half);
    std::string out = "metric,value\n";
    for (const auto& [k, v] : rows) append_csv_row(out, {k, v});
    return out;
}

ModelSummary summary_from_csv(const std::string& model, const std::string& text) {
    const CsvTable t = CsvTable::parse(text);
    const auto c_metric = t.column("metric"), c_value = t.column("value");
    Fields f;
    f.model = model;
    for (std::size_t row = 0; row < t.rows(); ++row) f.values[t.field(row, c_metric)] = t.field(row, c_value);
    ModelSummary s;
    s.model = model;
    s.samples = f.count("samples");
    s.positives = f.count("positives");
    s.auc_roc = f.real("auc_roc");
    s.auc_pr = f.real("auc_pr");
    s.brier = f.real("brier");
    s.log_loss = f.real("log_loss");
    s.at_optimal = f.classification("optimal_");
    s.at_half = f.classification("half_");
    return s;
}

std::vector<std::vector<double>> p_value_matrix(const std::vector<std::string>& names,
                                                const std::vector<stats::PairwiseResult>& pairs) {
    return pair_matrix(names, pairs, false);
}

std::vector<std::vector<double>> effect_matrix(const std::vector<std::string>& names,
                                               const std::vector<stats::PairwiseResult>& pairs) {
    return pair_matrix(names, pairs, true);
}

std::string matrix_to_csv(const std::vector<std::string>& names, const std::vector<std::vector<double>>& m) {
    std::string out;
    std::vector<std::string> header{"model"};
    header.insert(header.end(), names.begin(), names.end());
    append_csv_row(out, header);
    for (std::size_t i = 0; i < names.size(); ++i) {
        std::vector<std::string> row{names[i]};
        for (double v : m[i]) row.push_back(std::isnan(v) ? "" : format_double(v));
        append_csv_row(out, row);
    }
    return out;
}

std::string render_report(const ReportHeader& h, const std::vector<PeriodReport>& periods) {
    std::ostringstream o;
    o << "hypobench report\n";
    o << "config " << h.config_hash << ", seed " << h.seed << "\n";
    o << "training samples " << h.train_samples << " (" << h.train_positives << " hypoxic)\n";
    for (const auto& p : periods) {
        o << "\n== held-out period " << p.period << " ==\n";
        if (!p.models.empty()) {
            o << "test samples " << p.models.front().samples << " (" << p.models.front().positives << " hypoxic)\n";
        }
        o << "\nClassification at the F1-optimal threshold\n";
        o << pad("model", 16) << pad("AUC-ROC", 9, true) << pad("AUC-PR", 9, true) << pad("Accuracy", 10, true)
          << pad("F1", 8, true) << pad("Precision", 11, true) << pad("Recall", 8, true) << pad("Threshold", 11, true)
          << "\n";
        for (const auto& m : p.models) {
            o << pad(m.model, 16) << pad(fixed(m.auc_roc), 9, true) << pad(fixed(m.auc_pr), 9, true)
              << pad(fixed(m.at_optimal.accuracy), 10, true) << pad(fixed(m.at_optimal.f1), 8, true)
              << pad(fixed(m.at_optimal.precision), 11, true) << pad(fixed(m.at_optimal.recall), 8, true)
              << pad(fixed(m.at_optimal.threshold), 11, true) << "\n";
        }
        o << "\nCalibration\n";
        o << pad("model", 16) << pad("Brier", 9, true) << pad("LogLoss", 9, true) << "\n";
        for (const auto& m : p.models) {
            o << pad(m.model, 16) << pad(fixed(m.brier), 9, true) << pad(fixed(m.log_loss), 9, true) << "\n";
        }
        o << "\nConfusion counts (optimal threshold | threshold 0.5)\n";
        o << pad("model", 16) << pad("TP", 7, true) << pad("FP", 7, true) << pad("TN", 7, true) << pad("FN", 7, true)
          << "  |" << pad("TP", 7, true) << pad("FP", 7, true) << pad("TN", 7, true) << pad("FN", 7, true) << "\n";
        for (const auto& m : p.models) {
            const auto& a = m.at_optimal.confusion;
            const auto& b = m.at_half.confusion;
            o << pad(m.model, 16) << pad(std::to_string(a.tp), 7, true) << pad(std::to_string(a.fp), 7, true)
              << pad(std::to_string(a.tn), 7, true) << pad(std::to_string(a.fn), 7, true) << "  |"
              << pad(std::to_string(b.tp), 7, true) << pad(std::to_string(b.fp), 7, true)
              << pad(std::to_string(b.tn), 7, true) << pad(std::to_string(b.fn), 7, true) << "\n";
        }
        if (p.pairs.empty()) continue;
        std::vector<std::string> names;
        for (const auto& m : p.models) names.push_back(m.model);
        const auto pv = p_value_matrix(names, p.pairs);
        o << "\nMcNemar p-values (predictions at each model's optimal threshold)\n";
        o << pad("", 16);
        for (const auto& n : names) o << pad(n, 16, true);
        o << "\n";
        for (std::size_t i = 0; i < names.size(); ++i) {
            o << pad(names[i], 16);
            for (std::size_t j = 0; j < names.size(); ++j) o << pad(std::isnan(pv[i][j]) ? "-" : sci(pv[i][j]), 16, true);
            o << "\n";
        }
        o << "\nPairwise tests\n";
        o << pad("pair", 34) << pad("b", 7, true) << pad("c", 7, true) << pad("chi2", 11, true)
          << pad("p-value", 12, true) << pad("Cohen's w", 11, true) << "  effect       significance\n";
        for (const auto& r : p.pairs) {
            o << pad(r.model_a + " vs " + r.model_b, 34) << pad(std::to_string(r.table.b), 7, true)
              << pad(std::to_string(r.table.c), 7, true) << pad(fixed(r.chi2, 3), 11, true)
              << pad(sci(r.p_value), 12, true) << pad(fixed(r.cohens_w), 11, true) << "  "
              << pad(std::string(stats::effect_label(stats::classify_effect(r.cohens_w))), 13)
              << (r.degenerate ? std::string("degenerate") : std::string(stats::significance_label(r.p_value)))
              << "\n";
        }
    }
    return o.str();
}

}  // namespace hypobench::cli
