#include "hypobench/cli/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include "hypobench/autodiff/checkpoint.hpp"
#include "hypobench/cli/svg.hpp"
#include "hypobench/common/csv.hpp"
#include "hypobench/common/errors.hpp"
#include "hypobench/common/io.hpp"
#include "hypobench/data/synth.hpp"
#include "json.hpp"

namespace hypobench::cli {

namespace fs = std::filesystem;
using models::Architecture;

namespace {

constexpr const char* kVersion = "1.0.0";

void say(const Log& log, const std::string& message) {
    if (log) log(message);
}

std::string require(const fs::path& path, const char* producer) {
    if (!fs::exists(path)) {
        throw UsageError("missing " + path.string() + "; run `hypobench " + producer + "` first");
    }
    return read_file(path);
}

std::string tag(Architecture a) { return std::string(models::architecture_tag(a)); }

std::vector<Architecture> selected(const RunConfig& config, const std::vector<Architecture>& which) {
    if (which.empty()) return config.models;
    for (Architecture a : which) {
        if (std::find(config.models.begin(), config.models.end(), a) == config.models.end()) {
            throw UsageError("model " + tag(a) + " is not listed in the config's models");
        }
    }
    return which;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

prep::SequenceDataset load_sequences(const fs::path& path) { return prep::sequences_from_csv(require(path, "prepare")); }

std::vector<std::size_t> rows_in(const prep::SequenceDataset& ds, const DateRange& period) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (period.contains(ds.meta[i].target_date)) rows.push_back(i);
    }
    return rows;
}

std::string predictions_csv(const prep::SequenceDataset& ds, const std::vector<std::size_t>& rows,
                            const std::vector<double>& probs, double threshold) {
    std::string out = "end_date,target_date,cell_id,depth_bin,label,probability,prediction\n";
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& m = ds.meta[rows[k]];
        append_csv_row(out, {format_date(m.end_date), format_date(m.target_date), std::to_string(m.cell_id),
                             std::to_string(m.depth_bin), std::to_string(ds.y[rows[k]]), format_double(probs[k]),
                             probs[k] >= threshold ? "1" : "0"});
    }
    return out;
}

Series series_of(const std::string& name, const metrics::Curve& curve) {
    Series s;
    s.name = name;
    for (const auto& p : curve.points) {
        s.x.push_back(p.x);
        s.y.push_back(p.y);
    }
    return s;
}

struct PredictionFile {
    std::vector<std::string> keys;
    std::vector<int> labels;
    std::vector<int> predictions;
};

PredictionFile load_predictions(const fs::path& path) {
    const CsvTable t = CsvTable::parse(require(path, "evaluate"));
    const std::size_t c_end = t.column("end_date"), c_target = t.column("target_date"), c_cell = t.column("cell_id"),
                      c_label = t.column("label"), c_pred = t.column("prediction");
    PredictionFile f;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        f.keys.push_back(t.field(r, c_end) + "/" + t.field(r, c_target) + "/" + t.field(r, c_cell));
        f.labels.push_back(static_cast<int>(t.integer(r, c_label)));
        f.predictions.push_back(static_cast<int>(t.integer(r, c_pred)));
    }
    return f;
}

}  // namespace

fs::path Layout::model_dir(Architecture a) const { return root_ / "models" / tag(a); }

fs::path Layout::eval_dir(Architecture a, const DateRange& period) const {
    return root_ / "eval" / tag(a) / period_label(period);
}

fs::path Layout::compare_dir(const DateRange& period) const { return root_ / "compare" / period_label(period); }

std::string period_label(const DateRange& period) {
    auto compact = [](Date d) {
        std::string s = format_date(d);
        s.erase(std::remove(s.begin(), s.end(), '-'), s.end());
        return s;
    };
    return compact(period.first) + "-" + compact(period.last);
}

void Outputs::write(const fs::path& path, std::string_view bytes) {
    write_file_atomic(path, bytes);
    if (std::find(written_.begin(), written_.end(), path) == written_.end()) written_.push_back(path);
}

void Outputs::rollback() noexcept {
    for (const auto& p : written_) {
        std::error_code ec;
        fs::remove(p, ec);
    }
    written_.clear();
}

void step_synth(const RunConfig& config, Outputs& out, const Log& log) {
    if (!config.data.synthetic) throw UsageError("synth: data.source is \"file\"; nothing to generate");
    const auto set = data::generate_synthetic(config.data.synth);
    out.write(out.layout().hindcast(), data::hindcast_to_csv(set));
    say(log, "synth: " + std::to_string(set.records.size()) + " records, " + std::to_string(set.cells) + " cells, " +
                 std::to_string(set.days) + " days");
}

void step_prepare(const RunConfig& config, Outputs& out, const Log& log) {
    data::HindcastSet set;
    if (config.data.synthetic) {
        set = data::hindcast_from_csv(require(out.layout().hindcast(), "synth"));
    } else {
        if (!fs::exists(config.data.path)) throw UsageError("missing hindcast file " + config.data.path.string());
        set = data::load_hindcast(config.data.path);
    }
    const auto prepared = prep::prepare(set, config.test_periods, config.sequence, config.features);
    if (prepared.train.size() == 0) throw SplitError("prepare: the training side yields no sequences");
    if (prepared.test.size() == 0) throw SplitError("prepare: the test side yields no sequences");
    out.write(out.layout().scaler(), prep::scaler_to_csv(prepared.scaler));
    out.write(out.layout().train_set(), prep::sequences_to_csv(prepared.train));
    out.write(out.layout().test_set(), prep::sequences_to_csv(prepared.test));
    say(log, "prepare: " + std::to_string(prepared.train.size()) + " train sequences (" +
                 std::to_string(prepared.train.positives()) + " hypoxic), " + std::to_string(prepared.test.size()) +
                 " test sequences (" + std::to_string(prepared.test.positives()) + " hypoxic)");
}

std::vector<TrainSummary> step_train(const RunConfig& config, const std::vector<Architecture>& which, Outputs& out,
                                     const Log& log) {
    const auto archs = selected(config, which);
    const auto ds = load_sequences(out.layout().train_set());
    std::vector<TrainSummary> summaries;
    for (Architecture a : archs) {
        const auto start = std::chrono::steady_clock::now();
        auto result = training::train(config.model_for(a), ds, config.train, [&](const training::EpochLog& e) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "train %s: epoch %zu/%zu loss %.5f (%.1fs)", tag(a).c_str(), e.epoch,
                          config.train.epochs, e.loss, e.seconds);
            say(log, buf);
        });
        out.write(out.layout().checkpoint(a), ad::encode_checkpoint(result.model->parameters()));
        out.write(out.layout().train_log(a), training::train_log_to_csv(result.log));
        summaries.push_back({a, std::move(result.log), seconds_since(start)});
    }
    return summaries;
}

std::vector<Evaluation> step_evaluate(const RunConfig& config, const std::vector<Architecture>& which, Outputs& out,
                                      const Log& log) {
    const auto archs = selected(config, which);
    const Layout& layout = out.layout();
    for (Architecture a : archs) require(layout.checkpoint(a), "train");
    const auto ds = load_sequences(layout.test_set());
    std::vector<Evaluation> evaluations;
    for (Architecture a : archs) {
        const auto start = std::chrono::steady_clock::now();
        auto model = models::make_model(config.model_for(a), ds.window, ds.features, config.train.seed);
        auto params = model->parameters();
        ad::restore_parameters(ad::decode_checkpoint(read_file(layout.checkpoint(a))), params);
        const auto probs = training::predict_proba(*model, ds);
        for (const auto& period : config.test_periods) {
            const auto rows = rows_in(ds, period);
            if (rows.empty()) throw SplitError("evaluate: no test sequences in " + format_date_range(period));
            std::vector<double> p;
            std::vector<int> y;
            for (std::size_t r : rows) {
                p.push_back(probs[r]);
                y.push_back(ds.y[r]);
            }
            const auto report = metrics::evaluate(p, y);
            const auto dir = layout.eval_dir(a, period);
            const auto summary = summarize(tag(a), report);
            out.write(dir / "report.csv", summary_to_csv(summary));
            out.write(dir / "roc.csv", metrics::curve_to_csv(report.roc));
            out.write(dir / "pr.csv", metrics::curve_to_csv(report.pr));
            out.write(dir / "predictions.csv", predictions_csv(ds, rows, p, report.optimal_threshold));
            char title[160];
            std::snprintf(title, sizeof title, "%s ROC, %s (AUC %.4f)", tag(a).c_str(),
                          format_date_range(period).c_str(), report.auc_roc);
            out.write(dir / "roc.svg", curve_svg(title, "false positive rate", "true positive rate",
                                                 {series_of(tag(a), report.roc)}, true));
            std::snprintf(title, sizeof title, "%s precision-recall, %s (AP %.4f)", tag(a).c_str(),
                          format_date_range(period).c_str(), report.auc_pr);
            out.write(dir / "pr.svg", curve_svg(title, "recall", "precision", {series_of(tag(a), report.pr)}, false));
            char line[200];
            std::snprintf(line, sizeof line, "evaluate %s %s: AUC-ROC %.4f AUC-PR %.4f F1 %.4f at %.4f",
                          tag(a).c_str(), period_label(period).c_str(), report.auc_roc, report.auc_pr,
                          report.at_optimal.f1, report.optimal_threshold);
            say(log, line);
            evaluations.push_back({a, period, summary, 0.0});
        }
        const double elapsed = seconds_since(start);
        for (auto& e : evaluations) {
            if (e.architecture == a) e.seconds = elapsed;
        }
    }
    return evaluations;
}

std::vector<PeriodReport> step_compare(const RunConfig& config, Outputs& out, const Log& log) {
    const Layout& layout = out.layout();
    if (config.models.size() < 2) throw UsageError("compare: needs at least two models in the config");
    std::vector<std::string> names;
    for (Architecture a : config.models) names.push_back(tag(a));
    const auto train = load_sequences(layout.train_set());

    std::vector<PeriodReport> periods;
    for (const auto& period : config.test_periods) {
        PeriodReport pr;
        pr.period = format_date_range(period);
        std::vector<std::vector<int>> predictions;
        PredictionFile first;
        for (std::size_t i = 0; i < config.models.size(); ++i) {
            const auto dir = layout.eval_dir(config.models[i], period);
            pr.models.push_back(summary_from_csv(names[i], require(dir / "report.csv", "evaluate")));
            auto f = load_predictions(dir / "predictions.csv");
            if (i == 0) {
                first = f;
            } else if (f.keys != first.keys || f.labels != first.labels) {
                throw ContractError("compare: predictions of " + names[i] + " and " + names[0] +
                                    " cover different samples in " + pr.period);
            }
            predictions.push_back(std::move(f.predictions));
        }
        pr.pairs = stats::pairwise_compare(names, predictions, first.labels, config.continuity_correction);
        const auto dir = layout.compare_dir(period);
        const auto pv = p_value_matrix(names, pr.pairs);
        out.write(dir / "pairwise.csv", stats::pairwise_to_csv(pr.pairs));
        out.write(dir / "pvalues.csv", matrix_to_csv(names, pv));
        out.write(dir / "cohens_w.csv", matrix_to_csv(names, effect_matrix(names, pr.pairs)));
        out.write(dir / "heatmap.svg", heatmap_svg("McNemar p-values, " + pr.period, names, pv));
        say(log, "compare " + period_label(period) + ": " + std::to_string(pr.pairs.size()) + " pairs");
        periods.push_back(std::move(pr));
    }
    ReportHeader header;
    header.config_hash = config_hash(config);
    header.seed = config.seed;
    header.train_samples = train.size();
    header.train_positives = train.positives();
    out.write(layout.report(), render_report(header, periods));
    return periods;
}

BenchResult run_bench(const RunConfig& config, Outputs& out, const Log& log) {
    BenchResult r;
    if (config.data.synthetic) step_synth(config, out, log);
    step_prepare(config, out, log);
    r.training = step_train(config, {}, out, log);
    r.evaluations = step_evaluate(config, {}, out, log);
    if (config.models.size() >= 2) r.periods = step_compare(config, out, log);
    return r;
}

std::string version_string() {
    std::string v = std::string("hypobench ") + kVersion;
#if defined(__clang__)
    v += ", clang " __clang_version__;
#elif defined(__GNUC__)
    v += ", gcc " __VERSION__;
#endif
#ifdef _OPENMP
    v += ", openmp " + std::to_string(_OPENMP);
#endif
    return v;
}

void write_manifest(const RunConfig& config, Outputs& out) {
    using nlohmann::json;
    const Layout& layout = out.layout();
    const std::string hash = config_hash(config);
    out.write(layout.resolved_config(), run_config_to_json(config));

    std::set<std::string> files;
    if (fs::exists(layout.manifest())) {
        try {
            const json old = json::parse(read_file(layout.manifest()));
            if (old.value("config_hash", "") == hash) {
                for (const auto& f : old.at("files")) files.insert(f.get<std::string>());
            }
        } catch (const json::exception&) {
            // A damaged manifest is rebuilt from this command's files.
        }
    }
    for (const auto& p : out.written()) files.insert(fs::relative(p, layout.root()).generic_string());
    files.insert("manifest.json");
    std::erase_if(files, [&](const std::string& f) { return !fs::exists(layout.root() / f) && f != "manifest.json"; });

    json m;
    m["tool"] = "hypobench";
    m["version"] = kVersion;
    m["build"] = version_string();
    m["config_hash"] = hash;
    m["seed"] = config.seed;
    m["files"] = std::vector<std::string>(files.begin(), files.end());
    out.write(layout.manifest(), m.dump(2) + "\n");
}

BenchResult run_command(std::string_view command, const RunConfig& config, const std::vector<Architecture>& which,
                        const Log& log) {
    Outputs out(config.output_dir);
    BenchResult r;
    try {
        if (command == "synth") {
            step_synth(config, out, log);
        } else if (command == "prepare") {
            step_prepare(config, out, log);
        } else if (command == "train") {
            r.training = step_train(config, which, out, log);
        } else if (command == "evaluate") {
            r.evaluations = step_evaluate(config, which, out, log);
        } else if (command == "compare") {
            r.periods = step_compare(config, out, log);
        } else if (command == "bench") {
            r = run_bench(config, out, log);
        } else {
            throw UsageError("unknown command " + std::string(command));
        }
        write_manifest(config, out);
    } catch (...) {
        out.rollback();
        throw;
    }
    return r;
}

}  // namespace hypobench::cli
