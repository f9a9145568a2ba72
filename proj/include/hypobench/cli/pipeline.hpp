#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "hypobench/cli/config.hpp"
#include "hypobench/cli/report.hpp"
#include "hypobench/metrics/metrics.hpp"
#include "hypobench/stats/stats.hpp"
#include "hypobench/training/training.hpp"

namespace hypobench::cli {

/// Paths inside an output directory. See docs/formats.md.
class Layout {
   public:
    explicit Layout(std::filesystem::path root) : root_(std::move(root)) {}

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path hindcast() const { return root_ / "data" / "hindcast.csv"; }
    std::filesystem::path scaler() const { return root_ / "prepared" / "scaler.csv"; }
    std::filesystem::path train_set() const { return root_ / "prepared" / "train.csv"; }
    std::filesystem::path test_set() const { return root_ / "prepared" / "test.csv"; }
    std::filesystem::path model_dir(models::Architecture a) const;
    std::filesystem::path checkpoint(models::Architecture a) const { return model_dir(a) / "checkpoint.bin"; }
    std::filesystem::path train_log(models::Architecture a) const { return model_dir(a) / "train_log.csv"; }
    std::filesystem::path eval_dir(models::Architecture a, const DateRange& period) const;
    std::filesystem::path compare_dir(const DateRange& period) const;
    std::filesystem::path report() const { return root_ / "report.txt"; }
    std::filesystem::path manifest() const { return root_ / "manifest.json"; }
    std::filesystem::path resolved_config() const { return root_ / "config.resolved.json"; }

   private:
    std::filesystem::path root_;
};

/// `YYYYMMDD-YYYYMMDD`, used as a directory name.
std::string period_label(const DateRange& period);

/// Files written by one command. Every write is atomic (temporary file plus
/// rename); rollback() deletes whatever this command wrote so a failed
/// command leaves no partial artifacts behind.
class Outputs {
   public:
    explicit Outputs(const std::filesystem::path& root) : layout_(root) {}

    const Layout& layout() const { return layout_; }
    void write(const std::filesystem::path& path, std::string_view bytes);
    const std::vector<std::filesystem::path>& written() const { return written_; }
    void rollback() noexcept;

   private:
    Layout layout_;
    std::vector<std::filesystem::path> written_;
};

/// Progress messages; an empty function discards them.
using Log = std::function<void(const std::string&)>;

void step_synth(const RunConfig& config, Outputs& out, const Log& log);

void step_prepare(const RunConfig& config, Outputs& out, const Log& log);

struct TrainSummary {
    models::Architecture architecture{};
    training::TrainLog log;
    double seconds = 0.0;
};

std::vector<TrainSummary> step_train(const RunConfig& config, const std::vector<models::Architecture>& which,
                                     Outputs& out, const Log& log);

struct Evaluation {
    models::Architecture architecture{};
    DateRange period{};
    ModelSummary summary;
    double seconds = 0.0;
};

/// Scores every test period separately with each trained model.
std::vector<Evaluation> step_evaluate(const RunConfig& config, const std::vector<models::Architecture>& which,
                                      Outputs& out, const Log& log);

/// McNemar tests between every pair of configured models per test period,
/// then report.txt.
std::vector<PeriodReport> step_compare(const RunConfig& config, Outputs& out, const Log& log);

struct BenchResult {
    std::vector<TrainSummary> training;
    std::vector<Evaluation> evaluations;
    std::vector<PeriodReport> periods;
};

/// synth (synthetic source only), prepare, train, evaluate and compare.
BenchResult run_bench(const RunConfig& config, Outputs& out, const Log& log);

/// Writes config.resolved.json and merges the files of `out` into
/// manifest.json. The manifest starts over when the config hash changes.
void write_manifest(const RunConfig& config, Outputs& out);

inline constexpr const char* kCommands[] = {"synth", "prepare", "train", "evaluate", "compare", "bench"};

/// Runs one command into config.output_dir and updates the manifest.
/// `which` limits train and evaluate to some models (empty = all configured).
/// On any error the files written so far are removed and the error rethrown.
BenchResult run_command(std::string_view command, const RunConfig& config,
                        const std::vector<models::Architecture>& which, const Log& log);

/// Library and build identification recorded in the manifest.
std::string version_string();

}  // namespace hypobench::cli
