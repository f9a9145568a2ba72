#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hypobench/common/date.hpp"
#include "hypobench/data/synth.hpp"
#include "hypobench/models/models.hpp"
#include "hypobench/preprocess/preprocess.hpp"
#include "hypobench/training/training.hpp"

namespace hypobench::cli {

struct DataSource {
    bool synthetic = true;
    /// Hindcast CSV, used when `synthetic` is false.
    std::filesystem::path path;
    data::SynthConfig synth;
};

/// Everything a run needs. The defaults are the bundled desk-scale
/// benchmark: 200 cells over two 60-day summers, the second held out, and
/// the published hyperparameters (window 7, batch 1024, Adam lr 0.001, 30
/// epochs, weighted sampling).
struct RunConfig {
    std::uint64_t seed = 7;
    std::filesystem::path output_dir = "hypobench_out";
    DataSource data;
    std::vector<DateRange> test_periods;
    prep::SequenceOptions sequence;
    prep::FeatureOptions features;
    std::vector<models::Architecture> models{std::begin(models::kAllArchitectures),
                                             std::end(models::kAllArchitectures)};
    /// Per-architecture settings; `architecture` is ignored.
    models::ModelConfig model;
    training::TrainConfig train;
    bool continuity_correction = false;

    RunConfig();

    models::ModelConfig model_for(models::Architecture a) const;
};

/// Sets the run seed, which drives both the synthetic data and training.
void apply_seed(RunConfig& config, std::uint64_t seed);

/// Parses the JSON config format described in docs/config.md. Missing keys
/// keep their defaults; unknown keys and wrong types throw ConfigError
/// naming the key.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Fully resolved config as pretty-printed JSON with sorted keys.
std::string run_config_to_json(const RunConfig& config);

/// FNV-1a 64 of run_config_to_json, as 16 hex digits. The output directory
/// is excluded so that identical runs in different places hash alike.
std::string config_hash(const RunConfig& config);

}  // namespace hypobench::cli
